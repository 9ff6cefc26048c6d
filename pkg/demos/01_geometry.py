"""Boundary geometry: signed distances, projections and curvature of the model domains.

Each domain reports a lower bound s on the second fundamental form. Negative s
marks the nonconvex case where reflected heat flow can expand gradients, with
rate constant S = -s.
"""
import numpy as np

from nflab.geometry import DiskExterior, DiskInterior, HalfLine, ParabolicCap

domains = {
    "half line": HalfLine(),
    "unit disk interior": DiskInterior(radius=1.0),
    "unit disk exterior": DiskExterior(radius=1.0),
    "parabolic cap (curvature 1)": ParabolicCap(curvature=1.0),
}

for name, D in domains.items():
    print(f"{name}: reach {D.reach}, collar {D.collar}")

D = domains["unit disk exterior"]
x = np.array([[1.05, 0.0], [0.0, 1.02]])
z, d = D.project(x)
print("\nexterior disk: points", x.tolist())
print("  signed distance", np.round(D.sdf(x), 6).tolist())
print("  projections", np.round(z, 6).tolist())
print("  inward normals", np.round(D.normal(x), 6).tolist())
print("  lower bound s on II at the projections", D.s_bound(z).tolist())

P = domains["parabolic cap (curvature 1)"]
print("\nparabolic cap: boundary height at x=0.5", P.psi(0.5))
print("  arc length from the apex to x=0.5", round(float(P.arc_length(0.5)), 6))
print("  lower bound s at the apex", float(P.s_bound(np.array([[0.0, 0.0]]))[0]))
