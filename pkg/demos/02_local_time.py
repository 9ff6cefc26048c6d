"""Reflected Brownian motion and its boundary local time.

On the half line started at the boundary the mean local time is 2*sqrt(t/pi).
Pushback (Skorokhod) and penalization estimators are compared against it.
"""
import math

from nflab.geometry import DiskExterior, HalfLine
from nflab.rbm import SimConfig, simulate_batch

times = [0.01, 0.04, 0.09, 0.16, 0.25]
cfg = SimConfig(dt=1e-4, n_paths=20_000, seed=7, bridge=True)

res = simulate_batch(HalfLine(), 0.0, times, cfg)
print(f"{'t':>6} {'pushback':>10} {'penalized':>10} {'exact':>10}")
for k, t in enumerate(times):
    print(f"{t:6.2f} {res.ell[k].mean():10.5f} {res.ell_pen[k].mean():10.5f} "
          f"{2 * math.sqrt(t / math.pi):10.5f}")

# outside a disk the boundary curves away, so the walker returns to it less often
res = simulate_batch(DiskExterior(radius=1.0), [1.0, 0.0], times, cfg)
print("\ndisk exterior mean local time:",
      ", ".join(f"{res.ell[k].mean():.4f}" for k in range(len(times))))
