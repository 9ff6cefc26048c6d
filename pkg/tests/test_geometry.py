import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nflab.errors import ConfigInvalid, NotOnBoundary, OutsideCollar
from nflab.geometry import (CustomSDF, DiskExterior, DiskInterior, HalfLine, ParabolicCap,
                            boundary_sample, domain_from_config, inward_normal,
                            parabola_arc_length_quad, project_to_boundary,
                            second_ff_lower_bound, signed_distance)


def test_signed_distance_examples():
    assert signed_distance(DiskInterior(radius=1.0), [0.0, 0.0]) == pytest.approx(1.0)
    assert signed_distance(HalfLine(), 0.0) == pytest.approx(0.0)
    assert signed_distance(DiskExterior(radius=1.0), [2.0, 0.0]) == pytest.approx(1.0)


def test_inward_normal_examples():
    np.testing.assert_allclose(inward_normal(DiskInterior(radius=1.0), [1.0, 0.0]), [-1, 0], atol=1e-12)
    np.testing.assert_allclose(inward_normal(DiskExterior(radius=1.0), [1.0, 0.0]), [1, 0], atol=1e-12)


@pytest.mark.parametrize("x1", [-0.3, -0.05, 0.0, 0.1, 0.4])
def test_parabola_normal_matches_graph_normal(x1):
    D = ParabolicCap(curvature=1.0)
    z = np.array([x1, float(D.psi(x1))])
    expected = np.array([x1, 1.0]) / math.sqrt(1 + x1 * x1)
    np.testing.assert_allclose(inward_normal(D, z), expected, atol=1e-9)


def test_curvature_bound_examples():
    assert second_ff_lower_bound(DiskExterior(radius=1.0), [1.0, 0.0]) == pytest.approx(-1.0)
    D = DiskInterior(radius=2.0)
    pts, _ = D.boundary_sample(7)
    np.testing.assert_allclose(second_ff_lower_bound(D, pts), 0.5)
    assert second_ff_lower_bound(ParabolicCap(curvature=1.0), [0.0, 0.0]) == pytest.approx(-1.0)


def test_curvature_rejects_interior_point():
    with pytest.raises(NotOnBoundary):
        second_ff_lower_bound(DiskInterior(radius=1.0), [0.5, 0.0])


def test_boundary_sample_examples():
    pts, w = boundary_sample(HalfLine(), 1)
    np.testing.assert_allclose(pts, [[0.0]])
    np.testing.assert_allclose(w, [1.0])
    pts, w = boundary_sample(DiskInterior(radius=1.0), 4)
    np.testing.assert_allclose(w, math.pi / 2)
    ang = np.sort(np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2 * math.pi))
    np.testing.assert_allclose(np.diff(ang), math.pi / 2, atol=1e-12)
    D = ParabolicCap(curvature=1.0, truncation=2.0)
    pts, w = boundary_sample(D, 100)
    assert len(pts) == 100
    assert w.sum() == pytest.approx(parabola_arc_length_quad(1.0, 2.0), rel=1e-10)
    np.testing.assert_allclose(D.sdf(pts), 0.0, atol=1e-10)


def test_arc_length_closed_form_vs_quadrature():
    D = ParabolicCap(curvature=1.3)
    for r in [0.01, 0.3, 1.7]:
        assert 2 * D.arc_length(r) == pytest.approx(parabola_arc_length_quad(1.3, r), rel=1e-12)


def test_projection_examples():
    z, d = project_to_boundary(HalfLine(), -0.3)
    np.testing.assert_allclose(z, [0.0])
    assert d == pytest.approx(0.3)
    z, d = project_to_boundary(DiskExterior(radius=1.0), [0.9, 0.0])
    np.testing.assert_allclose(z, [1.0, 0.0], atol=1e-12)
    assert d == pytest.approx(0.1)


def test_parabola_projection_against_dense_search():
    D = ParabolicCap(curvature=1.0)
    x = np.array([0.1, float(D.psi(0.1)) - 0.01])
    z, d = project_to_boundary(D, x)
    u = np.linspace(-0.5, 0.5, 2_000_001)
    curve = np.stack([u, D.psi(u)], -1)
    dist = np.linalg.norm(curve - x, axis=-1)
    k = np.argmin(dist)
    assert d == pytest.approx(dist[k], abs=1e-9)
    np.testing.assert_allclose(z, curve[k], atol=1e-6)
    assert d == pytest.approx(0.01, rel=0.05)


def test_outside_collar_raises():
    with pytest.raises(OutsideCollar):
        inward_normal(DiskExterior(radius=1.0), [0.5, 0.0])


def test_domain_from_config_roundtrip():
    for D in [HalfLine(), DiskInterior(radius=2.0), DiskExterior(radius=0.5),
              ParabolicCap(curvature=2.0, truncation=1.0)]:
        assert domain_from_config(D.to_config()) == D
    assert domain_from_config({"kind": "parabolic_cap", "S1": 1.0}).curvature == 1.0
    with pytest.raises(ConfigInvalid):
        domain_from_config({"kind": "torus"})
    with pytest.raises(ConfigInvalid):
        domain_from_config({"kind": "disk_interior", "bogus": 1})


def test_custom_sdf_matches_disk():
    ref = DiskInterior(radius=1.0)
    D = CustomSDF(func=lambda x: 1.0 - np.linalg.norm(x, axis=-1), box=((-1, 1), (-1, 1)),
                  min_radius=1.0, boundary=lambda n: ref.boundary_sample(n))
    z = np.array([[0.6, 0.8]])
    np.testing.assert_allclose(D.normal(z), ref.normal(z), atol=1e-6)
    np.testing.assert_allclose(D.s_bound(z), 1.0, atol=1e-3)


# -- properties ---------------------------------------------------------------------------------

ANALYTIC = [DiskInterior(radius=1.0), DiskExterior(radius=1.0), ParabolicCap(curvature=1.0),
            ParabolicCap(curvature=3.0)]

points = st.tuples(st.floats(-0.6, 0.6), st.floats(-0.6, 0.6))


@settings(max_examples=60, deadline=None)
@given(k=st.integers(0, len(ANALYTIC) - 1), p=points, q=points)
def test_sdf_is_one_lipschitz(k, p, q):
    D = ANALYTIC[k]
    a, b = np.array(p) + [0, 0.3], np.array(q) + [0, 0.3]
    if isinstance(D, DiskExterior):
        a, b = a + [1.2, 0], b + [1.2, 0]
    assert abs(D.sdf(a) - D.sdf(b)) <= np.linalg.norm(a - b) + 1e-12


@settings(max_examples=40, deadline=None)
@given(k=st.integers(0, len(ANALYTIC) - 1), u=st.floats(-0.5, 0.5), off=st.floats(-0.05, 0.05))
def test_eikonal_within_collar(k, u, off):
    D = ANALYTIC[k]
    if isinstance(D, ParabolicCap):
        z = np.array([u, float(D.psi(u))])
    else:
        z = np.array([math.cos(3 * u), math.sin(3 * u)])
    n = D.normal(z)
    x = z + (off if off else 0.01) * n
    h = 1e-5
    g = [(D.sdf(x + h * e) - D.sdf(x - h * e)) / (2 * h) for e in np.eye(2)]
    assert np.hypot(*g) == pytest.approx(1.0, abs=1e-4)


@settings(max_examples=40, deadline=None)
@given(k=st.integers(0, len(ANALYTIC) - 1), u=st.floats(-0.5, 0.5))
def test_inward_step_increases_sdf(k, u):
    D = ANALYTIC[k]
    z = np.array([u, float(D.psi(u))]) if isinstance(D, ParabolicCap) else \
        np.array([math.cos(3 * u), math.sin(3 * u)])
    eps = 1e-4
    assert D.sdf(z + eps * D.normal(z)) == pytest.approx(eps, abs=10 * eps * eps)


@pytest.mark.parametrize("D", ANALYTIC, ids=lambda d: d.kind)
def test_curvature_matches_finite_difference_of_boundary_curve(D):
    if isinstance(D, ParabolicCap):
        u = np.linspace(-0.9, 0.9, 100)
        z = np.stack([u, D.psi(u)], -1)
        # signed curvature of the graph y = psi(u), inward normal points up
        h = 1e-4
        d1 = (D.psi(u + h) - D.psi(u - h)) / (2 * h)
        d2 = (D.psi(u + h) - 2 * D.psi(u) + D.psi(u - h)) / h ** 2
        fd = d2 / (1 + d1 ** 2) ** 1.5
    else:
        th = np.linspace(0, 2 * math.pi, 100, endpoint=False)
        z = np.stack([np.cos(th), np.sin(th)], -1)
        # turning of the inward normal along the curve, by finite differences
        h = 1e-4
        n_plus = D.normal(np.stack([np.cos(th + h), np.sin(th + h)], -1))
        n_minus = D.normal(np.stack([np.cos(th - h), np.sin(th - h)], -1))
        tangent = np.stack([-np.sin(th), np.cos(th)], -1)
        fd = -np.sum((n_plus - n_minus) / (2 * h) * tangent, axis=-1)
    np.testing.assert_allclose(D.s_bound(z), fd, atol=1e-3)


def test_parabola_curvature_minimum_at_origin():
    D = ParabolicCap(curvature=1.0)
    u = np.linspace(-0.1, 0.1, 201)
    s = D.s_bound(np.stack([u, D.psi(u)], -1))
    assert np.argmin(s) == 100
    assert s.min() == pytest.approx(-1.0)
