import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import polar_exterior_solve
from scipy.interpolate import RectBivariateSpline

from nflab.errors import DisconnectedMask, GridTooCoarse
from nflab.geometry import CustomSDF, DiskExterior, DiskInterior, HalfLine, ParabolicCap
from nflab.heat_pde import (Grid, LocalizedTestFunction, ScalarField, boundary_quotient,
                            gradient_field, halfline_grid, halfline_heat_kernel, halfline_mean,
                            kernel_time_integral, lipschitz_constant, point_mass_field,
                            sharpness_experiment, solve_neumann, tangential_test_function)

HALF = HalfLine(extent=12.0)


def disk_grid(h, R=1.0):
    D = DiskInterior(radius=R)
    return D, Grid.build(D, h, ((-R - 2 * h, R + 2 * h), (-R - 2 * h, R + 2 * h)))


# -- kernel ---------------------------------------------------------------------------------

def test_kernel_values():
    assert halfline_heat_kernel(0.0, 0.0, 1.0) == pytest.approx(2 / math.sqrt(4 * math.pi))
    assert halfline_heat_kernel(0.0, 0.0, 1.0) == pytest.approx(0.564190, abs=1e-6)
    assert kernel_time_integral(0.25) == pytest.approx(0.564190, abs=1e-6)
    assert halfline_heat_kernel(0.3, 0.7, 0.1) == pytest.approx(halfline_heat_kernel(0.7, 0.3, 0.1))
    assert halfline_mean(0.1) == pytest.approx(2 * math.sqrt(0.1 / math.pi), rel=1e-10)


@settings(max_examples=30, deadline=None)
@given(y=st.floats(0.0, 2.0), t=st.floats(0.01, 2.0))
def test_kernel_integrates_to_one(y, t):
    from scipy import integrate
    val, _ = integrate.quad(lambda x: halfline_heat_kernel(x, y, t), 0, np.inf)
    assert val == pytest.approx(1.0, abs=1e-8)


# -- solver ---------------------------------------------------------------------------------

def test_constants_are_invariant():
    D, g = disk_grid(1 / 32)
    u = solve_neumann(D, ScalarField.from_function(g, lambda x: np.full(len(x), 3.5)), 0.2, 20)
    np.testing.assert_allclose(u.active_values, 3.5, rtol=1e-12)


def test_point_mass_matches_kernel():
    g = halfline_grid(1 / 256, 12.0)
    u = solve_neumann(HALF, point_mass_field(g), 0.1, 1000)
    x = g.centroid[g.active][:, 0]
    assert np.max(np.abs(u.active_values - halfline_heat_kernel(x, 0.0, 0.1))) < 1e-3
    assert u.mass() == pytest.approx(1.0, abs=1e-12)


def test_equilibrates_to_mean():
    D, g = disk_grid(1 / 32)
    f0 = ScalarField.from_function(g, lambda x: x[:, 0])
    u = solve_neumann(D, f0, 5.0, 200)
    assert np.max(np.abs(u.active_values)) < 1e-4


def test_mass_conservation_and_max_principle():
    D, g = disk_grid(1 / 48)
    f0 = ScalarField.from_function(g, lambda x: np.sin(3 * x[:, 0]) * np.cos(2 * x[:, 1]))
    m0 = f0.mass()
    lo, hi = f0.active_values.min(), f0.active_values.max()
    for t in (0.001, 0.01, 0.1):
        u = solve_neumann(D, f0, t, 40)
        assert u.mass() == pytest.approx(m0, abs=1e-6 * max(abs(m0), 1e-3))
        assert u.active_values.min() >= lo - 1e-10
        assert u.active_values.max() <= hi + 1e-10


def test_semigroup_on_halfline():
    g = halfline_grid(1 / 128, 12.0)
    f0 = ScalarField.from_function(g, lambda x: np.exp(-((x[:, 0] - 1.0) ** 2) / 0.1))
    u1 = solve_neumann(HALF, solve_neumann(HALF, f0, 0.1, 400), 0.1, 400)
    u2 = solve_neumann(HALF, f0, 0.2, 800)
    assert np.max(np.abs(u1.active_values - u2.active_values)) < 1e-4


def test_flat_lipschitz_contraction():
    g = halfline_grid(1 / 128, 12.0)
    f0 = ScalarField.from_function(g, lambda x: np.sin(4 * x[:, 0]))
    u = solve_neumann(HALF, f0, 0.05, 200)
    gu = np.nanmax(np.abs(gradient_field(u)))
    gf = np.nanmax(np.abs(gradient_field(f0)))
    assert gu <= gf + 1e-9


def test_coarse_grid_rejected():
    D, g = disk_grid(1 / 4, R=1.0)
    with pytest.raises(GridTooCoarse):
        solve_neumann(D, ScalarField.from_function(g, lambda x: x[:, 0]), 0.1, 5)


# -- gradients and Lipschitz constants ------------------------------------------------------

def test_gradient_of_linear_is_exact():
    D, g = disk_grid(1 / 32)
    grad = gradient_field(ScalarField.from_function(g, lambda x: x[:, 0]))
    np.testing.assert_allclose(grad[g.active], np.tile([1.0, 0.0], (g.n_active, 1)), atol=1e-9)


def test_gradient_of_quadratic():
    h = 1 / 64
    D, g = disk_grid(h)
    u = ScalarField.from_function(g, lambda x: x[:, 0] ** 2)
    grad = gradient_field(u)
    i = int(round((0.5 - g.axes[0][0]) / h))
    j = int(round((0.0 - g.axes[1][0]) / h))
    np.testing.assert_allclose(grad[i, j], [1.0, 0.0], atol=h * h)
    np.testing.assert_allclose(u.gradient_at([[0.5, 0.0]])[0], [1.0, 0.0], atol=h * h)


def test_lipschitz_examples():
    h = 1 / 64
    D, g = disk_grid(h)
    assert lipschitz_constant(ScalarField.from_function(g, lambda x: x[:, 0])) == pytest.approx(1.0, abs=h)
    assert lipschitz_constant(ScalarField.from_function(g, lambda x: np.full(len(x), 2.0))) == pytest.approx(0.0, abs=1e-10)


def test_disconnected_mask_raises():
    c1, c2 = np.array([-0.5, 0.0]), np.array([0.5, 0.0])
    D = CustomSDF(func=lambda x: np.maximum(0.3 - np.linalg.norm(x - c1, axis=-1),
                                            0.3 - np.linalg.norm(x - c2, axis=-1)),
                  box=((-0.9, 0.9), (-0.4, 0.4)), min_radius=0.3)
    g = Grid.build(D, 1 / 32)
    with pytest.raises(DisconnectedMask):
        lipschitz_constant(ScalarField.from_function(g, lambda x: x[:, 0]))


def test_field_csv(tmp_path):
    g = halfline_grid(1 / 8, 1.0)
    u = ScalarField.from_function(g, lambda x: x[:, 0])
    u.to_csv(tmp_path / "u.csv")
    rows = list(csv.reader(open(tmp_path / "u.csv")))
    assert rows[0] == ["x1", "x2", "value"]
    assert len(rows) == g.n_active + 1


# -- test function --------------------------------------------------------------------------

@settings(max_examples=50, deadline=None)
@given(x=st.floats(-3, 3), y=st.floats(-3, 3), c=st.floats(0.1, 2.0))
def test_test_function_gradient_bounded_and_consistent(x, y, c):
    f = LocalizedTestFunction((0.0, 0.0), (1.0, 0.0), c)
    p = np.array([x, y])
    assert f.grad_norm(p) <= 1.0 + 1e-12
    h = 1e-6
    fd = np.array([(f(p + h * e) - f(p - h * e)) / (2 * h) for e in np.eye(2)])
    np.testing.assert_allclose(f.gradient(p), fd, atol=1e-5)


def test_tangential_test_function_orientation():
    f = tangential_test_function(DiskExterior(radius=1.0), c=0.25)
    np.testing.assert_allclose(f.origin, [1.0, 0.0])
    np.testing.assert_allclose(f.tangent, [0.0, 1.0])
    f = tangential_test_function(ParabolicCap(curvature=1.0), c=0.25)
    np.testing.assert_allclose(f.origin, [0.0, 0.0])


# -- sharpness pieces -----------------------------------------------------------------------

def test_cut_cell_matches_boundary_fitted_oracle():
    D = DiskExterior(radius=1.0)
    t = 1e-3
    q, _ = boundary_quotient(D, t, c=1.0)
    f = tangential_test_function(D, c=1.0)
    st_ = math.sqrt(t)
    L = 9 * st_
    rc, tc, U = polar_exterior_solve(f, t, 1 + L, L, n_rho=200, n_theta=400, steps=100)
    sp = RectBivariateSpline(rc, tc, U, kx=3, ky=3)
    th = math.asin(2 * st_)
    q_ref = (sp(1.0, th)[0, 0] - sp(1.0, 0.0)[0, 0]) / th
    assert q == pytest.approx(q_ref, abs=2e-3)


@pytest.mark.parametrize("D", [DiskExterior(radius=1.0), ParabolicCap(curvature=1.0)],
                         ids=["disk_exterior", "parabolic_cap"])
def test_nonconvex_quotient_exceeds_half_sharp_growth(D):
    for t in (2.5e-4, 1e-3):
        q, _ = boundary_quotient(D, t)
        assert q > 1 + math.sqrt(t / math.pi)


def test_flat_boundary_has_no_sqrt_growth():
    res = sharpness_experiment(0.0, [1e-4, 1e-3, 1e-2], h_max=1 / 256)
    for r in res.rows:
        assert r.quotient <= 1 + r.t
    assert abs(res.fit.a) < 0.05


def test_sharpness_insensitive_to_test_function_curvature():
    t_grid = [1e-4, 4e-4, 1.6e-3]
    s_hats = [sharpness_experiment(1.0, t_grid, c=c).s_hat for c in (0.125, 0.25, 0.5)]
    assert all(0.9 <= s <= 1.25 for s in s_hats)
    assert max(s_hats) - min(s_hats) < 0.1


def test_sharpness_reference_value():
    res = sharpness_experiment(1.0, [0.0025])
    assert res.rows[0].reference == pytest.approx(1.05804, abs=1e-5)
    assert res.rows[0].bound == pytest.approx(1.05804, abs=1e-5)
