"""Deterministic Neumann heat solver on masked grids."""
import numpy as np

from .fields import gradient_field, grid_geodesic, lipschitz_constant
from .grid import Grid, ScalarField
from .kernel import halfline_heat_kernel, halfline_mean, kernel_time_integral
from .sharpness import (SharpnessResult, boundary_quotient, local_grid,
                        sharpness_experiment)
from .solver import solve_neumann
from .testfunctions import LocalizedTestFunction, tangential_test_function


def halfline_grid(h: float = 1 / 256, extent: float = 12.0) -> Grid:
    from ..geometry import HalfLine
    return Grid.build(HalfLine(extent=extent), h)


def point_mass_field(grid: Grid, index: int = 0) -> ScalarField:
    """Discrete unit mass concentrated on one active node."""
    vec = np.zeros(grid.n_active)
    vec[index] = 1.0 / grid.mass_weights()[index]
    return ScalarField(grid, np.full(grid.shape, np.nan)).with_active(vec)


__all__ = [
    "Grid", "ScalarField", "LocalizedTestFunction", "SharpnessResult",
    "boundary_quotient", "gradient_field", "grid_geodesic", "halfline_grid",
    "halfline_heat_kernel", "halfline_mean", "kernel_time_integral", "lipschitz_constant",
    "local_grid", "point_mass_field", "sharpness_experiment", "solve_neumann",
    "tangential_test_function",
]
