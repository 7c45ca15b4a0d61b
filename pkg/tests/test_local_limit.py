import math

import numpy as np
import pytest

from nonlocal_neumann.local_limit import (
    LocalCoefficients,
    alpha_sweep,
    local_coefficients,
    measure_concentration,
    normalized_tail_mass,
    solve_local_neumann,
    strictly_decreasing,
)
from nonlocal_neumann.measures import stable_measure
from nonlocal_neumann.nonlocal_op import Grid
from nonlocal_neumann.solver import ProblemSpec


def test_coefficients_for_constant_g():
    c = local_coefficients(1.0)
    assert (c.a, c.b) == (2.0, 0.0)
    assert c.diffusion == 1.0


def test_coefficients_for_affine_g():
    c = local_coefficients(lambda z: np.maximum(1.0 + z, 0.0))
    assert c.a == pytest.approx(2.0)
    assert c.b == pytest.approx(2.0, rel=1e-8)
    assert local_coefficients(stable_measure(1.5, "affine")).b == pytest.approx(2.0)


def test_coefficients_in_two_dimensions():
    c = local_coefficients(1.0, N=2)
    assert c.a == pytest.approx(math.pi)
    assert np.allclose(c.b, 0.0)


def test_nonpositive_g_at_origin_is_rejected():
    with pytest.raises(ValueError):
        local_coefficients(0.0)


@pytest.mark.parametrize("alpha", [0.1, 0.5, 1.0, 1.5, 1.9, 1.99])
def test_unit_ball_concentration_is_two(alpha):
    nu1, nu2 = measure_concentration(1.0, alpha, 1.0)
    assert abs(nu1 - 2.0) < 1e-10 and nu2 == 0.0


def test_concentration_on_a_smaller_ball():
    nu1, _ = measure_concentration(1.0, 1.9, 0.5)
    assert nu1 == pytest.approx(2 * 0.5**0.1, rel=1e-12)


def test_concentration_matches_quadrature_for_variable_g():
    g = lambda z: 1.0 + 0.0 * z
    nu1, nu2 = measure_concentration(g, 1.9, 0.5)
    assert nu1 == pytest.approx(2 * 0.5**0.1, rel=1e-10)
    assert abs(nu2) < 1e-12


def test_first_moment_of_affine_g_tends_to_b():
    vals = [measure_concentration(lambda z: 1.0 + z, a, 1.0)[1] for a in (1.5, 1.9, 1.99)]
    # (2 - alpha) * 2 / (2 - alpha) = 2 for every alpha
    assert np.allclose(vals, 2.0, rtol=1e-8)


def test_two_dimensional_concentration_is_isotropic():
    nu1, nu2 = measure_concentration(1.0, 1.5, 1.0, N=2)
    assert nu1[0, 0] == pytest.approx(math.pi, rel=1e-10)
    assert abs(nu1[0, 1]) < 1e-12
    assert np.allclose(nu2, 0.0)


def test_tail_mass_vanishes_as_alpha_tends_to_two():
    vals = [normalized_tail_mass(a, 0.5) for a in (1.5, 1.9, 1.99)]
    assert strictly_decreasing(vals) and vals[-1] < 0.05


@pytest.mark.parametrize("a,b", [(1.0, 0.0), (0.7, 0.5), (1.0, -0.8)])
def test_manufactured_solution_is_second_order(a, b):
    L = 4.0
    exact = lambda x: np.cos(np.pi * x / L)
    k = np.pi / L
    f = lambda x: a * k * k * exact(x) + b * k * np.sin(k * x) + exact(x)
    coeffs = LocalCoefficients(a, b)
    errs = []
    for n in (101, 201):
        grid = Grid(L, n)
        u = solve_local_neumann(coeffs, f, grid)
        errs.append(np.max(np.abs(u.values - exact(grid.nodes))))
    assert 3.5 <= errs[0] / errs[1] <= 4.5


def test_local_solver_preserves_constants():
    u = solve_local_neumann(LocalCoefficients(2.0, 1.0), lambda x: 3.0 + 0 * x, Grid(4.0, 51))
    assert np.max(np.abs(u.values - 3.0)) < 1e-12


def test_local_solver_symmetry_without_drift():
    grid = Grid(4.0, 81)
    u = solve_local_neumann(LocalCoefficients(1.0, 0.0), lambda x: np.cos(np.pi * x / 4) ** 2 + x * (4 - x), grid)
    assert np.max(np.abs(u.values - u.values[::-1])) < 1e-10


def test_sweep_of_constant_data_has_no_error():
    template = ProblemSpec(stable_measure(1.5), "censored", lambda x: 2.0 + 0 * x, Grid(4.0, 41), normalized=True)
    table = alpha_sweep(template, [1.5, 1.9])
    assert all(r.ok and r.e_alpha < 1e-10 for r in table.rows)


def test_sweep_requires_normalized_template():
    template = ProblemSpec(stable_measure(1.5), "censored", np.cos, Grid(4.0, 41))
    with pytest.raises(ValueError):
        alpha_sweep(template, [1.5])
