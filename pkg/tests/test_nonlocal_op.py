import math

import numpy as np
import pytest

from nonlocal_neumann.appendix_oracles import gamma_closed_form, integral_J
from nonlocal_neumann.measures import stable_measure
from nonlocal_neumann.nonlocal_op import (
    AnalyticFunction,
    Grid,
    GridFunction,
    OperatorSplitParams,
    assemble_operator,
    compensator_drift,
    eval_inner,
    eval_outer,
    inner_analytic,
    neg_log,
    operator_analytic,
    outer_analytic,
    polynomial,
)
from nonlocal_neumann.reflect import ALL_MODELS, ReflectionModel

MODELS = [m.value for m in ALL_MODELS]


def damped_cosine():
    e = np.exp
    return AnalyticFunction(
        lambda x: e(-x) * np.cos(x),
        lambda x: -e(-x) * (np.cos(x) + np.sin(x)),
        lambda x: 2 * e(-x) * np.sin(x),
    )


@pytest.mark.parametrize("model", MODELS)
@pytest.mark.parametrize("alpha", [0.5, 1.5])
@pytest.mark.parametrize("k", [None, 8])
def test_rows_sum_to_zero_and_constants_are_annihilated(model, alpha, k):
    grid = Grid(4.0, 81)
    op = assemble_operator(grid, stable_measure(alpha), model, k=k)
    assert np.max(np.abs(op.matrix.sum(axis=1))) < 1e-10
    assert np.max(np.abs(op.apply(np.full(grid.n, 3.0)))) < 1e-9


@pytest.mark.parametrize("model", MODELS)
@pytest.mark.parametrize("alpha", [0.5, 1.5])
def test_off_diagonal_entries_are_nonnegative(model, alpha):
    op = assemble_operator(Grid(4.0, 81), stable_measure(alpha), model)
    off = op.matrix - np.diag(np.diag(op.matrix))
    assert off.min() >= -1e-14


@pytest.mark.parametrize("model", MODELS)
@pytest.mark.parametrize("alpha", [0.5, 1.5])
def test_operator_is_nonpositive_at_an_interior_maximum(model, alpha):
    grid = Grid(4.0, 81)
    op = assemble_operator(grid, stable_measure(alpha), model)
    rng = np.random.default_rng(3)
    for _ in range(5):
        u = rng.uniform(-1, 1, grid.n)
        i = int(rng.integers(1, grid.n - 1))
        u[i] = 2.0
        assert op.apply(u)[i] <= 1e-12


def test_linear_function_has_zero_inner_part_away_from_boundary():
    mu = stable_measure(0.5)
    params = OperatorSplitParams(delta=0.25)
    for x in (0.5, 1.0, 3.0):
        assert abs(eval_inner(polynomial([0.0, 1.0]), mu, "censored", x, params)) < 1e-12


@pytest.mark.parametrize("alpha", [0.3, 0.8, 1.2, 1.7])
def test_inner_part_of_square_matches_closed_form(alpha):
    delta = 0.25
    value = eval_inner(polynomial([0.0, 0.0, 1.0]), stable_measure(alpha), "censored", 1.0,
                       OperatorSplitParams(delta=delta))
    exact = 2 * delta ** (2 - alpha) / (2 - alpha)
    assert value == pytest.approx(exact, rel=1e-8)


@pytest.mark.parametrize("model", MODELS)
@pytest.mark.parametrize("alpha", [0.5, 1.5])
def test_split_radius_does_not_change_the_total(model, alpha):
    mu = stable_measure(alpha, "affine")
    phi = damped_cosine()
    m = ReflectionModel.parse(model)
    totals = [(inner_analytic(phi, mu, m, 0.7, d) + outer_analytic(phi, mu, m, 0.7, d)).value
              for d in (0.1, 0.3, 1.0)]
    assert np.ptp(totals) < 1e-7


@pytest.mark.parametrize("alpha", [0.5, 1.5])
def test_inner_part_shrinks_with_the_radius(alpha):
    mu = stable_measure(alpha)
    phi = damped_cosine()
    vals = [abs(inner_analytic(phi, mu, ReflectionModel.CENSORED, 1.0, d).value) for d in (0.2, 0.1, 0.05, 0.025)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    # the paired inner integral scales like delta^(2 - alpha)
    assert vals[-1] / vals[0] == pytest.approx(8.0 ** -(2 - alpha), rel=0.1)


@pytest.mark.parametrize("alpha", [0.5, 1.5])
@pytest.mark.parametrize("k", [None, 8])
def test_mirror_matches_even_extension_on_the_whole_line(alpha, k):
    f = lambda x: np.cos(x) + 0.3 * np.exp(-x * x)
    half, whole = Grid(4.0, 81), Grid.whole_line(4.0, 161)
    a = assemble_operator(half, stable_measure(alpha), "mirror", k=k)
    b = assemble_operator(whole, stable_measure(alpha), None, k=k)
    diff = a.apply(f(half.nodes)) - b.apply(f(np.abs(whole.nodes)))[80:]
    assert np.max(np.abs(diff)) <= 1e-10


def test_grid_operator_converges_to_quadrature():
    mu = stable_measure(1.5)
    phi = damped_cosine()
    exact = operator_analytic(phi, mu, "censored", 1.0, delta=0.25).value
    errs = []
    for n in (81, 161, 321):
        grid = Grid(8.0, n)
        u = GridFunction.from_function(grid, phi.value)
        params = OperatorSplitParams(delta=0.25)
        total = eval_inner(u, mu, "censored", 1.0, params) + eval_outer(u, mu, "censored", 1.0, params)
        errs.append(abs(total - exact))
    assert errs[-1] < errs[0]
    assert errs[-1] < 0.02 * abs(exact)


@pytest.mark.parametrize("alpha", [0.2, 0.5, 0.8])
@pytest.mark.parametrize("x", [0.5, 1.0, 2.0])
def test_negative_log_is_a_supersolution_with_constant_J(alpha, x):
    res = operator_analytic(neg_log(), stable_measure(alpha), "censored", x, delta=0.25)
    assert -res.value * x**alpha == pytest.approx(integral_J(alpha).value, abs=1e-4)


def test_boundary_point_is_rejected_when_c_flag_is_one():
    with pytest.raises(ValueError):
        operator_analytic(polynomial([1.0, 1.0]), stable_measure(1.5), "censored", 0.0)


@pytest.mark.parametrize("model", MODELS)
@pytest.mark.parametrize("x", [0.3, 1.0, 2.5])
def test_symmetric_measure_has_no_interior_drift(model, x):
    assert abs(compensator_drift(stable_measure(1.5), model, x, r=0.2)) < 1e-12


@pytest.mark.parametrize("x", [0.1, 0.01, 0.001])
def test_censored_drift_matches_closed_form(x):
    gamma = compensator_drift(stable_measure(1.5), "censored", x, r=1.0)
    assert gamma == pytest.approx(gamma_closed_form(1.5, 1.0, x), rel=1e-8)


def test_mirror_drift_is_nonnegative_near_the_boundary():
    vals = [compensator_drift(stable_measure(1.5, "affine"), "mirror", x, r=1.0) for x in (0.5, 0.1, 0.01)]
    assert min(vals) >= 0


def test_drift_at_the_boundary_diverges_for_alpha_at_least_one():
    assert math.isinf(compensator_drift(stable_measure(1.5), "censored", 0.0, r=1.0))
    assert math.isfinite(compensator_drift(stable_measure(0.5), "censored", 0.0, r=1.0))


def test_delta_is_rounded_to_whole_cells():
    grid = Grid(4.0, 81)
    assert OperatorSplitParams(delta=0.26).grid_delta(grid) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        OperatorSplitParams(delta=2.0).grid_delta(grid)


def test_grid_function_extension():
    u = GridFunction(2.0, 3, [1.0, 2.0, 3.0])
    assert u(np.array([-1.0, 0.5, 5.0])).tolist() == [1.0, 1.5, 3.0]
    v = GridFunction(2.0, 3, [1.0, 2.0, 3.0], "prescribed", 0.0)
    assert v(np.array([5.0])).tolist() == [0.0]
    with pytest.raises(ValueError):
        GridFunction(2.0, 3, [1.0, 2.0])
