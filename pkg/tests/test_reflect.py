import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nonlocal_neumann.reflect import ALL_MODELS, ReflectionModel, affine_branch_1d, check_hypotheses, reflect


@pytest.mark.parametrize("model, z, expected", [
    ("mirror", (4, -3), (4, 2)),
    ("projection", (4, -3), (4, 0)),
    ("fleas", (4, -2), (2, 0)),
    ("censored", (4, -3), (0, 1)),
])
def test_reflect_examples(model, z, expected):
    np.testing.assert_array_equal(reflect(model, [0.0, 1.0], z), expected)


@pytest.mark.parametrize("model", ALL_MODELS)
def test_inside_jump_is_identity(model):
    np.testing.assert_array_equal(reflect(model, [0.0, 1.0], [4.0, 1.0]), [4.0, 2.0])


def test_negative_point_rejected():
    with pytest.raises(ValueError):
        reflect("mirror", [0.0, -0.1], [1.0, 1.0])


def test_unknown_model_named():
    with pytest.raises(ValueError, match="unknown reflection model"):
        ReflectionModel.parse("bounce")


@given(x=st.floats(0, 10), z=st.floats(-20, 20).filter(lambda v: v != 0))
def test_one_dimensional_fleas_equals_projection(x, z):
    assert reflect("fleas", x, z)[0] == reflect("projection", x, z)[0]
    assert affine_branch_1d(ReflectionModel.FLEAS, x) == affine_branch_1d(ReflectionModel.PROJECTION, x)


@given(x=st.floats(0, 10), z=st.floats(-20, 20).filter(lambda v: v != 0))
def test_mirror_is_even_extension(x, z):
    assert reflect("mirror", x, z)[0] == abs(x + z)


@pytest.mark.parametrize("model", ALL_MODELS)
def test_hypothesis_report(model):
    rep = check_hypotheses(model, 100_000, rng_seed=3)
    for key in ("stays_inside", "identity_inside", "displacement", "tangential_odd"):
        assert rep[key].passed, key
    assert rep.observed_c_eta <= model.displacement_bound + 1e-12
    assert rep["normal_lipschitz"].passed == (model is not ReflectionModel.CENSORED)
    assert rep["even_extension"].passed == (model is ReflectionModel.MIRROR)


def test_censored_lipschitz_witness():
    rep = check_hypotheses("censored", 100_000, rng_seed=0)
    res = rep["normal_lipschitz"]
    assert not res.passed and res.worst_margin < 0
    w = res.witness
    assert abs(w["P_x_N"] - w["P_y_N"]) > abs(w["x_N"] - w["y_N"])


@pytest.mark.parametrize("model", ALL_MODELS)
def test_observed_displacement_constant_is_one(model):
    # on the mirror branch eta_N = |z_N| - 2 x_N with 0 <= x_N < |z_N|
    rep = check_hypotheses(model, 100_000, rng_seed=0)
    assert rep.observed_c_eta <= 1.0 + 1e-12
