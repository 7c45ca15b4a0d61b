"""Jump-reflection maps for the half-space {x_N > 0}.

A jump from x by z lands at x + z when that point stays in the closed
half-space. Otherwise the model decides where the particle ends up:

* censored: the jump is cancelled, the particle stays at x;
* fleas: the particle stops where the segment [x, x + z] meets the boundary;
* projection: the target is projected onto the boundary;
* mirror: the target is reflected across the boundary.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class ReflectionModel(str, enum.Enum):
    CENSORED = "censored"
    FLEAS = "fleas"
    PROJECTION = "projection"
    MIRROR = "mirror"

    @classmethod
    def parse(cls, name: "str | ReflectionModel") -> "ReflectionModel":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            choices = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown reflection model {name!r}; expected one of {choices}") from None

    @property
    def displacement_bound(self) -> float:
        """Constant c with |eta(x, z)| <= c |z| on the reflection branch."""
        return 3.0 if self is ReflectionModel.MIRROR else 1.0


ALL_MODELS = tuple(ReflectionModel)


def _as_points(x, z):
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if x.ndim == 0:
        x = x[None]
    if z.ndim == 0:
        z = z[None]
    x, z = np.broadcast_arrays(x, z)
    return x, z


def reflect(model: ReflectionModel | str, x, z) -> np.ndarray:
    """Landing point P(x, z) = x + eta(x, z), vectorized over leading axes.

    The last axis holds coordinates; the normal coordinate is the last one.
    """
    model = ReflectionModel.parse(model)
    x, z = _as_points(x, z)
    xn, zn = x[..., -1], z[..., -1]
    if np.any(xn < 0):
        raise ValueError("x must lie in the closed half-space (x_N >= 0)")
    if np.any(np.all(z == 0.0, axis=-1)):
        raise ValueError("jump z must be nonzero")
    target = x + z
    outside = xn + zn < 0.0
    if not np.any(outside):
        return target
    if model is ReflectionModel.CENSORED:
        branch = x
    elif model is ReflectionModel.FLEAS:
        # outside implies z_N < 0, so the division is safe where it is used
        safe = np.where(outside, -zn, 1.0)
        branch = x + z * (xn / safe)[..., None]
        branch[..., -1] = 0.0
    elif model is ReflectionModel.PROJECTION:
        branch = target.copy()
        branch[..., -1] = 0.0
    else:
        branch = target.copy()
        branch[..., -1] = -xn - zn
    return np.where(outside[..., None], branch, target)


def displacement(model: ReflectionModel | str, x, z) -> np.ndarray:
    """eta(x, z) = P(x, z) - x."""
    x_arr, _ = _as_points(x, z)
    return reflect(model, x, z) - x_arr


def affine_branch_1d(model: ReflectionModel, x: float) -> tuple[float, float] | None:
    """Landing point on the 1-d reflection branch (z < -x) as p0 + s*z.

    Returns (p0, s), or None when the branch leaves the point unchanged
    (censored). Fleas and projection share one branch in 1-d, so they take
    the same code path everywhere downstream.
    """
    model = ReflectionModel.parse(model)
    if model is ReflectionModel.CENSORED:
        return None
    if model is ReflectionModel.MIRROR:
        return (-x, -1.0)
    return (0.0, 0.0)


@dataclass
class HypothesisResult:
    name: str
    passed: bool
    worst_margin: float
    witness: dict | None = None


@dataclass
class HypothesisReport:
    model: ReflectionModel
    dimension: int
    sample_count: int
    observed_c_eta: float
    results: dict[str, HypothesisResult] = field(default_factory=dict)

    def __getitem__(self, key: str) -> HypothesisResult:
        return self.results[key]


def _sample(rng: np.random.Generator, count: int, dim: int):
    x = rng.uniform(-2.0, 2.0, (count, dim))
    x[:, -1] = rng.uniform(0.0, 1.0, count) * rng.choice([1.0, 0.1, 0.01], count)
    x[rng.random(count) < 0.05, -1] = 0.0
    z = rng.standard_normal((count, dim)) * rng.choice([0.05, 0.5, 2.0], (count, 1))
    return x, z


def check_hypotheses(
    model: ReflectionModel | str, sample_count: int = 100_000, rng_seed: int = 0, dimension: int = 2
) -> HypothesisReport:
    """Randomized check of the structural hypotheses on the jump map.

    Keys of the report:

    ``stays_inside``      P_N >= 0 for every sample.
    ``identity_inside``   eta = z whenever x + z stays in the closed half-space.
    ``displacement``      |eta| <= c|z| with the model's constant.
    ``tangential_odd``    flipping z' flips eta' (N >= 2).
    ``normal_lipschitz``  |P(x,z)_N - P(y,z)_N| <= |x_N - y_N|.
    ``even_extension``    P_N = |x_N + z_N| (holds for mirror only).
    """
    model = ReflectionModel.parse(model)
    rng = np.random.default_rng(rng_seed)
    dim = dimension
    x, z = _sample(rng, sample_count, dim)
    z[np.all(z == 0.0, axis=1)] = 1.0
    p = reflect(model, x, z)
    eta = p - x
    zn_norm = np.linalg.norm(z, axis=1)
    report = HypothesisReport(model, dim, sample_count, float(np.max(np.linalg.norm(eta, axis=1) / zn_norm)))

    def record(name, margins, witness_fn):
        i = int(np.argmin(margins))
        worst = float(margins[i])
        passed = worst >= -1e-12
        report.results[name] = HypothesisResult(name, passed, worst, None if passed else witness_fn(i))

    record("stays_inside", p[:, -1], lambda i: {"x": x[i].tolist(), "z": z[i].tolist()})

    inside = x[:, -1] + z[:, -1] >= 0.0
    gap = np.where(inside, -np.max(np.abs(eta - z), axis=1), 0.0)
    record("identity_inside", gap, lambda i: {"x": x[i].tolist(), "z": z[i].tolist()})

    bound = model.displacement_bound
    record("displacement", bound * zn_norm - np.linalg.norm(eta, axis=1),
           lambda i: {"x": x[i].tolist(), "z": z[i].tolist()})

    if dim >= 2:
        zf = z.copy()
        zf[:, :-1] *= -1.0
        eta_f = reflect(model, x, zf) - x
        err = -np.max(np.abs(eta_f[:, :-1] + eta[:, :-1]), axis=1)
        record("tangential_odd", err, lambda i: {"x": x[i].tolist(), "z": z[i].tolist()})

    y = x.copy()
    y[:, -1] = x[:, -1] + rng.uniform(0.0, 0.5, sample_count) * rng.choice([1.0, 0.1, 0.01], sample_count)
    py = reflect(model, y, z)
    lip = np.abs(x[:, -1] - y[:, -1]) - np.abs(p[:, -1] - py[:, -1])
    record("normal_lipschitz", lip, lambda i: {
        "x_N": float(x[i, -1]), "y_N": float(y[i, -1]), "z": z[i].tolist(),
        "P_x_N": float(p[i, -1]), "P_y_N": float(py[i, -1]),
    })

    even = -np.abs(p[:, -1] - np.abs(x[:, -1] + z[:, -1]))
    record("even_extension", even, lambda i: {"x": x[i].tolist(), "z": z[i].tolist()})
    return report
