"""Local limit of the (2 - alpha)-normalized problem as alpha -> 2.

With a = g(0)|S^{N-1}|/N and b = Dg(0)|S^{N-1}|/N, a second-order Taylor
expansion of u(x + z) - u(x) gives the limit operator (a/2) Laplacian + b.D:
the second-order term carries the usual factor 1/2. ``LocalCoefficients``
keeps a and b as defined and exposes the limit diffusion a/2 separately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy import integrate
from scipy.linalg import solve_banded

from .measures import LevyMeasureSpec, sphere_area, sphere_directions
from .nonlocal_op import Grid, GridFunction
from .reflect import ALL_MODELS, ReflectionModel
from .solver import ProblemSpec, solve_direct


@dataclass(frozen=True)
class LocalCoefficients:
    a: float
    b: float | np.ndarray

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("a must be positive")

    @property
    def diffusion(self) -> float:
        """Coefficient of the Laplacian in the alpha -> 2 limit."""
        return 0.5 * self.a


def _g_handle(g, N: int = 1) -> tuple[Callable, int | None, tuple | None]:
    if isinstance(g, LevyMeasureSpec):
        return g.g_at, g.dimension, g.g_grad0
    if callable(g):
        return g, None, None
    value = float(g)
    if N == 1:
        return (lambda z: np.full(np.shape(z), value)), None, None
    return (lambda z: np.full(np.shape(z)[:-1], value)), N, None


def _radial_moment(h: Callable[[float], float], delta: float, alpha: float) -> float:
    """Integral of h(t) t^(1 - alpha) over (0, delta) for h smooth but noisy near 0.

    Difference quotients in h lose all digits as t -> 0, so h is frozen at
    t0 = 1e-4 delta below t0 (error O(t0^2) for smooth g) and the rest is
    integrated in s = ln t.
    """
    c = 2.0 - alpha
    t0 = 1e-4 * delta
    head = h(t0) * t0**c / c
    tail = integrate.quad(lambda s: h(math.exp(s)) * math.exp(c * s), math.log(t0), math.log(delta),
                          epsabs=1e-15, epsrel=1e-12, limit=200)[0]
    return head + tail


def local_coefficients(g, N: int = 1, grad0: Sequence[float] | None = None) -> LocalCoefficients:
    """a = g(0)|S^{N-1}|/N and b = Dg(0)|S^{N-1}|/N.

    ``g`` is a measure, a callable on R^N (scalar argument in 1-d) or a
    constant. Without an explicit gradient Dg(0) is taken by central
    differences.
    """
    fn, dim, grad_known = _g_handle(g, N)
    N = dim or N
    origin = np.zeros(N) if N > 1 else np.array(0.0)
    g0 = float(fn(origin))
    if not g0 > 0:
        raise ValueError("g(0) must be positive")
    if grad0 is None:
        grad0 = grad_known
    if grad0 is None:
        step = 1e-6
        grad0 = []
        for i in range(N):
            e = np.zeros(N)
            e[i] = step
            if N == 1:
                grad0.append((float(fn(np.array(step))) - float(fn(np.array(-step)))) / (2 * step))
            else:
                grad0.append((float(fn(e)) - float(fn(-e))) / (2 * step))
    scale = sphere_area(N) / N
    grad = np.asarray(grad0, dtype=float)
    b = float(grad[0]) * scale if N == 1 else grad * scale
    return LocalCoefficients(g0 * scale, b)


def measure_concentration(g, alpha: float, delta: float, N: int = 1, sphere_samples: int = 512):
    """Masses of nu1 = (2-alpha) z z^T g dz/|z|^{N+alpha} and nu2 = (2-alpha) z (g(z)-g(0)) dz/|z|^{N+alpha} on |z| < delta.

    In 1-d both are scalars; for N >= 2 nu1 is an N x N matrix and nu2 a
    vector. Constant g uses exact antiderivatives.
    """
    if not 0 < alpha < 2:
        raise ValueError("alpha must lie in (0, 2)")
    fn, dim, _ = _g_handle(g, N)
    N = dim or N
    const = isinstance(g, (int, float)) or (isinstance(g, LevyMeasureSpec) and g.g_const is not None)
    c = 2.0 - alpha
    if N == 1:
        if const:
            g0 = float(g.g_const if isinstance(g, LevyMeasureSpec) else g)
            return c * g0 * 2.0 * delta**c / c, 0.0
        # QUADPACK integrates the weight t^(1 - alpha) exactly
        even = integrate.quad(lambda t: float(fn(np.array(t)) + fn(np.array(-t))), 0.0, delta,
                              weight="alg", wvar=(1.0 - alpha, 0.0))[0]
        odd = _radial_moment(lambda t: float(fn(np.array(t)) - fn(np.array(-t))) / t, delta, alpha)
        return c * even, c * odd
    dirs = sphere_directions(N, sphere_samples)
    area = sphere_area(N)
    outer = np.einsum("ki,kj->kij", dirs, dirs)
    g0 = float(fn(np.zeros(N)))

    def nu1_radial(r):
        w = fn(r * dirs)
        return np.einsum("k,kij->ij", w, outer) / len(dirs)

    def nu2_radial(r):
        w = fn(r * dirs) - g0
        return (w @ dirs) / len(dirs) / r

    if const:
        nu1 = area * nu1_radial(1.0) * delta**c
    else:
        nu1 = np.array([[integrate.quad(lambda r: nu1_radial(r)[i, j], 0.0, delta, weight="alg",
                                        wvar=(1.0 - alpha, 0.0))[0] for j in range(N)] for i in range(N)])
        nu1 = c * area * nu1
    nu2 = np.array([_radial_moment(lambda r: nu2_radial(r)[i], delta, alpha) for i in range(N)])
    return nu1, c * area * nu2


def normalized_tail_mass(alpha: float, delta: float, g0: float = 1.0, N: int = 1) -> float:
    """(2 - alpha) times the mass of {|z| > delta} for constant g = g0."""
    return (2.0 - alpha) * g0 * sphere_area(N) * delta ** (-alpha) / alpha


def solve_local_neumann(
    coeffs: LocalCoefficients,
    f,
    grid: Grid,
    tol: float | None = None,
    diffusion: float | None = None,
) -> GridFunction:
    """Solve -D u'' - b u' + u = f on [0, L] with u'(0) = u'(L) = 0.

    D defaults to ``coeffs.a``. Both ends use mirrored ghost nodes; the drift
    is centred unless the cell Peclet number |b| h / (2D) exceeds 1, in which
    case it is upwinded. ``tol`` is accepted for interface symmetry; the
    tridiagonal solve is direct.
    """
    d = coeffs.a if diffusion is None else diffusion
    if not d > 0:
        raise ValueError("diffusion must be positive")
    b = float(np.atleast_1d(coeffs.b)[-1])
    n, h = grid.n, grid.h
    rhs = np.asarray(f(grid.nodes) if callable(f) else f, dtype=float) * np.ones(n)
    lower = np.full(n, -d / h**2)
    upper = np.full(n, -d / h**2)
    diag = np.full(n, 1.0 + 2 * d / h**2)
    if abs(b) * h / (2 * d) > 1:
        if b > 0:
            upper -= b / h
            diag += b / h
        else:
            lower += b / h
            diag -= b / h
    else:
        upper -= b / (2 * h)
        lower += b / (2 * h)
    # ghost nodes: u_{-1} = u_1 and u_n = u_{n-2}; the drift stencil vanishes there
    ab = np.zeros((3, n))
    ab[1] = diag
    ab[1, 0] = ab[1, -1] = 1.0 + 2 * d / h**2
    ab[0, 1:] = upper[:-1]
    ab[2, :-1] = lower[1:]
    ab[0, 1] = -2 * d / h**2
    ab[2, n - 2] = -2 * d / h**2
    u = solve_banded((1, 1), ab, rhs)
    return GridFunction(grid.L, n, u)


@dataclass
class SweepRow:
    alpha: float
    model: str
    e_alpha: float
    iterations: int
    residual: float
    ok: bool = True
    note: str = ""


@dataclass
class SweepTable:
    rows: list[SweepRow]
    coefficients: LocalCoefficients
    local: GridFunction
    window: float
    solutions: dict = field(default_factory=dict, repr=False)

    def errors(self, model: str) -> list[float]:
        return [r.e_alpha for r in self.rows if r.model == model]

    def cross_model_gap(self, alpha: float) -> float:
        """Largest pairwise sup-distance between models on the comparison window."""
        sols = [v for (a, _), v in self.solutions.items() if a == alpha]
        mask = self.local.nodes <= self.window + 1e-12
        gap = 0.0
        for i in range(len(sols)):
            for j in range(i + 1, len(sols)):
                gap = max(gap, float(np.max(np.abs(sols[i][mask] - sols[j][mask]))))
        return gap


def alpha_sweep(
    template: ProblemSpec,
    alphas: Sequence[float],
    tol: float = 1e-10,
    models: Sequence[ReflectionModel | str] = ALL_MODELS,
    window_fraction: float = 0.8,
) -> SweepTable:
    """Compare normalized nonlocal solutions with the local limit as alpha -> 2.

    e_alpha is the sup-distance on [0, window_fraction * L] between the
    nonlocal solution and the solution of -(a/2) u'' - b u' + u = f with
    Neumann conditions.
    """
    if not template.normalized:
        raise ValueError("alpha_sweep needs a normalized problem template")
    coeffs = local_coefficients(template.measure)
    grid = template.grid
    local = solve_local_neumann(coeffs, template.f, grid, tol, diffusion=coeffs.diffusion)
    window = window_fraction * grid.L
    mask = grid.nodes <= window + 1e-12
    rows, sols = [], {}
    for alpha in alphas:
        measure = replace(template.measure, alpha=float(alpha), c_flag=None)
        for model in models:
            model = ReflectionModel.parse(model)
            prob = replace(template, measure=measure, model=model)
            prob._ops = {}
            try:
                rep = solve_direct(prob)
            except (ValueError, np.linalg.LinAlgError) as exc:
                rows.append(SweepRow(float(alpha), model.value, math.nan, 0, math.nan, False, str(exc)))
                continue
            e = float(np.max(np.abs(rep.values[mask] - local.values[mask])))
            ok = max(rep.residual, rep.boundary_residual) <= max(tol, 1e-9)
            rows.append(SweepRow(float(alpha), model.value, e, rep.iterations, max(rep.residual, rep.boundary_residual), ok))
            sols[(float(alpha), model.value)] = rep.values
    return SweepTable(rows, coeffs, local, window, sols)


def strictly_decreasing(values: Sequence[float]) -> bool:
    return all(b < a for a, b in zip(values, values[1:]))
