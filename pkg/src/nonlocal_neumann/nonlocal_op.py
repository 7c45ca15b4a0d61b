"""The nonlocal operator I[u](x) = integral of u(P(x, z)) - u(x) dmu(z) in 1-d.

Grid functions are piecewise linear on a uniform grid with a constant far
field. Each operator row integrates the hat basis exactly against the kernel
power on pieces where the landing point P(x, z) is affine in z; the numerator
g is sampled at sub-cell midpoints. Jumps shorter than one cell are handled by
a second-order Taylor stencil (the symmetric pairing that removes the
principal value).

Boundary row at x = 0:

* mirror: ghost node u(-h) = u(h), i.e. the even extension, for every alpha;
* other models with a singular symmetric part (c_flag = 1): the same ghost
  closure on the half core, which enforces the Neumann condition as h -> 0;
* other models with c_flag = 0, or truncated measures: the equation itself,
  with one-sided linear interpolation.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .measures import LevyMeasureSpec, cell_moments
from .quadrature import QuadResult, integrate
from .reflect import ReflectionModel, affine_branch_1d

log = logging.getLogger(__name__)

RIGHT_EXT = 0  # column offsets past the last node
LEFT_EXT = 1


@dataclass(frozen=True)
class Grid:
    """Uniform nodes on [origin, L]; origin is 0 (half-line) or -L (whole line)."""

    L: float
    n: int
    origin: float = 0.0

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError("L must be positive")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.origin not in (0.0, -self.L):
            raise ValueError("origin must be 0 or -L")

    @classmethod
    def whole_line(cls, L: float, n: int) -> "Grid":
        return cls(L, n, origin=-L)

    @property
    def is_whole_line(self) -> bool:
        return self.origin < 0

    @property
    def width(self) -> float:
        return self.L - self.origin

    @property
    def h(self) -> float:
        return self.width / (self.n - 1)

    @property
    def nodes(self) -> np.ndarray:
        return self.origin + self.h * np.arange(self.n)


@dataclass
class GridFunction:
    """Nodal values of a piecewise-linear function with a constant far field.

    ``extension`` is ``"constant"`` (the value at the nearest end node) or
    ``"prescribed"`` (``extension_value`` beyond both ends).
    """

    L: float
    n: int
    values: np.ndarray
    extension: str = "constant"
    extension_value: float | None = None
    origin: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.n,):
            raise ValueError(f"expected {self.n} values, got shape {self.values.shape}")
        if self.extension not in ("constant", "prescribed"):
            raise ValueError(f"unknown extension policy {self.extension!r}")
        if self.extension == "prescribed" and self.extension_value is None:
            raise ValueError("prescribed extension needs extension_value")

    @classmethod
    def from_function(cls, grid: Grid, f: Callable, **kw) -> "GridFunction":
        vals = np.asarray(f(grid.nodes), dtype=float) * np.ones(grid.n)
        return cls(grid.L, grid.n, vals, origin=grid.origin, **kw)

    @property
    def grid(self) -> Grid:
        return Grid(self.L, self.n, self.origin)

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    def far_values(self) -> tuple[float, float]:
        """(right, left) values used beyond the window."""
        if self.extension == "prescribed":
            return float(self.extension_value), float(self.extension_value)
        return float(self.values[-1]), float(self.values[0])

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        right, left = self.far_values()
        out = np.interp(x, self.nodes, self.values)
        out = np.where(x > self.L, right, out)
        return np.where(x < self.origin, left, out)

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.L, self.n, values, self.extension, self.extension_value, self.origin)


@dataclass(frozen=True)
class AnalyticFunction:
    """A smooth test function on [0, inf) with its first two derivatives."""

    value: Callable
    d1: Callable
    d2: Callable
    name: str = "analytic"

    def __call__(self, x):
        return self.value(x)


def polynomial(coeffs) -> AnalyticFunction:
    p = np.polynomial.Polynomial(coeffs)
    return AnalyticFunction(p, p.deriv(1), p.deriv(2), name=f"poly{list(coeffs)}")


def neg_log() -> AnalyticFunction:
    return AnalyticFunction(lambda x: -np.log(x), lambda x: -1.0 / x, lambda x: 1.0 / x**2, name="-log")


@dataclass(frozen=True)
class OperatorSplitParams:
    """Inner/outer split radius and quadrature controls.

    On grids delta is rounded to a whole number of cells so the inner and
    outer rows add up to the full row exactly.
    """

    delta: float | None = None
    quad_cells_per_node: int = 1
    tail_tol: float = 1e-6

    def __post_init__(self):
        if self.delta is not None and not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.quad_cells_per_node < 1:
            raise ValueError("quad_cells_per_node must be >= 1")
        if self.tail_tol < 0:
            raise ValueError("tail_tol must be nonnegative")

    def grid_delta(self, grid: Grid) -> float:
        h = grid.h
        raw = self.delta if self.delta is not None else max(4 * h, grid.L / 64)
        if raw > grid.L / 4 + 1e-12:
            raise ValueError(f"delta={raw} exceeds L/4={grid.L / 4}")
        return max(1, round(raw / h)) * h


# ---------------------------------------------------------------------------
# row assembly


class _RowBuilder:
    """Assembles operator rows for one grid, measure, model and cutoff."""

    def __init__(
        self,
        grid: Grid,
        measure: LevyMeasureSpec,
        model: ReflectionModel | None,
        cutoff: float,
        params: OperatorSplitParams,
    ):
        if measure.dimension != 1:
            raise ValueError("operator assembly is 1-d only")
        if model is None and not grid.is_whole_line:
            raise ValueError("a reflection model is required on the half-line")
        if model is not None and grid.is_whole_line:
            raise ValueError("the whole-line window has no boundary; pass model=None")
        self.grid = grid
        self.mu = measure
        self.model = model
        self.cut = float(cutoff)
        self.sub = params.quad_cells_per_node
        self.h = grid.h
        self.nodes = grid.nodes
        self.delta = params.grid_delta(grid)
        self.has_core = self.cut < self.h
        if self.has_core:
            c, h = self.cut, self.h
            self.core_m2 = cell_moments(measure, -h, -c, 2) + cell_moments(measure, c, h, 2)
            self.core_m2_pos = cell_moments(measure, c, h, 2)
            self.core_m1 = measure.odd_moment_pv(c, h)

    # -- boundary closure ------------------------------------------------------
    def row0_closure(self) -> str:
        if self.grid.is_whole_line:
            return "interior"
        if self.model is ReflectionModel.MIRROR:
            return "ghost" if self.has_core else "linear"
        if self.cut == 0.0 and self.mu.c_flag == 1:
            return "ghost-half"
        return "linear"

    # -- pieces ----------------------------------------------------------------
    def _pieces(self, i: int):
        """(za, zb, p0, s) with P = p0 + s*z on za < z < zb, plus special terms."""
        x = float(self.nodes[i])
        h, c = self.h, self.cut
        pieces = []
        special = []
        boundary = i == 0 and not self.grid.is_whole_line
        closure = self.row0_closure() if boundary else "interior"
        if closure == "interior":
            r_pos = r_neg = h if self.has_core else c
            if self.has_core:
                special.append("core")
        elif closure == "ghost":
            r_pos = r_neg = h
            special.append("ghost")
        elif closure == "ghost-half":
            r_pos = r_neg = h
            special.append("ghost-half")
        else:
            r_pos = r_neg = c
            if c == 0.0:
                special.append("first-cell")
                r_pos = h
        pieces.append((r_pos, math.inf, x, 1.0))
        if self.grid.is_whole_line:
            pieces.append((-math.inf, -r_neg, x, 1.0))
            return pieces, special
        if x > r_neg:
            pieces.append((-x, -r_neg, x, 1.0))
        branch = affine_branch_1d(self.model, x)
        if branch is not None:
            p0, s = branch
            if not (s == 0.0 and p0 == x):
                pieces.append((-math.inf, -max(x, r_neg), p0, s))
        return pieces, special

    def _window(self, i: int) -> float:
        """Radius of the symmetric window that gets the curvature correction."""
        if self.grid.is_whole_line or self.model is ReflectionModel.MIRROR:
            return self.delta
        return min(self.delta, float(self.nodes[i]))

    def _add_piece(self, acc: np.ndarray, za: float, zb: float, p0: float, s: float, window: float) -> float:
        """Add interpolation weights for one affine piece.

        Returns the integral of (P - y_m)(y_{m+1} - P) over sub-cells inside
        the window: linear interpolation overshoots by u''/2 times this amount,
        which the caller removes with a second difference.
        """
        n, grid = self.grid.n, self.grid
        if not za < zb:
            return 0.0
        if s == 0.0:
            self._add_point(acc, p0, self.mu.moment(za, zb, 0))
            return 0.0
        pa, pb = p0 + s * za, p0 + s * zb
        plo, phi = min(pa, pb), max(pa, pb)

        def z_of(p):
            return (p - p0) / s

        lo_in, hi_in = max(plo, grid.origin), min(phi, grid.L)
        if phi > grid.L:
            za_e, zb_e = sorted((z_of(max(plo, grid.L)), za if s < 0 else zb))
            acc[n + RIGHT_EXT] += self.mu.moment(za_e, zb_e, 0)
        if plo < grid.origin:
            za_e, zb_e = sorted((z_of(min(phi, grid.origin)), zb if s < 0 else za))
            acc[n + LEFT_EXT] += self.mu.moment(za_e, zb_e, 0)
        if not lo_in < hi_in:
            return 0.0
        step = self.h / self.sub
        j0 = math.floor((lo_in - grid.origin) / step) + 1
        j1 = math.ceil((hi_in - grid.origin) / step) - 1
        inner = grid.origin + step * np.arange(j0, j1 + 1)
        pts = np.concatenate([[lo_in], inner[(inner > lo_in) & (inner < hi_in)], [hi_in]])
        zs = np.sort(z_of(pts))
        zl, zr = zs[:-1], zs[1:]
        keep = zr > zl
        zl, zr = zl[keep], zr[keep]
        m0 = cell_moments(self.mu, zl, zr, 0)
        m1 = cell_moments(self.mu, zl, zr, 1)
        pmid = p0 + s * 0.5 * (zl + zr)
        m = np.clip(np.floor((pmid - grid.origin) / self.h).astype(int), 0, n - 2)
        ym = self.nodes[m]
        w = (s * m1 + (p0 - ym) * m0) / self.h
        np.add.at(acc, m, m0 - w)
        np.add.at(acc, m + 1, w)
        inside = np.maximum(np.abs(zl), np.abs(zr)) <= window * (1 + 1e-12)
        if not np.any(inside):
            return 0.0
        m2 = cell_moments(self.mu, zl[inside], zr[inside], 2)
        lo_gap = p0 - ym[inside]
        hi_gap = ym[inside] + self.h - p0
        return float(np.sum(lo_gap * hi_gap * m0[inside] + s * (hi_gap - lo_gap) * m1[inside] - m2))

    def _add_point(self, acc: np.ndarray, p: float, mass: float) -> None:
        grid, n = self.grid, self.grid.n
        if p > grid.L:
            acc[n + RIGHT_EXT] += mass
            return
        t = (p - grid.origin) / self.h
        m = min(int(math.floor(t)), n - 2)
        frac = t - m
        acc[m] += mass * (1.0 - frac)
        acc[m + 1] += mass * frac

    def _neighbors(self, i: int) -> tuple[int, int]:
        n = self.grid.n
        left = i - 1 if i > 0 else n + LEFT_EXT
        right = i + 1 if i < n - 1 else n + RIGHT_EXT
        return left, right

    def _add_second_difference(self, acc: np.ndarray, i: int, coef: float, ghost: bool) -> None:
        """Add coef * (u_{i-1} - 2u_i + u_{i+1}) / h^2 (diagonal fixed later)."""
        left, right = self._neighbors(i)
        if ghost:
            acc[right] += 2.0 * coef / self.h**2
        else:
            acc[left] += coef / self.h**2
            acc[right] += coef / self.h**2

    def _add_special(self, acc: np.ndarray, i: int, kind: str) -> None:
        h = self.h
        left, right = self._neighbors(i)
        if kind == "core":
            self._add_second_difference(acc, i, 0.5 * self.core_m2, ghost=False)
            acc[left] -= self.core_m1 / (2 * h)
            acc[right] += self.core_m1 / (2 * h)
        elif kind == "ghost":
            self._add_second_difference(acc, i, 0.5 * self.core_m2, ghost=True)
        elif kind == "ghost-half":
            acc[right] += self.core_m2_pos / (h * h)
        elif kind == "first-cell":
            acc[right] += cell_moments(self.mu, 0.0, h, 1) / h

    def row(self, i: int, band: tuple[float, float] = (0.0, math.inf)) -> np.ndarray:
        """Weights on [u_0..u_{n-1}, right far value, left far value]."""
        b_lo, b_hi = band
        acc = np.zeros(self.grid.n + 2)
        pieces, special = self._pieces(i)
        inner = b_lo == 0.0
        if inner:
            for kind in special:
                self._add_special(acc, i, kind)
        # without the core stencil the neighbours may carry no weight, so the
        # correction is skipped to keep the row monotone
        window = self._window(i) if inner and self.has_core else 0.0
        curvature = 0.0
        for za, zb, p0, s in pieces:
            if zb <= 0.0:
                za, zb = max(za, -b_hi), min(zb, -b_lo)
            else:
                za, zb = max(za, b_lo), min(zb, b_hi)
            curvature += self._add_piece(acc, za, zb, p0, s, window)
        if curvature > 0.0:
            ghost = i == 0 and not self.grid.is_whole_line
            self._add_second_difference(acc, i, -0.5 * curvature, ghost=ghost)
        acc[i] = 0.0
        acc[i] = -np.sum(acc)
        return acc


def _fold(acc: np.ndarray, n: int, extension: str, ext_value: float | None) -> tuple[np.ndarray, float]:
    row = acc[:n].copy()
    if extension == "prescribed":
        return row, float((acc[n + RIGHT_EXT] + acc[n + LEFT_EXT]) * ext_value)
    row[n - 1] += acc[n + RIGHT_EXT]
    row[0] += acc[n + LEFT_EXT]
    return row, 0.0


@dataclass
class DiscreteOperator:
    """Dense matrix with (A u + offset)_i approximating I[u](x_i)."""

    matrix: np.ndarray
    offset: np.ndarray
    grid: Grid
    measure: LevyMeasureSpec
    model: ReflectionModel | None
    cutoff: float
    delta: float
    row0_closure: str
    tail_mass_beyond_half: float
    tail_ok: bool
    extension: str = "constant"
    extension_value: float | None = None
    notes: list[str] = field(default_factory=list)

    def apply(self, values: np.ndarray) -> np.ndarray:
        return self.matrix @ values + self.offset

    @property
    def total_mass(self) -> float:
        """Largest row mass, the bounded-operator norm divided by 2."""
        return float(np.max(-np.diag(self.matrix)))


def _model_or_none(model):
    return None if model is None else ReflectionModel.parse(model)


def assemble_operator(
    grid: Grid,
    measure: LevyMeasureSpec,
    model: ReflectionModel | str | None,
    params: OperatorSplitParams | None = None,
    k: int | None = None,
    extension: str = "constant",
    extension_value: float | None = None,
) -> DiscreteOperator:
    """Dense discrete operator; ``k`` restricts the measure to |z| > 1/k."""
    params = params or OperatorSplitParams()
    model = _model_or_none(model)
    cutoff = 0.0 if k is None else 1.0 / k
    delta = params.grid_delta(grid)
    builder = _RowBuilder(grid, measure, model, cutoff, params)
    n = grid.n
    mat = np.empty((n, n))
    off = np.zeros(n)
    for i in range(n):
        mat[i], off[i] = _fold(builder.row(i), n, extension, extension_value)
    half = grid.width / 2
    tail = measure.tail_mass(max(half, cutoff))
    ok = tail <= params.tail_tol
    notes = []
    if not ok:
        notes.append(f"tail mass beyond half the window is {tail:.3g} > tail_tol; far field uses the {extension} extension")
        log.info(notes[-1])
    return DiscreteOperator(
        mat, off, grid, measure, model, cutoff, delta, builder.row0_closure(), tail, ok,
        extension, extension_value, notes,
    )


# ---------------------------------------------------------------------------
# pointwise evaluation


def _node_index(u: GridFunction, x: float) -> int:
    grid = u.grid
    t = (x - grid.origin) / grid.h
    i = int(round(t))
    if abs(t - i) > 1e-9 or not 0 <= i < grid.n:
        raise ValueError("grid evaluation points must be grid nodes")
    return i


def _grid_band(u: GridFunction, measure, model, x, params, band, k=None) -> float:
    model = _model_or_none(model)
    grid = u.grid
    builder = _RowBuilder(grid, measure, model, 0.0 if k is None else 1.0 / k, params)
    i = _node_index(u, x)
    acc = builder.row(i, band)
    right, left = u.far_values()
    return float(acc[: grid.n] @ u.values + acc[grid.n + RIGHT_EXT] * right + acc[grid.n + LEFT_EXT] * left)


def _check_point(measure: LevyMeasureSpec, x: float) -> None:
    if x < 0:
        raise ValueError("x must be in the closed half-line")
    if x == 0.0 and measure.c_flag == 1:
        raise ValueError("at x = 0 with c_flag = 1 the Neumann condition replaces the equation")


def eval_inner(u, measure: LevyMeasureSpec, model, x: float, params: OperatorSplitParams | None = None) -> float:
    """Contribution of jumps with |z| < delta at x."""
    params = params or OperatorSplitParams()
    if isinstance(u, GridFunction):
        if not u.grid.is_whole_line:
            _check_point(measure, x)
        return _grid_band(u, measure, model, x, params, (0.0, params.grid_delta(u.grid)))
    _check_point(measure, x)
    return inner_analytic(u, measure, ReflectionModel.parse(model), x, _analytic_delta(params)).value


def eval_outer(u, measure: LevyMeasureSpec, model, x: float, params: OperatorSplitParams | None = None) -> float:
    """Contribution of jumps with |z| >= delta at x."""
    params = params or OperatorSplitParams()
    if isinstance(u, GridFunction):
        return _grid_band(u, measure, model, x, params, (params.grid_delta(u.grid), math.inf))
    if x < 0:
        raise ValueError("x must be in the closed half-line")
    return outer_analytic(u, measure, ReflectionModel.parse(model), x, _analytic_delta(params)).value


def _analytic_delta(params: OperatorSplitParams) -> float:
    if params.delta is None:
        raise ValueError("analytic evaluation needs an explicit delta")
    return params.delta


def _branch_value(phi: AnalyticFunction, model: ReflectionModel, x: float):
    """u(P(x, z)) on the reflection branch as a function of z, or None."""
    branch = affine_branch_1d(model, x)
    if branch is None:
        return None
    p0, s = branch
    return lambda z: phi.value(p0 + s * z)


def inner_analytic(phi: AnalyticFunction, mu: LevyMeasureSpec, model: ReflectionModel, x: float, delta: float) -> QuadResult:
    """I_delta[phi](x) by quadrature; pairs z with -z on |z| < min(delta, x)."""
    a = mu.alpha
    fx = float(phi.value(x))
    total = QuadResult(0.0, 0.0)
    w = min(delta, x)
    if w > 0:
        d1, d2 = float(phi.d1(x)), float(phi.d2(x))
        zt = 1e-3 * w

        def taylor(z):
            gp, gm = mu.g_at(z), mu.g_at(-z)
            return mu.weight * (d1 * z * (gp - gm) + 0.5 * d2 * z * z * (gp + gm)) * z ** (-1.0 - a)

        def paired(z):
            gp, gm = mu.g_at(z), mu.g_at(-z)
            diff = (phi.value(x + z) - fx) * gp + (phi.value(x - z) - fx) * gm
            return mu.weight * diff * z ** (-1.0 - a)

        total = total + integrate(taylor, 0.0, zt, singular=("a",))
        mid = 0.5 * w
        total = total + integrate(paired, zt, mid, singular=("a",))

        # near z = x the left target approaches 0; integrate in s = x - z
        def paired_s(s):
            z = x - s
            gp, gm = mu.g_at(z), mu.g_at(-z)
            diff = (phi.value(x + z) - fx) * gp + (phi.value(s) - fx) * gm
            return mu.weight * diff * z ** (-1.0 - a)

        total = total + integrate(paired_s, x - w, x - mid, singular=("a",) if w == x else ())
    if x < delta:
        lo = x
        total = total + integrate(lambda z: (phi.value(x + z) - fx) * mu.density(z), lo, delta,
                                  singular=("a",) if lo == 0.0 else ())
        total = total + _reflected(phi, mu, model, x, max(x, 0.0), delta)
    return total


def _reflected(phi, mu, model, x, r_lo, r_hi) -> QuadResult:
    """Integral over -r_hi < z < -r_lo on the reflection branch (z < -x)."""
    if not r_lo < r_hi:
        return QuadResult(0.0, 0.0)
    fx = float(phi.value(x))
    branch = affine_branch_1d(model, x)
    if branch is None:
        return QuadResult(0.0, 0.0)
    p0, s = branch
    if s == 0.0:
        if p0 == x:
            return QuadResult(0.0, 0.0)
        return QuadResult((float(phi.value(p0)) - fx) * mu.moment(-r_hi, -r_lo, 0), 0.0)

    # mirror: P = -x - z; use t = -z - x >= 0 as the variable
    def f(t):
        z = -(t + x)
        return (phi.value(t) - fx) * mu.density(z)

    return integrate(f, r_lo - x, r_hi - x, singular=("a",) if r_lo - x == 0.0 else ())


def outer_analytic(phi: AnalyticFunction, mu: LevyMeasureSpec, model: ReflectionModel, x: float, delta: float) -> QuadResult:
    """I^delta[phi](x): jumps with |z| >= delta, by quadrature."""
    fx = float(phi.value(x))
    total = integrate(lambda z: (phi.value(x + z) - fx) * mu.density(z), delta, math.inf)
    if x > delta:
        # identity jumps toward the boundary; s = x + z runs over (0, x - delta)
        total = total + integrate(lambda s: (phi.value(s) - fx) * mu.density(s - x), 0.0, x - delta, singular=("a",))
    r_lo = max(x, delta)
    branch = affine_branch_1d(model, x)
    if branch is not None:
        p0, s = branch
        if s == 0.0:
            total = total + QuadResult((float(phi.value(p0)) - fx) * mu.moment(-math.inf, -r_lo, 0), 0.0)
        else:
            total = total + integrate(lambda t: (phi.value(t) - fx) * mu.density(-(t + x)), r_lo - x, math.inf,
                                      singular=("a",) if r_lo == x else ())
    return total


def operator_analytic(phi: AnalyticFunction, mu: LevyMeasureSpec, model, x: float, delta: float = 0.25) -> QuadResult:
    """Full I[phi](x) = I_delta + I^delta for an analytic handle."""
    model = ReflectionModel.parse(model)
    _check_point(mu, x)
    return inner_analytic(phi, mu, model, x, delta) + outer_analytic(phi, mu, model, x, delta)


# ---------------------------------------------------------------------------
# compensator


def compensator_drift(measure: LevyMeasureSpec, model, x: float, r: float) -> float:
    """PV integral of eta(x, z) over |z| < r in 1-d.

    Jumps with |z| < min(x, r) stay inside, so their contribution reduces to
    the odd part of g and vanishes for symmetric measures. At x = 0 the drift
    is finite only when alpha < 1; otherwise +inf is returned as a divergence
    flag.
    """
    model = ReflectionModel.parse(model)
    if r <= 0:
        raise ValueError("r must be positive")
    if x < 0:
        raise ValueError("x must be nonnegative")
    if x == 0.0 and measure.alpha >= 1.0:
        return math.inf
    w = min(x, r)
    total = measure.odd_moment_pv(0.0, w) if w > 0 else 0.0
    if x < r:
        total += measure.moment(x, r, 1) if x > 0 else measure.moment(0.0, r, 1)
        branch = affine_branch_1d(model, x)
        if branch is not None:
            p0, s = branch
            # eta = P - x = (p0 - x) + s z on z in (-r, -x)
            total += (p0 - x) * measure.moment(-r, -x, 0) if x > 0 or p0 != x else 0.0
            if s != 0.0:
                total += s * measure.moment(-r, -x, 1)
    return total
