"""Solvers for u - I[u] = f on a grid.

* ``solve_truncated``: fixed-point iteration for the bounded operator of the
  measure restricted to |z| > 1/k;
* ``solve_limit``: the same along an increasing k schedule with warm starts;
* ``solve_direct``: dense linear solve of (Id - A) u = f;
* ``solve_viscous``: -eps u'' - T_R(I[u]) + u = f with the clamp handled by
  iterating on the set of clamped nodes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .measures import LevyMeasureSpec, truncate
from .nonlocal_op import DiscreteOperator, Grid, GridFunction, OperatorSplitParams, assemble_operator
from .reflect import ReflectionModel

log = logging.getLogger(__name__)


@dataclass
class ProblemSpec:
    """u - I[u] = f on a grid; ``normalized`` multiplies the measure by 2 - alpha."""

    measure: LevyMeasureSpec
    model: ReflectionModel | str | None
    f: Callable
    grid: Grid
    normalized: bool = False
    extension: str = "constant"
    extension_value: float | None = None
    params: OperatorSplitParams = field(default_factory=OperatorSplitParams)
    _ops: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.model is not None:
            self.model = ReflectionModel.parse(self.model)

    @property
    def effective_measure(self) -> LevyMeasureSpec:
        return self.measure.normalized() if self.normalized else self.measure

    def f_values(self) -> np.ndarray:
        vals = np.asarray(self.f(self.grid.nodes), dtype=float) * np.ones(self.grid.n)
        if not np.all(np.isfinite(vals)):
            raise ValueError("f must be finite on the grid")
        return vals

    def operator(self, k: int | None = None) -> DiscreteOperator:
        if k not in self._ops:
            self._ops[k] = assemble_operator(
                self.grid, self.effective_measure, self.model, self.params, k=k,
                extension=self.extension, extension_value=self.extension_value,
            )
        return self._ops[k]

    def grid_function(self, values) -> GridFunction:
        g = self.grid
        return GridFunction(g.L, g.n, values, self.extension, self.extension_value, g.origin)


@dataclass
class SolveReport:
    u: GridFunction
    iterations: int
    residual: float
    contraction_factor: float
    k_schedule: list[int]
    boundary_residual: float = 0.0
    converged: bool = True
    method: str = ""
    epsilon: float | None = None
    increments: list[float] = field(default_factory=list)
    cauchy_ok: bool = True
    dominance_margin: float | None = None
    damping: bool = False
    clamp_active: int = 0
    notes: list[str] = field(default_factory=list)

    @property
    def values(self) -> np.ndarray:
        return self.u.values


def _residual(op: DiscreteOperator, u: np.ndarray, f: np.ndarray) -> np.ndarray:
    return u - op.apply(u) - f


def _split_residual(r: np.ndarray) -> tuple[float, float]:
    """(max over interior nodes, boundary node)."""
    return float(np.max(np.abs(r[1:]))), float(abs(r[0]))


def contraction_step(problem: ProblemSpec, k: int) -> float:
    """epsilon = 0.9 / (1 + 2 |mu^k|) for the iteration u -> u - eps F(u)."""
    mass = truncate(problem.effective_measure, k).total_mass()
    return 0.9 / (1.0 + 2.0 * mass)


def solve_truncated(
    problem: ProblemSpec,
    k: int,
    tol: float = 1e-10,
    max_iter: int = 1_000_000,
    u0: np.ndarray | None = None,
) -> SolveReport:
    """Fixed-point iteration u <- u - eps (u - I_k[u] - f).

    Stops when the residual is below ``tol`` at every node. The observed
    contraction factor is the largest ratio of successive residual norms.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    op = problem.operator(k)
    f = problem.f_values()
    eps = contraction_step(problem, k)
    u = np.zeros(problem.grid.n) if u0 is None else np.array(u0, dtype=float)
    r = _residual(op, u, f)
    norm = float(np.max(np.abs(r)))
    # residual rounding grows with the operator norm; ratios are only
    # recorded where that noise is negligible
    mass = truncate(problem.effective_measure, k).total_mass()
    scale = max(1.0, float(np.max(np.abs(f))), float(np.max(np.abs(u))))
    floor = 1e6 * np.finfo(float).eps * (1.0 + mass) * scale
    factor = 0.0
    it = 0
    while norm > tol and it < max_iter:
        u -= eps * r
        r = _residual(op, u, f)
        new = float(np.max(np.abs(r)))
        if norm > floor and new > floor:
            factor = max(factor, new / norm)
        norm = new
        it += 1
    interior, boundary = _split_residual(r)
    converged = norm <= tol
    rep = SolveReport(
        problem.grid_function(u), it, interior, factor, [k], boundary, converged, "truncated", eps,
    )
    if not converged:
        rep.notes.append(f"max_iter={max_iter} reached with residual {norm:.3e}")
        log.warning(rep.notes[-1])
    return rep


def solve_limit(
    problem: ProblemSpec,
    k_schedule,
    tol: float = 1e-10,
    max_iter: int = 1_000_000,
    u0: np.ndarray | None = None,
) -> SolveReport:
    """Truncated solves along an increasing schedule, warm-started.

    ``increments`` holds the sup-norm change between consecutive stages; a
    non-monotone sequence clears ``cauchy_ok`` but is not fatal.
    """
    ks = [int(k) for k in k_schedule]
    if len(ks) < 3:
        raise ValueError("k_schedule needs at least 3 entries")
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValueError("k_schedule must be strictly increasing")
    u = u0
    prev = None
    increments = []
    total = 0
    factor = 0.0
    rep = None
    for k in ks:
        rep = solve_truncated(problem, k, tol, max_iter, u)
        total += rep.iterations
        factor = max(factor, rep.contraction_factor)
        u = rep.values.copy()
        if prev is not None:
            increments.append(float(np.max(np.abs(u - prev))))
        prev = u
        if not rep.converged:
            break
    cauchy = all(b <= a for a, b in zip(increments, increments[1:]))
    out = SolveReport(
        rep.u, total, rep.residual, factor, ks, rep.boundary_residual, rep.converged, "limit",
        rep.epsilon, increments, cauchy,
    )
    out.notes.extend(rep.notes)
    if not cauchy:
        out.notes.append("stage increments are not non-increasing")
        log.warning(out.notes[-1])
    return out


def solve_direct(problem: ProblemSpec, k: int | None = None) -> SolveReport:
    """Dense solve of (Id - A) u = f + offset; ``k=None`` is the singular measure."""
    op = problem.operator(k)
    f = problem.f_values()
    n = problem.grid.n
    m = np.eye(n) - op.matrix
    off = np.abs(m) - np.diag(np.abs(np.diag(m)))
    margin = float(np.min(np.abs(np.diag(m)) - off.sum(axis=1)))
    try:
        u = np.linalg.solve(m, f + op.offset)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"singular system (dominance margin {margin:.3e})") from exc
    r = _residual(op, u, f)
    interior, boundary = _split_residual(r)
    return SolveReport(
        problem.grid_function(u), 1, interior, 0.0, [] if k is None else [k], boundary, True,
        "direct", dominance_margin=margin,
    )


def neumann_second_difference(grid: Grid) -> np.ndarray:
    """u'' with mirrored ghost nodes at both ends (u'(0) = u'(L) = 0)."""
    n, h = grid.n, grid.h
    d = np.zeros((n, n))
    idx = np.arange(1, n - 1)
    d[idx, idx - 1] = d[idx, idx + 1] = 1.0
    d[idx, idx] = -2.0
    d[0, 0], d[0, 1] = -2.0, 2.0
    d[n - 1, n - 1], d[n - 1, n - 2] = -2.0, 2.0
    return d / h**2


def solve_viscous(
    problem: ProblemSpec,
    epsilon: float,
    R_trunc: float,
    tol: float = 1e-10,
    k: int | None = None,
    max_iter: int = 200,
) -> SolveReport:
    """Solve -eps u'' - T_R(I[u]) + u = f with T_R(s) = max(-R, min(R, s)).

    Each sweep freezes which nodes are clamped, solves the resulting linear
    system, and updates the clamp pattern. If a pattern repeats without
    convergence the update is damped by 0.5.
    """
    if epsilon <= 0 or R_trunc <= 0:
        raise ValueError("epsilon and R_trunc must be positive")
    if problem.model is not ReflectionModel.CENSORED or not 1.0 < problem.measure.alpha < 2.0:
        log.info("solve_viscous is intended for the censored model with alpha in (1, 2)")
    op = problem.operator(k)
    f = problem.f_values()
    n = problem.grid.n
    a = op.matrix
    base = np.eye(n) - epsilon * neumann_second_difference(problem.grid)

    def residual(u):
        return base @ u - np.clip(a @ u + op.offset, -R_trunc, R_trunc) - f

    u = np.linalg.solve(base - a, f + op.offset)
    seen = set()
    damping = False
    it = 0
    norm = np.inf
    for it in range(1, max_iter + 1):
        v = a @ u + op.offset
        state = np.where(v > R_trunc, 1, np.where(v < -R_trunc, -1, 0))
        free = state == 0
        mat = base - a * free[:, None]
        rhs = f + np.where(free, op.offset, state * R_trunc)
        new = np.linalg.solve(mat, rhs)
        key = state.tobytes()
        if key in seen and not damping:
            damping = True
        seen.add(key)
        u = 0.5 * (u + new) if damping else new
        norm = float(np.max(np.abs(residual(u))))
        if norm <= tol:
            break
    r = residual(u)
    interior, boundary = _split_residual(r)
    v = a @ u + op.offset
    clamp = int(np.sum(np.abs(v) > R_trunc))
    rep = SolveReport(
        problem.grid_function(u), it, interior, 0.5 if damping else 0.0, [] if k is None else [k],
        boundary, norm <= tol, "viscous", damping=damping, clamp_active=clamp,
    )
    if not rep.converged:
        rep.notes.append(f"clamp iteration stalled at residual {norm:.3e}")
        log.warning(rep.notes[-1])
    return rep


def holder_quotient(u: GridFunction, beta: float, window: float) -> float:
    """max |u_i - u_j| / |x_i - x_j|^beta over node pairs with |x_i - x_j| <= window."""
    if not 0 < beta <= 1:
        raise ValueError("beta must lie in (0, 1]")
    h = u.grid.h
    vals = u.values
    steps = min(int(np.floor(window / h + 1e-9)), u.n - 1)
    best = 0.0
    for d in range(1, steps + 1):
        q = np.max(np.abs(vals[d:] - vals[:-d])) / (d * h) ** beta
        best = max(best, float(q))
    return best
