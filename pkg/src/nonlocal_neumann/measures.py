"""Stable-type Lévy measures with density g(z)/|z|^(N+alpha).

The kernel power factor is always integrated in closed form; the numerator g
is either constant (fully exact moments) or sampled at cell midpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy import integrate

GFunc = Callable[[np.ndarray], np.ndarray]


def sphere_area(dimension: int) -> float:
    """Surface measure of the unit sphere in R^dimension (2 for dimension 1)."""
    return 2.0 * math.pi ** (dimension / 2) / math.gamma(dimension / 2)


def power_integral(a, b, q):
    """Integral of t^(q-1) over (a, b) with 0 <= a < b <= inf, vectorized.

    Uses ``a^q expm1(q log(b/a)) / q`` so thin cells far from the origin keep
    full relative precision.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a, b = np.broadcast_arrays(a, b)
    out = np.empty(a.shape)
    zero = a == 0.0
    inf = np.isinf(b)
    if np.any(zero) and q <= 0:
        raise ValueError("moment diverges at the origin")
    if np.any(inf) and q >= 0:
        raise ValueError("moment diverges at infinity")
    reg = ~zero & ~inf
    if np.any(reg):
        ar, br = a[reg], b[reg]
        logr = np.log(br / ar)
        if q == 0:
            out[reg] = logr
        else:
            out[reg] = ar**q * np.expm1(q * logr) / q
    both = zero & inf
    if np.any(both):
        raise ValueError("moment diverges")
    sel = zero & ~inf
    out[sel] = b[sel] ** q / q
    sel = inf & ~zero
    out[sel] = -(a[sel] ** q) / q
    return out


def _const_g(value: float, dimension: int) -> GFunc:
    def g(z):
        z = np.asarray(z, dtype=float)
        shape = z.shape if dimension == 1 else z.shape[:-1]
        return np.full(shape, value)

    return g


def _affine_g(slope: float, cap: float, dimension: int) -> GFunc:
    def g(z):
        z = np.asarray(z, dtype=float)
        t = z if dimension == 1 else z[..., -1]
        return np.clip(1.0 + slope * t, 0.0, cap)

    return g


def _exp_g(rate: float, dimension: int) -> GFunc:
    def g(z):
        z = np.asarray(z, dtype=float)
        r = np.abs(z) if dimension == 1 else np.linalg.norm(z, axis=-1)
        return np.exp(-rate * r)

    return g


@dataclass(frozen=True)
class LevyMeasureSpec:
    """Measure with density ``weight * g(z) / |z|^(N + alpha)``.

    ``c_flag`` marks whether a singular symmetric part is present. It is
    derived from alpha when omitted (1 iff alpha >= 1) and an inconsistent
    explicit value is rejected. ``g_const`` enables exact moments; ``even``
    tells quadrature that g(z) = g(-z) so odd contributions vanish identically.
    """

    alpha: float
    g: GFunc | None = None
    dimension: int = 1
    c_flag: int | None = None
    tail_bound: float = 1.0
    weight: float = 1.0
    g_const: float | None = None
    even: bool = False
    g_grad0: tuple[float, ...] | None = None
    label: str = "custom"
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not (0.0 < self.alpha < 2.0) or not math.isfinite(self.alpha):
            raise ValueError(f"alpha must lie in the open interval (0, 2), got {self.alpha}")
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if self.g is None:
            if self.g_const is None:
                object.__setattr__(self, "g_const", 1.0)
            object.__setattr__(self, "g", _const_g(self.g_const, self.dimension))
        if self.g_const is not None:
            object.__setattr__(self, "even", True)
            if self.g_grad0 is None:
                object.__setattr__(self, "g_grad0", (0.0,) * self.dimension)
        expected = 1 if self.alpha >= 1.0 else 0
        if self.c_flag is None:
            object.__setattr__(self, "c_flag", expected)
        elif self.c_flag not in (0, 1):
            raise ValueError(f"c_flag must be 0 or 1, got {self.c_flag}")
        elif self.c_flag != expected:
            raise ValueError(
                f"c_flag={self.c_flag} is inconsistent with alpha={self.alpha}: "
                "the symmetric singular part exists exactly when alpha >= 1"
            )
        if self.weight <= 0:
            raise ValueError("weight must be positive")

    # -- evaluation -----------------------------------------------------------
    def g_at(self, z) -> np.ndarray:
        return np.asarray(self.g(np.asarray(z, dtype=float)), dtype=float)

    def density(self, z) -> np.ndarray:
        """1-d density, vectorized over z."""
        z = np.asarray(z, dtype=float)
        return self.weight * self.g_at(z) * np.abs(z) ** (-1.0 - self.alpha)

    def scaled(self, factor: float) -> "LevyMeasureSpec":
        return replace(self, weight=self.weight * factor)

    def normalized(self) -> "LevyMeasureSpec":
        """The (2 - alpha)-normalized measure used for the local limit."""
        return self.scaled(2.0 - self.alpha)

    # -- exact 1-d moments ------------------------------------------------------
    def moment(self, lo: float, hi: float, order: int) -> float:
        """Integral of z^order over (lo, hi) against the 1-d measure.

        Bounds may be infinite. Intervals containing 0 in their interior are
        only accepted for order 2.
        """
        if self.dimension != 1:
            raise ValueError("moment is defined for 1-d measures")
        if not lo < hi:
            return 0.0
        if lo < 0.0 < hi:
            if order < 2:
                raise ValueError("interval straddles the origin; moment diverges")
            return self.moment(lo, 0.0, order) + self.moment(0.0, hi, order)
        if hi <= 0.0:
            return (-1.0) ** order * self._half_moment(-hi, -lo, order, negative=True)
        return self._half_moment(lo, hi, order, negative=False)

    def _half_moment(self, a: float, b: float, order: int, negative: bool) -> float:
        q = order - self.alpha
        if self.g_const is not None:
            return float(self.weight * self.g_const * power_integral(a, b, q))
        if a == 0.0 and q <= 0:
            raise ValueError("moment diverges at the origin")
        if math.isinf(b) and q >= 0:
            raise ValueError("moment diverges at infinity")
        sgn = -1.0 if negative else 1.0

        def f(t):
            return float(self.g_at(np.array([sgn * t]))[0])

        if a == 0.0:
            top = min(b, 1.0)
            val, _ = integrate.quad(f, 0.0, top, weight="alg", wvar=(q - 1.0, 0.0), limit=200)
            if b > top:
                val += self._half_moment(top, b, order, negative) / self.weight
            return self.weight * val
        val, _ = integrate.quad(lambda t: f(t) * t ** (q - 1.0), a, b, limit=200)
        return self.weight * val

    def odd_moment_pv(self, lo: float, hi: float) -> float:
        """Principal-value first moment over lo < |z| < hi.

        Equals the integral of (g(z) - g(-z)) z^-alpha over (lo, hi); zero for
        even g.
        """
        if self.even or hi <= lo:
            return 0.0

        def slope(t):
            t = max(t, 1e-9 * hi)
            pair = self.g_at(np.array([t, -t]))
            return float(pair[0] - pair[1]) / t

        # (g(t) - g(-t)) / t stays bounded, leaving the weight t^(1 - alpha)
        if lo == 0.0:
            val, _ = integrate.quad(slope, 0.0, hi, weight="alg", wvar=(1.0 - self.alpha, 0.0), limit=200)
        else:
            val, _ = integrate.quad(lambda t: slope(t) * t ** (1.0 - self.alpha), lo, hi, limit=200)
        return self.weight * val

    def tail_mass(self, r: float) -> float:
        """Mass of {|z| > r} in 1-d, or of the radial tail in N-d."""
        if r <= 0:
            raise ValueError("tail radius must be positive")
        if self.dimension == 1:
            return self.moment(r, math.inf, 0) + self.moment(-math.inf, -r, 0)
        if self.g_const is not None:
            return self.weight * self.g_const * sphere_area(self.dimension) * r ** (-self.alpha) / self.alpha
        dirs = sphere_directions(self.dimension, 256)

        def radial(t):
            return float(np.mean(self.g_at(t * dirs))) * t ** (-1.0 - self.alpha)

        val, _ = integrate.quad(radial, r, math.inf, limit=200)
        return self.weight * sphere_area(self.dimension) * val


def stable_measure(
    alpha: float,
    g: str = "const",
    dimension: int = 1,
    c_flag: int | None = None,
    **params,
) -> LevyMeasureSpec:
    """Build a measure from a named numerator preset.

    Presets: ``const`` (``value``), ``affine`` (1 + ``slope`` * z_N clipped to
    [0, ``cap``]), ``exp`` (exp(-``rate`` |z|)).
    """
    if g == "const":
        value = float(params.get("value", 1.0))
        if value <= 0:
            raise ValueError("g value must be positive")
        return LevyMeasureSpec(
            alpha, dimension=dimension, c_flag=c_flag, g_const=value, tail_bound=value,
            label="const", params={"value": value},
        )
    if g == "affine":
        slope = float(params.get("slope", 1.0))
        cap = float(params.get("cap", 2.0))
        if cap <= 1.0:
            raise ValueError("affine cap must exceed 1")
        grad = (0.0,) * (dimension - 1) + (slope,)
        return LevyMeasureSpec(
            alpha, g=_affine_g(slope, cap, dimension), dimension=dimension, c_flag=c_flag,
            tail_bound=cap, g_grad0=grad, even=slope == 0.0, label="affine",
            params={"slope": slope, "cap": cap},
        )
    if g == "exp":
        rate = float(params.get("rate", 1.0))
        if rate < 0:
            raise ValueError("exp rate must be nonnegative")
        return LevyMeasureSpec(
            alpha, g=_exp_g(rate, dimension), dimension=dimension, c_flag=c_flag,
            tail_bound=1.0, g_grad0=(0.0,) * dimension, even=True, label="exp",
            params={"rate": rate},
        )
    raise ValueError(f"unknown g preset {g!r}")


def kernel_density(measure: LevyMeasureSpec, z) -> float:
    """Density of the measure at a single nonzero point z."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if z.shape[-1] != measure.dimension:
        raise ValueError("z has the wrong dimension")
    r = float(np.linalg.norm(z))
    if r == 0.0:
        raise ValueError("kernel is singular at z = 0")
    arg = z[0] if measure.dimension == 1 else z
    gz = float(measure.g_at(arg))
    return measure.weight * gz * r ** (-(measure.dimension + measure.alpha))


def sphere_directions(dimension: int, count: int) -> np.ndarray:
    """Deterministic near-uniform unit vectors on S^(dimension-1)."""
    if dimension == 1:
        return np.array([[1.0], [-1.0]])
    if dimension == 2:
        theta = 2.0 * np.pi * np.arange(count) / count
        return np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    if dimension == 3:
        i = np.arange(count) + 0.5
        phi = np.arccos(1.0 - 2.0 * i / count)
        theta = np.pi * (1.0 + 5.0**0.5) * i
        return np.stack([np.cos(theta) * np.sin(phi), np.sin(theta) * np.sin(phi), np.cos(phi)], axis=-1)
    rng = np.random.default_rng(12345)
    v = rng.standard_normal((count, dimension))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


@dataclass(frozen=True)
class MeasureSplit:
    h: GFunc
    mu_star_density: GFunc
    mu_sharp_density: GFunc
    sphere_samples: int


def split_measure(measure: LevyMeasureSpec, sphere_samples: int = 720) -> MeasureSplit:
    """Split g into its symmetric minorant h and the remainder g - h.

    In 1-d the minimum over the sphere is the exact two-point minimum; in
    higher dimension it is taken over ``sphere_samples`` directions.
    """
    dim = measure.dimension
    power = dim + measure.alpha

    if dim == 1:
        def h(z):
            z = np.asarray(z, dtype=float)
            return np.minimum(measure.g_at(z), measure.g_at(-z))

        def norm(z):
            return np.abs(np.asarray(z, dtype=float))
    else:
        dirs = sphere_directions(dim, sphere_samples)

        def h(z):
            z = np.asarray(z, dtype=float)
            r = np.linalg.norm(z, axis=-1)
            pts = r[..., None, None] * dirs
            return np.min(measure.g_at(pts), axis=-1)

        def norm(z):
            return np.linalg.norm(np.asarray(z, dtype=float), axis=-1)

    def star(z):
        return measure.weight * h(z) / norm(z) ** power

    def sharp(z):
        return measure.weight * np.maximum(measure.g_at(z) - h(z), 0.0) / norm(z) ** power

    return MeasureSplit(h=h, mu_star_density=star, mu_sharp_density=sharp, sphere_samples=sphere_samples)


@dataclass(frozen=True)
class TruncatedMeasure:
    """The measure restricted to |z| > 1/k."""

    base: LevyMeasureSpec
    k: int

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError("k must be a positive integer")

    @property
    def cutoff(self) -> float:
        return 1.0 / self.k

    def total_mass(self) -> float:
        return self.base.tail_mass(self.cutoff)


def truncate(measure: LevyMeasureSpec, k: int) -> TruncatedMeasure:
    return TruncatedMeasure(measure, k)


def cell_moments(measure: LevyMeasureSpec, lo, hi, order: int):
    """Moments of order 0, 1 or 2 over cells (lo, hi), vectorized.

    g is taken at the cell midpoint (exact for constant g) and the power factor
    is integrated exactly. A cell may touch 0 at an endpoint when the moment
    converges; only order 2 may straddle the origin.
    """
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    scalar = lo.ndim == 0 and hi.ndim == 0
    lo, hi = np.atleast_1d(lo), np.atleast_1d(hi)
    lo, hi = np.broadcast_arrays(lo, hi)
    if np.any(hi < lo):
        raise ValueError("cells must satisfy lo <= hi")
    straddle = (lo < 0.0) & (hi > 0.0)
    if np.any(straddle):
        if order < 2:
            raise ValueError("cell straddles the origin; moment diverges")
        if scalar:
            return float(cell_moments(measure, lo[0], 0.0, 2) + cell_moments(measure, 0.0, hi[0], 2))
        out = np.empty(lo.shape)
        out[straddle] = cell_moments(measure, lo[straddle], 0.0, 2) + cell_moments(measure, 0.0, hi[straddle], 2)
        rest = ~straddle
        out[rest] = cell_moments(measure, lo[rest], hi[rest], order)
        return out
    q = order - measure.alpha
    neg = hi <= 0.0
    a = np.where(neg, -hi, lo)
    b = np.where(neg, -lo, hi)
    val = power_integral(a, b, q)
    val = np.where(neg & (order % 2 == 1), -val, val)
    if measure.g_const is not None:
        val = val * measure.g_const
    else:
        val = val * measure.g_at(0.5 * (lo + hi))
    val = measure.weight * val
    return float(val[0]) if scalar else val

