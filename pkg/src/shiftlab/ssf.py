"""Spectral shift curves, switch functions, and convex window functionals.

The shift curve of a pair (H1, H2) on a common finite domain is the exact
integer step function

    xi(lam) = #{eigenvalues of H2 <= lam} - #{eigenvalues of H1 <= lam},

right-continuous, zero outside the union of both spectra.  With this
orientation a nonnegative perturbation pushes counting down, so xi <= 0; the
trace identity then reads

    Tr[rho(H2) - rho(H1)] = - integral rho'(lam) xi(lam) dlam,

where the sign was fixed once and for all on the rank-one pair
H1 = diag(0), H2 = diag(1): both sides must equal rho(1) - rho(0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .quadrature import adaptive_simpson, golden_section_max
from .spectral import SpectralData

__all__ = [
    "SSFCurve", "ssf_counting", "ssf_via_invariance", "exp_pair_curve",
    "SwitchFunction", "make_switch", "FtFunctional", "ft_eval",
    "ft_closed_form", "ssf_integral_bound", "majorization_check",
    "krein_check", "TraceBoundReport", "trace_bound_check", "legendre_dual",
    "DualBoundFit", "dual_bound_check", "rectangle_row", "switch_derivative_row",
]


@dataclass(frozen=True)
class SSFCurve:
    """Piecewise-constant integer curve over sorted breakpoints.

    values[i] holds on [breakpoints[i], breakpoints[i+1]); the curve is 0
    below the first breakpoint and values[-1] (always 0) from the last one on.
    """

    breakpoints: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if len(self.breakpoints) != len(self.values):
            raise ValueError("breakpoints and values must have equal length")
        if len(self.breakpoints) == 0:
            raise ValueError("curve needs at least one breakpoint")
        if np.any(np.diff(self.breakpoints) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if self.values[-1] != 0:
            raise ValueError("curve must vanish past the last breakpoint")

    def evaluate(self, lam):
        idx = np.searchsorted(self.breakpoints, lam, side="right") - 1
        vals = np.where(idx >= 0, self.values[np.maximum(idx, 0)], 0)
        return int(vals) if np.isscalar(lam) else vals

    def intervals(self):
        """(left, right, value) for every bounded interval of constancy."""
        b = self.breakpoints
        return zip(b[:-1], b[1:], self.values[:-1])

    def integral(self) -> float:
        return math.fsum(float(v) * (r - l) for l, r, v in self.intervals())

    def integral_over(self, lo: float, hi: float) -> float:
        """Integral of the curve over [lo, hi] (exact, interval clipping)."""
        if hi < lo:
            raise ValueError("bounds out of order")
        parts = []
        for l, r, v in self.intervals():
            a, b = max(l, lo), min(r, hi)
            if b > a and v != 0:
                parts.append(float(v) * (b - a))
        return math.fsum(parts)

    def sup_abs(self) -> int:
        return int(np.max(np.abs(self.values))) if len(self.values) else 0


def counting_curve(upper: np.ndarray, lower: np.ndarray) -> SSFCurve:
    """Counting difference #{upper <= lam} - #{lower <= lam} as an SSFCurve."""
    points = np.unique(np.concatenate((upper, lower)))
    vals = (np.searchsorted(upper, points, side="right")
            - np.searchsorted(lower, points, side="right")).astype(int)
    return SSFCurve(points, vals)


def ssf_counting(spec1: SpectralData, spec2: SpectralData) -> SSFCurve:
    """Exact shift curve of the pair; positive direction counts H2."""
    if spec1.size != spec2.size:
        raise ValueError("both operators must act on the same domain")
    return counting_curve(np.sort(spec2.eigenvalues), np.sort(spec1.eigenvalues))


def ssf_via_invariance(spec1: SpectralData, spec2: SpectralData, g) -> SSFCurve:
    """Shift curve computed through a strictly monotone map g and pulled back.

    The curve of the transformed pair (g(H2), g(H1)) is built from the exact
    g-images of the eigenvalue lists, then reoriented by sign(g'); the result
    must coincide with ssf_counting breakpoint for breakpoint.  g must be
    strictly monotone (and injective in floating point) on the union of both
    spectra, otherwise a ValueError is raised.
    """
    if spec1.size != spec2.size:
        raise ValueError("both operators must act on the same domain")
    b = np.unique(np.concatenate((spec1.eigenvalues, spec2.eigenvalues)))
    gb = np.array([float(g(float(x))) for x in b])
    diffs = np.diff(gb)
    if np.all(diffs > 0):
        increasing = True
    elif np.all(diffs < 0):
        increasing = False
    elif len(b) == 1:
        increasing = True
    else:
        raise ValueError("g is not strictly monotone on the spectral range")
    g1 = np.sort([float(g(float(x))) for x in spec1.eigenvalues])
    g2 = np.sort([float(g(float(x))) for x in spec2.eigenvalues])
    m = len(b)
    vals = np.zeros(m, dtype=int)
    if increasing:
        vals = (np.searchsorted(g2, gb, side="right")
                - np.searchsorted(g1, gb, side="right")).astype(int)
    else:
        # the open interval (b_i, b_{i+1}) maps onto (g(b_{i+1}), g(b_i)); the
        # transformed curve is constant there with its value at the left image
        for i in range(m - 1):
            s = gb[i + 1]
            vals[i] = -(int(np.searchsorted(g2, s, side="right"))
                        - int(np.searchsorted(g1, s, side="right")))
    return SSFCurve(b, vals)


def exp_pair_curve(spec1: SpectralData, spec2: SpectralData, t: float = 1.0) -> SSFCurve:
    """Shift curve of the semigroup pair (exp(-t H2), exp(-t H1)) in s-coordinates."""
    if not (t > 0):
        raise ValueError("t must be positive")
    s1 = np.sort(np.exp(-t * spec1.eigenvalues))
    s2 = np.sort(np.exp(-t * spec2.eigenvalues))
    return counting_curve(s2, s1)


# -- switch functions -------------------------------------------------------


def _smoothstep(u):
    """Quintic ramp: 0 to 1 on [0, 1] with vanishing first and second derivatives."""
    u = np.clip(u, 0.0, 1.0)
    return u**3 * (10.0 - 15.0 * u + 6.0 * u**2)


@dataclass(frozen=True)
class SwitchFunction:
    """Smooth ramp from -1 to 0 across [center - half_width, center + half_width].

    The steepest slope is (15/8) / (2 half_width), safely below the 1/half_width
    budget that the window estimates assume.
    """

    center: float
    half_width: float

    def value(self, x):
        u = (np.asarray(x, dtype=float) - (self.center - self.half_width)) / (2.0 * self.half_width)
        out = -1.0 + _smoothstep(u)
        return float(out) if np.isscalar(x) else out

    def derivative(self, x):
        u = (np.asarray(x, dtype=float) - (self.center - self.half_width)) / (2.0 * self.half_width)
        uc = np.clip(u, 0.0, 1.0)
        out = 30.0 * uc**2 * (1.0 - uc) ** 2 / (2.0 * self.half_width)
        out = np.where((u <= 0.0) | (u >= 1.0), 0.0, out)
        return float(out) if np.isscalar(x) else out

    __call__ = value

    @property
    def max_derivative(self) -> float:
        return 1.875 / (2.0 * self.half_width)


def make_switch(energy: float, half_width: float) -> SwitchFunction:
    if not (0.0 < half_width <= 0.5):
        raise ValueError("half_width must lie in (0, 1/2]")
    return SwitchFunction(float(energy), float(half_width))


# -- convex window functionals ----------------------------------------------


@dataclass(frozen=True)
class FtFunctional:
    """F(x) = integral_0^x (exp(t y^alpha) - 1) dy, alpha defaulting to 1/d.

    Convex, F(0) = 0.  The generalized exponent alpha is exposed for the
    integrability trend experiments; the geometric default is alpha = 1/d.
    """

    t: float
    dimension: int | None = None
    alpha: float | None = None

    def __post_init__(self):
        if not (self.t > 0):
            raise ValueError("t must be positive")
        if self.alpha is None and self.dimension is None:
            raise ValueError("either dimension or alpha is required")
        if self.dimension is not None and self.dimension not in (1, 2, 3):
            raise ValueError("dimension must be 1, 2, or 3")
        if self.alpha is not None and not (self.alpha > 0):
            raise ValueError("alpha must be positive")

    @property
    def exponent(self) -> float:
        return self.alpha if self.alpha is not None else 1.0 / self.dimension


def _ft_integrand(fn: FtFunctional, y: float) -> float:
    return math.expm1(fn.t * y**fn.exponent)


def ft_eval(fn: FtFunctional, x: float, rel_tol: float = 1e-10,
            panels: int = 8) -> float:
    """F(x) by adaptive quadrature; doubling `panels` must reproduce the value."""
    if x < 0:
        raise ValueError("x must be nonnegative")
    if x == 0.0:
        return 0.0
    if fn.t * x**fn.exponent > 700.0:
        raise OverflowError("window functional exceeds the floating-point range")
    return adaptive_simpson(lambda y: _ft_integrand(fn, y), 0.0, float(x),
                            rel_tol=rel_tol, abs_floor=1e-14, min_panels=panels)


def ft_closed_form(fn: FtFunctional, x: float) -> float:
    """Antiderivative in closed form for alpha in {1, 1/2, 1/3} (cross-check oracle)."""
    t = fn.t
    a = fn.exponent
    if x < 0:
        raise ValueError("x must be nonnegative")
    if abs(a - 1.0) < 1e-15:
        return math.expm1(t * x) / t - x
    if abs(a - 0.5) < 1e-15:
        s = math.sqrt(x)
        return 2.0 * math.exp(t * s) * (s / t - 1.0 / t**2) + 2.0 / t**2 - x
    if abs(a - 1.0 / 3.0) < 1e-15:
        s = x ** (1.0 / 3.0)
        return 3.0 * math.exp(t * s) * (s**2 / t - 2.0 * s / t**2 + 2.0 / t**3) - 6.0 / t**3 - x
    raise ValueError(f"no closed form for exponent {a}")


def ssf_integral_bound(curve: SSFCurve, fn: FtFunctional, upper: float = math.inf,
                       rel_tol: float = 1e-10, panels: int = 8) -> float:
    """integral_{-inf}^{upper} F(|xi(lam)|) dlam as an exact interval sum."""
    cache: dict[int, float] = {0: 0.0}
    parts = []
    for l, r, v in curve.intervals():
        hi = min(float(r), upper)
        if hi <= l:
            continue
        k = abs(int(v))
        if k not in cache:
            cache[k] = ft_eval(fn, float(k), rel_tol=rel_tol, panels=panels)
        if cache[k] != 0.0:
            parts.append(cache[k] * (hi - float(l)))
    return math.fsum(parts)


def majorization_check(sv, curve: SSFCurve, fn: FtFunctional,
                       tol: float = 1e-10) -> tuple[float, float, bool]:
    """Singular-value majorization of the shift curve under a convex functional.

    lhs = integral F(|xi(s)|) ds over the curve of the semigroup pair,
    rhs = sum_n mu_n (F(n) - F(n-1)) over the singular values of the
    semigroup difference; returns (lhs, rhs, lhs <= rhs + tol).
    """
    mu = np.asarray(sv, dtype=float)
    lhs = ssf_integral_bound(curve, fn)
    terms = []
    f_prev = 0.0
    truncated = False
    for n in range(1, len(mu) + 1):
        if fn.t * n**fn.exponent > 700.0:
            truncated = True
            break
        f_cur = ft_eval(fn, float(n))
        terms.append(float(mu[n - 1]) * (f_cur - f_prev))
        f_prev = f_cur
    rhs = math.fsum(terms)
    holds = lhs <= rhs + tol
    if truncated and not holds:
        # dropped terms are nonnegative, so a failure here is inconclusive
        raise OverflowError("majorization sum truncated by overflow before deciding")
    return lhs, rhs, holds


# -- trace identity -----------------------------------------------------------


def krein_check(spec1: SpectralData, spec2: SpectralData, rho,
                curve: SSFCurve | None = None) -> tuple[float, float]:
    """Both sides of the trace identity for a smooth nondecreasing rho.

    lhs sums rho over both spectra; rhs integrates rho' against the shift
    curve exactly (the curve is piecewise constant, so only rho values at
    breakpoints enter).  The minus sign matches the counting orientation;
    see the module docstring for the rank-one pair that pins it down.
    """
    if curve is None:
        curve = ssf_counting(spec1, spec2)
    lhs = (math.fsum(float(rho(float(x))) for x in spec2.eigenvalues)
           - math.fsum(float(rho(float(x))) for x in spec1.eigenvalues))
    rhs = -math.fsum(float(v) * (float(rho(float(r))) - float(rho(float(l))))
                     for l, r, v in curve.intervals())
    return lhs, rhs


@dataclass(frozen=True)
class TraceBoundReport:
    """Switch-trace values over a half-width grid and the fitted envelope constant."""

    energy: float
    epsilons: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    ratios: np.ndarray = field(repr=False)
    c_envelope: float = 0.0
    c_coarse: float = 0.0
    c_fine: float = 0.0
    envelope_violations: int = 0


def trace_bound_check(spec1: SpectralData, spec2: SpectralData, energy: float,
                      eps_grid, dimension: int | None = None) -> TraceBoundReport:
    """Tr[rho(H2) - rho(H1)] over a grid of switch half-widths.

    Ratios divide by |log eps|^d; the envelope constant is the max ratio, and
    the grid is split into a coarser (larger eps) and finer half to expose the
    stability of that constant.  A violation counts a value that drops as eps
    shrinks (the envelope is expected to be monotone).  The dimension comes
    from the operator behind spec1 unless passed explicitly.
    """
    if dimension is None:
        if spec1.source is None:
            raise ValueError("dimension is required when spectra carry no operator")
        dimension = spec1.source.domain.dimension
    eps = np.array(sorted(set(float(e) for e in eps_grid), reverse=True))
    if len(eps) < 2:
        raise ValueError("need at least two half-widths")
    if np.any(eps <= 0) or np.any(eps > 0.5):
        raise ValueError("half-widths must lie in (0, 1/2]")
    curve = ssf_counting(spec1, spec2)
    values = []
    for e in eps:
        rho = make_switch(energy, e)
        lhs, _ = krein_check(spec1, spec2, rho, curve=curve)
        values.append(lhs)
    values = np.array(values)
    ratios = values / np.abs(np.log(eps)) ** dimension
    half = len(eps) // 2
    violations = int(np.sum(values[1:] < values[:-1] - 1e-12))
    return TraceBoundReport(
        energy=float(energy), epsilons=eps, values=values, ratios=ratios,
        c_envelope=float(np.max(ratios)),
        c_coarse=float(np.max(ratios[:half])),
        c_fine=float(np.max(ratios[half:])),
        envelope_violations=violations,
    )


# -- Legendre dual and the integral form of the bound ------------------------


def legendre_dual(fn: FtFunctional, y: float, tol: float = 1e-10) -> float:
    """G(y) = sup_{x >= 0} (x y - F(x)) located by golden-section search."""
    if y < 0:
        raise ValueError("y must be nonnegative")
    if y == 0.0:
        return 0.0
    x_star = (math.log1p(y) / fn.t) ** (1.0 / fn.exponent)
    _, best = golden_section_max(lambda x: x * y - ft_eval(fn, x),
                                 0.0, 2.0 * x_star + 1.0, tol=tol)
    return max(0.0, best)


@dataclass(frozen=True)
class DualBoundFit:
    k1: float
    k2: float
    max_test_ratio: float
    holds: bool


def rectangle_row(curve: SSFCurve, height: float, lo: float, hi: float):
    """(integral f xi, sup f, l1 norm, upper support edge) for a box f."""
    if hi <= lo or height <= 0:
        raise ValueError("rectangle needs lo < hi and positive height")
    return (height * curve.integral_over(lo, hi), height, height * (hi - lo), hi)


def switch_derivative_row(curve: SSFCurve, rho: SwitchFunction, scale: float = 1.0):
    """Same row for f = scale * rho' (unit mass ramp derivative)."""
    val = scale * math.fsum(float(v) * (rho(float(r)) - rho(float(l)))
                            for l, r, v in curve.intervals())
    return (val, scale * rho.max_derivative, scale * 1.0,
            rho.center + rho.half_width)


def dual_bound_check(train_rows, test_rows, dimension: int, t: float,
                     slack: float = 2.0) -> DualBoundFit:
    """Fit constants in |int f xi| <= K1 e^b + K2 (log(1 + sup f))^d ||f||_1.

    K1, K2 come from a least-squares fit on the training rows inflated to an
    envelope; the check holds if every test row stays within `slack` times
    the fitted bound.
    """
    def features(row):
        val, sup, l1, b = row
        return abs(val), math.exp(b), math.log1p(sup) ** dimension * l1

    tr = [features(r) for r in train_rows]
    a_mat = np.array([[e, l] for _, e, l in tr])
    rhs = np.array([v for v, _, _ in tr])
    coef, *_ = np.linalg.lstsq(a_mat, rhs, rcond=None)
    k1, k2 = (max(1e-12, float(c)) for c in coef)
    # inflate to cover training exactly
    inflate = max(v / (k1 * e + k2 * l) for v, e, l in tr)
    k1, k2 = k1 * inflate, k2 * inflate
    ratios = [v / (k1 * e + k2 * l) for v, e, l in (features(r) for r in test_rows)]
    worst = max(ratios) if ratios else 0.0
    return DualBoundFit(k1=k1, k2=k2, max_test_ratio=float(worst),
                        holds=bool(worst <= slack))
