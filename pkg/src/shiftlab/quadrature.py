"""Adaptive Simpson quadrature and golden-section maximization.

Small, deterministic numerics used by the window functionals and the
partial-integration checks; tolerances are explicit arguments so callers can
demonstrate self-consistency by tightening them.
"""

from __future__ import annotations

import math

import numpy as np

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def adaptive_simpson(f, a: float, b: float, rel_tol: float = 1e-10,
                     abs_floor: float = 1e-14, max_depth: int = 48,
                     min_panels: int = 1) -> float:
    """Integral of f over [a, b] by adaptive Simpson with Richardson correction."""
    if b < a:
        raise ValueError("integration bounds out of order")
    if a == b:
        return 0.0
    edges = np.linspace(a, b, min_panels + 1)
    parts = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        m = 0.5 * (lo + hi)
        flo, fm, fhi = f(lo), f(m), f(hi)
        whole = (hi - lo) / 6.0 * (flo + 4.0 * fm + fhi)
        tol = max(abs_floor, rel_tol * abs(whole))
        parts.append(_refine(f, lo, flo, m, fm, hi, fhi, whole, tol, max_depth))
    return math.fsum(parts)


def _refine(f, a, fa, m, fm, b, fb, whole, tol, depth):
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    delta = left + right - whole
    if depth <= 0 or abs(delta) <= 15.0 * tol:
        return left + right + delta / 15.0
    return (_refine(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1)
            + _refine(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1))


def golden_section_max(f, lo: float, hi: float, tol: float = 1e-10) -> tuple[float, float]:
    """Maximizer and maximum of a unimodal f on [lo, hi]."""
    if hi < lo:
        raise ValueError("bracket out of order")
    x1 = hi - _INVPHI * (hi - lo)
    x2 = lo + _INVPHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol * (1.0 + abs(lo) + abs(hi)):
        if f1 < f2:
            lo = x1
            x1, f1 = x2, f2
            x2 = lo + _INVPHI * (hi - lo)
            f2 = f(x2)
        else:
            hi = x2
            x2, f2 = x1, f1
            x1 = hi - _INVPHI * (hi - lo)
            f1 = f(x1)
    x = 0.5 * (lo + hi)
    return x, f(x)
