"""Disorder-averaged eigenvalue counting and the deterministic spectral checks.

The central experiment samples i.i.d. couplings, assembles the alloy operator
H = H0 + sum_k omega_k u(. - k), and counts eigenvalues in shrinking energy
windows [E - eps, E + eps].  The window-count mean is compared against the
modulus of continuity of the coupling distribution: the bound is

    E[count] <= C * s(mu, 2 eps) * (log 1/eps)^d * |domain|,

so the reported ratio divides the mean by everything except C.  The same
module carries the deterministic verifiers that feed the bound's proof: the
partial-integration inequality for singular measures, the Weyl-type eigenvalue
lower bound with its semigroup trace estimate, and the singular-value decay of
semigroup differences under local perturbations.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .disorder import DisorderDistribution, sample_couplings
from .lattice import (Domain, SingleSitePotential, alloy_potential,
                      assemble_operator, build_box_domain, center_site,
                      delete_sites, refine_domain)
from .quadrature import adaptive_simpson
from .spectral import eigen_decompose, fit_decay, semigroup, singular_values

__all__ = [
    "WegnerConfig", "WegnerResult", "wegner_experiment",
    "IDSCurve", "IDSReport", "ids_estimate",
    "HolderReport", "holder_modulus_check",
    "partial_integration_check", "random_monotone_function",
    "WeylLevel", "WeylReport", "weyl_check",
    "SemigroupTraceReport", "semigroup_trace_check",
    "SingularDecayReport", "singular_value_experiment",
]


def _map_ordered(fn, items, threads: int):
    """Apply fn over items, results in input order regardless of scheduling."""
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _slope(log_x, log_y) -> float:
    x = np.asarray(log_x, dtype=float)
    y = np.asarray(log_y, dtype=float)
    x_c = x - x.mean()
    denom = float(np.dot(x_c, x_c))
    if denom == 0.0:
        raise ValueError("degenerate abscissa for slope fit")
    return float(np.dot(x_c, y - y.mean()) / denom)


# -- Monte Carlo window counting ---------------------------------------------


@dataclass(frozen=True)
class WegnerConfig:
    """Alloy-model sampling plan for the window-count experiment."""

    dimension: int
    side: int
    spacing: float
    u: SingleSitePotential
    dist: DisorderDistribution
    realizations: int
    master_seed: int
    eps_grid: tuple[float, ...] = (0.25,)
    v_per: float = 0.0
    energy: float | None = None  # None: midpoint of the frozen-coupling spectrum

    def __post_init__(self):
        if len(self.eps_grid) == 0:
            raise ValueError("eps_grid must not be empty")
        if any(not (0.0 < e <= 0.5) for e in self.eps_grid):
            raise ValueError("eps_grid entries must lie in (0, 1/2]")
        if self.realizations < 1:
            raise ValueError("need at least one realization")
        if not (self.u.kappa > 0):
            raise ValueError("single-site potential must cover its cell with positive weight")


@dataclass(frozen=True)
class WegnerResult:
    energy: float
    epsilons: np.ndarray = field(repr=False)
    means: np.ndarray = field(repr=False)
    std_errs: np.ndarray = field(repr=False)
    s_eps: np.ndarray = field(repr=False)
    s_2eps: np.ndarray = field(repr=False)
    ratios: np.ndarray = field(repr=False)      # mean / (s(mu,2eps) (log 1/eps)^d |domain|)
    ratios_eps: np.ndarray = field(repr=False)  # same with s(mu,eps), for comparison
    exponent: float = math.nan
    counts: np.ndarray = field(default=None, repr=False)  # realizations x eps
    site_count: int = 0
    volume: float = 0.0
    realizations: int = 0


def wegner_experiment(cfg: WegnerConfig, threads: int = 1) -> WegnerResult:
    """Mean eigenvalue count in shrinking windows, one decomposition per draw.

    Counting every window from a single eigensolve keeps the per-realization
    cost flat in the grid size, and reducing in realization order makes the
    result bit-identical for any thread count.
    """
    domain = build_box_domain(cfg.dimension, cfg.side, cfg.spacing)
    base = assemble_operator(domain, cfg.v_per)
    n = domain.site_count
    eps = np.array(sorted(set(float(e) for e in cfg.eps_grid), reverse=True))

    energy = cfg.energy
    if energy is None:
        w0 = np.linalg.eigvalsh(base.matrix)
        energy = (float(w0[0]) + float(w0[-1])) / 2.0

    def one(r: int) -> np.ndarray:
        couplings = sample_couplings(cfg.dist, n, cfg.master_seed, r)
        v = alloy_potential(domain, cfg.u, couplings)
        w = np.linalg.eigvalsh(base.matrix + np.diag(v))
        lo = np.searchsorted(w, energy - eps, side="left")
        hi = np.searchsorted(w, energy + eps, side="right")
        return (hi - lo).astype(np.int64)

    counts = np.array(_map_ordered(one, range(cfg.realizations), threads))

    m = cfg.realizations
    means = np.array([math.fsum(float(c) for c in counts[:, j]) / m
                      for j in range(len(eps))])
    if m > 1:
        var = np.array([math.fsum((float(c) - means[j]) ** 2 for c in counts[:, j])
                        / (m - 1) for j in range(len(eps))])
        std_errs = np.sqrt(var / m)
    else:
        std_errs = np.zeros(len(eps))

    s_eps = np.array([cfg.dist.modulus_of_continuity(e) for e in eps])
    s_2eps = np.array([cfg.dist.modulus_of_continuity(2.0 * e) for e in eps])
    vol = domain.volume()
    log_factor = np.abs(np.log(1.0 / eps)) ** cfg.dimension
    ratios = means / (s_2eps * log_factor * vol)
    ratios_eps = means / (s_eps * log_factor * vol)

    keep = means > 0
    exponent = math.nan
    if np.count_nonzero(keep) >= 2:
        exponent = _slope(np.log(eps[keep]), np.log(means[keep]))

    return WegnerResult(
        energy=float(energy), epsilons=eps, means=means, std_errs=std_errs,
        s_eps=s_eps, s_2eps=s_2eps, ratios=ratios, ratios_eps=ratios_eps,
        exponent=exponent, counts=counts, site_count=n, volume=vol,
        realizations=m,
    )


# -- integrated density of states --------------------------------------------


@dataclass(frozen=True)
class IDSCurve:
    """Disorder-averaged eigenvalue count per unit volume, on an energy grid."""

    energies: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    side: int = 0
    dimension: int = 1
    volume: float = 0.0
    realizations: int = 0

    def __post_init__(self):
        if np.any(np.diff(self.values) < -1e-12):
            raise ValueError("counting curve must be nondecreasing in energy")

    def evaluate(self, e) -> np.ndarray:
        lo, hi = float(self.energies[0]), float(self.energies[-1])
        e_arr = np.asarray(e, dtype=float)
        if np.any(e_arr < lo) or np.any(e_arr > hi):
            raise ValueError("energy outside the tabulated grid")
        return np.interp(e_arr, self.energies, self.values)


@dataclass(frozen=True)
class IDSReport:
    curves: tuple[IDSCurve, ...]
    sup_distances: tuple[float, ...]  # between successive volumes


def ids_estimate(cfg: WegnerConfig, sides, energy_grid, threads: int = 1) -> IDSReport:
    """Counting function per unit volume for a growing sequence of boxes.

    Each side gets its own coupling stream component so extending the
    sequence never disturbs the draws of the earlier volumes.
    """
    energies = np.array(sorted(float(e) for e in energy_grid))
    if len(energies) < 2:
        raise ValueError("energy grid needs at least two points")
    curves = []
    for vi, side in enumerate(sides):
        domain = build_box_domain(cfg.dimension, int(side), cfg.spacing)
        base = assemble_operator(domain, cfg.v_per)
        n = domain.site_count
        vol = domain.volume()

        def one(r: int) -> np.ndarray:
            couplings = sample_couplings(cfg.dist, n, cfg.master_seed, r, component=vi)
            v = alloy_potential(domain, cfg.u, couplings)
            w = np.linalg.eigvalsh(base.matrix + np.diag(v))
            return np.searchsorted(w, energies, side="right").astype(np.int64)

        rows = np.array(_map_ordered(one, range(cfg.realizations), threads))
        values = np.array([math.fsum(float(c) for c in rows[:, j])
                           for j in range(len(energies))]) / (cfg.realizations * vol)
        curves.append(IDSCurve(energies=energies, values=values, side=int(side),
                               dimension=cfg.dimension, volume=vol,
                               realizations=cfg.realizations))
    dists = tuple(float(np.max(np.abs(a.values - b.values)))
                  for a, b in zip(curves[:-1], curves[1:]))
    return IDSReport(curves=tuple(curves), sup_distances=dists)


@dataclass(frozen=True)
class HolderReport:
    deltas: np.ndarray = field(repr=False)
    increments: np.ndarray = field(repr=False)
    ratios: np.ndarray = field(repr=False)
    c_fit: float = 0.0
    increment_exponent: float = math.nan
    trend_slope: float = math.nan
    unbounded_flag: bool = False


def holder_modulus_check(curve: IDSCurve, dist: DisorderDistribution,
                         pairs) -> HolderReport:
    """Counting-function increments against the measure's continuity modulus.

    Per pair (E1, E2): ratio |N(E1) - N(E2)| / [s(mu, |dE|) (log 1/|dE|)^d].
    The max ratio estimates the constant; a systematic growth of the ratio
    as |dE| shrinks flags that the modulus does not actually dominate.
    """
    d = curve.dimension
    deltas, increments, ratios = [], [], []
    for e1, e2 in pairs:
        de = abs(float(e2) - float(e1))
        if not (0.0 < de <= 0.5):
            raise ValueError("pair spacing must lie in (0, 1/2]")
        dn = abs(float(curve.evaluate(e2)) - float(curve.evaluate(e1)))
        denom = dist.modulus_of_continuity(de) * abs(math.log(1.0 / de)) ** d
        deltas.append(de)
        increments.append(dn)
        ratios.append(dn / denom)
    deltas = np.array(deltas)
    increments = np.array(increments)
    ratios = np.array(ratios)

    pos = increments > 0
    inc_exp = math.nan
    trend = math.nan
    if np.count_nonzero(pos) >= 2 and len(np.unique(deltas[pos])) >= 2:
        inc_exp = _slope(np.log(deltas[pos]), np.log(increments[pos]))
        trend = _slope(np.log(1.0 / deltas[pos]), np.log(ratios[pos]))
    return HolderReport(
        deltas=deltas, increments=increments, ratios=ratios,
        c_fit=float(np.max(ratios)) if len(ratios) else 0.0,
        increment_exponent=inc_exp, trend_slope=trend,
        unbounded_flag=bool(trend == trend and trend > 0.25),
    )


# -- partial integration for singular measures -------------------------------


def _eval_many(phi, xs: np.ndarray) -> np.ndarray:
    try:
        vals = np.asarray(phi(xs), dtype=float)
        if vals.shape == xs.shape:
            return vals
    except (TypeError, ValueError):
        pass
    return np.array([float(phi(float(x))) for x in xs])


def partial_integration_check(dist: DisorderDistribution, phi, eps: float,
                              tol: float = 1e-8) -> tuple[float, float, bool]:
    """integral [phi(x + eps) - phi(x)] dmu <= s(mu, eps) [phi(b + eps) - phi(a)].

    phi must be nondecreasing on [a, b + eps] (a, b the support endpoints);
    a sampled negative slope raises.  Atomic parts are summed exactly over
    the atom table; continuous parts go through adaptive quadrature.
    """
    if not (eps > 0):
        raise ValueError("eps must be positive")
    a, b = dist.support

    grid = np.linspace(a, b + eps, 513)
    vals = _eval_many(phi, grid)
    if not np.all(np.isfinite(vals)):
        raise ValueError("phi evaluated non-finite on the support")
    dx = grid[1] - grid[0]
    if dx > 0 and np.min(np.diff(vals)) / dx < -1e-12:
        raise ValueError("phi is decreasing somewhere on the support")

    if dist.is_atomic:
        atoms, weights = dist._atom_table()
        shifted = _eval_many(phi, atoms + eps)
        plain = _eval_many(phi, atoms)
        lhs = math.fsum(float(w) * (float(s) - float(p))
                        for w, s, p in zip(weights, shifted, plain))
    elif dist.kind == "uniform":
        integral = adaptive_simpson(
            lambda x: float(phi(x + eps)) - float(phi(x)), a, b, rel_tol=1e-10)
        lhs = integral / (b - a)
    elif dist.kind == "cdf-table":
        parts = []
        for x0, x1, f0, f1 in zip(dist.cdf_x[:-1], dist.cdf_x[1:],
                                  dist.cdf_f[:-1], dist.cdf_f[1:]):
            density = (float(f1) - float(f0)) / (float(x1) - float(x0))
            if density <= 0.0:
                continue
            parts.append(density * adaptive_simpson(
                lambda x: float(phi(x + eps)) - float(phi(x)),
                float(x0), float(x1), rel_tol=1e-10))
        lhs = math.fsum(parts)
    else:
        raise ValueError(f"unsupported distribution kind {dist.kind!r}")

    rhs = dist.modulus_of_continuity(eps) * (float(phi(b + eps)) - float(phi(a)))
    return lhs, rhs, bool(lhs <= rhs + tol)


def random_monotone_function(rng: np.random.Generator, lo: float, hi: float):
    """Positive combination of shifted smooth ramps; nondecreasing and bounded."""
    count = int(rng.integers(1, 6))
    span = hi - lo
    centers = lo + span * rng.random(count)
    radii = span * (0.05 + 0.45 * rng.random(count))
    weights = 0.1 + 1.9 * rng.random(count)

    def phi(x):
        x = np.asarray(x, dtype=float)
        total = np.zeros_like(x)
        for c, r, w in zip(centers, radii, weights):
            u = np.clip((x - (c - r)) / (2.0 * r), 0.0, 1.0)
            total = total + w * u**3 * (10.0 - 15.0 * u + 6.0 * u**2)
        return total if total.shape else float(total)

    return phi


# -- eigenvalue lower bound and semigroup trace -------------------------------

_WEYL_FACTOR = 2.0 * math.pi / math.e


def _delta_and_shift(domain: Domain, potential: np.ndarray,
                     kinetic: np.ndarray) -> tuple[float, float]:
    """Relative negative-part strength and the additive constant it induces."""
    c_fit = max(0.0, -float(np.min(potential)))
    if c_fit == 0.0:
        return 0.0, 0.0
    lam_max = float(np.linalg.eigvalsh(kinetic)[-1])
    delta = c_fit / lam_max
    if delta >= 1.0:
        raise ValueError("negative part of the potential overwhelms the kinetic term")
    return delta, c_fit


@dataclass(frozen=True)
class WeylLevel:
    spacing: float
    site_count: int
    delta: float
    c_fit: float
    n_checked: int
    violations: int
    min_margin: float
    eigenvalues: np.ndarray = field(repr=False, default=None)
    bounds: np.ndarray = field(repr=False, default=None)


@dataclass(frozen=True)
class WeylReport:
    levels: tuple[WeylLevel, ...]
    margin_trend: float = 0.0   # refined minus coarse minimal margin
    improving: bool = False


def weyl_check(domain: Domain, potential, eta: float = 0.1) -> WeylReport:
    """Lower bound E_n >= (2 pi (1-delta) d / e) (n / |U|)^{2/d} - C for small n.

    Checked for n up to eta * N at the given spacing and once more on the
    half-spacing refinement (children inherit the parent's potential value);
    only the lowest fraction is compared because the top of the lattice band
    has no continuum counterpart.
    """
    if not (0.0 < eta <= 0.25):
        raise ValueError("eta must lie in (0, 1/4]")
    pot = np.broadcast_to(np.asarray(potential, dtype=float), (domain.site_count,)).copy()

    fine, parents = refine_domain(domain)
    levels = []
    for dom, p in ((domain, pot), (fine, pot[parents])):
        kin = assemble_operator(dom, 0.0).matrix
        delta, c_fit = _delta_and_shift(dom, p, kin)
        w = np.linalg.eigvalsh(kin + np.diag(p))
        n_sites = dom.site_count
        vol = dom.volume()
        n_checked = max(1, int(eta * n_sites))
        ns = np.arange(1, n_checked + 1, dtype=float)
        bounds = (_WEYL_FACTOR * (1.0 - delta) * dom.dimension
                  * (ns / vol) ** (2.0 / dom.dimension) - c_fit)
        margins = w[:n_checked] - bounds
        levels.append(WeylLevel(
            spacing=dom.spacing, site_count=n_sites, delta=delta, c_fit=c_fit,
            n_checked=n_checked, violations=int(np.sum(margins < 0)),
            min_margin=float(np.min(margins)),
            eigenvalues=w[:n_checked], bounds=bounds,
        ))
    trend = levels[1].min_margin - levels[0].min_margin
    return WeylReport(levels=tuple(levels), margin_trend=float(trend),
                      improving=bool(trend > 0))


@dataclass(frozen=True)
class SemigroupTraceReport:
    t_grid: np.ndarray = field(repr=False)
    traces: np.ndarray = field(repr=False)
    bounds: np.ndarray = field(repr=False)
    margins: np.ndarray = field(repr=False)  # (bound - trace) / bound
    delta: float = 0.0
    window: tuple[float, float] = (0.0, 1.0)
    all_hold: bool = False
    min_margin: float = 0.0


def semigroup_trace_check(domain: Domain, potential, t_grid) -> SemigroupTraceReport:
    """Tr exp(-2tH) against |U| (8 pi t (1 - delta))^{-d/2} over a t-grid.

    Valid only for t in [4 h^2, 1]: below the window the lattice trace
    saturates at the site count while the comparison still decays.
    """
    lo = 4.0 * domain.spacing**2
    ts = np.array(sorted(float(t) for t in t_grid))
    if len(ts) == 0:
        raise ValueError("t grid must not be empty")
    if ts[0] < lo * (1.0 - 1e-12) or ts[-1] > 1.0 + 1e-12:
        raise ValueError(f"t grid must stay inside the window [{lo:g}, 1]")
    pot = np.broadcast_to(np.asarray(potential, dtype=float), (domain.site_count,)).copy()
    kin = assemble_operator(domain, 0.0).matrix
    delta, _ = _delta_and_shift(domain, pot, kin)
    w = np.linalg.eigvalsh(kin + np.diag(pot))
    vol = domain.volume()
    d = domain.dimension
    traces = np.array([math.fsum(math.exp(-2.0 * t * float(x)) for x in w) for t in ts])
    bounds = vol * (8.0 * math.pi * ts * (1.0 - delta)) ** (-d / 2.0)
    margins = (bounds - traces) / bounds
    return SemigroupTraceReport(
        t_grid=ts, traces=traces, bounds=bounds, margins=margins, delta=delta,
        window=(lo, 1.0), all_hold=bool(np.all(traces <= bounds)),
        min_margin=float(np.min(margins)),
    )


# -- singular values of semigroup differences ---------------------------------


@dataclass(frozen=True)
class SingularDecayReport:
    amplitudes: tuple[float, ...]
    fits: tuple[dict, ...]          # one entry per amplitude: alpha -> DecayFit
    top_values: tuple[np.ndarray, ...]
    errors: tuple[str | None, ...]
    rate_spread: float = math.nan   # (max - min) / mean of rates, alpha = 1/d
    dimension: int = 1


def singular_value_experiment(domain: Domain, u: SingleSitePotential,
                              amplitudes, t: float = 1.0, v_per: float = 0.0,
                              floor: float = 1e-12, skip_leading: int = 0,
                              alphas=None) -> SingularDecayReport:
    """Decay fits for the singular values of exp(-tH1) - exp(-tH2).

    H2 adds `amplitude * u` on the center cell; amplitude may be math.inf,
    realized by deleting the support sites (hard wall), which is the limit the
    finite amplitudes must approach.  Fits run per amplitude and per exponent
    hypothesis; a fit that cannot run (all values identically zero) is
    recorded as an error string instead of raising.
    """
    d = domain.dimension
    if alphas is None:
        alphas = (1.0 / d, 2.0 / d)
    base = assemble_operator(domain, v_per)
    spec1 = eigen_decompose(base)
    semi1 = semigroup(spec1, t)
    center = center_site(domain)
    idx = domain.index_map()

    fits, tops, errors = [], [], []
    for amp in amplitudes:
        amp = float(amp)
        if math.isinf(amp):
            support = [tuple(c + o for c, o in zip(center, off)) for off in u.offsets]
            present = [s for s in support if s in idx]
            sub, kept = delete_sites(domain, present)
            spec2 = eigen_decompose(assemble_operator(sub, v_per))
            semi2 = np.zeros_like(semi1)
            semi2[np.ix_(kept, kept)] = semigroup(spec2, t)
        else:
            couplings = np.zeros(domain.site_count)
            couplings[idx[center]] = amp
            v = alloy_potential(domain, u, couplings, v_per=v_per)
            spec2 = eigen_decompose(base.matrix + np.diag(v - v_per))
            semi2 = semigroup(spec2, t)
        sv = singular_values(semi1 - semi2)
        tops.append(sv[:10].copy())
        entry = {}
        err = None
        try:
            for alpha in alphas:
                entry[float(alpha)] = fit_decay(sv, alpha, floor=floor,
                                                skip_leading=skip_leading)
        except ValueError as exc:
            entry = {}
            err = str(exc)
        fits.append(entry)
        errors.append(err)

    lead = 1.0 / d
    rates = [f[lead].rate for f in fits if lead in f]
    spread = math.nan
    if len(rates) >= 2:
        mean = math.fsum(rates) / len(rates)
        if mean != 0:
            spread = (max(rates) - min(rates)) / mean
    return SingularDecayReport(
        amplitudes=tuple(float(a) for a in amplitudes), fits=tuple(fits),
        top_values=tuple(tops), errors=tuple(errors), rate_spread=spread,
        dimension=d,
    )
