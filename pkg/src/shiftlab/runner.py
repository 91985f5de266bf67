"""Experiment dispatch: validated config in, reproducible record out.

Each runner returns a JSON-serializable payload, a set of TSV tables, and a
``resolved`` block recording every derived setting (auto-chosen energies,
sorted grids, mask sizes).  The persisted record is

    {tool, version, kind, config, resolved, wall_clock_seconds,
     payload, payload_sha256}

where the hash covers the payload alone, in canonical form (sorted keys,
compact separators, shortest-repr floats), so a rerun from the stored config
can be checked bit-for-bit regardless of wall clock or thread count.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._version import __version__
from .config import ExperimentConfig
from .disorder import coupling_stream
from .lattice import (alloy_potential, assemble_operator, build_box_domain,
                      build_masked_domain, center_site, refine_domain)
from .spectral import eigen_decompose
from .ssf import (FtFunctional, ft_closed_form, ft_eval, krein_check,
                  legendre_dual, make_switch, ssf_counting, ssf_via_invariance,
                  trace_bound_check)
from .wegner import (WegnerConfig, holder_modulus_check, ids_estimate,
                     partial_integration_check, random_monotone_function,
                     semigroup_trace_check, wegner_experiment, weyl_check)

TOOL = "shiftlab"

# Coupling-stream components reserved by the runners.  Realization draws use
# component 0 (wegner) and the per-volume indices (ids), so fixed auxiliary
# draws live on high components where they can never collide.
_COMPONENT_MASK = 3
_COMPONENT_PHI = 7


@dataclass
class RunResult:
    payload: dict
    tables: dict[str, tuple[list[str], list[list]]] = field(default_factory=dict)
    resolved: dict = field(default_factory=dict)


# -- serialization helpers ----------------------------------------------------


def _pyify(obj):
    """Recursively strip numpy types so json sees only builtins."""
    if isinstance(obj, dict):
        return {str(k): _pyify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_pyify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _pyify(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if obj is None or isinstance(obj, (bool, int, float, str)):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__} into a record")


def canonical_payload(payload: dict) -> str:
    return json.dumps(_pyify(payload), sort_keys=True, separators=(",", ":"))


def payload_hash(payload: dict) -> str:
    return hashlib.sha256(canonical_payload(payload).encode("utf-8")).hexdigest()


def _cell(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_tsv(path: Path, header: list[str], rows) -> None:
    lines = ["\t".join(header)]
    lines.extend("\t".join(_cell(c) for c in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


# -- per-kind runners ---------------------------------------------------------


def _amp_label(a: float):
    return "deletion" if math.isinf(a) else float(a)


def _amp_tag(a: float) -> str:
    return "deletion" if math.isinf(a) else f"{a:g}".replace(".", "p")


def _fit_dict(fit) -> dict:
    return {
        "alpha": fit.alpha, "rate": fit.rate, "prefactor": fit.prefactor,
        "r_squared": fit.r_squared, "n_min": fit.n_min, "n_max": fit.n_max,
        "points": fit.points,
    }


def _run_singular_decay(p: dict, threads: int):
    from .wegner import singular_value_experiment

    domain = build_box_domain(p["dimension"], p["side"], p["spacing"])
    report = singular_value_experiment(
        domain, p["u"], p["amplitudes"], t=p["t"], v_per=p["v_per"],
        floor=p["floor"], skip_leading=p["skip_leading"])
    d = report.dimension
    per = []
    tables = {}
    for amp, fits, tops, err in zip(report.amplitudes, report.fits,
                                    report.top_values, report.errors):
        per.append({
            "amplitude": _amp_label(amp),
            "fits": [_fit_dict(fits[a]) for a in sorted(fits)],
            "top_singular_values": list(tops),
            "error": err,
        })
        rows = []
        for n, mu in enumerate(tops, start=1):
            mu = float(mu)
            logmu = math.log(mu) if mu > 0 else float("-inf")
            rows.append([n, mu, n ** (1.0 / d), logmu])
        tables[f"singular-values-{_amp_tag(amp)}"] = (
            ["n", "mu_n", "n_pow_1_over_d", "log_mu_n"], rows)
    payload = {
        "dimension": d,
        "t": p["t"],
        "amplitudes": [_amp_label(a) for a in report.amplitudes],
        "per_amplitude": per,
        "rate_spread": report.rate_spread,
    }
    resolved = {
        "site_count": domain.site_count,
        "volume": domain.volume(),
        "alphas": [1.0 / d, 2.0 / d],
    }
    return payload, tables, resolved


_INVARIANCE_MAPS = (
    ("exp-decay", lambda x: math.exp(-x)),
    ("affine", lambda x: 2.0 * x + 7.0),
    ("odd-cubic", lambda x: x**3 + x),
)


def _perturbed_pair(p: dict):
    """Free operator and the one with amplitude*u planted on the center cell."""
    domain = build_box_domain(p["dimension"], p["side"], p["spacing"])
    base = assemble_operator(domain, p["v_per"])
    spec1 = eigen_decompose(base)
    couplings = np.zeros(domain.site_count)
    couplings[domain.index_map()[center_site(domain)]] = p["amplitude"]
    v2 = alloy_potential(domain, p["u"], couplings, v_per=p["v_per"])
    spec2 = eigen_decompose(assemble_operator(domain, v2))
    rank = int(np.sum(v2 > p["v_per"]))
    return domain, spec1, spec2, rank


def _run_ssf_identities(p: dict, threads: int):
    domain, spec1, spec2, rank = _perturbed_pair(p)
    curve = ssf_counting(spec1, spec2)
    union = np.union1d(spec1.eigenvalues, spec2.eigenvalues)
    energy = p["energy"]
    if energy is None:
        energy = (float(union[0]) + float(union[-1])) / 2.0
    rho = make_switch(energy, p["half_width"])
    lhs, rhs = krein_check(spec1, spec2, rho, curve=curve)

    invariance = []
    for name, g in _INVARIANCE_MAPS:
        alt = ssf_via_invariance(spec1, spec2, g)
        exact = bool(np.array_equal(alt.breakpoints, curve.breakpoints)
                     and np.array_equal(alt.values, curve.values))
        invariance.append({"map": name, "exact": exact})

    integral = curve.integral()
    trace_diff = (math.fsum(float(x) for x in spec1.eigenvalues)
                  - math.fsum(float(x) for x in spec2.eigenvalues))
    payload = {
        "dimension": p["dimension"],
        "krein": {"lhs": lhs, "rhs": rhs, "abs_diff": abs(lhs - rhs),
                  "energy": energy, "half_width": p["half_width"]},
        "invariance": invariance,
        "integral": {"curve_integral": integral, "trace_difference": trace_diff,
                     "abs_diff": abs(integral - trace_diff)},
        "sup_abs": curve.sup_abs(),
        "rank": rank,
        "breakpoints": len(curve.breakpoints),
    }
    tables = {"ssf-curve": (["breakpoint", "value"],
                            [[float(b), int(v)] for b, v in
                             zip(curve.breakpoints, curve.values)])}
    resolved = {"energy": energy, "site_count": domain.site_count}
    return payload, tables, resolved


def _run_ft_bounds(p: dict, threads: int):
    fn = FtFunctional(t=p["t"], dimension=p["dimension"], alpha=p["alpha"])
    d = p["dimension"]
    a = fn.exponent

    value_rows, values = [], []
    for x in p["x_grid"]:
        try:
            f = ft_eval(fn, x)
            f2 = ft_eval(fn, x, panels=16)
        except OverflowError:
            values.append({"x": x, "value": None, "note": "overflow"})
            value_rows.append([x, "overflow", "", ""])
            continue
        try:
            closed = ft_closed_form(fn, x)
            closed_diff = abs(f - closed)
        except ValueError:
            closed, closed_diff = None, None
        values.append({"x": x, "value": f, "closed_form": closed,
                       "closed_diff": closed_diff,
                       "doubled_panels_diff": abs(f - f2)})
        value_rows.append([x, f, "" if closed is None else closed,
                           abs(f - f2)])

    dual_rows, duals = [], []
    for y in p["y_grid"]:
        g = legendre_dual(fn, y)
        bound = y * (math.log1p(y) / p["t"]) ** d
        duals.append({"y": y, "dual": g, "bound": bound,
                      "holds": bool(g <= bound * (1.0 + 1e-9) + 1e-12)})
        dual_rows.append([y, g, bound, g / bound if bound > 0 else 0.0])

    asymptotic = []
    if p["alpha"] is None:
        for x in (1e2, 1e3, 1e4):
            if fn.t * x**a > 700.0:
                continue
            f = ft_eval(fn, x)
            envelope = d * x ** ((d - 1) / d) * math.exp(fn.t * x ** (1.0 / d))
            asymptotic.append({"x": x, "ratio": f / envelope,
                               "limit": 1.0 / fn.t})

    payload = {"t": p["t"], "dimension": d, "exponent": a,
               "values": values, "dual": duals, "asymptotic": asymptotic}
    tables = {
        "ft-values": (["x", "F", "closed_form", "doubled_panels_diff"], value_rows),
        "legendre-dual": (["y", "G", "bound", "ratio"], dual_rows),
    }
    return payload, tables, {"exponent": a}


def _run_wegner(p: dict, threads: int):
    wcfg = WegnerConfig(
        dimension=p["dimension"], side=p["side"], spacing=p["spacing"],
        u=p["u"], dist=p["distribution"], realizations=p["realizations"],
        master_seed=p["master_seed"], eps_grid=tuple(p["epsilon_grid"]),
        v_per=p["v_per"], energy=p["energy"])
    res = wegner_experiment(wcfg, threads=threads)
    payload = {
        "energy": res.energy,
        "epsilons": res.epsilons,
        "means": res.means,
        "std_errs": res.std_errs,
        "s_eps": res.s_eps,
        "s_2eps": res.s_2eps,
        "ratios": res.ratios,
        "ratios_eps": res.ratios_eps,
        "exponent": res.exponent,
        "counts": res.counts,
        "site_count": res.site_count,
        "volume": res.volume,
        "realizations": res.realizations,
    }
    mean_rows = [[e, m, s, se, s2, r, re] for e, m, s, se, s2, r, re in
                 zip(res.epsilons, res.means, res.std_errs, res.s_eps,
                     res.s_2eps, res.ratios, res.ratios_eps)]
    count_rows = [[r, float(res.epsilons[j]), int(res.counts[r, j])]
                  for r in range(res.realizations)
                  for j in range(len(res.epsilons))]
    tables = {
        "wegner-means": (["epsilon", "mean", "std_err", "s_eps", "s_2eps",
                          "ratio_2eps", "ratio_eps"], mean_rows),
        "wegner-counts": (["realization_index", "epsilon", "count"], count_rows),
    }
    resolved = {"energy": res.energy,
                "epsilon_grid": [float(e) for e in res.epsilons]}
    return payload, tables, resolved


def _run_ids(p: dict, threads: int):
    lo, hi, count = p["energy_grid"]
    energies = np.linspace(lo, hi, count)
    wcfg = WegnerConfig(
        dimension=p["dimension"], side=p["sides"][0], spacing=p["spacing"],
        u=p["u"], dist=p["distribution"], realizations=p["realizations"],
        master_seed=p["master_seed"], v_per=p["v_per"])
    report = ids_estimate(wcfg, p["sides"], energies, threads=threads)

    center = (lo + hi) / 2.0
    pairs = []
    kept_deltas = []
    for de in p["holder_deltas"]:
        e1, e2 = center - de / 2.0, center + de / 2.0
        if e1 >= lo and e2 <= hi:
            pairs.append((e1, e2))
            kept_deltas.append(de)
    if not pairs:
        raise ValueError("no holder delta fits inside the energy grid")
    curve = report.curves[-1]
    hol = holder_modulus_check(curve, p["distribution"], pairs)

    payload = {
        "sides": p["sides"],
        "energies": energies,
        "curves": [{"side": c.side, "volume": c.volume, "values": c.values}
                   for c in report.curves],
        "sup_distances": list(report.sup_distances),
        "holder": {
            "deltas": hol.deltas, "increments": hol.increments,
            "ratios": hol.ratios, "c_fit": hol.c_fit,
            "increment_exponent": hol.increment_exponent,
            "trend_slope": hol.trend_slope,
            "unbounded_flag": hol.unbounded_flag,
        },
    }
    tables = {}
    for c in report.curves:
        tables[f"ids-curve-side{c.side}"] = (
            ["energy", "value"],
            [[float(e), float(v)] for e, v in zip(c.energies, c.values)])
    tables["ids-holder"] = (
        ["delta", "increment", "ratio"],
        [[d, i, r] for d, i, r in zip(hol.deltas, hol.increments, hol.ratios)])
    resolved = {"holder_center": center, "holder_deltas": kept_deltas,
                "holder_side": curve.side}
    return payload, tables, resolved


def _build_phi(p: dict):
    spec = p["phi"]
    if spec["kind"] == "switch":
        return make_switch(spec["energy"], spec["half_width"])
    if spec["kind"] == "clipped-linear":
        lo, hi = spec["lo"], spec["hi"]
        return lambda x: float(np.clip(x, lo, hi))
    a, b = p["distribution"].support
    rng = coupling_stream(p["master_seed"], 0, component=_COMPONENT_PHI)
    return random_monotone_function(rng, a, b + p["epsilon"])


def _run_lemma3(p: dict, threads: int):
    dist = p["distribution"]
    phi = _build_phi(p)
    lhs, rhs, holds = partial_integration_check(dist, phi, p["epsilon"],
                                                tol=p["tolerance"])
    a, b = dist.support
    grid = np.linspace(a, b + p["epsilon"], 65)
    payload = {
        "phi_kind": p["phi"]["kind"],
        "epsilon": p["epsilon"],
        "modulus": dist.modulus_of_continuity(p["epsilon"]),
        "lhs": lhs,
        "rhs": rhs,
        "margin": rhs - lhs,
        "holds": holds,
    }
    tables = {"phi-profile": (["x", "phi"],
                              [[float(x), float(phi(float(x)))] for x in grid])}
    resolved = {"support": [a, b], "tolerance": p["tolerance"]}
    return payload, tables, resolved


def _weyl_domain(p: dict):
    if p["mask"] is None:
        return build_box_domain(p["dimension"], p["side"], p["spacing"]), None
    box = build_box_domain(p["dimension"], p["side"], p["spacing"])
    rng = coupling_stream(p["master_seed"], 0, component=_COMPONENT_MASK)
    keep = rng.random(box.site_count) < p["mask"]
    sites = [s for s, k in zip(box.sites, keep) if k]
    if not sites:
        raise ValueError("mask kept no sites; raise keep_probability")
    return build_masked_domain(p["dimension"], sites, p["spacing"]), len(sites)


def _semigroup_payload(rep) -> dict:
    return {
        "t_grid": rep.t_grid, "traces": rep.traces, "bounds": rep.bounds,
        "margins": rep.margins, "delta": rep.delta,
        "window": list(rep.window), "all_hold": rep.all_hold,
        "min_margin": rep.min_margin,
    }


def _run_weyl(p: dict, threads: int):
    domain, mask_sites = _weyl_domain(p)
    wr = weyl_check(domain, p["potential"], eta=p["eta"])

    fine, parents = refine_domain(domain)
    levels_payload = []
    tables = {}
    semis = []
    for i, (level, dom) in enumerate(zip(wr.levels, (domain, fine))):
        levels_payload.append({
            "spacing": level.spacing, "site_count": level.site_count,
            "delta": level.delta, "c_fit": level.c_fit,
            "n_checked": level.n_checked, "violations": level.violations,
            "min_margin": level.min_margin,
        })
        rows = [[n + 1, float(w), float(b), float(w - b)] for n, (w, b) in
                enumerate(zip(level.eigenvalues, level.bounds))]
        tables[f"weyl-bounds-level{i}"] = (
            ["n", "eigenvalue", "bound", "margin"], rows)

        if p["t_grid"] is not None:
            ts = p["t_grid"]
        else:
            t_lo = 4.0 * dom.spacing**2
            if t_lo >= 1.0:
                raise ValueError("spacing too coarse for the trace window")
            ts = np.geomspace(t_lo, 1.0, 7)
        rep = semigroup_trace_check(dom, p["potential"], ts)
        semis.append(_semigroup_payload(rep))
        tables[f"semigroup-trace-level{i}"] = (
            ["t", "trace", "bound", "margin"],
            [[float(t), float(tr), float(b), float(m)] for t, tr, b, m in
             zip(rep.t_grid, rep.traces, rep.bounds, rep.margins)])

    payload = {
        "dimension": p["dimension"],
        "levels": levels_payload,
        "margin_trend": wr.margin_trend,
        "improving": wr.improving,
        "semigroup": semis,
    }
    resolved = {"site_count": domain.site_count, "mask_sites": mask_sites,
                "eta": p["eta"]}
    return payload, tables, resolved


def _widest_shift_stretch(curve, lo_w: float, hi_w: float):
    """Widest maximal interval where the curve is nonzero, clipped to a window."""
    stretches = []
    cur = None
    for l, r, v in curve.intervals():
        if v != 0:
            if cur is not None and l == cur[1]:
                cur = (cur[0], r)
            else:
                if cur is not None:
                    stretches.append(cur)
                cur = (float(l), float(r))
        else:
            if cur is not None:
                stretches.append(cur)
                cur = None
    if cur is not None:
        stretches.append(cur)
    if not stretches:
        return None
    clipped = [(max(l, lo_w), min(r, hi_w)) for l, r in stretches]
    clipped = [(l, r) for l, r in clipped if r > l]
    if not clipped:
        clipped = stretches
    return max(clipped, key=lambda s: s[1] - s[0])


def _run_trace_bound(p: dict, threads: int):
    domain, spec1, spec2, rank = _perturbed_pair(p)
    curve = ssf_counting(spec1, spec2)
    energy = p["energy"]
    stretch = None
    if energy is None:
        # window to the middle half of the unperturbed band: a strong local
        # perturbation throws its top eigenvalue far above the band, and the
        # empty stretch out to it must not capture the auto-chosen energy
        base_w = np.sort(spec1.eigenvalues)
        span = float(base_w[-1]) - float(base_w[0])
        lo_w = float(base_w[0]) + 0.25 * span
        hi_w = float(base_w[-1]) - 0.25 * span
        stretch = _widest_shift_stretch(curve, lo_w, hi_w)
        if stretch is None:
            raise ValueError("the two spectra coincide; no shift stretch to center on")
        energy = 0.5 * (stretch[0] + stretch[1])
    report = trace_bound_check(spec1, spec2, energy, p["epsilon_grid"],
                               dimension=p["dimension"])
    within = bool(np.all(report.values <= rank + 1e-12))
    payload = {
        "dimension": p["dimension"],
        "energy": report.energy,
        "epsilons": report.epsilons,
        "values": report.values,
        "ratios": report.ratios,
        "c_envelope": report.c_envelope,
        "c_coarse": report.c_coarse,
        "c_fine": report.c_fine,
        "envelope_violations": report.envelope_violations,
        "rank": rank,
        "within_rank": within,
    }
    tables = {"trace-bound": (
        ["epsilon", "value", "ratio"],
        [[float(e), float(v), float(r)] for e, v, r in
         zip(report.epsilons, report.values, report.ratios)])}
    resolved = {"energy": report.energy, "rank": rank,
                "site_count": domain.site_count}
    if stretch is not None:
        resolved["energy_rule"] = "widest-shift-stretch-midpoint"
        resolved["stretch"] = [stretch[0], stretch[1]]
    return payload, tables, resolved


_RUNNERS = {
    "singular-decay": _run_singular_decay,
    "ssf-identities": _run_ssf_identities,
    "ft-bounds": _run_ft_bounds,
    "wegner": _run_wegner,
    "ids": _run_ids,
    "lemma3": _run_lemma3,
    "weyl": _run_weyl,
    "trace-bound": _run_trace_bound,
}


def run_experiment(cfg: ExperimentConfig, seed_override: int | None = None,
                   threads: int = 1) -> RunResult:
    params = dict(cfg.params)
    if seed_override is not None:
        params["master_seed"] = int(seed_override)
    payload, tables, resolved = _RUNNERS[cfg.kind](params, threads)
    resolved = {"master_seed": params["master_seed"], "threads": threads,
                **resolved}
    return RunResult(payload=payload, tables=tables, resolved=resolved)


def write_record(out_dir, cfg: ExperimentConfig, result: RunResult,
                 wall_clock: float) -> tuple[Path, str]:
    """Persist the record JSON and every table; returns (path, payload hash)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    payload = _pyify(result.payload)
    sha = payload_hash(payload)
    record = {
        "tool": TOOL,
        "version": __version__,
        "kind": cfg.kind,
        "config": cfg.snapshot(),
        "resolved": _pyify(result.resolved),
        "wall_clock_seconds": wall_clock,
        "payload": payload,
        "payload_sha256": sha,
    }
    path = out / f"{cfg.kind}-record.json"
    path.write_text(json.dumps(record, indent=2) + "\n", encoding="utf-8")
    for name, (header, rows) in result.tables.items():
        write_tsv(out / f"{name}.tsv", header, rows)
    return path, sha


def execute(cfg: ExperimentConfig, out_dir, seed_override: int | None = None,
            threads: int = 1) -> tuple[Path, str]:
    start = time.perf_counter()
    result = run_experiment(cfg, seed_override=seed_override, threads=threads)
    wall = time.perf_counter() - start
    return write_record(out_dir, cfg, result, wall)
