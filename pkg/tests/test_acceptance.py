"""Acceptance gate: one test per published criterion.

Each test prints a single [PASS]/[FAIL] line with the measured quantities and
its runtime against the stated budget.  Run with `pytest tests/test_acceptance.py -s`
to see the lines as they appear; under plain pytest they show on failure.
"""

import json
import math
import time

import numpy as np

from shiftlab.config import validate_config
from shiftlab.config import load_config
from shiftlab.disorder import (
    atomic_mixture,
    bernoulli,
    cantor,
    from_cdf_table,
    uniform,
)
from shiftlab.lattice import build_box_domain, cell_indicator
from shiftlab.runner import execute, payload_hash, run_experiment
from shiftlab.spectral import eigen_decompose, semigroup, singular_values
from shiftlab.ssf import (
    FtFunctional,
    exp_pair_curve,
    ft_closed_form,
    ft_eval,
    krein_check,
    legendre_dual,
    majorization_check,
    make_switch,
    ssf_counting,
    ssf_via_invariance,
)
from shiftlab.wegner import (
    WegnerConfig,
    partial_integration_check,
    random_monotone_function,
    singular_value_experiment,
    wegner_experiment,
)

LOG2_OVER_LOG3 = math.log(2.0) / math.log(3.0)


def _finish(name, ok, detail, t0, budget):
    elapsed = time.perf_counter() - t0
    good = bool(ok) and elapsed < budget
    print(f"[{'PASS' if good else 'FAIL'}] {name}: {detail}; "
          f"runtime {elapsed:.1f}s (budget {budget:.0f}s)")
    assert ok, f"{name}: {detail}"
    assert elapsed < budget, f"{name} exceeded {budget:.0f}s: {elapsed:.1f}s"


def _random_pair(rng, n, rank, scale=1.0, nonneg=False):
    a = rng.normal(size=(n, n))
    h1 = 0.5 * (a + a.T)
    idx = rng.choice(n, size=rank, replace=False)
    bump = np.zeros(n)
    draws = rng.uniform(0.5, 2.0, size=rank) if nonneg else rng.normal(size=rank)
    bump[idx] = scale * draws
    return eigen_decompose(h1), eigen_decompose(h1 + np.diag(bump)), rank


def test_criterion_01_exact_identities():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1001)
    maps = (lambda x: math.exp(-x), lambda x: 2.0 * x + 7.0, lambda x: x**3 + x)
    worst = 0.0
    invariance_exact = True
    for _ in range(200):
        n = int(rng.integers(2, 65))
        rank = int(rng.integers(1, min(n, 5) + 1))
        s1, s2, _ = _random_pair(rng, n, rank, scale=2.0)
        center = float(np.median(np.concatenate((s1.eigenvalues, s2.eigenvalues))))
        lhs, rhs = krein_check(s1, s2, make_switch(center, 0.25))
        worst = max(worst, abs(lhs - rhs) / (1.0 + abs(lhs)))
        direct = ssf_counting(s1, s2)
        invariance_exact &= bool(np.issubdtype(direct.values.dtype, np.integer))
        for g in maps:
            via = ssf_via_invariance(s1, s2, g)
            invariance_exact &= bool(
                np.array_equal(via.breakpoints, direct.breakpoints)
                and np.array_equal(via.values, direct.values))
    ok = worst <= 1e-10 and invariance_exact
    _finish("exact-identities", ok,
            f"200 pairs (dim <= 64), worst trace-identity rel err {worst:.2e}, "
            f"invariance exactly integer: {invariance_exact}", t0, 30.0)


def test_criterion_02_interlacing_and_sign():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1002)
    rank_viol = sign_viol = 0
    for i in range(500):
        n = int(rng.integers(2, 41))
        rank = int(rng.integers(1, min(n, 5) + 1))
        nonneg = bool(i % 2)
        s1, s2, r = _random_pair(rng, n, rank, scale=1.5, nonneg=nonneg)
        curve = ssf_counting(s1, s2)
        if curve.sup_abs() > r:
            rank_viol += 1
        if nonneg and int(np.max(curve.values)) > 0:
            sign_viol += 1
    ok = rank_viol == 0 and sign_viol == 0
    _finish("interlacing-sign", ok,
            f"500 instances, sup|curve| > rank violations {rank_viol}, "
            f"sign violations on nonnegative bumps {sign_viol}", t0, 30.0)


def test_criterion_03_decay_rates():
    t0 = time.perf_counter()
    amps = (1.0, 10.0, 1000.0, math.inf)
    parts = []
    ok = True
    for d, side in ((1, 96), (2, 24)):
        rep = singular_value_experiment(
            build_box_domain(d, side, 1.0), cell_indicator(d), amps)
        lead, alt = 1.0 / d, 2.0 / d
        rates = [f[lead].rate for f in rep.fits]
        r2s = [f[lead].r_squared for f in rep.fits]
        alt_rates = [f[alt].rate for f in rep.fits]
        ok &= all(c > 0 for c in rates)
        ok &= all(r >= 0.9 for r in r2s)
        ok &= rep.rate_spread <= 0.25
        parts.append(
            f"{d}d side {side}: c in [{min(rates):.3f}, {max(rates):.3f}], "
            f"min r2 {min(r2s):.3f}, spread {rep.rate_spread:.1%}; "
            f"alpha=2/d rates (reported, no verdict) "
            f"[{', '.join(f'{c:.3f}' for c in alt_rates)}]")
    _finish("decay-rates", ok, " | ".join(parts), t0, 300.0)


def test_criterion_04_majorization():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1004)
    t = 0.1
    viol = 0
    slack = math.inf
    for d in (1, 2):
        fn = FtFunctional(t=t, dimension=d)
        for _ in range(50):
            n = int(rng.integers(8, 31))
            rank = int(rng.integers(1, 6))
            s1, s2, _ = _random_pair(rng, n, rank, scale=2.0)
            curve = exp_pair_curve(s1, s2, t=t)
            sv = singular_values(semigroup(s1, t) - semigroup(s2, t))
            lhs, rhs, holds = majorization_check(sv, curve, fn)
            if not holds:
                viol += 1
            slack = min(slack, rhs - lhs)
    _finish("majorization", viol == 0,
            f"100 pairs (rank <= 5, d in {{1, 2}}, t = 0.1), violations {viol}, "
            f"min slack {slack:.2e}", t0, 60.0)


def test_criterion_05_window_weight_suite():
    t0 = time.perf_counter()
    checks = {}

    checks["F(0) = 0"] = ft_eval(FtFunctional(1.0, dimension=1), 0.0) == 0.0

    worst_cf = 0.0
    for tt in (0.25, 1.0, 2.0):
        fn = FtFunctional(tt, dimension=1)
        for x in (0.5, 1.0, 3.0, 6.0):
            cf = ft_closed_form(fn, x)
            worst_cf = max(worst_cf, abs(ft_eval(fn, x) - cf) / (1.0 + abs(cf)))
    gap1 = abs(ft_eval(FtFunctional(1.0, dimension=1), 1.0) - (math.e - 2.0))
    checks["1d closed form 1e-10"] = worst_cf <= 1e-10 and gap1 <= 1e-10

    gap2 = abs(ft_eval(FtFunctional(1.0, dimension=2), 1.0) - 1.0)
    checks["2d t=1 x=1 is 1.0"] = gap2 <= 1e-8

    rng = np.random.default_rng(1005)
    bad_mid = 0
    for i in range(1000):
        fn = FtFunctional(float(rng.uniform(0.2, 2.0)), dimension=1 + i % 2)
        x, y = np.sort(rng.uniform(0.0, 6.0, 2))
        mid = ft_eval(fn, 0.5 * (x + y))
        avg = 0.5 * (ft_eval(fn, float(x)) + ft_eval(fn, float(y)))
        if mid > avg + 1e-12 * (1.0 + abs(avg)):
            bad_mid += 1
    checks["midpoint convexity"] = bad_mid == 0

    dual_slack = -math.inf
    for d in (1, 2):
        for tt in (0.5, 1.0):
            fn = FtFunctional(tt, dimension=d)
            for k in range(-6, 7):
                y = 10.0 ** (k / 2.0)
                dual_slack = max(dual_slack, legendre_dual(fn, y)
                                 - y * (math.log1p(y) / tt) ** d)
    checks["legendre dual"] = dual_slack <= 1e-9

    # synthetic borderline-divergence profile, integrated toward the origin
    # in u = log(1/lambda) coordinates on nested cutoffs
    du = 0.5
    us = np.arange(8.0, 400.0 + du / 2, du)
    xi = us / np.log(us)
    cuts = (50.0, 100.0, 200.0, 400.0)
    tails = {}
    for alpha in (0.5, 1.5):
        fn = FtFunctional(1.0, alpha=alpha)
        vals = np.array([ft_eval(fn, float(x), rel_tol=1e-8) for x in xi])
        vals *= np.exp(-us)
        tails[alpha] = [float(np.trapezoid(vals[us <= c], us[us <= c]))
                        for c in cuts]
    conv = tails[0.5]
    div = tails[1.5]
    checks["alpha <= 1/d converges"] = abs(conv[-1] / conv[0] - 1.0) <= 1e-9
    checks["alpha > 2/d diverges"] = (
        all(b > a for a, b in zip(div, div[1:])) and div[-1] / div[0] > 10.0)

    ok = all(checks.values())
    detail = ", ".join(f"{k}: {'ok' if v else 'FAIL'}" for k, v in checks.items())
    _finish("ft-suite", ok,
            detail + f" (divergent tail grows x{div[-1] / div[0]:.1e})", t0, 10.0)


def test_criterion_06_trace_envelope():
    t0 = time.perf_counter()
    cfg = validate_config({
        "kind": "trace-bound", "master_seed": 1, "dimension": 1, "side": 128,
        "amplitude": 1000.0,
        "epsilon_grid": [2.0 ** -k for k in range(2, 11)],
    })
    p = run_experiment(cfg).payload
    ratio = p["c_fine"] / p["c_coarse"]
    ok = (p["within_rank"] and p["envelope_violations"] == 0
          and 0.5 <= ratio <= 2.0)
    _finish("trace-envelope", ok,
            f"side 128 at energy {p['energy']:.4f}: values within rank "
            f"{p['rank']}: {p['within_rank']}, envelope violations "
            f"{p['envelope_violations']}, c_fine/c_coarse {ratio:.3f}", t0, 120.0)


def test_criterion_07_window_count_scaling():
    t0 = time.perf_counter()
    uni = wegner_experiment(WegnerConfig(
        1, 64, 1.0, cell_indicator(1), uniform(0.0, 1.0),
        realizations=500, master_seed=20260819,
        eps_grid=tuple(2.0 ** -k for k in range(2, 10))))
    uni_ratio = float(np.max(uni.ratios) / np.median(uni.ratios))
    ok_uni = 0.85 <= uni.exponent <= 1.15 and uni_ratio <= 3.0

    can = wegner_experiment(WegnerConfig(
        1, 64, 5.0, cell_indicator(1, 100.0), cantor(16),
        realizations=500, master_seed=20260819, energy=0.08,
        eps_grid=tuple(3.0 ** -k / 2.0 for k in range(1, 7))))
    can_ratio = float(np.max(can.ratios) / np.median(can.ratios))
    ok_can = abs(can.exponent - LOG2_OVER_LOG3) <= 0.15 and can_ratio <= 3.0

    _finish("wegner-scaling", ok_uni and ok_can,
            f"uniform: exponent {uni.exponent:.3f} (want [0.85, 1.15]), "
            f"max/median ratio {uni_ratio:.2f} | cantor: exponent "
            f"{can.exponent:.3f} (want {LOG2_OVER_LOG3:.4f} +- 0.15), "
            f"max/median ratio {can_ratio:.2f}", t0, 600.0)


def test_criterion_08_partial_integration():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1008)
    viol = 0
    for i in range(1000):
        k = i % 5
        if k == 0:
            a = float(rng.uniform(-1.0, 1.0))
            dist = uniform(a, a + float(rng.uniform(0.2, 2.0)))
        elif k == 1:
            dist = bernoulli(float(rng.uniform(0.1, 0.9)))
        elif k == 2:
            m = int(rng.integers(2, 6))
            atoms = np.sort(rng.uniform(0.0, 2.0, m))
            while len(np.unique(atoms)) < m:
                atoms = np.sort(rng.uniform(0.0, 2.0, m))
            w = rng.uniform(0.1, 1.0, m)
            w /= w.sum()
            dist = atomic_mixture([float(x) for x in atoms],
                                  [float(x) for x in w])
        elif k == 3:
            dist = cantor(int(rng.integers(8, 17)))
        else:
            xs = np.sort(rng.uniform(0.0, 1.5, 4))
            while len(np.unique(xs)) < 4:
                xs = np.sort(rng.uniform(0.0, 1.5, 4))
            fs = np.sort(rng.uniform(0.05, 0.95, 2))
            dist = from_cdf_table([float(x) for x in xs],
                                  [0.0, float(fs[0]), float(fs[1]), 1.0])
        a, b = dist.support
        phi = random_monotone_function(rng, a - 0.5, b + 1.0)
        eps = float(rng.uniform(1e-3, 0.5))
        _, _, holds = partial_integration_check(dist, phi, eps)
        if not holds:
            viol += 1
    _finish("partial-integration", viol == 0,
            f"1000 randomized (measure, phi, eps) triples at tolerance 1e-8, "
            f"violations {viol}", t0, 60.0)


def test_criterion_09_weyl_and_semigroup_bounds():
    t0 = time.perf_counter()
    configs = [
        {"kind": "weyl", "master_seed": 1, "dimension": 1, "side": 64,
         "spacing": 0.015625},
        {"kind": "weyl", "master_seed": 1, "dimension": 2, "side": 16,
         "spacing": 0.0625},
    ]
    for seed in (101, 102, 103):
        configs.append({"kind": "weyl", "master_seed": seed, "dimension": 2,
                        "side": 16, "spacing": 0.0625,
                        "mask": {"keep_probability": 0.6}})
    viol = 0
    semi_margin = math.inf
    for raw in configs:
        payload = run_experiment(validate_config(raw)).payload
        for lv in payload["levels"]:
            viol += lv["violations"]
        for s in payload["semigroup"]:
            if not s["all_hold"]:
                viol += 1
            semi_margin = min(semi_margin, s["min_margin"])
    ok = viol == 0 and semi_margin > 0
    _finish("weyl-bounds", ok,
            f"5 configs x 2 refinement levels: eigenvalue-bound violations "
            f"{viol}, min semigroup margin {semi_margin:.3f}", t0, 120.0)


def test_criterion_10_determinism(tmp_path):
    t0 = time.perf_counter()
    configs = [
        {"kind": "singular-decay", "master_seed": 0, "dimension": 1, "side": 24,
         "amplitudes": [1.0, "deletion"]},
        {"kind": "ssf-identities", "master_seed": 3, "dimension": 1, "side": 16,
         "amplitude": 5.0},
        {"kind": "ft-bounds", "master_seed": 0, "dimension": 2, "t": 1.0},
        {"kind": "wegner", "master_seed": 5, "dimension": 1, "side": 12,
         "distribution": {"kind": "uniform", "a": 0.0, "b": 1.0},
         "epsilon_grid": [0.25, 0.125], "realizations": 6},
        {"kind": "ids", "master_seed": 6, "dimension": 1, "sides": [8, 12],
         "distribution": {"kind": "uniform", "a": 0.0, "b": 1.0},
         "realizations": 4,
         "energy_grid": {"lo": 0.0, "hi": 5.0, "count": 21}},
        {"kind": "lemma3", "master_seed": 7,
         "distribution": {"kind": "bernoulli", "p": 0.5},
         "phi": {"kind": "switch", "energy": 0.5, "half_width": 0.1},
         "epsilon": 0.25},
        {"kind": "weyl", "master_seed": 1, "dimension": 1, "side": 24,
         "spacing": 1.0 / 24.0},
        {"kind": "trace-bound", "master_seed": 1, "dimension": 1, "side": 32,
         "amplitude": 50.0, "epsilon_grid": [2.0 ** -k for k in range(2, 7)]},
    ]
    mismatches = []
    for raw in configs:
        kind = raw["kind"]
        out = tmp_path / kind
        path, sha = execute(validate_config(raw), out)
        record = json.loads(path.read_text())
        if record["config"] != raw:
            mismatches.append(f"{kind} (config round trip)")
            continue
        rerun_cfg = validate_config(load_config(str(path)))
        sha_rerun = payload_hash(run_experiment(rerun_cfg, threads=4).payload)
        if sha_rerun != sha:
            mismatches.append(kind)
    ok = not mismatches
    _finish("determinism", ok,
            f"8 kinds rerun from their stored records with --threads 4: "
            f"{'all payload hashes identical' if ok else 'MISMATCH ' + ', '.join(mismatches)}",
            t0, 60.0)
