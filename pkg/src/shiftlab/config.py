"""Experiment configuration: JSON parsing and per-kind validation.

A config file is a single JSON object.  Every config carries a ``kind``
naming the experiment and a ``master_seed`` feeding the counter-based
coupling streams.  Validation is strict: unknown fields are rejected so
typos surface as errors naming the field instead of silently falling
back to defaults.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

from .disorder import (
    DisorderDistribution,
    atomic_mixture,
    bernoulli,
    cantor,
    from_cdf_table,
    uniform,
)
from .errors import ConfigParseError, ConfigValidationError
from .lattice import SingleSitePotential, cell_indicator

KINDS = (
    "singular-decay",
    "ssf-identities",
    "ft-bounds",
    "wegner",
    "ids",
    "lemma3",
    "weyl",
    "trace-bound",
)

# One-line summaries keyed by kind, shared by ``list`` and ``describe``.
KIND_SUMMARIES = {
    "singular-decay": "fit the stretched-exponential decay rate of heat-semigroup singular values",
    "ssf-identities": "check the trace identity and exact invariance of the spectral shift curve",
    "ft-bounds": "evaluate the integrated exponential weight, its closed forms and Legendre dual bound",
    "wegner": "estimate mean eigenvalue counts in shrinking windows against the modulus bound",
    "ids": "build integrated density of states curves and test their Holder-type modulus",
    "lemma3": "verify the partial-integration bound for monotone functions against singular measures",
    "weyl": "check the Weyl-type eigenvalue lower bound and the semigroup trace bound on meshes",
    "trace-bound": "track smoothed spectral-shift traces across window widths and their log-power envelope",
}


@dataclass
class ExperimentConfig:
    """Validated config: the verbatim raw dict plus normalized parameters."""

    kind: str
    raw: dict
    params: dict[str, Any] = field(default_factory=dict)

    def snapshot(self) -> dict:
        # Deep copy through JSON so the stored record cannot alias
        # mutable state inside the runner.
        return json.loads(json.dumps(self.raw))


def parse_config(text: str) -> dict:
    """Parse raw JSON text into a dict, mapping failures to ConfigParseError."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigParseError("config must be a JSON object at top level")
    if "payload_sha256" in data and isinstance(data.get("config"), dict):
        # a stored record doubles as a config: rerun what it ran
        data = data["config"]
    kind = data.get("kind")
    if kind is None:
        raise ConfigParseError("missing field: kind")
    if kind not in KINDS:
        known = ", ".join(KINDS)
        raise ConfigParseError(f"unknown kind {kind!r}; known kinds: {known}")
    return data


def load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigParseError(f"cannot read config file: {exc}") from exc
    return parse_config(text)


# -- field helpers -----------------------------------------------------------


def _fail(name: str, message: str):
    raise ConfigValidationError(name, message)


def _require(raw: dict, name: str):
    if name not in raw:
        _fail(name, "required field is missing")
    return raw[name]


def _as_int(value, name: str, lo=None, hi=None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(name, f"expected an integer, got {value!r}")
    if lo is not None and value < lo:
        _fail(name, f"must be >= {lo}, got {value}")
    if hi is not None and value > hi:
        _fail(name, f"must be <= {hi}, got {value}")
    return value


def _as_number(value, name: str, lo=None, hi=None, strict_lo=False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(name, f"expected a number, got {value!r}")
    x = float(value)
    if not math.isfinite(x):
        _fail(name, "must be finite")
    if lo is not None:
        if strict_lo and x <= lo:
            _fail(name, f"must be > {lo}, got {x}")
        if not strict_lo and x < lo:
            _fail(name, f"must be >= {lo}, got {x}")
    if hi is not None and x > hi:
        _fail(name, f"must be <= {hi}, got {x}")
    return x


def _as_number_list(value, name: str, lo=None, hi=None, strict_lo=False) -> list[float]:
    if not isinstance(value, list) or not value:
        _fail(name, "expected a non-empty list of numbers")
    return [
        _as_number(v, f"{name}[{i}]", lo=lo, hi=hi, strict_lo=strict_lo)
        for i, v in enumerate(value)
    ]


def _check_fields(raw: dict, allowed: set[str]):
    for key in raw:
        if key not in allowed:
            _fail(key, "unknown field for this kind")


def _eps_grid(raw: dict, name: str = "epsilon_grid", default=None) -> list[float]:
    if name not in raw:
        if default is not None:
            return list(default)
        _fail(name, "required field is missing")
    value = raw[name]
    if not isinstance(value, list) or not value:
        _fail(name, "expected a non-empty list of window half-widths")
    out = []
    for i, v in enumerate(value):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            _fail(name, f"entry {i} is not a number: {v!r}")
        x = float(v)
        if not (0.0 < x <= 0.5):
            _fail(name, f"entries must lie in (0, 1/2]; entry {i} is {x}")
        out.append(x)
    return out


# -- sub-blocks --------------------------------------------------------------


def build_distribution(block, name: str = "distribution") -> DisorderDistribution:
    """Turn a JSON block into a coupling distribution.

    Shapes:
      {"kind": "uniform", "a": 0, "b": 1}
      {"kind": "bernoulli", "p": 0.5}               # atoms at 0 and 1
      {"kind": "atomic", "atoms": [...], "weights": [...]}
      {"kind": "cantor", "depth": 16}
      {"kind": "cdf-table", "xs": [...], "fs": [...]}
    """
    if not isinstance(block, dict):
        _fail(name, "expected an object describing the coupling distribution")
    dkind = block.get("kind")
    if dkind == "uniform":
        _check_fields(block, {"kind", "a", "b"})
        a = _as_number(block.get("a", 0.0), f"{name}.a")
        b = _as_number(block.get("b", 1.0), f"{name}.b")
        if not b > a:
            _fail(f"{name}.b", f"must exceed a = {a}")
        return uniform(a, b)
    if dkind == "bernoulli":
        _check_fields(block, {"kind", "p"})
        p = _as_number(block.get("p", 0.5), f"{name}.p")
        if not (0.0 < p < 1.0):
            _fail(f"{name}.p", f"must lie in (0, 1), got {p}")
        return bernoulli(p)
    if dkind == "atomic":
        _check_fields(block, {"kind", "atoms", "weights"})
        atoms = _as_number_list(_require(block, "atoms"), f"{name}.atoms")
        weights = _as_number_list(_require(block, "weights"), f"{name}.weights", lo=0.0)
        if len(atoms) != len(weights):
            _fail(f"{name}.weights", "must match atoms in length")
        total = sum(weights)
        if total <= 0:
            _fail(f"{name}.weights", "must have positive total mass")
        try:
            return atomic_mixture(atoms, [w / total for w in weights])
        except ValueError as exc:
            _fail(f"{name}.atoms", str(exc))
    if dkind == "cantor":
        _check_fields(block, {"kind", "depth"})
        depth = _as_int(block.get("depth", 16), f"{name}.depth", lo=1, hi=24)
        return cantor(depth)
    if dkind == "cdf-table":
        _check_fields(block, {"kind", "xs", "fs"})
        xs = _as_number_list(_require(block, "xs"), f"{name}.xs")
        fs = _as_number_list(_require(block, "fs"), f"{name}.fs")
        if len(xs) != len(fs) or len(xs) < 2:
            _fail(f"{name}.xs", "xs and fs must have equal length >= 2")
        try:
            return from_cdf_table(xs, fs)
        except ValueError as exc:
            _fail(f"{name}.xs", str(exc))
    _fail(f"{name}.kind", f"unknown distribution kind {dkind!r}")


def build_single_site(block, dimension: int, name: str = "u") -> SingleSitePotential:
    """Single-site profile block: {"amplitude": a} or an explicit profile.

    The explicit form lists [offset, value] pairs:
      {"amplitude": 1.0, "profile": [[[0, 0], 1.0], [[1, 0], 0.5]]}
    Without a profile the bump covers one cell.
    """
    if block is None:
        return cell_indicator(dimension, 1.0)
    if not isinstance(block, dict):
        _fail(name, "expected an object with an amplitude and optional profile")
    _check_fields(block, {"amplitude", "profile"})
    amp = _as_number(block.get("amplitude", 1.0), f"{name}.amplitude", lo=0.0, strict_lo=True)
    if "profile" not in block:
        return cell_indicator(dimension, amp)
    prof = block["profile"]
    if not isinstance(prof, list) or not prof:
        _fail(f"{name}.profile", "expected a non-empty list of [offset, value] pairs")
    offsets = []
    values = []
    for i, pair in enumerate(prof):
        if not (isinstance(pair, list) and len(pair) == 2):
            _fail(f"{name}.profile", f"entry {i} is not an [offset, value] pair")
        off, val = pair
        if not (isinstance(off, list) and len(off) == dimension):
            _fail(f"{name}.profile", f"entry {i}: offset must have {dimension} coordinates")
        offsets.append([_as_int(o, f"{name}.profile[{i}]", lo=0) for o in off])
        values.append(_as_number(val, f"{name}.profile[{i}]", lo=0.0))
    if max(values) <= 0:
        _fail(f"{name}.profile", "profile must have a positive entry")
    return SingleSitePotential(
        offsets=tuple(tuple(o) for o in offsets),
        values=tuple(values),
        amplitude=amp,
    )


def _energy_field(raw: dict, name: str = "energy"):
    """A number, or "auto"/null/absent meaning: resolve at run time."""
    if name not in raw or raw[name] is None:
        return None
    value = raw[name]
    if value == "auto":
        return None
    return _as_number(value, name)


# -- per-kind validation -----------------------------------------------------


def _common(raw: dict) -> dict:
    seed = _as_int(_require(raw, "master_seed"), "master_seed", lo=0)
    return {"master_seed": seed}


def _validate_singular_decay(raw: dict) -> dict:
    _check_fields(
        raw,
        {"kind", "master_seed", "dimension", "side", "spacing", "amplitudes",
         "t", "v_per", "floor", "skip_leading", "u"},
    )
    p = _common(raw)
    p["dimension"] = _as_int(_require(raw, "dimension"), "dimension", lo=1, hi=3)
    p["side"] = _as_int(_require(raw, "side"), "side", lo=2)
    p["spacing"] = _as_number(raw.get("spacing", 1.0), "spacing", lo=0.0, strict_lo=True)
    amps_raw = _require(raw, "amplitudes")
    if not isinstance(amps_raw, list) or not amps_raw:
        _fail("amplitudes", "expected a non-empty list of positive numbers or \"deletion\"")
    amps = []
    for i, a in enumerate(amps_raw):
        if a == "deletion":
            amps.append(math.inf)
        else:
            amps.append(_as_number(a, f"amplitudes[{i}]", lo=0.0, strict_lo=True))
    p["amplitudes"] = amps
    p["t"] = _as_number(raw.get("t", 1.0), "t", lo=0.0, strict_lo=True)
    p["v_per"] = _as_number(raw.get("v_per", 0.0), "v_per", lo=0.0)
    p["floor"] = _as_number(raw.get("floor", 1e-12), "floor", lo=0.0, strict_lo=True)
    p["skip_leading"] = _as_int(raw.get("skip_leading", 0), "skip_leading", lo=0)
    p["u"] = build_single_site(raw.get("u"), p["dimension"])
    return p


def _validate_ssf_identities(raw: dict) -> dict:
    _check_fields(
        raw,
        {"kind", "master_seed", "dimension", "side", "spacing", "amplitude",
         "v_per", "energy", "half_width", "u"},
    )
    p = _common(raw)
    p["dimension"] = _as_int(_require(raw, "dimension"), "dimension", lo=1, hi=3)
    p["side"] = _as_int(_require(raw, "side"), "side", lo=2)
    p["spacing"] = _as_number(raw.get("spacing", 1.0), "spacing", lo=0.0, strict_lo=True)
    p["amplitude"] = _as_number(raw.get("amplitude", 1.0), "amplitude", lo=0.0, strict_lo=True)
    p["v_per"] = _as_number(raw.get("v_per", 0.0), "v_per", lo=0.0)
    p["energy"] = _energy_field(raw)
    p["half_width"] = _as_number(raw.get("half_width", 0.05), "half_width",
                                 lo=0.0, hi=0.5, strict_lo=True)
    p["u"] = build_single_site(raw.get("u"), p["dimension"])
    return p


def _validate_ft_bounds(raw: dict) -> dict:
    _check_fields(
        raw,
        {"kind", "master_seed", "dimension", "t", "alpha", "x_grid", "y_grid"},
    )
    p = _common(raw)
    p["dimension"] = _as_int(_require(raw, "dimension"), "dimension", lo=1, hi=3)
    p["t"] = _as_number(_require(raw, "t"), "t", lo=0.0, strict_lo=True)
    if "alpha" in raw and raw["alpha"] is not None:
        p["alpha"] = _as_number(raw["alpha"], "alpha", lo=0.0, strict_lo=True)
        if p["alpha"] > 1.0:
            _fail("alpha", "exponents above 1 are outside the modeled range")
    else:
        p["alpha"] = None
    p["x_grid"] = _as_number_list(raw.get("x_grid", [0.5, 1.0, 2.0, 5.0, 10.0]),
                                  "x_grid", lo=0.0)
    p["y_grid"] = _as_number_list(
        raw.get("y_grid", [10.0 ** (k / 2.0) for k in range(-6, 7)]),
        "y_grid", lo=0.0, strict_lo=True)
    return p


def _validate_wegner(raw: dict) -> dict:
    _check_fields(
        raw,
        {"kind", "master_seed", "dimension", "side", "spacing", "u",
         "distribution", "epsilon_grid", "realizations", "v_per", "energy"},
    )
    p = _common(raw)
    p["dimension"] = _as_int(_require(raw, "dimension"), "dimension", lo=1, hi=3)
    p["side"] = _as_int(_require(raw, "side"), "side", lo=2)
    p["spacing"] = _as_number(raw.get("spacing", 1.0), "spacing", lo=0.0, strict_lo=True)
    p["u"] = build_single_site(raw.get("u"), p["dimension"])
    p["distribution"] = build_distribution(_require(raw, "distribution"))
    p["epsilon_grid"] = _eps_grid(raw)
    p["realizations"] = _as_int(_require(raw, "realizations"), "realizations", lo=1)
    p["v_per"] = _as_number(raw.get("v_per", 0.0), "v_per", lo=0.0)
    p["energy"] = _energy_field(raw)
    return p


def _validate_ids(raw: dict) -> dict:
    _check_fields(
        raw,
        {"kind", "master_seed", "dimension", "sides", "spacing", "u",
         "distribution", "realizations", "v_per", "energy_grid", "holder_deltas"},
    )
    p = _common(raw)
    p["dimension"] = _as_int(_require(raw, "dimension"), "dimension", lo=1, hi=3)
    sides_raw = _require(raw, "sides")
    if not isinstance(sides_raw, list) or not sides_raw:
        _fail("sides", "expected a non-empty list of box sides")
    p["sides"] = [_as_int(s, f"sides[{i}]", lo=2) for i, s in enumerate(sides_raw)]
    p["spacing"] = _as_number(raw.get("spacing", 1.0), "spacing", lo=0.0, strict_lo=True)
    p["u"] = build_single_site(raw.get("u"), p["dimension"])
    p["distribution"] = build_distribution(_require(raw, "distribution"))
    p["realizations"] = _as_int(_require(raw, "realizations"), "realizations", lo=1)
    p["v_per"] = _as_number(raw.get("v_per", 0.0), "v_per", lo=0.0)
    grid = _require(raw, "energy_grid")
    if not isinstance(grid, dict):
        _fail("energy_grid", "expected an object with lo, hi, count")
    _check_fields(grid, {"lo", "hi", "count"})
    lo = _as_number(_require(grid, "lo"), "energy_grid.lo")
    hi = _as_number(_require(grid, "hi"), "energy_grid.hi")
    if not hi > lo:
        _fail("energy_grid.hi", f"must exceed lo = {lo}")
    count = _as_int(_require(grid, "count"), "energy_grid.count", lo=2)
    p["energy_grid"] = (lo, hi, count)
    if "holder_deltas" in raw:
        p["holder_deltas"] = _eps_grid(raw, name="holder_deltas")
    else:
        p["holder_deltas"] = [2.0 ** (-k) for k in range(1, 7)]
    return p


def _validate_lemma3(raw: dict) -> dict:
    _check_fields(
        raw,
        {"kind", "master_seed", "distribution", "phi", "epsilon", "tolerance"},
    )
    p = _common(raw)
    p["distribution"] = build_distribution(_require(raw, "distribution"))
    p["epsilon"] = _as_number(_require(raw, "epsilon"), "epsilon",
                              lo=0.0, strict_lo=True)
    p["tolerance"] = _as_number(raw.get("tolerance", 1e-8), "tolerance",
                                lo=0.0, strict_lo=True)
    phi = _require(raw, "phi")
    if not isinstance(phi, dict):
        _fail("phi", "expected an object describing the monotone test function")
    fkind = phi.get("kind")
    if fkind == "switch":
        _check_fields(phi, {"kind", "energy", "half_width"})
        p["phi"] = {
            "kind": "switch",
            "energy": _as_number(_require(phi, "energy"), "phi.energy"),
            "half_width": _as_number(_require(phi, "half_width"), "phi.half_width",
                                     lo=0.0, hi=0.5, strict_lo=True),
        }
    elif fkind == "clipped-linear":
        _check_fields(phi, {"kind", "lo", "hi"})
        lo = _as_number(_require(phi, "lo"), "phi.lo")
        hi = _as_number(_require(phi, "hi"), "phi.hi")
        if not hi > lo:
            _fail("phi.hi", f"must exceed lo = {lo}")
        p["phi"] = {"kind": "clipped-linear", "lo": lo, "hi": hi}
    elif fkind == "random-combination":
        _check_fields(phi, {"kind"})
        p["phi"] = {"kind": "random-combination"}
    else:
        _fail("phi.kind", f"unknown test-function kind {fkind!r}")
    return p


def _validate_weyl(raw: dict) -> dict:
    _check_fields(
        raw,
        {"kind", "master_seed", "dimension", "side", "spacing", "eta",
         "potential", "mask", "t_grid"},
    )
    p = _common(raw)
    p["dimension"] = _as_int(_require(raw, "dimension"), "dimension", lo=1, hi=3)
    p["side"] = _as_int(_require(raw, "side"), "side", lo=2)
    p["spacing"] = _as_number(_require(raw, "spacing"), "spacing",
                              lo=0.0, strict_lo=True)
    p["eta"] = _as_number(raw.get("eta", 0.1), "eta", lo=0.0, hi=0.25, strict_lo=True)
    p["potential"] = _as_number(raw.get("potential", 0.0), "potential")
    if "mask" in raw and raw["mask"] is not None:
        mask = raw["mask"]
        if not isinstance(mask, dict):
            _fail("mask", "expected an object with keep_probability")
        _check_fields(mask, {"keep_probability"})
        kp = _as_number(_require(mask, "keep_probability"), "mask.keep_probability")
        if not (0.0 < kp < 1.0):
            _fail("mask.keep_probability", f"must lie in (0, 1), got {kp}")
        p["mask"] = kp
    else:
        p["mask"] = None
    if "t_grid" in raw and raw["t_grid"] is not None:
        p["t_grid"] = _as_number_list(raw["t_grid"], "t_grid", lo=0.0, strict_lo=True)
    else:
        p["t_grid"] = None  # resolved at run time from the mesh window
    return p


def _validate_trace_bound(raw: dict) -> dict:
    _check_fields(
        raw,
        {"kind", "master_seed", "dimension", "side", "spacing", "amplitude",
         "v_per", "energy", "epsilon_grid", "u"},
    )
    p = _common(raw)
    p["dimension"] = _as_int(_require(raw, "dimension"), "dimension", lo=1, hi=3)
    p["side"] = _as_int(_require(raw, "side"), "side", lo=2)
    p["spacing"] = _as_number(raw.get("spacing", 1.0), "spacing", lo=0.0, strict_lo=True)
    p["amplitude"] = _as_number(_require(raw, "amplitude"), "amplitude",
                                lo=0.0, strict_lo=True)
    p["v_per"] = _as_number(raw.get("v_per", 0.0), "v_per", lo=0.0)
    p["energy"] = _energy_field(raw)
    p["epsilon_grid"] = _eps_grid(
        raw, default=[2.0 ** (-k) for k in range(2, 11)])
    p["u"] = build_single_site(raw.get("u"), p["dimension"])
    return p


_VALIDATORS = {
    "singular-decay": _validate_singular_decay,
    "ssf-identities": _validate_ssf_identities,
    "ft-bounds": _validate_ft_bounds,
    "wegner": _validate_wegner,
    "ids": _validate_ids,
    "lemma3": _validate_lemma3,
    "weyl": _validate_weyl,
    "trace-bound": _validate_trace_bound,
}


def validate_config(raw: dict) -> ExperimentConfig:
    """Validate a parsed config dict and normalize its parameters."""
    kind = raw.get("kind")
    if kind not in _VALIDATORS:
        raise ConfigParseError(f"unknown kind {kind!r}")
    params = _VALIDATORS[kind](raw)
    return ExperimentConfig(kind=kind, raw=raw, params=params)
