"""Command line front end.

Exit codes: 0 success, 2 parse error or unknown kind, 3 config validation
error (the message names the offending field), 4 numeric failure (dense-cap
exceeded, eigensolver breakdown, overflow, or a run-time model violation).
"""

from __future__ import annotations

import sys

import click
import numpy as np

from ._version import __version__
from .config import KIND_SUMMARIES, KINDS, load_config, validate_config
from .errors import ConfigParseError, ConfigValidationError, DenseCapError
from .runner import execute

_DESCRIPTIONS = {
    "singular-decay": """\
Assembles a Dirichlet lattice operator H1 on a box and a perturbed H2 that
adds a compactly supported bump on the center cell (amplitudes span orders of
magnitude, with "deletion" for the hard-wall limit).  The singular values of
exp(-t H1) - exp(-t H2) are computed and fitted against the law
log mu_n ~ log C - c n^(1/d); the payload reports the fitted rate, prefactor
and r^2 per amplitude, plus how much the rate moves across amplitudes.  A
second fit with exponent 2/d is reported for comparison without a verdict.""",
    "ssf-identities": """\
Builds the exact integer spectral shift curve of a perturbed pair on a box
and checks two identities: the smoothed trace identity
Tr[rho(H2) - rho(H1)] = -integral rho' xi, with rho a smooth switch ramp, and
the invariance of the curve under strictly monotone reparametrizations
(exp(-x), an affine map, and an odd cubic), which must reproduce the curve
breakpoint for breakpoint.  The curve integral is compared to the trace
difference of the pair.""",
    "ft-bounds": """\
Evaluates the convex window weight F_t(x) = integral_0^x (exp(t y^(1/d)) - 1) dy
by adaptive quadrature, cross-checks closed forms where the exponent admits
one, verifies the Legendre dual G(y) <= y (log(1+y)/t)^d on a log grid, and
tracks the large-x ratio of F against its leading envelope
d x^((d-1)/d) exp(t x^(1/d)), which should approach 1/t.""",
    "wegner": """\
Samples alloy-type random operators H = H0 + sum_k omega_k u(. - k) on a box
and counts eigenvalues in shrinking windows [E - eps, E + eps] across many
coupling draws.  The mean count is compared against the window bound
s(mu, 2 eps) (log 1/eps)^d |domain|, where s is the exact modulus of
continuity of the coupling distribution; the payload reports the normalized
ratios on the whole eps grid and the fitted eps-scaling exponent.""",
    "ids": """\
Estimates the integrated density of states: disorder-averaged eigenvalue
counting per unit volume on a growing sequence of boxes.  Reports the sup
distance between successive volumes and tests the continuity modulus of the
largest-volume curve: increments N(E+d/2) - N(E-d/2) are divided by
s(mu, d) (log 1/d)^d and the trend of that ratio as d shrinks is fitted;
a growing trend flags that the modulus fails to dominate.""",
    "lemma3": """\
Verifies the partial-integration inequality for a (possibly singular)
coupling measure mu with support [a, b]: for any nondecreasing phi,
integral [phi(x + eps) - phi(x)] dmu(x) <= s(mu, eps) [phi(b + eps) - phi(a)],
where s is the exact modulus of continuity.  Atomic measures are summed
exactly over their atom table; continuous parts go through adaptive
quadrature.  phi can be a smooth switch ramp, a clipped linear function, or
a seeded random combination of monotone ramps.""",
    "weyl": """\
Checks the Weyl-type lower bound on low eigenvalues of a Dirichlet lattice
operator, E_n >= (2 pi (1-delta) d / e) (n / |U|)^(2/d) - C, for the lowest
eta fraction of levels, on the given mesh and once more on its half-spacing
refinement (optionally on a random sub-lattice mask).  The same run verifies
the semigroup trace bound Tr exp(-2tH) <= |U| (8 pi t (1-delta))^(-d/2) on a
t-grid inside the mesh window [4 h^2, 1] at both refinement levels.""",
    "trace-bound": """\
Tracks the smoothed spectral-shift trace Tr[rho(H2) - rho(H1)] for switch
ramps rho of shrinking half-width eps at a fixed energy (chosen automatically
as the midpoint of the widest shifted stretch in the middle of the band when
not given).  Values are divided by |log eps|^d; the payload reports the
envelope constant over the grid, its coarse-half and fine-half versions, and
any monotonicity violations of the raw values.""",
}


@click.group()
@click.version_option(version=__version__, prog_name="shiftlab")
def main():
    """Finite-volume laboratory for spectral-shift and eigenvalue-count bounds."""


@main.command()
@click.argument("config_path", type=click.Path())
@click.option("--out-dir", default=".", show_default=True,
              help="Directory receiving the record JSON and TSV tables.")
@click.option("--seed-override", type=int, default=None,
              help="Replace the config's master_seed (recorded under resolved).")
@click.option("--threads", type=int, default=1, show_default=True,
              help="Worker threads for realization loops; results are identical.")
def run(config_path, out_dir, seed_override, threads):
    """Run the experiment described by a JSON config (or a stored record)."""
    if threads < 1:
        click.echo("error in field threads: must be >= 1", err=True)
        sys.exit(3)
    try:
        raw = load_config(config_path)
        cfg = validate_config(raw)
    except ConfigParseError as exc:
        click.echo(f"parse error: {exc}", err=True)
        sys.exit(2)
    except ConfigValidationError as exc:
        click.echo(f"invalid config: {exc}", err=True)
        sys.exit(3)
    try:
        path, sha = execute(cfg, out_dir, seed_override=seed_override,
                            threads=threads)
    except (DenseCapError, ArithmeticError, ValueError,
            np.linalg.LinAlgError) as exc:
        click.echo(f"numeric failure: {exc}", err=True)
        sys.exit(4)
    click.echo(f"record: {path}")
    click.echo(f"payload_sha256: {sha}")


@main.command("list")
def list_kinds():
    """List the available experiment kinds."""
    for kind in KINDS:
        click.echo(f"{kind:16s} {KIND_SUMMARIES[kind]}")


@main.command()
@click.argument("kind")
def describe(kind):
    """Explain what an experiment kind computes and checks."""
    if kind not in KINDS:
        known = ", ".join(KINDS)
        click.echo(f"unknown kind {kind!r}; known kinds: {known}", err=True)
        sys.exit(2)
    click.echo(f"{kind}: {KIND_SUMMARIES[kind]}")
    click.echo()
    click.echo(_DESCRIPTIONS[kind])


if __name__ == "__main__":
    main()
