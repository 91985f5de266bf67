"""Coupling distributions: samplers, CDFs, and an exact modulus of continuity.

The modulus of continuity s(mu, eps) = sup_E mu([E - eps, E + eps]) is the
quantity that controls the averaged eigenvalue-counting estimates, so it is
computed exactly per kind rather than estimated:

  * uniform        -- min(1, 2 eps / (b - a))
  * atomic kinds   -- sliding-window maximum over the atom list
  * cdf table      -- candidate-point supremum of F(E + eps) - F(E - eps)

The depth-limited middle-thirds construction keeps only the first `depth`
ternary digits, which makes the measure purely atomic (2^depth equal atoms)
and therefore exactly computable, while retaining the coarse-scale scaling
of the genuine singular measure down to windows of width about 3^-depth.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

CANTOR_HOLDER_EXPONENT = math.log(2.0) / math.log(3.0)


def coupling_stream(master_seed: int, realization_index: int, component: int = 0) -> np.random.Generator:
    """Counter-based stream keyed by (master_seed, realization, component).

    Philox is a counter-mode generator, so streams for distinct keys are
    statistically independent and a given key always replays identically,
    which is what makes experiment records bit-reproducible.
    """
    if master_seed < 0 or realization_index < 0 or component < 0:
        raise ValueError("stream keys must be nonnegative integers")
    seq = np.random.SeedSequence(entropy=int(master_seed),
                                 spawn_key=(int(realization_index), int(component)))
    return np.random.Generator(np.random.Philox(seed=seq))


def _horner_thirds(bits: np.ndarray) -> np.ndarray:
    # sum_j 2 b_j 3^-j evaluated innermost-first so sampler and atom table
    # produce bit-identical floats for the same digit string
    acc = np.zeros(bits.shape[0])
    for j in range(bits.shape[1] - 1, -1, -1):
        acc = (acc + 2.0 * bits[:, j]) / 3.0
    return acc


@functools.lru_cache(maxsize=8)
def _cantor_atoms(depth: int) -> np.ndarray:
    ks = np.arange(2**depth, dtype=np.uint64)
    bits = np.zeros((len(ks), depth))
    for j in range(depth):
        bits[:, j] = (ks >> np.uint64(depth - 1 - j)) & np.uint64(1)
    atoms = _horner_thirds(bits)
    atoms.setflags(write=False)
    return atoms


@dataclass(frozen=True)
class DisorderDistribution:
    """One coupling law.  Use the module factory functions to construct."""

    kind: str
    a: float
    b: float
    atoms: np.ndarray | None = field(default=None, repr=False)
    weights: np.ndarray | None = field(default=None, repr=False)
    p: float | None = None
    depth: int | None = None
    cdf_x: np.ndarray | None = field(default=None, repr=False)
    cdf_f: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.a > self.b:
            raise ValueError("support endpoints out of order")
        if self.a == self.b and not (self.kind == "atomic" and len(self.atoms) == 1):
            raise ValueError("a < b required except for a single point mass")

    # -- sampling ---------------------------------------------------------

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        if count < 0:
            raise ValueError("count must be nonnegative")
        if self.kind == "uniform":
            return self.a + (self.b - self.a) * rng.random(count)
        if self.kind == "bernoulli":
            return (rng.random(count) < self.p).astype(float)
        if self.kind == "atomic":
            return rng.choice(self.atoms, size=count, p=self.weights)
        if self.kind == "cantor":
            bits = rng.integers(0, 2, size=(count, self.depth)).astype(float)
            return _horner_thirds(bits)
        if self.kind == "cdf-table":
            return np.interp(rng.random(count), self.cdf_f, self.cdf_x)
        raise AssertionError(self.kind)

    # -- cumulative distribution ------------------------------------------

    def cdf(self, x) -> np.ndarray:
        """Right-continuous CDF, vectorized."""
        x = np.asarray(x, dtype=float)
        if self.kind == "uniform":
            return np.clip((x - self.a) / (self.b - self.a), 0.0, 1.0)
        if self.kind == "cdf-table":
            return np.interp(x, self.cdf_x, self.cdf_f, left=0.0, right=1.0)
        atoms, weights = self._atom_table()
        prefix = np.concatenate(([0.0], np.cumsum(weights)))
        return prefix[np.searchsorted(atoms, x, side="right")]

    def _atom_table(self) -> tuple[np.ndarray, np.ndarray]:
        if self.kind == "bernoulli":
            return np.array([0.0, 1.0]), np.array([1.0 - self.p, self.p])
        if self.kind == "atomic":
            return self.atoms, self.weights
        if self.kind == "cantor":
            atoms = _cantor_atoms(self.depth)
            return atoms, np.full(len(atoms), 2.0**-self.depth)
        raise ValueError(f"{self.kind} distribution is not atomic")

    @property
    def is_atomic(self) -> bool:
        return self.kind in ("bernoulli", "atomic", "cantor")

    @property
    def support(self) -> tuple[float, float]:
        """Smallest closed interval carrying all the mass."""
        return self.a, self.b

    # -- modulus of continuity --------------------------------------------

    def modulus_of_continuity(self, eps: float) -> float:
        """Exact sup over E of the mass of the closed window [E - eps, E + eps]."""
        if not (eps > 0):
            raise ValueError("eps must be positive")
        if self.kind == "uniform":
            return min(1.0, 2.0 * eps / (self.b - self.a))
        if self.kind == "cdf-table":
            # mass of a sliding window is piecewise linear in its center with
            # breakpoints where an endpoint crosses a knot, so knot +- eps
            # candidates realize the supremum exactly
            centers = np.concatenate((self.cdf_x - eps, self.cdf_x + eps))
            mass = (np.interp(centers + eps, self.cdf_x, self.cdf_f, left=0.0, right=1.0)
                    - np.interp(centers - eps, self.cdf_x, self.cdf_f, left=0.0, right=1.0))
            return float(np.max(mass))
        atoms, weights = self._atom_table()
        # optimum window starts at an atom; closed window includes both ends
        prefix = np.concatenate(([0.0], np.cumsum(weights)))
        hi = np.searchsorted(atoms, atoms + 2.0 * eps, side="right")
        lo = np.arange(len(atoms))
        return float(np.max(prefix[hi] - prefix[lo]))


def modulus_of_continuity(dist: DisorderDistribution, eps: float) -> float:
    return dist.modulus_of_continuity(eps)


# -- factories -------------------------------------------------------------


def uniform(a: float = 0.0, b: float = 1.0) -> DisorderDistribution:
    if not (b > a):
        raise ValueError("uniform needs a < b")
    return DisorderDistribution("uniform", float(a), float(b))


def bernoulli(p: float = 0.5) -> DisorderDistribution:
    """Atoms at 0 and 1 with P(1) = p."""
    if not (0.0 <= p <= 1.0):
        raise ValueError("p must lie in [0, 1]")
    return DisorderDistribution("bernoulli", 0.0, 1.0, p=float(p))


def atomic_mixture(atoms, weights) -> DisorderDistribution:
    order = np.argsort(np.asarray(atoms, dtype=float), kind="stable")
    at = np.asarray(atoms, dtype=float)[order]
    wt = np.asarray(weights, dtype=float)[order]
    if len(at) == 0 or len(at) != len(wt):
        raise ValueError("atoms and weights must be nonempty and of equal length")
    if len(np.unique(at)) != len(at):
        raise ValueError("atoms must be distinct")
    if np.any(wt < 0) or abs(float(np.sum(wt)) - 1.0) > 1e-12:
        raise ValueError("weights must be nonnegative and sum to 1")
    at.setflags(write=False)
    wt.setflags(write=False)
    return DisorderDistribution("atomic", float(at[0]), float(at[-1]), atoms=at, weights=wt)


def point_mass(x: float) -> DisorderDistribution:
    return atomic_mixture([x], [1.0])


def cantor(depth: int = 16) -> DisorderDistribution:
    """Depth-limited middle-thirds measure; scaling exponent log 2 / log 3."""
    if not (1 <= depth <= 24):
        raise ValueError("depth must be between 1 and 24")
    return DisorderDistribution("cantor", 0.0, 1.0, depth=int(depth))


def from_cdf_table(xs, fs) -> DisorderDistribution:
    """Piecewise-linear CDF through the given knots (F(x0) = 0, F(x-1) = 1)."""
    xs = np.asarray(xs, dtype=float)
    fs = np.asarray(fs, dtype=float)
    if xs.ndim != 1 or xs.shape != fs.shape or len(xs) < 2:
        raise ValueError("table needs matching x and F arrays with at least two knots")
    if np.any(np.diff(xs) <= 0):
        raise ValueError("table x values must be strictly increasing")
    if np.any(np.diff(fs) < 0) or abs(fs[0]) > 1e-12 or abs(fs[-1] - 1.0) > 1e-12:
        raise ValueError("table F values must be nondecreasing from 0 to 1")
    xs.setflags(write=False)
    fs.setflags(write=False)
    return DisorderDistribution("cdf-table", float(xs[0]), float(xs[-1]),
                                cdf_x=xs, cdf_f=fs)


def sample_couplings(dist: DisorderDistribution, count: int,
                     master_seed: int, realization_index: int,
                     component: int = 0) -> np.ndarray:
    """One coupling vector from the keyed stream; replays exactly per key."""
    rng = coupling_stream(master_seed, realization_index, component)
    return dist.sample(rng, count)
