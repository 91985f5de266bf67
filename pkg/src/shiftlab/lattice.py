"""Finite lattice Schrodinger operators with Dirichlet boundary conditions.

A domain is a finite set of integer-coordinate sites with spacing h.  The
operator is the (2d+1)-point finite-difference Laplacian plus an on-site
potential; sites outside the domain simply do not exist, which encodes the
Dirichlet restriction.  Optional unit-modulus hopping phases implement a
magnetic field via the standard lattice substitution.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_DENSE_CAP = 4096

Site = tuple[int, ...]


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Domain:
    """Finite site set with nearest-neighbor adjacency.

    Sites are tuples of integers, ordered lexicographically; adjacency holds
    index pairs (i, j) with i < j whose coordinates differ by one unit step.
    Stored edges always point from the lexicographically smaller site, so the
    coordinate difference site[j] - site[i] is a positive unit vector.
    """

    dimension: int
    spacing: float
    sites: tuple[Site, ...]
    adjacency: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.dimension not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2, or 3, got {self.dimension}")
        if not (self.spacing > 0):
            raise ValueError("spacing must be positive")
        if not self.sites:
            raise ValueError("domain must contain at least one site")
        seen = set(self.sites)
        if len(seen) != len(self.sites):
            raise ValueError("sites must be distinct")
        for s in self.sites:
            if len(s) != self.dimension:
                raise ValueError(f"site {s} does not have dimension {self.dimension}")
        for i, j in self.adjacency:
            d2 = sum((a - b) ** 2 for a, b in zip(self.sites[i], self.sites[j]))
            if d2 != 1:
                raise ValueError(f"adjacency pair ({i}, {j}) is not at lattice distance 1")

    @property
    def site_count(self) -> int:
        return len(self.sites)

    def volume(self) -> float:
        """Geometric volume: one cell of size h^d per site."""
        return self.site_count * self.spacing**self.dimension

    def index_map(self) -> dict[Site, int]:
        return {s: i for i, s in enumerate(self.sites)}


def _adjacency_from_sites(sites: tuple[Site, ...], dimension: int) -> tuple[tuple[int, int], ...]:
    index = {s: i for i, s in enumerate(sites)}
    edges = []
    for i, s in enumerate(sites):
        for axis in range(dimension):
            nb = tuple(c + (1 if a == axis else 0) for a, c in enumerate(s))
            j = index.get(nb)
            if j is not None:
                edges.append((i, j) if i < j else (j, i))
    return tuple(sorted(edges))


def build_box_domain(dimension: int, side: int, spacing: float) -> Domain:
    """Cubic box of side^d sites at integer coordinates 0..side-1."""
    if dimension not in (1, 2, 3):
        raise ValueError(f"dimension must be 1, 2, or 3, got {dimension}")
    if side < 1:
        raise ValueError("side must be a positive integer")
    sites = tuple(itertools.product(range(side), repeat=dimension))
    return Domain(dimension, spacing, sites, _adjacency_from_sites(sites, dimension))


def build_masked_domain(dimension: int, mask, spacing: float) -> Domain:
    """Domain from an explicit collection of integer sites (any shape, holes allowed)."""
    sites = tuple(sorted(tuple(int(c) for c in s) for s in mask))
    if not sites:
        raise ValueError("mask must contain at least one site")
    return Domain(dimension, spacing, sites, _adjacency_from_sites(sites, dimension))


def delete_sites(domain: Domain, removed) -> tuple[Domain, np.ndarray]:
    """Drop the given sites; returns the subdomain and the kept parent indices."""
    removed = {tuple(int(c) for c in s) for s in removed}
    kept = [i for i, s in enumerate(domain.sites) if s not in removed]
    if not kept:
        raise ValueError("deleting these sites would empty the domain")
    sites = tuple(domain.sites[i] for i in kept)
    sub = Domain(domain.dimension, domain.spacing,
                 sites, _adjacency_from_sites(sites, domain.dimension))
    return sub, np.array(kept, dtype=int)


def refine_domain(domain: Domain) -> tuple[Domain, np.ndarray]:
    """Halve the mesh: each site becomes 2^d children covering the same cell.

    The geometric region and volume() are preserved exactly.  Returns the
    refined domain and, per fine site, the index of its parent coarse site.
    """
    d = domain.dimension
    children = []
    for pi, s in enumerate(domain.sites):
        for delta in itertools.product((0, 1), repeat=d):
            children.append((tuple(2 * c + dd for c, dd in zip(s, delta)), pi))
    children.sort()
    sites = tuple(c for c, _ in children)
    parents = np.array([p for _, p in children], dtype=int)
    fine = Domain(d, domain.spacing / 2.0, sites, _adjacency_from_sites(sites, d))
    return fine, parents


def center_site(domain: Domain) -> Site:
    """Site closest to the coordinate centroid (ties broken lexicographically)."""
    mean = [sum(s[a] for s in domain.sites) / domain.site_count
            for a in range(domain.dimension)]
    return min(domain.sites,
               key=lambda s: (sum((c - m) ** 2 for c, m in zip(s, mean)), s))


@dataclass(frozen=True)
class SingleSitePotential:
    """Compactly supported bump u placed at a lattice cell.

    offsets are integer coordinate tuples relative to the cell; the effective
    value at an offset is amplitude * value.  amplitude = inf is allowed only
    as a marker for the site-deletion limit and never enters arithmetic here.
    """

    offsets: tuple[Site, ...]
    values: tuple[float, ...]
    amplitude: float = 1.0

    def __post_init__(self):
        if len(self.offsets) != len(self.values):
            raise ValueError("offsets and values must have equal length")
        if not self.offsets:
            raise ValueError("support must be nonempty")
        if len(set(self.offsets)) != len(self.offsets):
            raise ValueError("offsets must be distinct")

    @property
    def kappa(self) -> float:
        """Coefficient of the own-cell indicator: amplitude * value at offset 0."""
        zero = tuple(0 for _ in self.offsets[0])
        for off, val in zip(self.offsets, self.values):
            if off == zero:
                return self.amplitude * val
        return 0.0

    def scaled(self, amplitude: float) -> "SingleSitePotential":
        return SingleSitePotential(self.offsets, self.values, amplitude)


def cell_indicator(dimension: int, amplitude: float = 1.0) -> SingleSitePotential:
    """u = amplitude on the cell's own site, zero elsewhere (Anderson choice)."""
    return SingleSitePotential((tuple(0 for _ in range(dimension)),), (1.0,), amplitude)


def alloy_potential(domain: Domain, u: SingleSitePotential, couplings, v_per=0.0) -> np.ndarray:
    """Background plus sum of coupling-weighted copies of u, one per cell.

    Cells are identified with sites (cell k is [k, k+1)^d, whose corner is the
    site k), so the coupling vector is aligned with domain.sites.  Copies that
    would land outside the domain are dropped: absent sites are Dirichlet.
    """
    n = domain.site_count
    om = np.asarray(couplings, dtype=float)
    if om.shape != (n,):
        raise ValueError(f"couplings must have length {n}, got shape {om.shape}")
    if not math.isfinite(u.amplitude):
        raise ValueError("infinite amplitude marks the site-deletion limit; "
                         "it cannot be assembled as a potential")
    pot = np.zeros(n) + np.asarray(v_per, dtype=float)
    if pot.shape != (n,):
        raise ValueError("per-site background must be scalar or match the site count")
    index = domain.index_map()
    for off, val in zip(u.offsets, u.values):
        w = u.amplitude * val
        if w == 0.0:
            continue
        for k, cell in enumerate(domain.sites):
            target = tuple(c + o for c, o in zip(cell, off))
            i = index.get(target)
            if i is not None:
                pot[i] += om[k] * w
    return pot


@dataclass(frozen=True)
class LatticeOperator:
    """Assembled finite-difference operator; the matrix is exactly Hermitian."""

    domain: Domain
    potential: np.ndarray = field(repr=False)
    phases: dict | None = field(repr=False)
    matrix: np.ndarray = field(repr=False)

    @property
    def site_count(self) -> int:
        return self.domain.site_count


def assemble_operator(domain: Domain, potential, phases: dict | None = None) -> LatticeOperator:
    """Dirichlet finite-difference operator: diagonal 2d/h^2 + V, hops -phase/h^2.

    phases, if given, must assign a unit-modulus complex number to every
    adjacency pair (i, j) as stored in the domain; the conjugate entry is
    filled automatically so the matrix is Hermitian by construction.
    """
    n = domain.site_count
    pot = np.zeros(n) + np.asarray(potential, dtype=float)
    if pot.shape != (n,):
        raise ValueError(f"potential must be scalar or length {n}, got shape {pot.shape}")
    if not np.all(np.isfinite(pot)):
        raise ValueError("potential must be finite")
    w = domain.spacing**-2
    if phases is not None:
        missing = [e for e in domain.adjacency if e not in phases]
        if missing:
            raise ValueError(f"phases missing for edges {missing[:3]}")
        for e in domain.adjacency:
            if abs(abs(complex(phases[e])) - 1.0) > 1e-12:
                raise ValueError(f"phase on edge {e} is not unit modulus")
        mat = np.zeros((n, n), dtype=complex)
    else:
        mat = np.zeros((n, n))
    mat[np.arange(n), np.arange(n)] = 2.0 * domain.dimension * w + pot
    for e in domain.adjacency:
        i, j = e
        ph = complex(phases[e]) if phases is not None else 1.0
        mat[i, j] = -w * ph
        mat[j, i] = np.conj(mat[i, j])
    mat.setflags(write=False)
    pot = _frozen(pot)
    return LatticeOperator(domain, pot, dict(phases) if phases else None, mat)


def uniform_field_phases(domain: Domain, field_strength: float) -> dict:
    """Constant magnetic field in two dimensions, flux B*h^2 per plaquette.

    Gauge choice: hops along the second axis from column x pick up
    exp(i B h^2 x); hops along the first axis are phase-free.  Going around
    any unit plaquette multiplies to exp(i B h^2).
    """
    if domain.dimension != 2:
        raise ValueError("a constant field is supported on two-dimensional domains only")
    area = domain.spacing**2
    phases = {}
    for i, j in domain.adjacency:
        diff = tuple(b - a for a, b in zip(domain.sites[i], domain.sites[j]))
        if diff == (0, 1):
            phases[(i, j)] = complex(np.exp(1j * field_strength * area * domain.sites[i][0]))
        else:
            phases[(i, j)] = 1.0 + 0.0j
    return phases
