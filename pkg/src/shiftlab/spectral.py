"""Dense spectral calculus: eigendecomposition, semigroups, counting, fits.

Everything here favors exactness over speed: full dense Hermitian
eigendecompositions (size-capped), semigroups through the spectral theorem,
and compensated summation for traces so reductions are reproducible to the
last bit regardless of how work was scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DenseCapError
from .lattice import DEFAULT_DENSE_CAP, LatticeOperator


@dataclass(frozen=True)
class SpectralData:
    """Eigenvalues ascending; transform columns are the orthonormal eigenvectors."""

    eigenvalues: np.ndarray = field(repr=False)
    transform: np.ndarray = field(repr=False)
    source: LatticeOperator | None = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return len(self.eigenvalues)


def eigen_decompose(operator, dense_cap: int = DEFAULT_DENSE_CAP,
                    verify: bool = True) -> SpectralData:
    """Full Hermitian eigendecomposition of a LatticeOperator or plain matrix.

    Raises DenseCapError beyond the size cap and ValueError for non-Hermitian
    input (an assembly bug signal, not something to silently symmetrize).
    """
    source = operator if isinstance(operator, LatticeOperator) else None
    mat = operator.matrix if source is not None else np.asarray(operator)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {mat.shape}")
    n = mat.shape[0]
    if n > dense_cap:
        raise DenseCapError(f"matrix size {n} exceeds the dense cap {dense_cap}")
    if not np.all(np.isfinite(mat.real)) or (np.iscomplexobj(mat) and not np.all(np.isfinite(mat.imag))):
        raise ValueError("matrix entries must be finite")
    scale = float(np.max(np.abs(mat))) if n else 0.0
    if float(np.max(np.abs(mat - mat.conj().T))) > 1e-12 * (1.0 + scale):
        raise ValueError("matrix is not Hermitian")
    evals, evecs = np.linalg.eigh(mat)
    if verify:
        resid = float(np.max(np.abs(mat @ evecs - evecs * evals)))
        if resid > 1e-10 * (1.0 + float(np.max(np.abs(evals)))):
            raise ArithmeticError(f"eigendecomposition residual {resid:.3e} too large")
        gram = evecs.conj().T @ evecs
        if float(np.max(np.abs(gram - np.eye(n)))) > 1e-10:
            raise ArithmeticError("eigenvector columns are not orthonormal")
    evals.setflags(write=False)
    evecs.setflags(write=False)
    return SpectralData(evals, evecs, source)


def semigroup(spec: SpectralData, t: float) -> np.ndarray:
    """exp(-t H) through the spectral theorem; Hermitian positive definite."""
    if not (t > 0):
        raise ValueError("t must be positive")
    weights = np.exp(-t * spec.eigenvalues)
    mat = (spec.transform * weights) @ spec.transform.conj().T
    return 0.5 * (mat + mat.conj().T)  # strip rounding asymmetry


def singular_values(matrix) -> np.ndarray:
    """Nonincreasing singular values (eigenvalue square roots of M* M)."""
    mat = np.asarray(matrix)
    if mat.ndim != 2:
        raise ValueError("expected a matrix")
    return np.linalg.svd(mat, compute_uv=False)


def counting_function(spec: SpectralData, energy: float) -> int:
    """Number of eigenvalues not greater than energy (right-continuous in E)."""
    return count_not_above(spec.eigenvalues, energy)


def count_not_above(sorted_values: np.ndarray, threshold: float) -> int:
    return int(np.searchsorted(sorted_values, threshold, side="right"))


def trace_function(spec: SpectralData, f) -> float:
    """Sum of f over the spectrum with compensated summation."""
    terms = [float(f(float(lam))) for lam in spec.eigenvalues]
    if not all(math.isfinite(v) for v in terms):
        raise ValueError("f produced a non-finite value on the spectrum")
    return math.fsum(terms)


@dataclass(frozen=True)
class DecayFit:
    """Least-squares fit of log mu_n = log C - c * n^alpha over the kept range."""

    alpha: float
    rate: float
    prefactor: float
    r_squared: float
    n_min: int
    n_max: int
    floor: float
    points: int


def fit_decay(values, alpha: float, floor: float = 1e-12,
              skip_leading: int = 0) -> DecayFit:
    """Fit the stretched-exponential decay rate of a nonincreasing sequence.

    The fit range is every entry above floor; skip_leading can additionally
    drop a prefactor transient.  At least five points are required.
    """
    mu = np.asarray(values, dtype=float)
    if not (alpha > 0):
        raise ValueError("alpha must be positive")
    n = np.arange(1, len(mu) + 1)
    keep = (mu > floor) & (n > skip_leading)
    if int(keep.sum()) < 5:
        raise ValueError(f"too few points above the floor to fit "
                         f"({int(keep.sum())} kept, need at least 5)")
    x = n[keep] ** alpha
    y = np.log(mu[keep])
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    slope = float(np.sum((x - xm) * (y - ym))) / sxx
    intercept = ym - slope * xm
    resid = y - (slope * x + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - ym) ** 2))
    r2 = 1.0 if ss_tot == 0.0 and ss_res < 1e-20 else (0.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot)
    return DecayFit(alpha=alpha, rate=-slope, prefactor=float(np.exp(intercept)),
                    r_squared=r2, n_min=int(n[keep][0]), n_max=int(n[keep][-1]),
                    floor=floor, points=int(keep.sum()))
