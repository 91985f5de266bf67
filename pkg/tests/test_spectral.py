"""Dense spectral calculus: decompositions, semigroups, counting, decay fits."""

import math

import numpy as np
import pytest

from shiftlab.errors import DenseCapError
from shiftlab.lattice import assemble_operator, build_box_domain, cell_indicator, alloy_potential
from shiftlab.spectral import (
    count_not_above,
    counting_function,
    eigen_decompose,
    fit_decay,
    semigroup,
    singular_values,
    trace_function,
)


def _path_spectrum(n: int, h: float = 1.0) -> np.ndarray:
    k = np.arange(1, n + 1)
    return 4.0 * np.sin(k * np.pi / (2 * (n + 1))) ** 2 / h**2


def test_decompose_sorts_eigenvalues():
    spec = eigen_decompose(np.diag([3.0, 1.0, 2.0]))
    assert np.array_equal(spec.eigenvalues, [1.0, 2.0, 3.0])


def test_decompose_invariants_on_random_operator():
    rng = np.random.default_rng(5)
    a = rng.normal(size=(40, 40))
    mat = 0.5 * (a + a.T)
    spec = eigen_decompose(mat)
    recon = (spec.transform * spec.eigenvalues) @ spec.transform.conj().T
    scale = 1.0 + float(np.max(np.abs(spec.eigenvalues)))
    assert np.max(np.abs(mat - recon)) <= 1e-10 * scale
    gram = spec.transform.conj().T @ spec.transform
    assert np.max(np.abs(gram - np.eye(40))) <= 1e-10
    assert np.all(np.diff(spec.eigenvalues) >= 0)


def test_decompose_keeps_operator_reference():
    dom = build_box_domain(1, 4, 1.0)
    op = assemble_operator(dom, 0.0)
    spec = eigen_decompose(op)
    assert spec.source is op
    assert np.allclose(spec.eigenvalues, _path_spectrum(4), atol=1e-12, rtol=0)


def test_square_box_spectrum_is_a_tensor_sum():
    dom = build_box_domain(2, 3, 1.0)
    spec = eigen_decompose(assemble_operator(dom, 0.0))
    one_d = _path_spectrum(3)
    expect = np.sort((one_d[:, None] + one_d[None, :]).ravel())
    assert np.allclose(spec.eigenvalues, expect, atol=1e-10, rtol=0)


def test_decompose_rejects_bad_input():
    with pytest.raises(ValueError):
        eigen_decompose(np.ones((2, 3)))
    with pytest.raises(ValueError):
        eigen_decompose(np.array([[0.0, 1.0], [0.0, 0.0]]))  # not Hermitian
    with pytest.raises(DenseCapError):
        eigen_decompose(np.eye(16), dense_cap=8)


def test_semigroup_closed_forms():
    spec = eigen_decompose(np.diag([0.0]))
    assert np.allclose(semigroup(spec, 1.0), [[1.0]], atol=1e-15, rtol=0)
    spec2 = eigen_decompose(np.diag([math.log(2), math.log(4)]))
    sg = semigroup(spec2, 1.0)
    assert np.allclose(sg, np.diag([0.5, 0.25]), atol=1e-14, rtol=0)
    with pytest.raises(ValueError):
        semigroup(spec2, 0.0)


def test_semigroup_trace_matches_eigenvalue_sum():
    rng = np.random.default_rng(12)
    a = rng.normal(size=(25, 25))
    spec = eigen_decompose(0.5 * (a + a.T))
    for t in (0.1, 1.0, 3.0):
        tr = float(np.trace(semigroup(spec, t)))
        expect = math.fsum(math.exp(-t * x) for x in spec.eigenvalues)
        assert abs(tr - expect) <= 1e-12 * abs(expect)


def test_singular_values_basics():
    assert np.array_equal(singular_values(np.zeros((3, 3))), np.zeros(3))
    sv = singular_values(np.diag([-3.0, 2.0]))
    assert np.allclose(sv, [3.0, 2.0], atol=1e-12, rtol=0)
    rng = np.random.default_rng(2)
    sv2 = singular_values(rng.normal(size=(10, 10)))
    assert np.all(np.diff(sv2) <= 0)
    assert np.all(sv2 >= 0)


def test_identical_semigroups_difference_vanishes():
    dom = build_box_domain(1, 6, 1.0)
    spec = eigen_decompose(assemble_operator(dom, 0.0))
    diff = semigroup(spec, 1.0) - semigroup(spec, 1.0)
    assert np.max(singular_values(diff)) == 0.0


def test_counting_function_conventions():
    spec = eigen_decompose(np.diag([1.0, 2.0, 3.0]))
    assert counting_function(spec, 2.0) == 2
    assert counting_function(spec, 0.5) == 0
    assert counting_function(spec, 3.0) == 3
    triple = eigen_decompose(np.diag([2.0, 2.0, 2.0]))
    assert counting_function(triple, 2.0) == 3
    assert count_not_above(np.array([1.0, 2.0, 3.0]), 2.5) == 2


def test_trace_function_values():
    spec = eigen_decompose(np.diag([0.0, math.log(2)]))
    assert trace_function(spec, lambda x: 1.0) == 2.0
    window = lambda x: 1.0 if 0.5 <= x <= 1.0 else 0.0
    assert trace_function(spec, window) == 1.0
    assert trace_function(spec, lambda x: math.exp(-x)) == pytest.approx(1.5, abs=1e-15)
    with pytest.raises(ValueError):
        trace_function(spec, lambda x: math.inf)


def test_fit_decay_exact_exponential():
    n = np.arange(1, 40)
    fit = fit_decay(np.exp(-2.0 * n), alpha=1.0, floor=1e-300)
    assert abs(fit.rate - 2.0) <= 1e-10
    assert abs(fit.prefactor - 1.0) <= 1e-10
    assert abs(fit.r_squared - 1.0) <= 1e-10


def test_fit_decay_stretched_exponential():
    n = np.arange(1, 60)
    fit = fit_decay(np.exp(-np.sqrt(n)), alpha=0.5, floor=1e-300)
    assert abs(fit.rate - 1.0) <= 1e-10
    assert abs(fit.r_squared - 1.0) <= 1e-10


def test_fit_decay_floor_and_minimum_points():
    vals = np.exp(-2.0 * np.arange(1, 40))
    fit = fit_decay(vals, alpha=1.0, floor=1e-12)
    assert fit.points == int(np.sum(vals > 1e-12))
    assert fit.n_max == fit.points
    with pytest.raises(ValueError):
        fit_decay(np.array([1.0, 0.5, 0.1, 0.0, 0.0, 0.0]), alpha=1.0, floor=1e-12)


def test_semigroup_difference_decays_for_rank_one_bump():
    dom = build_box_domain(1, 64, 1.0)
    base = assemble_operator(dom, 0.0)
    bumped = assemble_operator(
        dom, alloy_potential(dom, cell_indicator(1, 5.0),
                             np.eye(64)[32]))
    sv = singular_values(semigroup(eigen_decompose(base), 1.0)
                         - semigroup(eigen_decompose(bumped), 1.0))
    fit = fit_decay(sv, alpha=1.0, floor=1e-12)
    assert fit.rate > 0
    assert fit.r_squared >= 0.9
