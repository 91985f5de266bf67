"""Coupling distributions: sampling streams and the continuity modulus."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shiftlab.disorder import (
    atomic_mixture,
    bernoulli,
    cantor,
    coupling_stream,
    from_cdf_table,
    modulus_of_continuity,
    point_mass,
    sample_couplings,
    uniform,
)


def test_degenerate_bernoulli_sampling():
    out = sample_couplings(bernoulli(1.0), 4, master_seed=0, realization_index=0)
    assert np.array_equal(out, np.ones(4))
    out0 = sample_couplings(bernoulli(0.0), 4, master_seed=0, realization_index=0)
    assert np.array_equal(out0, np.zeros(4))


def test_uniform_sample_mean():
    out = sample_couplings(uniform(0, 1), 10_000, master_seed=42, realization_index=0)
    assert abs(out.mean() - 0.5) < 0.02


def test_stream_replay_and_independence():
    d = uniform(0, 1)
    a = sample_couplings(d, 32, master_seed=9, realization_index=3)
    b = sample_couplings(d, 32, master_seed=9, realization_index=3)
    assert np.array_equal(a, b)
    c = sample_couplings(d, 32, master_seed=9, realization_index=4)
    assert not np.array_equal(a, c)
    e = sample_couplings(d, 32, master_seed=9, realization_index=3, component=1)
    assert not np.array_equal(a, e)


def test_stream_is_counter_based():
    # identical keys give identical generators regardless of call order
    g1 = coupling_stream(5, 17, component=2)
    g2 = coupling_stream(5, 17, component=2)
    assert np.array_equal(g1.random(8), g2.random(8))


def test_modulus_uniform():
    d = uniform(0, 1)
    assert d.modulus_of_continuity(0.1) == pytest.approx(0.2, abs=1e-15)
    assert d.modulus_of_continuity(0.6) == 1.0
    wide = uniform(0, 4)
    assert wide.modulus_of_continuity(0.1) == pytest.approx(0.05, abs=1e-15)


def test_modulus_bernoulli():
    d = bernoulli(0.5)
    assert d.modulus_of_continuity(0.3) == 0.5
    assert d.modulus_of_continuity(0.6) == 1.0
    skew = bernoulli(0.125)
    assert skew.modulus_of_continuity(0.3) == 0.875


def test_modulus_atomic_windows():
    d = atomic_mixture([0.0, 1.0, 2.0], [0.2, 0.3, 0.5])
    assert d.modulus_of_continuity(0.4) == 0.5
    assert d.modulus_of_continuity(0.5) == pytest.approx(0.8, abs=1e-15)
    assert d.modulus_of_continuity(1.0) == 1.0


def test_modulus_cantor_scaling():
    d = cantor(depth=8)
    eps = [3.0 ** -k for k in range(1, 6)]
    s = [d.modulus_of_continuity(e) for e in eps]
    for k, sk in zip(range(1, 6), s):
        assert sk <= 2.0 ** (-k + 1) + 1e-15
    slope = np.polyfit(np.log(eps), np.log(s), 1)[0]
    assert abs(slope - math.log(2) / math.log(3)) < 0.05


def test_modulus_cdf_table():
    flat = from_cdf_table([0.0, 1.0], [0.0, 1.0])
    assert flat.modulus_of_continuity(0.1) == pytest.approx(0.2, abs=1e-12)
    kinked = from_cdf_table([0.0, 0.5, 1.0], [0.0, 0.8, 1.0])
    # the densest piece has slope 1.6, so a width-0.2 window catches 0.32
    assert kinked.modulus_of_continuity(0.1) == pytest.approx(0.32, abs=1e-12)


def test_point_mass_is_a_unit_atom():
    d = point_mass(0.5)
    assert d.support == (0.5, 0.5)
    assert d.modulus_of_continuity(1e-9) == 1.0
    out = sample_couplings(d, 5, master_seed=1, realization_index=0)
    assert np.array_equal(out, np.full(5, 0.5))


def test_cantor_samples_have_even_ternary_digits():
    d = cantor(depth=8)
    out = sample_couplings(d, 200, master_seed=8, realization_index=0)
    assert np.all((out >= 0) & (out <= 1))
    scaled = out * 3.0 ** 8
    assert np.allclose(scaled, np.round(scaled), atol=1e-9)
    for v in np.round(scaled).astype(int):
        while v:
            assert v % 3 in (0, 2)
            v //= 3


def test_cantor_cdf_plateaus():
    d = cantor(depth=8)
    assert d.cdf(1.0 / 3.0) == pytest.approx(0.5, abs=1e-15)
    assert d.cdf(0.5) == pytest.approx(0.5, abs=1e-15)
    assert d.cdf(-0.1) == 0.0
    assert d.cdf(1.0) == 1.0


def test_factory_validation():
    with pytest.raises(ValueError):
        uniform(1.0, 1.0)
    with pytest.raises(ValueError):
        bernoulli(1.5)
    with pytest.raises(ValueError):
        atomic_mixture([0.0, 0.0], [0.5, 0.5])
    with pytest.raises(ValueError):
        atomic_mixture([0.0, 1.0], [0.4, 0.4])
    with pytest.raises(ValueError):
        cantor(depth=0)
    with pytest.raises(ValueError):
        from_cdf_table([0.0, 1.0], [0.2, 1.0])
    with pytest.raises(ValueError):
        uniform(0, 1).modulus_of_continuity(0.0)


_DISTS = (
    uniform(0, 1),
    bernoulli(0.3),
    cantor(depth=6),
    atomic_mixture([0.0, 0.5, 2.0], [0.25, 0.5, 0.25]),
    from_cdf_table([0.0, 0.5, 1.0], [0.0, 0.8, 1.0]),
)


@settings(max_examples=60, deadline=None)
@given(st.floats(min_value=1e-6, max_value=2.0),
       st.floats(min_value=1e-6, max_value=2.0),
       st.integers(min_value=0, max_value=len(_DISTS) - 1))
def test_modulus_monotone_and_bounded(e1, e2, i):
    d = _DISTS[i]
    lo, hi = sorted((e1, e2))
    s_lo = d.modulus_of_continuity(lo)
    s_hi = d.modulus_of_continuity(hi)
    assert 0.0 < s_lo <= s_hi <= 1.0


def test_module_level_modulus_matches_method():
    d = uniform(0, 2)
    assert modulus_of_continuity(d, 0.25) == d.modulus_of_continuity(0.25)
