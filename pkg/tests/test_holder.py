import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from polydbar.errors import InvalidArgument
from polydbar.field import ScalarFunction, constant
from polydbar.holder import ALPHA_CAP, PolydiscSampler, estimate_exponent, holder_seminorm


def branch(alpha):
    return ScalarFunction(lambda z: np.power(1 - z[0], alpha), 1, smoothness="hoelder", alpha=alpha)


def test_seminorm_examples():
    lin = ScalarFunction(lambda z: z[0], 1, smoothness="smooth")
    pairs = [((0.1,), (0.3,)), ((0.2j,), (-0.1,))]
    assert abs(holder_seminorm(lin, pairs, 1.0) - 1) < 1e-14
    assert holder_seminorm(constant(2.0, 1), pairs, 0.5) == 0
    assert holder_seminorm(lin, [], 0.5) == 0
    with pytest.raises(InvalidArgument):
        holder_seminorm(lin, pairs, 0.0)


def test_seminorm_sqrt():
    f = ScalarFunction(lambda z: np.sqrt(np.abs(z[0])), 1, smoothness="hoelder", alpha=0.5)
    pairs = [((0.0,), (s,)) for s in (1e-4, 1e-2, 0.25)]
    assert abs(holder_seminorm(f, pairs, 0.5) - 1) < 1e-12


def test_coincident_pairs_warn():
    lin = ScalarFunction(lambda z: z[0], 1, smoothness="smooth")
    with pytest.warns(UserWarning):
        assert holder_seminorm(lin, [((0.1,), (0.1,))], 1.0) == 0


@given(alpha=st.floats(0.05, 1.0), beta=st.floats(0.05, 1.0))
def test_seminorm_monotone_on_short_pairs(alpha, beta):
    # for |x - y| <= 1 the seminorm grows with the exponent
    f = branch(0.5)
    pairs = [((0.9,), (0.9 + 0.01j,)), ((0.2,), (0.3,))]
    lo, hi = sorted((alpha, beta))
    assert holder_seminorm(f, pairs, lo) <= holder_seminorm(f, pairs, hi) * (1 + 1e-12)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.9])
def test_exponent_recovered(alpha):
    sampler = PolydiscSampler(1, seed=11, rough_points=[(1.0,)])
    est = estimate_exponent(branch(alpha), sampler)
    assert abs(est.alpha_hat - alpha) < 0.1
    assert est.r2 > 0.95 and not est.degenerate


def test_smooth_caps_at_one():
    f = ScalarFunction(lambda z: z[0] ** 2 + np.conj(z[0]), 1, smoothness="smooth")
    est = estimate_exponent(f, PolydiscSampler(1, seed=2))
    assert 0.95 <= est.alpha_hat <= ALPHA_CAP


def test_constant_is_degenerate():
    est = estimate_exponent(constant(1.0, 2), PolydiscSampler(2, seed=0))
    assert est.degenerate and est.alpha_hat == ALPHA_CAP


def test_pairs_stay_in_domain_and_at_scale():
    sampler = PolydiscSampler(2, seed=5, rough_points=[(1.0, 0.8)])
    X, Y = sampler.pairs(2.0**-6, 100)
    assert len(X) > 16
    assert np.all(np.abs(X) <= 1 + 1e-12) and np.all(np.abs(Y) <= 1 + 1e-12)
    d = np.sqrt(np.sum(np.abs(X - Y) ** 2, axis=1))
    assert np.allclose(d, 2.0**-6)


def test_sector_restricted_pairs():
    sampler = PolydiscSampler(2, seed=1, sector=(0, 1), sector_margin=0.05)
    X, Y = sampler.pairs(0.01, 50)
    for Z in (X, Y):
        assert np.all(np.abs(Z[:, 0]) - np.abs(Z[:, 1]) >= 0.05)


def test_sampler_deterministic():
    a = PolydiscSampler(2, seed=9).pairs(0.1, 20)
    b = PolydiscSampler(2, seed=9).pairs(0.1, 20)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_scale_guard():
    with pytest.raises(InvalidArgument):
        estimate_exponent(branch(0.5), PolydiscSampler(1), scales=[0.5])


def test_vector_valued():
    est = estimate_exponent([branch(0.3), branch(0.9)], PolydiscSampler(1, seed=4, rough_points=[(1.0,)]))
    assert abs(est.alpha_hat - 0.3) < 0.1


def test_to_dict_keys():
    est = estimate_exponent(branch(0.5), PolydiscSampler(1, seed=4, rough_points=[(1.0,)]), pairs_per_scale=40)
    d = est.to_dict()
    assert {"alpha_hat", "r2", "bins", "seminorm_at", "pair_count"} <= set(d)
