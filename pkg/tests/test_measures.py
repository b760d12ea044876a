import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wegnerlab import measures as ms
from wegnerlab.errors import InvalidMeasure


def rng(seed=0):
    return np.random.default_rng(seed)


UNIFORM = ms.UniformDensity(0.0, 1.0)
COIN = ms.Atomic(((0.0, 0.5), (1.0, 0.5)))
CANTOR = ms.CantorMeasure(30)
TRIANGLE = ms.PiecewiseLinearDensity(((0.0, 0.0), (1.0, 1.0), (2.0, 0.0)))


# ---------------------------------------------------------------- sampling

def test_uniform_samples_in_support():
    x = ms.sample(UNIFORM, rng(), 10_000)
    assert x.min() >= 0.0 and x.max() <= 1.0


def test_atomic_samples_on_atoms():
    x = ms.sample(COIN, rng(), 1000)
    assert set(np.unique(x)) <= {0.0, 1.0}


def test_cantor_samples_have_no_ternary_one():
    x = ms.sample(CANTOR, rng(), 500)
    n = np.rint(x * 3.0 ** 30).astype(np.int64)
    for _ in range(30):
        assert not np.any(n % 3 == 1)
        n //= 3


def test_piecewise_linear_sample_mean():
    x = TRIANGLE.sample(rng(1), 200_000)
    assert abs(x.mean() - 1.0) < 0.01
    assert x.min() >= 0.0 and x.max() <= 2.0


def test_sampling_is_reproducible():
    a = ms.sample(CANTOR, rng(5), 20)
    b = ms.sample(CANTOR, rng(5), 20)
    assert np.array_equal(a, b)


# ---------------------------------------------------------------- modulus examples

def test_uniform_modulus():
    assert ms.modulus_s(UNIFORM, 0.25) == (0.25, 0.0)
    assert ms.modulus_s(UNIFORM, 3.0)[0] == 1.0


def test_atomic_modulus_is_largest_atom():
    assert ms.modulus_s(COIN, 0.1)[0] == 0.5
    assert ms.modulus_s(COIN, 1.0)[0] == 1.0


def test_cantor_modulus_one_27th():
    val, err = ms.modulus_s(CANTOR, 1 / 27)
    assert val <= 1 / 8 <= val + err
    assert abs(val - 1 / 8) < 1e-12


def test_triangle_modulus_centered_on_peak():
    val, _ = ms.modulus_s(TRIANGLE, 0.2)
    assert val == pytest.approx(0.2 - 0.2 ** 2 / 4, abs=1e-12)


def test_cantor_holder_law_exact():
    eps = [3.0 ** -k for k in range(2, 9)]
    curve = ms.modulus_curve(CANTOR, eps)
    assert np.allclose(np.log2(curve.s_values), -np.arange(8, 1, -1), atol=1e-9)
    assert abs(curve.holder_exponent() - ms.CANTOR_DIMENSION) < 0.01


# ---------------------------------------------------------------- correlated laws

def test_toeplitz_uniform_pushforward():
    corr = ms.ToeplitzCorrelated(UNIFORM, (((0,), 2.0), ((1,), 0.5)))
    for eps in (0.1, 0.5, 1.0, 3.0):
        assert ms.modulus_s(corr, eps)[0] == pytest.approx(min(eps / 2, 1.0))


def test_toeplitz_identity_case():
    corr = ms.ToeplitzCorrelated(UNIFORM, (((0,), 1.0),))
    for eps in (0.05, 0.3):
        assert ms.modulus_s(corr, eps) == ms.modulus_s(UNIFORM, eps)


def test_toeplitz_cantor_matches_two_site_conditioning():
    corr = ms.ToeplitzCorrelated(CANTOR, (((0,), 1.0), ((1,), 0.1)))
    depth = 10
    k = np.arange(2 ** depth)
    pts = np.zeros(len(k))
    for bit in range(depth):
        pts += ((k >> bit) & 1) * 2 * 3.0 ** -(bit + 1)
    for w1 in (0.0, 0.37, 0.9):
        eta = np.sort(pts + 0.1 * w1)
        for kk in (2, 3, 4):
            eps = 3.0 ** -kk
            hi = np.searchsorted(eta, eta + eps * (1 + 1e-9), side="right")
            brute = np.max(hi - np.arange(len(eta))) / len(eta)
            assert abs(brute - 2.0 ** -kk) <= 2 * 2.0 ** -depth
            assert ms.modulus_s(corr, eps)[0] == pytest.approx(2.0 ** -kk, abs=1e-12)


def test_toeplitz_field_matches_marginal_scale():
    corr = ms.ToeplitzCorrelated(UNIFORM, (((0,), 1.0), ((1,), 0.3)))
    f = ms.sample_field(corr, rng(2), (4000,))
    assert f.shape == (4000,)
    assert f.min() >= 0.0 and f.max() <= 1.3
    assert abs(f.mean() - 0.65) < 0.02


def test_dominance_enforced():
    with pytest.raises(InvalidMeasure, match="dominance"):
        ms.ToeplitzCorrelated(UNIFORM, (((0,), 1.0), ((1,), 0.6), ((-1,), 0.5)))


# ---------------------------------------------------------------- validation

def test_invalid_measures_rejected():
    with pytest.raises(InvalidMeasure):
        ms.UniformDensity(1.0, 1.0)
    with pytest.raises(InvalidMeasure):
        ms.Atomic(((0.0, 0.5), (1.0, 0.4)))
    with pytest.raises(InvalidMeasure):
        ms.PiecewiseLinearDensity(((0.0, 1.0), (1.0, 2.0)))
    with pytest.raises(InvalidMeasure):
        ms.from_dict({"kind": "lognormal"})


def test_epsilon_must_be_positive():
    with pytest.raises(ValueError):
        ms.modulus_s(UNIFORM, 0.0)


@pytest.mark.parametrize("m", [UNIFORM, COIN, CANTOR, TRIANGLE,
                               ms.ToeplitzCorrelated(UNIFORM, (((0, 0), 1.0), ((0, 1), 0.2)))])
def test_json_round_trip(m):
    assert ms.loads(ms.dumps(m)) == m


# ---------------------------------------------------------------- properties

ALL = [UNIFORM, COIN, CANTOR, TRIANGLE, ms.Atomic(((0.0, 0.2), (0.05, 0.3), (2.0, 0.5)))]


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(ALL), st.floats(1e-4, 2.0), st.floats(1e-4, 2.0))
def test_modulus_monotone_in_epsilon(m, e1, e2):
    e1, e2 = min(e1, e2), max(e1, e2)
    v1, r1 = ms.modulus_s(m, e1)
    v2, r2 = ms.modulus_s(m, e2)
    assert v1 <= v2 + r1 + r2


@pytest.mark.parametrize("m", ALL)
@pytest.mark.parametrize("eps", [0.01, 0.1, 0.3])
def test_modulus_dominates_empirical_window_mass(m, eps):
    n = 100_000
    x = np.sort(np.asarray(ms.sample(m, rng(11), n), float))
    hi = np.searchsorted(x, x + eps, side="right")
    emp = np.max(hi - np.arange(n)) / n
    val, err = ms.modulus_s(m, eps)
    sigma = math.sqrt(max(val, 1e-6) * (1 - min(val, 1.0)) / n) + 1 / n
    assert emp <= val + err + 3 * sigma + 1e-3


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.01, 1.0), min_size=1, max_size=6), st.floats(1e-6, 1.0))
def test_atomic_modulus_at_least_max_weight(ws, eps):
    w = np.array(ws) / np.sum(ws)
    m = ms.Atomic(tuple((float(i), float(wi)) for i, wi in enumerate(w)))
    assert ms.modulus_s(m, eps)[0] >= w.max() - 1e-12
