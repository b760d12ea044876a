import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wegnerlab import tracebounds as tb
from wegnerlab.errors import DegenerateFit, NonPositiveData, NotAProjector, ShiftTooSmall
from wegnerlab.operators import BoxSpec, build_background, cosine_bump
from wegnerlab.spectra import IntervalPair, SpectralData, eigensolve

BOX = BoxSpec(1, 64)
SD = eigensolve(build_background(BOX))


def full_pair(box):
    one = np.ones(box.n_points)
    return tb.CutoffPair(one, one, 0.0)


def test_full_cutoff_is_trace_of_resolvent_square():
    M = 0.7
    v = tb.cutoff_trace_norm(SD, M, full_pair(BOX))
    assert v == pytest.approx(np.sum(1 / (SD.eigenvalues + M) ** 2), rel=1e-12)


def test_matches_exact_green_kernel():
    M = 1.0
    G = tb.green_kernel_1d(64, M, 2)
    for s in (0, 3, 10, 20):
        v = tb.cutoff_trace_norm(SD, M, tb.cutoff_pair(BOX, 0, s))
        assert v == pytest.approx(abs(G[s]), rel=1e-8, abs=1e-14)


def test_half_box_decay_rate_against_green_oracle():
    M = 1.0
    rate = tb.green_decay_rate_1d(M)
    assert rate == pytest.approx(math.acosh(1.5))
    a = tb.cutoff_trace_norm(SD, M, tb.cutoff_pair(BOX, 0, 12))
    b = tb.cutoff_trace_norm(SD, M, tb.cutoff_pair(BOX, 0, 16))
    measured = math.log(a / b) / 4
    assert abs(measured - rate) <= 0.10 * rate


def test_large_shift_bound():
    M = 100.0
    v = tb.cutoff_trace_norm(SD, M, full_pair(BOX))
    assert v <= SD.dim / M ** 2


def test_shift_too_small():
    with pytest.raises(ShiftTooSmall):
        tb.cutoff_trace_norm(SD, 0.0, tb.cutoff_pair(BOX, 0, 1))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 63), st.integers(0, 63), st.floats(0.05, 5.0), st.integers(1, 3))
def test_trace_norm_dominates_operator_norm(i, j, M, width):
    box = BoxSpec(1, 64, 1)
    pair = tb.cutoff_pair(box, i, j, width)
    v = tb.cutoff_trace_norm(SD, M, pair)
    R2 = tb.function_of(SD, (SD.eigenvalues + M) ** -2.0)
    op = np.linalg.norm(pair.chi_i[:, None] * R2 * pair.chi_j[None, :], 2)
    assert v >= op - 1e-12 and v >= 0


def test_decay_fit_exact_exponential():
    k = np.arange(1, 12)
    fit = tb.decay_fit(k, 3 * np.exp(-0.7 * k))
    assert fit.C0 == pytest.approx(3.0) and fit.c0 == pytest.approx(0.7)
    assert fit.r_squared == pytest.approx(1.0) and fit.decaying


def test_decay_fit_constant_flagged():
    fit = tb.decay_fit(np.arange(6), np.full(6, 2.0))
    assert abs(fit.c0) < 1e-12 and not fit.decaying


def test_decay_fit_errors():
    with pytest.raises(DegenerateFit):
        tb.decay_fit([1, 2, 3], [1, 1, 1])
    with pytest.raises(NonPositiveData):
        tb.decay_fit([1, 2, 3, 4], [1, 0, 1, 1])
    with pytest.raises(DegenerateFit):
        tb.decay_fit([2, 2, 2, 2], [1, 2, 3, 4])


@pytest.mark.parametrize("M", [0.5, 1.0, 2.0])
def test_decay_1d_fit(M):
    seps = list(range(4, 21))
    fit = tb.decay_fit(seps, tb.decay_table(SD, M, BOX, seps))
    assert fit.decaying and fit.r_squared >= 0.95
    assert abs(fit.c0 - tb.green_decay_rate_1d(M)) <= 0.15 * tb.green_decay_rate_1d(M)


@pytest.mark.parametrize("M", [0.5, 1.0, 2.0])
def test_decay_2d_fit(M):
    box = BoxSpec(2, 16)
    sd = eigensolve(build_background(box))
    seps = list(range(2, 9))
    fit = tb.decay_fit(seps, tb.decay_table(sd, M, box, seps))
    assert fit.decaying and fit.c0 > 0 and fit.r_squared >= 0.95


def test_decay_csv(tmp_path):
    seps = [1, 2, 3, 4]
    norms = np.exp(-np.array(seps, float))
    p = tmp_path / "decay.csv"
    tb.write_decay_csv(p, seps, norms, tb.decay_fit(seps, norms))
    lines = p.read_text().splitlines()
    assert lines[0] == "separation,trace_norm,fit_residual" and len(lines) == 5


# ---------------------------------------------------------------- smooth cutoffs

def test_smooth_kernel_constants():
    assert tb.smooth_kernel_norm(SD, 1.0, full_pair(BOX)) == pytest.approx(SD.dim)
    assert tb.smooth_kernel_norm(SD, 0.0, full_pair(BOX)) == 0.0


def test_smooth_cutoff_shape():
    f = tb.SmoothCutoff(0.0, 1.0, 0.5)
    assert f(0.5) == 1.0 and f(-0.6) == 0.0 and f(1.6) == 0.0
    assert 0 < f(-0.25) < 1
    g = tb.SmoothCutoff(0.0, 1.0, 0.5, order=2)
    x = np.linspace(-0.5, 0.0, 101)
    assert np.all(np.diff(g(x)) >= -1e-15)


def test_smooth_kernel_polynomial_decay():
    f = tb.SmoothCutoff(-1.0, 0.5, 1.0)
    s = np.arange(4, 25)
    vals = np.array([tb.smooth_kernel_norm(SD, f, tb.cutoff_pair(BOX, 0, int(k))) for k in s])
    env = np.maximum.accumulate(vals[::-1])[::-1]
    assert tb.loglog_slope(s, env).slope <= -2


# ---------------------------------------------------------------- K0 comparison

IP = IntervalPair((1.0, 1.5), (0.5, 2.0), 1.0)


def test_k0_vanishes_inside_delta_tilde():
    V = SD.vectors()[:, SD.window(IP.delta_tilde)]
    psi = V @ np.random.default_rng(0).normal(size=V.shape[1])
    lhs, rhs, _ = tb.k0_comparison(SD, IP, 1.2, psi)
    assert lhs == pytest.approx(0.0, abs=1e-20) and rhs >= 0


@pytest.mark.parametrize("lam", [-0.5, 0.2, 2.5, 7.0])
def test_k0_scalar(lam):
    sd = SpectralData(np.array([lam]), np.eye(1))
    lhs, rhs, K0 = tb.k0_comparison(sd, IP, 1.25, [1.0])
    assert lhs / rhs == pytest.approx(((lam + 1.0) / (lam - 1.25)) ** 2 / K0)
    assert lhs <= rhs


def test_k0_random():
    rng = np.random.default_rng(1)
    for _ in range(200):
        E_m = rng.uniform(*IP.delta)
        psi = rng.normal(size=64) + 1j * rng.normal(size=64)
        lhs, rhs, _ = tb.k0_comparison(SD, IP, E_m, psi)
        assert lhs <= rhs + 1e-10


# ---------------------------------------------------------------- iterated trace

def test_iterated_zero_projector():
    lhs, rhs = tb.iterated_trace_inequality(np.zeros((4, 4)), np.eye(4), 2, [1.0, 1.0])
    assert lhs == 0 and rhs == 0


def test_iterated_equality_case():
    r = 3
    P = np.diag([1.0] * r + [0.0] * 5)
    lhs, rhs = tb.iterated_trace_inequality(P, np.eye(8), 1, [1.0])
    assert lhs == pytest.approx(r) and rhs == pytest.approx(r)


def test_iterated_rejects_non_projector():
    with pytest.raises(NotAProjector):
        tb.iterated_trace_inequality(np.full((2, 2), 0.7), np.eye(2), 1, [1.0])


def test_canonical_sigma_coefficient():
    for K0, m in ((4.0, 1), (9.0, 2), (2.5, 3)):
        a, _ = tb.iterated_trace_coefficients(tb.canonical_sigmas(K0, m))
        assert a == pytest.approx((1 - 2.0 ** -m) / K0)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(1, 3), st.floats(0.1, 5.0))
def test_iterated_random(seed, m, sigma_scale):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.normal(size=(32, 8)))
    P = Q @ Q.T
    X = rng.normal(size=(32, 32))
    K = (X + X.T) / 8
    sig = list(sigma_scale * rng.uniform(0.2, 2.0, size=m))
    lhs, rhs = tb.iterated_trace_inequality(P, K, m, sig)
    assert lhs <= rhs + 1e-10


# ---------------------------------------------------------------- K tilde

def test_k_tilde_structure():
    box = BoxSpec(1, 8, 4)
    u = cosine_bump(1, 4, 0.9)
    sd = eigensolve(build_background(box))
    K = tb.k_tilde(box, u, sd, 1.0)
    assert np.allclose(K, K.T)
    # sites further apart than the overlap range do not couple
    from wegnerlab.operators import site_profiles
    U = site_profiles(box, u)
    assert tb.overlap_matrix(U)[0, 4] == 0 and tb.overlap_matrix(U)[0, 1] == 1


def test_k_tilde_volume_linear():
    norms, vols = [], []
    for L in (8, 12, 16):
        box = BoxSpec(1, L, 4)
        sd = eigensolve(build_background(box))
        norms.append(tb.k_tilde_power_norm(box, cosine_bump(1, 4, 0.9), sd, 1.0, 2))
        vols.append(L)
    assert abs(tb.loglog_slope(vols, norms).slope - 1.0) <= 0.2
