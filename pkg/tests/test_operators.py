import math

import numpy as np
import pytest

from wegnerlab import operators as op
from wegnerlab.errors import (DimensionExceeded, DimensionMismatch, FluxNotQuantized,
                              NoAdmissibleFlux)


def eig(A):
    return np.linalg.eigvalsh(A.dense() if isinstance(A, op.LatticeOperator) else A)


def test_free_1d_circulant_spectrum():
    box = op.BoxSpec(1, 8)
    k = np.arange(8)
    expected = np.sort(2 - 2 * np.cos(2 * np.pi * k / 8))
    assert np.allclose(eig(op.build_background(box)), expected, atol=1e-12)
    assert np.allclose(op.free_spectrum_1d(box), expected)


def test_free_1d_with_subgrid():
    box = op.BoxSpec(1, 6, 3)
    assert np.allclose(eig(op.build_background(box)), op.free_spectrum_1d(box), atol=1e-10)


def test_constant_v0_shifts_spectrum():
    box = op.BoxSpec(2, 4, 2)
    e0 = eig(op.build_background(box))
    e1 = eig(op.build_background(box, v0=0.75))
    assert np.allclose(e1 - e0, 0.75, atol=1e-12)


def test_cell_periodic_v0_is_tiled():
    box = op.BoxSpec(1, 5, 2)
    H = op.build_background(box, v0=[0.0, 1.0])
    assert np.allclose(np.diag(H.dense()) - 8.0, np.tile([0.0, 1.0], 5))
    with pytest.raises(DimensionMismatch):
        op.build_background(box, v0=[0.0, 1.0, 2.0])


@pytest.mark.parametrize("L,n,k", [(4, 4, 1), (6, 4, 2), (8, 2, 2)])
def test_lowest_landau_cluster_near_B(L, n, k):
    box = op.BoxSpec(2, L, n)
    B = 2 * math.pi * k / L ** 2
    e = eig(op.build_background(box, field_B=B))
    assert np.allclose(e[:k] / B, 1.0, atol=0.02)
    assert e[k] / B > 2.5


def test_flux_must_be_quantized():
    with pytest.raises(FluxNotQuantized):
        op.build_background(op.BoxSpec(2, 4), field_B=0.3)
    with pytest.raises(DimensionMismatch):
        op.build_background(op.BoxSpec(1, 4), field_B=2 * math.pi / 16)


def test_gauge_origin_shift_keeps_spectrum():
    box = op.BoxSpec(2, 6, 2)
    B = 2 * math.pi * 3 / 36
    e0 = eig(op.build_background(box, field_B=B))
    for origin in [(2, 0), (0, 2), (2, 2), (5, 3)]:
        e1 = eig(op.build_background(box, field_B=B, gauge_origin=origin))
        assert np.allclose(e0, e1, rtol=1e-9, atol=1e-9)


@pytest.mark.parametrize("B", [0.0, 2 * math.pi / 16, 2 * math.pi * 3 / 16])
def test_hermitian(B):
    box = op.BoxSpec(2, 4, 3)
    H = op.build_background(box, field_B=B)
    assert H.hermiticity_error() <= 1e-12 * np.abs(H.dense()).max()


def test_dense_cap():
    with pytest.raises(DimensionExceeded):
        op.BoxSpec(2, 40, 2)


def test_box_properties():
    box = op.BoxSpec(2, 5, 3)
    assert box.h == pytest.approx(1 / 3)
    assert box.shape == (15, 15) and box.n_points == 225 and box.volume == 25
    assert box.site_shape == (5, 5)


# ---------------------------------------------------------------- random potentials

BOX = op.BoxSpec(1, 12, 4)
U = op.cosine_bump(1, 4, 0.9)


def test_zero_couplings_give_zero_operator():
    V = op.assemble_anderson(BOX, U, np.zeros(12))
    assert not np.any(V.data)


def test_single_site_places_profile():
    w = np.zeros(12)
    w[0] = 1.0
    V = op.assemble_anderson(BOX, U, w).data
    expected = np.zeros(BOX.n_points)
    for off, val in zip(U.offsets[:, 0], U.values):
        expected[off % BOX.n_points] += val
    assert np.array_equal(V, expected)


def test_all_ones_equals_tilde():
    a = op.assemble_anderson(BOX, U, np.ones(12)).data
    assert np.array_equal(a, op.assemble_tilde(BOX, U).data)


def test_linearity_exact():
    r = np.random.default_rng(3)
    w1, w2 = r.random(12), r.random(12)
    a, b = 0.5, 2.0
    lhs = op.assemble_anderson(BOX, U, a * w1 + b * w2).data
    rhs = a * op.assemble_anderson(BOX, U, w1).data + b * op.assemble_anderson(BOX, U, w2).data
    assert np.allclose(lhs, rhs, rtol=0, atol=1e-14)


def test_site_profiles_consistent():
    Um = op.site_profiles(BOX, U)
    w = np.random.default_rng(4).random(12)
    assert np.allclose(Um @ w, op.assemble_anderson(BOX, U, w).data)


def test_unit_cell_support_bounded_by_one():
    u = op.cosine_bump(1, 4, 0.4)
    t = op.assemble_tilde(BOX, u).data
    assert t.min() >= 0 and t.max() <= 1.0


def test_indicator_tiles_the_box():
    for box in (op.BoxSpec(1, 7, 3), op.BoxSpec(2, 4, 2)):
        t = op.assemble_tilde(box, op.cell_indicator(box.dimension, box.points_per_cell))
        assert np.array_equal(t.data, np.ones(box.n_points))
        assert op.d0_constant(t) == 1.0


def test_overlap_count_radius_one_and_half():
    t = op.assemble_tilde(BOX, op.cosine_bump(1, 4, 1.5)).data
    assert t.max() <= 3.0
    flat = op.profile_from_function(lambda r: 1.0, 1, 4, 1.49)
    tf = op.assemble_tilde(BOX, flat)
    assert op.d0_constant(tf) == 3.0


def test_d0_zero_potential():
    zero = op.single_site_from_dict({"kind": "zero"}, 1, 4)
    assert op.d0_constant(op.assemble_tilde(BOX, zero)) == 0.0


def test_d0_inequality_holds():
    t = op.assemble_tilde(BOX, op.cosine_bump(1, 4, 1.5)).data
    d0 = op.d0_constant(op.assemble_tilde(BOX, op.cosine_bump(1, 4, 1.5)))
    assert np.all(t ** 2 <= d0 * t + 1e-14)


def test_profile_validation():
    with pytest.raises(DimensionMismatch):
        op.assemble_anderson(BOX, op.cosine_bump(1, 2, 0.4), np.zeros(12))
    with pytest.raises(DimensionMismatch):
        op.assemble_anderson(BOX, U, np.zeros(11))
    with pytest.raises(Exception):
        op.SingleSitePotential(np.zeros((1, 1), int), np.array([2.0]), 1, 0.1)


def test_monotone_in_couplings():
    box = op.BoxSpec(2, 8, 2)
    u = op.cosine_bump(2, 2, 0.6)
    H0 = op.build_background(box, field_B=2 * math.pi * 2 / 64).dense()
    r = np.random.default_rng(9)
    for _ in range(20):
        w = r.random(box.site_shape)
        w2 = w + r.random(box.site_shape) * (r.random(box.site_shape) < 0.5)
        e1 = eig(H0 + np.diag(op.assemble_anderson(box, u, w).data))
        e2 = eig(H0 + np.diag(op.assemble_anderson(box, u, w2).data))
        assert np.all(e1 <= e2 + 1e-10)


def test_operator_addition():
    H = op.build_background(BOX)
    V = op.assemble_tilde(BOX, U)
    S = H + V
    assert np.allclose(S.dense(), H.dense() + np.diag(V.data))
    assert np.allclose((V + V).data, 2 * V.data)


def test_dump_npy(tmp_path):
    H = op.build_background(op.BoxSpec(2, 3), field_B=2 * math.pi / 9)
    p = tmp_path / "H.npy"
    H.dump(p)
    assert np.array_equal(np.load(p), H.dense())


def test_common_field():
    B = op.common_field([12, 24], 4)
    assert B * 144 / (2 * math.pi) == pytest.approx(4)
    assert B * 576 / (2 * math.pi) == pytest.approx(16)
    with pytest.raises(NoAdmissibleFlux):
        op.common_field([4, 6], 1)


def test_operator_spec_round_trip():
    spec = op.OperatorSpec(2, 2, {"kind": "bump", "radius": 0.5}, 0.1, 2 * math.pi / 16)
    again = op.OperatorSpec.from_dict(spec.to_dict())
    assert again == spec
    assert again.background(4).dim == 64
