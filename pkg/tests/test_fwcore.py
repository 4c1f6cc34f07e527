from fractions import Fraction
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import EFFICIENT, params
from fwdct.fwcore import (KNOWN_TRANSFORMS, UnknownTransformError, dct_parameters, exact_dct,
                          fast_forward, forward_graph, fw_map, fw_map_batch, fw_map_float,
                          haar_matrix, k_matrix, known_transform, perm_from_cycles,
                          structural_matrices)
from fwdct.metrics import addition_count, shift_count
from fwdct.rational import ExactMatrix, ParamVector

ints = st.integers(-50, 50).map(Fraction)


def dct_by_definition():
    # Independent build: C[k, n] = b_k sqrt(2/N) cos(pi k (2n + 1) / 2N).
    c = np.zeros((8, 8))
    for k in range(8):
        b = 1 / math.sqrt(2) if k == 0 else 1.0
        for n in range(8):
            c[k, n] = b * math.sqrt(2 / 8) * math.cos(math.pi * k * (2 * n + 1) / 16)
    return c


def test_structural_matrices_layout():
    b1, b2, b3, p8 = structural_matrices()
    e3 = np.array(b3.to_float())
    assert np.array_equal(e3[:4, :4], np.eye(4))
    assert np.array_equal(e3[:4, 4:], np.eye(4)[::-1])
    assert np.array_equal(e3[4:, 4:], -np.eye(4))
    p = p8.to_float()
    assert np.all(np.count_nonzero(p, axis=0) == 1) and np.all(np.count_nonzero(p, axis=1) == 1)
    assert set(np.abs(p[p != 0])) == {1.0}


def test_b1_squares_to_diagonal():
    b1 = structural_matrices()[0]
    assert b1 @ b1 == ExactMatrix.diag([2, 2, 1, 1, 1, 1, 1, 1])


def test_k_matrix_examples():
    assert k_matrix([0] * 7) == ExactMatrix.zeros()
    k1 = k_matrix([1] * 7)
    # 2 + 4 + 16 entries in the three diagonal blocks.
    assert k1.nonzero_count() == 22
    assert {abs(v) for row in k1.entries() for v in row if v} == {1}


def test_fw_map_at_dct_parameters_is_dct():
    t = fw_map_float(dct_parameters() / 2)
    assert np.linalg.norm(t - exact_dct()) < 1e-12
    assert np.linalg.norm(exact_dct() - dct_by_definition()) < 1e-12


def test_exact_dct_properties():
    c = exact_dct()
    assert np.allclose(c @ c.T, np.eye(8), atol=1e-12, rtol=0)
    assert np.allclose(c[0], 1 / (2 * math.sqrt(2)))
    assert c[1, 0] == pytest.approx(math.cos(math.pi / 16) / 2, abs=1e-15)


def test_rounded_dct_matrix():
    # The rounded DCT is round(2 C), entrywise.
    rounded = np.round(2 * exact_dct())
    assert np.array_equal(fw_map([1, 1, 1, 1, 1, 0, 0]).to_float(), rounded)


def test_signed_dct_matrix():
    assert np.array_equal(fw_map([1] * 7).to_float(), np.sign(exact_dct()))


def test_t16_matrix_rows():
    t = fw_map(EFFICIENT[16]).to_float()
    assert np.array_equal(t[0], np.ones(8))
    assert np.array_equal(t[7], [0, 0, 1, -1, 1, -1, 0, 0])


def test_zero_parameters_give_zero_matrix():
    assert fw_map([0] * 7) == ExactMatrix.zeros()


@given(st.lists(ints, min_size=7, max_size=7), st.lists(ints, min_size=7, max_size=7),
       ints, ints)
@settings(max_examples=40)
def test_fw_map_is_linear(a, b, s, t):
    lhs = fw_map([s * x + t * y for x, y in zip(a, b)])
    rhs = fw_map(a).scale(s) + fw_map(b).scale(t)
    assert lhs == rhs


@given(params, st.lists(st.integers(-255, 255), min_size=8, max_size=8))
@settings(max_examples=200)
def test_fast_forward_exact(alpha, x):
    x = [Fraction(v) for v in x]
    m = fw_map(alpha).entries()
    ref = [sum(m[i][j] * x[j] for j in range(8)) for i in range(8)]
    assert list(fast_forward(alpha, x)) == ref


@given(params, st.lists(st.floats(-1e3, 1e3), min_size=8, max_size=8))
@settings(max_examples=100)
def test_fast_forward_real(alpha, x):
    ref = fw_map(alpha).to_float() @ np.array(x)
    assert np.allclose(fast_forward(alpha, x), ref, atol=1e-12 * (1 + np.abs(ref).max()), rtol=0)


def test_fast_forward_probes():
    alpha = ParamVector([1, 1, 1, 1, 1, 0, 0])
    e0 = [Fraction(1)] + [Fraction(0)] * 7
    assert list(fast_forward(alpha, e0)) == [row[0] for row in fw_map(alpha).entries()]
    out = fast_forward(alpha, [Fraction(1)] * 8)
    assert out[0] == 8 and all(v == 0 for v in out[1:])


@given(params)
@settings(max_examples=200)
def test_flow_graph_counts_match_formulas(alpha):
    g = forward_graph(alpha)
    assert g.matrix() == fw_map(alpha)
    assert g.counts.adds == addition_count(alpha)
    assert g.counts.shifts == shift_count(alpha)
    assert g.counts.mults == 0


def test_batch_matches_scalar():
    alphas = np.array([EFFICIENT[k].to_float() for k in EFFICIENT])
    for a, t in zip(alphas, fw_map_batch(alphas)):
        assert np.array_equal(t, fw_map_float(a))


def test_registry_vectors():
    assert known_transform("hevc").alpha == ParamVector([89, 83, 75, 64, 50, 36, 18])
    assert known_transform("AVC").alpha == ParamVector([12, 8, 10, 8, 6, 4, 3])
    assert known_transform("lo").alpha == EFFICIENT[1]
    assert known_transform("rdct").alpha == EFFICIENT[2]
    assert known_transform("mrdct").alpha == EFFICIENT[3]
    assert len(KNOWN_TRANSFORMS) == 9
    with pytest.raises(UnknownTransformError):
        known_transform("wht")


def test_registry_flags():
    low = {n for n, t in KNOWN_TRANSFORMS.items() if t.is_low_complexity}
    assert low == {"sdct", "lo", "rdct", "mrdct", "rf", "haar"}


def test_registry_dct():
    t = known_transform("dct").matrix().to_float()
    assert np.linalg.norm(t - exact_dct()) < 1e-12


def test_haar_by_permutation():
    h = known_transform("haar").matrix()
    assert h == ExactMatrix(haar_matrix())
    assert np.array_equal(haar_matrix()[2], [1, 1, -1, -1, 0, 0, 0, 0])


def test_perm_from_cycles():
    assert perm_from_cycles([(1,), (8, 2, 6), (5, 3, 7), (4,)]) == (0, 5, 6, 3, 2, 7, 4, 1)
    with pytest.raises(ValueError):
        perm_from_cycles([(1, 2), (2, 3)])
