import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from scalenest.binarize import RcaConfig, prune_empty, rca_matrix, threshold_binarize
from scalenest.errors import DegenerateInputError, DegenerateMatrixError
from scalenest.model import BinaryMap, CodePath, Dimension, ScalePair, WeightedMap, binary_map_from_array


def _wmap(W, scale=ScalePair(1, 1)):
    W = np.asarray(W, float)
    rows = tuple(CodePath((f"r{i}",)) for i in range(W.shape[0]))
    cols = tuple(CodePath((f"c{j}",), Dimension.TECH) for j in range(W.shape[1]))
    return WeightedMap(scale, rows, cols, W)


def test_rca_worked_example():
    np.testing.assert_allclose(rca_matrix(_wmap([[4, 1], [1, 4]])), [[1.6, 0.4], [0.4, 1.6]],
                               rtol=0, atol=1e-15)


def test_rca_uniform_is_one():
    np.testing.assert_allclose(rca_matrix(_wmap(np.full((3, 5), 2.5))), 1.0, rtol=0, atol=1e-15)


def test_rca_zero_row_and_all_zero():
    r = rca_matrix(_wmap([[1, 2], [0, 0], [3, 1]]))
    assert (r[1] == 0).all()
    with pytest.raises(DegenerateInputError):
        rca_matrix(_wmap(np.zeros((2, 2))))


weights = arrays(float, st.tuples(st.integers(1, 6), st.integers(1, 6)),
                 elements=st.one_of(st.just(0.0), st.floats(1e-3, 100)))


@settings(max_examples=80, deadline=None)
@given(weights)
def test_rca_scale_invariant(W):
    if not W.sum() > 0:
        return
    base = rca_matrix(W)
    for lam in (1e-6, 1.0, 1e6):
        assert np.abs(rca_matrix(W * lam) - base).max() <= 1e-12 * max(1.0, base.max())


@settings(max_examples=80, deadline=None)
@given(weights)
def test_rca_row_weighted_mean_is_one(W):
    if not W.sum() > 0:
        return
    r = rca_matrix(W)
    share = W.sum(axis=0) / W.sum()
    for i in np.flatnonzero(W.sum(axis=1) > 0):
        assert (r[i] * share).sum() == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(weights, st.floats(0.1, 3), st.floats(0.1, 3))
def test_threshold_monotone(W, a, b):
    if not W.sum() > 0:
        return
    lo, hi = sorted((a, b))
    r = rca_matrix(W)
    tpl = _wmap(W)
    assert (threshold_binarize(r, tpl, RcaConfig(hi)).bits
            <= threshold_binarize(r, tpl, RcaConfig(lo)).bits).all()


def test_threshold_examples():
    tpl = _wmap(np.ones((2, 2)))
    r = np.array([[1.6, 0.4], [0.4, 1.6]])
    assert threshold_binarize(r, tpl).bits.tolist() == [[1, 0], [0, 1]]
    assert threshold_binarize(np.ones((2, 2)), tpl).bits.tolist() == [[1, 1], [1, 1]]
    assert threshold_binarize(r, tpl, RcaConfig(2.0)).bits.tolist() == [[0, 0], [0, 0]]
    with pytest.raises(ValueError):
        RcaConfig(0.0)


def test_blocks_from_parent_level():
    rows = tuple(CodePath.parse(s) for s in ("A.1", "A.2", "B.1"))
    cols = (CodePath.parse("t", Dimension.TECH),)
    wm = WeightedMap(ScalePair(2, 1), rows, cols, np.ones((3, 1)))
    assert threshold_binarize(np.ones((3, 1)), wm).row_blocks == (range(0, 2), range(2, 3))


def test_prune_examples():
    with pytest.raises(DegenerateMatrixError):
        prune_empty(binary_map_from_array(np.array([[1, 0], [0, 0]])))
    bm = binary_map_from_array(np.array([[1, 1], [1, 0]]))
    out, rep = prune_empty(bm)
    assert out is bm and rep.empty
    bm = binary_map_from_array(np.array([[1, 0, 1], [0, 0, 0], [0, 1, 1]]))
    out, rep = prune_empty(bm)
    assert out.shape == (2, 3)
    assert [str(l) for l in rep.removed_rows] == ["r1"] and rep.removed_cols == ()
    assert out.row_blocks == (range(0, 2),)


def test_prune_recomputes_blocks():
    rows = tuple(CodePath.parse(s) for s in ("A.1", "A.2", "B.1", "B.2", "C.1"))
    cols = tuple(CodePath.parse(f"t{j}", Dimension.TECH) for j in range(3))
    bits = np.array([[1, 1, 0], [0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 0]])
    bm = BinaryMap(ScalePair(2, 1), rows, cols, bits).with_blocks(1)
    out, rep = prune_empty(bm)
    assert [str(l) for l in out.row_labels] == ["A.1", "B.1", "B.2"]
    assert out.row_blocks == (range(0, 1), range(1, 3))
    assert [str(l) for l in rep.removed_cols] == ["t2"]
