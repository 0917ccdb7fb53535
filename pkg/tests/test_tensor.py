import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trisig.exceptions import DomainMismatchError, MissingDataError, NonConstantCellWarning
from trisig.tensor import (
    Pattern,
    Tensor3,
    Tricluster,
    VariableDomain,
    extract_pattern,
    from_codes,
    pattern_support,
)


class TestVariableDomain:
    def test_ordinal_from_cardinality(self):
        d = VariableDomain.ordinal(3)
        assert d.categories == ("0", "1", "2")
        assert d.cardinality == 3 and d.is_ordinal and not d.degenerate

    def test_code_lookup(self):
        d = VariableDomain.ordinal(["low", "mid", "high"])
        assert d.code("mid") == 1
        with pytest.raises(DomainMismatchError):
            d.code("huge")

    def test_single_category_is_degenerate(self):
        assert VariableDomain.ordinal(1).degenerate

    @pytest.mark.parametrize("bad", [dict(kind="nominal"), dict(kind="ordinal", categories=("a", "a"))])
    def test_rejects_invalid(self, bad):
        with pytest.raises(ValueError):
            VariableDomain(**bad)

    def test_dict_round_trip(self):
        d = VariableDomain.ordinal(4, bin_edges=[0.5, 1.5, 2.5])
        assert VariableDomain.from_dict(d.to_dict()) == d


class TestTensor3:
    def test_default_labels_and_shape(self):
        t = Tensor3(np.zeros((2, 3, 4)))
        assert t.shape == (2, 3, 4)
        assert t.obs_labels[0] == "x0" and t.var_labels[2] == "y2" and t.ctx_labels[3] == "z3"

    def test_values_are_read_only_copies(self):
        raw = np.zeros((1, 1, 2))
        t = Tensor3(raw)
        raw[0, 0, 0] = 5
        assert t.values[0, 0, 0] == 0
        with pytest.raises(ValueError):
            t.values[0, 0, 0] = 1

    @pytest.mark.parametrize("shape", [(2, 2), (0, 1, 1)])
    def test_rejects_bad_shapes(self, shape):
        with pytest.raises(ValueError):
            Tensor3(np.zeros(shape))

    def test_ordinal_codes_checked(self):
        with pytest.raises(DomainMismatchError):
            from_codes(np.array([[[0, 3]]]), 3)
        with pytest.raises(DomainMismatchError):
            Tensor3(np.array([[[0.5]]]), (VariableDomain.ordinal(2),))

    def test_codes_mark_missing(self):
        t = from_codes(np.array([[[0, -1]], [[1, 1]]]), 2)
        assert np.isnan(t.values[0, 0, 1])
        assert t.codes()[0, 0, 1] == -1

    def test_equality(self, hand_tensor):
        same = from_codes(hand_tensor.codes(), 2, temporal=True)
        assert same == hand_tensor
        assert hand_tensor != hand_tensor.replace(temporal=False)


class TestTricluster:
    def test_indices_sorted(self):
        tc = Tricluster([3, 1], [2, 0], [1])
        assert tc.obs_idx == (1, 3) and tc.var_idx == (0, 2)

    @pytest.mark.parametrize(
        "args",
        [([], [0], [0]), ([0, 0], [0], [0]), ([-1], [0], [0])],
    )
    def test_invalid_indices(self, args):
        with pytest.raises(ValueError):
            Tricluster(*args)

    def test_contiguity(self):
        assert Tricluster([0], [0], [2, 3, 4], contiguous=True).is_run
        assert not Tricluster([0], [0], [1, 3]).is_run
        with pytest.raises(ValueError):
            Tricluster([0], [0], [1, 3], contiguous=True)

    def test_bounds(self, hand_tensor):
        with pytest.raises(IndexError):
            Tricluster([0], [0], [3]).check_bounds(hand_tensor)

    def test_contains(self):
        big = Tricluster([0, 1, 2], [0, 1], [0, 1])
        assert big.contains(Tricluster([1], [0], [1]))
        assert not Tricluster([1], [0], [1]).contains(big)


class TestPattern:
    def test_constant_block(self, hand_tensor):
        tc = Tricluster([0, 1], [0, 1], [0, 1])
        pat = extract_pattern(hand_tensor, tc)
        assert pat.is_constant
        assert pat.values.tolist() == [[0, 0], [1, 1]]
        assert pat.slice(1) == {0: 0, 1: 1}
        assert pat.cells[(1, 0)] == 1
        assert pattern_support(hand_tensor, tc, pat) == 2

    def test_modal_value_and_warning(self, hand_tensor):
        tc = Tricluster([0, 1, 2], [0], [1])  # values 0, 0, 1
        with pytest.warns(NonConstantCellWarning):
            pat = extract_pattern(hand_tensor, tc)
        assert pat.values.tolist() == [[0]]
        assert pat.non_constant == {(0, 1)}
        assert pattern_support(hand_tensor, tc, pat) == 2

    def test_ties_go_to_lowest_code(self, hand_tensor):
        tc = Tricluster([0, 3], [0], [0])  # values 0, 1
        assert extract_pattern(hand_tensor, tc, warn=False).values.tolist() == [[0]]

    def test_missing_cells_raise(self):
        t = from_codes(np.array([[[0, -1]], [[0, 0]]]), 2)
        with pytest.raises(MissingDataError):
            extract_pattern(t, Tricluster([0, 1], [0], [0, 1]))

    def test_real_variables_raise(self):
        with pytest.raises(TypeError):
            extract_pattern(Tensor3(np.zeros((2, 1, 1))), Tricluster([0], [0], [0]))

    def test_labels(self):
        t = Tensor3(np.array([[[0.0, 2.0]]]), (VariableDomain.ordinal(["a", "b", "c"]),))
        pat = extract_pattern(t, Tricluster([0], [0], [0, 1]))
        assert pat.labels(t) == [["a", "c"]]

    def test_shape_checked(self):
        with pytest.raises(ValueError):
            Pattern((0,), (0, 1), np.zeros((2, 2)))


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    n=st.integers(2, 12),
    L=st.integers(2, 4),
)
def test_support_bounds(seed, n, L):
    rng = np.random.default_rng(seed)
    codes = rng.integers(0, L, size=(n, 3, 3))
    I = rng.choice(n, int(rng.integers(1, n + 1)), replace=False)
    tc = Tricluster(I, [0, 2], [1, 2])
    planted = codes.copy()
    planted[np.ix_(tc.obs_idx, tc.var_idx, tc.ctx_idx)] = 1
    t = from_codes(codes, L)
    pat = extract_pattern(t, tc, warn=False)
    # cell-wise modes need not co-occur in any single row
    assert 0 <= pattern_support(t, tc, pat) <= len(I)
    single = Tricluster(I, [0], [1])
    assert pattern_support(t, single, extract_pattern(t, single, warn=False)) >= 1
    tp = from_codes(planted, L)
    pp = extract_pattern(tp, tc)
    assert pp.is_constant and pattern_support(tp, tc, pp) == len(I)
