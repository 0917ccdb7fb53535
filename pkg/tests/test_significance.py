import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from trisig.estimation import EmpiricalTables, UniformTables
from trisig.exceptions import UnsupportedProfileError, ZeroProbabilityWarning
from trisig.multiplicity import BH_SIGNIFICANT, NOT_SIGNIFICANT
from trisig.significance import (
    MD,
    MI,
    TC,
    AssumptionProfile,
    TriclusterSignificance,
    adjust,
    assess,
    binomial_tail,
    log_comb,
    min_observations,
    pattern_prob,
    span_correction,
)
from trisig.tensor import Pattern, Tricluster, extract_pattern, from_codes

TC_00 = Tricluster([0, 1], [0], [0, 1])  # variable 0 reads 0, 0 in both rows


@pytest.mark.parametrize(
    "var_dep, ctx_model, expected",
    [(MI, MI, 3 / 8), (MD, MI, 3 / 8), (MI, MD, 3 / 4), (MD, MD, 3 / 4), (MI, TC, 2 / 5), (MD, TC, 2 / 5)],
)
def test_pattern_prob_by_hand(hand_tensor, var_dep, ctx_model, expected):
    pat = extract_pattern(hand_tensor, TC_00)
    lp = pattern_prob(hand_tensor, TC_00, pat, AssumptionProfile(var_dep, ctx_model), EmpiricalTables(hand_tensor))
    assert math.exp(lp) == pytest.approx(expected, rel=1e-12)


def test_two_variable_joint_vs_product(hand_tensor):
    tc = Tricluster([0, 1], [0, 1], [0])  # slice (0, 1)
    pat = extract_pattern(hand_tensor, tc)
    tables = EmpiricalTables(hand_tensor)
    mi = pattern_prob(hand_tensor, tc, pat, AssumptionProfile(MI, MI), tables)
    md = pattern_prob(hand_tensor, tc, pat, AssumptionProfile(MD, MI), tables)
    assert math.exp(mi) == pytest.approx(0.75 * 0.5)  # P(y0=0) P(y1=1) in z0
    assert math.exp(md) == pytest.approx(0.5)  # 2 of 4 rows show both


def test_uniform_tables_give_closed_form():
    t = from_codes(np.zeros((5, 6, 10), dtype=int), 3, temporal=True)
    tc = Tricluster(range(5), [0, 1], [2, 3, 4])
    pat = Pattern(tc.var_idx, tc.ctx_idx, np.zeros((2, 3)))
    u = UniformTables(t.cardinalities, t.n_ctx)
    md = pattern_prob(t, tc, pat, AssumptionProfile(MI, MD), u)
    tcp = pattern_prob(t, tc, pat, AssumptionProfile(MI, TC), u)
    assert math.exp(md) == pytest.approx(3.0**-6 * math.comb(10, 3))
    assert math.exp(tcp) == pytest.approx(3.0**-6 * 8)


def test_zero_probability_warns():
    t = from_codes(np.array([[[0, 1]], [[0, 1]]]), 2, temporal=True)
    pat = Pattern((0,), (0, 1), np.array([[1, 0]]))
    with pytest.warns(ZeroProbabilityWarning):
        lp = pattern_prob(t, None, pat, AssumptionProfile(MI, MI), EmpiricalTables(t))
    assert lp == -math.inf


def test_profile_validation(hand_tensor):
    with pytest.raises(ValueError):
        AssumptionProfile("xx")
    with pytest.raises(ValueError):
        AssumptionProfile(MI, "markov")
    with pytest.raises(ValueError):
        AssumptionProfile(smoothing=-1)
    with pytest.raises(UnsupportedProfileError):
        AssumptionProfile(MI, TC).check_tensor(hand_tensor.replace(temporal=False))
    with pytest.raises(UnsupportedProfileError):
        AssumptionProfile(MI, TC).check_tricluster(Tricluster([0], [0], [0, 2]))


class TestBinomialTail:
    @pytest.mark.parametrize("p, n, k", [(0.3, 50, 20), (0.01, 1000, 30), (0.5, 10, 1), (0.9, 200, 150), (1e-6, 1000, 3)])
    def test_matches_scipy(self, p, n, k):
        ref = math.log(stats.binom.sf(k - 1, n, p))
        assert binomial_tail(math.log(p), n, k) == pytest.approx(ref, rel=1e-10)

    def test_hand_value(self):
        assert math.exp(binomial_tail(math.log(3 / 8), 4, 2)) == pytest.approx(1971 / 4096)

    def test_edges(self):
        assert binomial_tail(math.log(0.2), 10, 0) == 0.0
        assert binomial_tail(0.0, 10, 10) == 0.0
        assert binomial_tail(0.7, 10, 10) == 0.0  # p > 1 is clamped
        assert binomial_tail(-math.inf, 10, 1) == -math.inf
        with pytest.raises(ValueError):
            binomial_tail(math.log(0.5), 10, 11)

    def test_no_underflow(self):
        lp = binomial_tail(math.log(1e-3), 1000, 900)
        assert -math.inf < lp < -5000

    @settings(max_examples=100, deadline=None)
    @given(st.floats(1e-8, 0.999), st.integers(1, 300), st.data())
    def test_monotone_in_k(self, p, n, data):
        k = data.draw(st.integers(0, n - 1))
        assert binomial_tail(math.log(p), n, k + 1) <= binomial_tail(math.log(p), n, k) + 1e-12


def test_log_comb():
    assert log_comb(50, 3) == math.log(19600)
    assert log_comb(5, 0) == 0.0
    assert log_comb(3, 5) == -math.inf
    assert log_comb(200_000, 2) == pytest.approx(math.log(200_000 * 199_999 / 2))


def test_span_correction_caps_at_one():
    assert math.exp(span_correction(math.log(1e-8), 50, 3)) == pytest.approx(1.96e-4)
    assert span_correction(math.log(0.1), 50, 3) == 0.0


class TestMinObservations:
    @staticmethod
    def scan(p, n, alpha, factor, inclusive):
        shift = 0 if inclusive else 1
        for i in range(1, n + 1 - shift):
            if factor * math.exp(binomial_tail(math.log(p), n, i + shift)) < alpha:
                return i
        return None

    @pytest.mark.parametrize("inclusive", [False, True])
    @pytest.mark.parametrize("p", [0.5, 0.0784, 0.003, 1e-5, 0.9])
    @pytest.mark.parametrize("factor", [1, 1225])
    def test_matches_linear_scan(self, p, factor, inclusive):
        assert min_observations(p, 300, 0.01, factor, inclusive) == self.scan(p, 300, 0.01, factor, inclusive)

    @pytest.mark.parametrize(
        "p, factor, expected",
        [(0.0784, 1, 99), (0.0784, 19600, 123), (0.604938, 1, 641), (0.604938, 1225, 671)],
    )
    def test_published_sizes(self, p, factor, expected):
        assert min_observations(p, 1000, 0.01, factor) == expected

    def test_inclusive_is_one_more(self):
        assert min_observations(0.0784, 1000, 0.01, inclusive=True) == 100

    def test_not_assessable(self):
        assert min_observations(1.96, 1000) is None
        assert min_observations(0.999, 10) is None

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            min_observations(0.1, 100, alpha=1.5)
        with pytest.raises(ValueError):
            min_observations(0.1, 100, correction_factor=0.5)


class TestAssess:
    def test_result_fields(self, hand_tensor):
        [res] = assess(hand_tensor, [TC_00], AssumptionProfile(MI, MI))
        assert res.shape == (2, 1, 2) and res.n_support == 2
        assert res.assessable and not res.failed and not res.non_constant
        assert res.pvalue_raw == pytest.approx(1971 / 4096)
        assert res.pvalue_span == res.pvalue_raw
        assert res.log10_p_pattern == pytest.approx(math.log10(3 / 8))

    def test_span_correction(self, hand_tensor):
        [res] = assess(hand_tensor, [TC_00], AssumptionProfile(MI, MI, identically_distributed=True))
        assert res.pvalue_span == pytest.approx(2 * 1971 / 4096)

    def test_not_assessable(self):
        codes = np.zeros((4, 1, 6), dtype=int)
        codes[::2] = 1
        t = from_codes(codes, 2)
        [res] = assess(t, [Tricluster([0, 2], [0], [0, 1, 2])], AssumptionProfile(MI, MD))
        # C(6, 3) / 8 > 1
        assert not res.assessable and res.pvalue_raw == 1.0 and res.p_pattern_clamped == 1.0

    def test_failures_are_isolated(self, hand_tensor):
        bad = [Tricluster([0], [0], [5]), TC_00, Tricluster([0, 1], [0], [0, 2])]
        res = assess(hand_tensor, bad, AssumptionProfile(MI, TC))
        assert [r.failed for r in res] == [True, False, True]
        assert "IndexError" in res[0].error and "UnsupportedProfileError" in res[2].error
        assert res[0].pvalue_raw == 1.0

    def test_missing_cells_fail(self):
        t = from_codes(np.array([[[0, -1]], [[0, 0]]]), 2)
        [res] = assess(t, [Tricluster([0, 1], [0], [0, 1])], AssumptionProfile())
        assert "MissingDataError" in res.error

    def test_degenerate_variables_are_dropped(self):
        codes = np.random.default_rng(0).integers(0, 2, size=(10, 3, 2))
        codes[:, 1] = 0
        t = from_codes(codes, [2, 1, 2])
        tc = Tricluster([0, 1], [0, 1], [0])
        [res] = assess(t, [tc], AssumptionProfile(identically_distributed=True))
        assert res.shape == (2, 1, 1)
        [direct] = assess(t, [Tricluster([0, 1], [0], [0])], AssumptionProfile(identically_distributed=True))
        # |Y| counts the two informative variables only
        assert res.log_pvalue_span == direct.log_pvalue_span
        assert res.log_pvalue_span == pytest.approx(min(res.log_pvalue_raw + math.log(2), 0.0))

    def test_order_preserved_with_threads(self, rng):
        codes = rng.integers(0, 3, size=(60, 4, 5))
        t = from_codes(codes, 3, temporal=True)
        tcs = [Tricluster(rng.choice(60, 5, replace=False), [j], [k, k + 1]) for j in range(4) for k in range(4)]
        serial = assess(t, tcs, AssumptionProfile(MI, TC), n_jobs=1)
        threaded = assess(t, tcs, AssumptionProfile(MI, TC), n_jobs=4)
        assert [r.log_pvalue_raw for r in serial] == [r.log_pvalue_raw for r in threaded]

    def test_env_thread_cap(self, hand_tensor, monkeypatch):
        monkeypatch.setenv("TRISIG_THREADS", "0")
        assert len(assess(hand_tensor, [TC_00, TC_00], AssumptionProfile())) == 2

    def test_empty_batch(self, hand_tensor):
        assert assess(hand_tensor, [], AssumptionProfile()) == []
        assert len(adjust([])) == 0


class TestEstimator:
    def test_params_and_clone(self):
        est = TriclusterSignificance(var_dep=MD, ctx_model=TC, fdr=0.1)
        params = clone(est).get_params()
        assert params["var_dep"] == MD and params["ctx_model"] == TC and params["fdr"] == 0.1

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            TriclusterSignificance().assess([TC_00])

    def test_auto_gate(self, hand_tensor):
        est = TriclusterSignificance().fit(hand_tensor)
        assert est.gof_ is not None and est.profile_.identically_distributed

    @pytest.mark.parametrize("mode, expected", [("on", True), ("off", False)])
    def test_forced_span_correction(self, hand_tensor, mode, expected):
        est = TriclusterSignificance(span_correction=mode).fit(hand_tensor)
        assert est.gof_ is None and est.profile_.identically_distributed is expected

    @pytest.mark.parametrize(
        "kwargs", [dict(span_correction="maybe"), dict(alpha=0.0), dict(fdr=1.0)]
    )
    def test_bad_params(self, hand_tensor, kwargs):
        with pytest.raises(ValueError):
            TriclusterSignificance(**kwargs).fit(hand_tensor)

    def test_tc_needs_temporal(self, hand_tensor):
        with pytest.raises(UnsupportedProfileError):
            TriclusterSignificance(ctx_model=TC).fit(hand_tensor.replace(temporal=False))

    def test_real_tensor_rejected(self):
        with pytest.raises(TypeError):
            TriclusterSignificance().fit(np.zeros((3, 2, 2)))

    def test_report_and_predict(self):
        rng = np.random.default_rng(5)
        codes = rng.integers(0, 4, size=(300, 6, 6))
        codes[:60, :3, 1:4] = 2
        t = from_codes(codes, 4, temporal=True)
        planted = Tricluster(range(60), range(3), [1, 2, 3], contiguous=True)
        noise = Tricluster(rng.choice(np.arange(60, 300), 60, replace=False), [4, 5], [0, 1])
        est = TriclusterSignificance(ctx_model=TC).fit(t)
        results, report = est.report([planted, noise])
        assert results[0].n_support == 60
        assert report.tiers == [BH_SIGNIFICANT, NOT_SIGNIFICANT]
        assert est.predict([planted, noise]).tolist() == report.tiers
        assert est.pattern_log_proba(planted) == pytest.approx(results[0].log_p_pattern)
