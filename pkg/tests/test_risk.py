from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from logprivacy import (
    Aggregation,
    BkType,
    EventLog,
    case_disclosure,
    enumerate_candidates,
    risk_profile,
    trace_disclosure,
)
from oracles import naive_case_disclosure, naive_trace_disclosure, random_log

KINDS = {"set": BkType.SET, "mult": BkType.MULTISET, "seq": BkType.SEQUENCE}


class TestGoldenValues:
    def test_case_disclosure_is_quarter_for_both_logs(self, example2_l1, example2_l2):
        for log in (example2_l1, example2_l2):
            index = enumerate_candidates(log, BkType.SET, 1)
            assert case_disclosure(index) == 0.25

    def test_trace_disclosure_separates_the_logs(self, example2_l1, example2_l2):
        i1 = enumerate_candidates(example2_l1, BkType.SET, 1)
        i2 = enumerate_candidates(example2_l2, BkType.SET, 1)
        assert trace_disclosure(i1) == 0.0
        assert trace_disclosure(i2) == 1.0


class TestAggregations:
    def test_worst_case_uniqueness_reaches_one(self):
        # Pairwise non-matching traces at l=2: {a,b} identifies the first trace.
        log = EventLog.from_traces([("a", "b"), ("b", "c"), ("c", "a")])
        index = enumerate_candidates(log, BkType.SET, 2)
        assert case_disclosure(index, Aggregation.WORST) == 1.0

    def test_worst_dominates_average(self):
        rng = random.Random(5)
        for _ in range(30):
            log = random_log(rng)
            for kind in BkType:
                for size in (1, 2):
                    index = enumerate_candidates(log, kind, size)
                    if index.candidate_count == 0:
                        continue
                    # max >= mean, up to float-summation dust in the mean
                    assert case_disclosure(index, Aggregation.WORST) >= case_disclosure(index) - 1e-12
                    assert trace_disclosure(index, Aggregation.WORST) >= trace_disclosure(index) - 1e-12

    def test_worst_trace_disclosure_uses_minimal_entropy(self):
        # {a} matches two copies of one variant (zero entropy); {c} matches a
        # uniform pair (maximal entropy), so worst picks the determined one.
        log = EventLog.from_counts({("a", "b"): 2, ("c", "d"): 1, ("c", "e"): 1})
        index = enumerate_candidates(log, BkType.SET, 1)
        assert trace_disclosure(index, Aggregation.WORST) == 1.0
        assert trace_disclosure(index, Aggregation.AVERAGE) == pytest.approx(1 - 1 / 5)


class TestDegenerateLogs:
    def test_single_variant_log_everywhere(self):
        log = EventLog.from_counts({("a", "b", "a"): 7})
        for kind in BkType:
            for size in (1, 2, 3):
                index = enumerate_candidates(log, kind, size)
                if index.candidate_count == 0:
                    continue
                for agg in Aggregation:
                    assert case_disclosure(index, agg) == pytest.approx(1 / 7)
                    assert trace_disclosure(index, agg) == 1.0

    def test_all_singleton_projections_give_full_disclosure(self):
        log = EventLog.from_traces([("a", "b"), ("c", "d")])
        index = enumerate_candidates(log, BkType.SET, 2)
        assert all(card == 1 for card in index.cardinalities())
        assert trace_disclosure(index) == 1.0
        assert case_disclosure(index, Aggregation.WORST) == 1.0

    def test_uniform_multi_variant_projections_give_zero_td(self):
        log = EventLog.from_traces([("a", "b"), ("a", "c")])
        index = enumerate_candidates(log, BkType.SET, 1)
        # {a} matches both variants uniformly (ratio 1); {b}, {c} are singletons.
        assert trace_disclosure(index) == pytest.approx(1 - (1.0 + 0.0 + 0.0) / 3)

    def test_empty_index_is_a_domain_error(self, example1_log):
        empty = enumerate_candidates(example1_log, BkType.SEQUENCE, 9)
        with pytest.raises(ValueError, match="no candidates"):
            case_disclosure(empty)
        with pytest.raises(ValueError, match="no candidates"):
            trace_disclosure(empty)


class TestOracleEquivalence:
    @pytest.mark.parametrize("kind", ["set", "mult", "seq"])
    def test_direct_formula_transcription(self, kind):
        rng = random.Random(31)
        checked = 0
        for _ in range(40):
            log = random_log(rng)
            for size in (1, 2, 3):
                index = enumerate_candidates(log, KINDS[kind], size)
                if index.candidate_count == 0:
                    continue
                assert case_disclosure(index) == pytest.approx(
                    naive_case_disclosure(log, kind, size), abs=1e-9
                )
                assert trace_disclosure(index) == pytest.approx(
                    naive_trace_disclosure(log, kind, size), abs=1e-9
                )
                checked += 1
        assert checked > 50


class TestRiskProfile:
    def test_grid_shape(self, example1_log):
        profile = risk_profile(example1_log, [BkType.SET], [1, 2])
        assert set(profile.scores) == {(BkType.SET, 1), (BkType.SET, 2)}
        assert not profile.skipped and not profile.failures
        assert profile.log_stats.n_traces == 50

    def test_oversized_cells_are_recorded_absent(self, example1_log):
        profile = risk_profile(example1_log, [BkType.SEQUENCE], [1, 9])
        assert (BkType.SEQUENCE, 1) in profile.scores
        assert profile.skipped[(BkType.SEQUENCE, 9)] == "no candidates at this size"

    def test_cap_failures_do_not_abort_other_cells(self, example1_log):
        profile = risk_profile(example1_log, [BkType.SET], [1, 2], cap=5)
        assert (BkType.SET, 1) in profile.scores  # 4 candidates fit the cap
        assert (BkType.SET, 2) in profile.failures  # 6 candidates do not
        assert "cap" in profile.failures[(BkType.SET, 2)]

    def test_empty_sizes_rejected(self, example1_log):
        with pytest.raises(ValueError):
            risk_profile(example1_log, [BkType.SET], [])
        with pytest.raises(ValueError):
            risk_profile(example1_log, [BkType.SET], [0])

    def test_scores_carry_grid_metadata(self, example1_log):
        profile = risk_profile(
            example1_log, [BkType.MULTISET], [2], aggregation=Aggregation.WORST
        )
        score = profile.scores[(BkType.MULTISET, 2)]
        assert score.bk_type is BkType.MULTISET
        assert score.size == 2
        assert score.aggregation is Aggregation.WORST
        assert score.n_candidates > 0


@pytest.mark.skipif(
    __import__("realdata").BPIC_PATH is None,
    reason="BPIC-2017-APP log not present under data/",
)
def test_low_uniqueness_log_has_low_cd_but_high_td():
    from realdata import BPIC_PATH, load_real_log

    log = load_real_log(BPIC_PATH)
    profile = risk_profile(log, [BkType.SET], range(1, 7))
    for score in profile.scores.values():
        assert score.cd < 0.1
        assert score.td > 0.5


traces_strategy = st.lists(
    st.lists(st.sampled_from("abcd"), min_size=1, max_size=5).map(tuple),
    min_size=1,
    max_size=6,
)


@given(traces_strategy, st.sampled_from(list(BkType)), st.integers(min_value=1, max_value=3))
@settings(max_examples=120, deadline=None)
def test_scores_stay_in_unit_interval(traces, bk_type, size):
    log = EventLog.from_traces(traces)
    index = enumerate_candidates(log, bk_type, size)
    if index.candidate_count == 0:
        return
    for agg in Aggregation:
        assert 0.0 <= case_disclosure(index, agg) <= 1.0
        assert 0.0 <= trace_disclosure(index, agg) <= 1.0
