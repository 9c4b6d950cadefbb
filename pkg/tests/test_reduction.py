"""Paired snapshot construction and its exhaustive certification."""

import json
from fractions import Fraction

import pytest

from filterbounds.core import UniverseParams
from filterbounds.filters import (
    FAIL_STATE,
    FilterState,
    FingerprintMultisetModel,
    Seed,
)
from filterbounds.reduction import (
    PairedState,
    PairedStaticFilter,
    ReductionReport,
    check_reduction,
    pair_init,
    pair_query,
    parse_paired_state,
)
from filterbounds.witness import EnumerationTooLarge, state_after

S0 = Seed(0, 8)


class FailingInsert(FingerprintMultisetModel):
    """Stub whose inserts always fail; plain runs cannot fail otherwise."""

    def insert_state(self, seed, state, x):
        return FAIL_STATE


class TestPairedState:
    def test_space_is_sum_of_components(self):
        pair = PairedState(FilterState(3, 5), FilterState(0, 5))
        assert pair.space_bits == 10
        assert not pair.is_fail

    def test_fail_pair(self):
        pair = PairedState(FAIL_STATE, FAIL_STATE)
        assert pair.is_fail
        assert pair.space_bits == 0
        assert pair.serialize() == "FAIL"

    def test_serialize_round_trip(self):
        pair = PairedState(FilterState(5, 5), FilterState(0, 0))
        text = pair.serialize()
        assert text == "5:00101/0:"
        assert parse_paired_state(text) == pair

    @pytest.mark.parametrize(
        "text", ["FAIL", "5:00101", "3:01/3:010", "x:1/1:0", "1:2/1:0"]
    )
    def test_parse_rejects_malformed(self, text):
        with pytest.raises(ValueError):
            parse_paired_state(text)


class TestPairInit:
    def test_requires_full_capacity(self, noisy62):
        with pytest.raises(ValueError):
            pair_init(noisy62, S0, (1,))

    def test_components_are_the_two_snapshots(self, noisy62, seeds8):
        for seed in seeds8[:8]:
            pair = pair_init(noisy62, seed, (1, 4))
            assert pair.after_insert == state_after(noisy62, seed, (1, 4))
            assert pair.after_delete == state_after(
                noisy62, seed, (1, 4), (1, 4)
            )

    def test_failed_insert_fails_the_pair(self):
        model = FailingInsert(UniverseParams(6, 2), Fraction(1, 2))
        pair = pair_init(model, S0, (0, 1))
        assert pair.is_fail


class TestPairQuery:
    def test_truth_table(self, exact62):
        # answer is: insert snapshot yes AND delete snapshot no
        full = exact62.encode_set((3,))
        empty = exact62.encode_set(())
        assert pair_query(exact62, S0, PairedState(full, empty), 3) == 1
        assert pair_query(exact62, S0, PairedState(full, full), 3) == 0
        assert pair_query(exact62, S0, PairedState(empty, empty), 3) == 0
        assert pair_query(exact62, S0, PairedState(empty, full), 3) == 0

    def test_fail_answers_zero_without_raising(self, exact62):
        pair = PairedState(FAIL_STATE, FAIL_STATE)
        assert pair_query(exact62, S0, pair, 0) == 0


class TestPairedStaticFilter:
    def test_delegates_and_describes(self, noisy62):
        static = PairedStaticFilter(noisy62)
        assert static.params == noisy62.params
        state = static.init_state(S0, (1, 4))
        assert state == pair_init(noisy62, S0, (1, 4))
        assert static.query(S0, state, 1) == pair_query(noisy62, S0, state, 1)
        assert static.describe() == f"paired({noisy62.describe()})"

    def test_no_false_positives_on_noisy_base(self, noisy62, seeds8):
        # the noise yeses survive deletion and get subtracted away
        static = PairedStaticFilter(noisy62)
        for seed in seeds8:
            state = static.init_state(seed, (0, 3))
            for x in (1, 2, 4, 5):
                assert static.query(seed, state, x) == 0


def expected_noisy_fn_rate(noisy, seeds, dataset, x):
    """Independent oracle: the pair misses x exactly when x is noise."""
    hits = sum(x in noisy.noise_set(seed) for seed in seeds)
    return Fraction(hits, len(seeds))


@pytest.fixture(scope="module")
def noisy_report(noisy62, seeds8):
    return check_reduction(noisy62, seeds8)


class TestCheckReduction:
    def test_shape(self, noisy_report):
        assert noisy_report.u == 6 and noisy_report.n == 2
        assert noisy_report.seed_count == 256
        assert noisy_report.seed_bits == 8
        assert noisy_report.dataset_count == 15

    def test_zero_false_positives_and_complete(self, noisy_report):
        assert noisy_report.false_positive_count == 0
        assert noisy_report.completeness_violations == 0

    def test_fn_rates_match_noise_oracle(self, noisy_report, noisy62, seeds8):
        for (ds, x), rate in noisy_report.fn_rate_by_cell.items():
            assert rate == expected_noisy_fn_rate(noisy62, seeds8, ds, x)
        assert noisy_report.max_false_negative_rate == Fraction(43, 256)

    def test_fn_equals_delete_snapshot_fp(self, noisy_report):
        assert noisy_report.fn_matches_delete_fp

    def test_space_doubles_one_component(self, noisy_report):
        # ExactSet over [6] with n = 2 encodes 22 subsets in 5 bits
        assert noisy_report.space_pair_bits == 10
        assert noisy_report.space_budget_bits == 10
        assert noisy_report.space_pair_bits <= noisy_report.space_budget_bits

    def test_no_failures(self, noisy_report):
        assert noisy_report.fail_fraction == 0

    def test_exact_base_has_no_errors_at_all(self, exact62, seeds8):
        report = check_reduction(exact62, seeds8[:4])
        assert report.false_positive_count == 0
        assert report.max_false_negative_rate == 0
        assert all(rate == 0 for rate in report.fn_rate_by_cell.values())

    def test_fingerprint_base_shows_false_positives(self, seeds8):
        # deleting the dataset drains the multiset, so nothing is left to
        # subtract collided yeses at the insert snapshot
        model = FingerprintMultisetModel(
            UniverseParams(6, 2), Fraction(1, 2), fingerprint_bits=2
        )
        report = check_reduction(model, seeds8)
        assert report.false_positive_count > 0
        assert report.max_false_negative_rate == 0

    def test_failed_pairs_are_counted_not_scored(self, seeds8):
        model = FailingInsert(UniverseParams(6, 2), Fraction(1, 2))
        report = check_reduction(model, seeds8[:4])
        assert report.fail_fraction == 1
        assert report.max_false_negative_rate == 0
        assert report.space_pair_bits == 0

    def test_deterministic(self, noisy62, seeds8):
        assert check_reduction(noisy62, seeds8[:16]) == check_reduction(
            noisy62, seeds8[:16]
        )

    def test_empty_seed_list(self, noisy62):
        report = check_reduction(noisy62, [])
        assert report.seed_count == 0
        assert report.fail_fraction == 0
        assert report.max_false_negative_rate == 0

    def test_dataset_budget_guard(self, noisy62, seeds8):
        with pytest.raises(EnumerationTooLarge):
            check_reduction(noisy62, seeds8[:1], dataset_budget=10)

    def test_seed_budget_guard(self, noisy62):
        seeds = [Seed(0, 17)] * ((1 << 16) + 1)
        with pytest.raises(EnumerationTooLarge):
            check_reduction(noisy62, seeds)


class TestReportJson:
    def test_fields_and_fraction_strings(self, noisy62, seeds8):
        report = check_reduction(noisy62, seeds8)
        blob = report.to_json_dict()
        assert blob["instance"] == {
            "u": 6,
            "n": 2,
            "model": noisy62.describe(),
            "seed_bits": 8,
        }
        assert blob["max_false_negative_rate"] == "43/256"
        assert blob["fail_fraction"] == "0/1"
        parsed = json.loads(report.to_json())
        assert parsed == blob

    def test_json_is_stable(self, noisy62, seeds8):
        report = check_reduction(noisy62, seeds8[:8])
        assert report.to_json() == report.to_json()
