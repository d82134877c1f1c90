"""Tests for the four-step aggregation engine against brute-force oracles."""

import pickle

import numpy as np
import pytest

from oracles import exhaustive_best_assignment

from specagg.aggregation import (
    UNASSIGNED,
    PredictionReport,
    RelayAssignment,
    aggregate_and_score,
    allocate_spectrum,
    allocation_rows,
    assign_relays,
    common_free_spectrum,
    prediction_bits,
    two_slot_availability,
    write_allocation_csv,
)
from specagg.markov import SpectrumState
from specagg.radio import RadioParams
from specagg.topology import Topology

GOOD, BAD, BUSY = SpectrumState.GOOD, SpectrumState.BAD, SpectrumState.BUSY


def topo(coverage):
    coverage = np.asarray(coverage, dtype=bool)
    return Topology(users=coverage.shape[1], relays=coverage.shape[0], coverage=coverage)


def random_instance(rng, n_bands=None, n_relays=None, n_users=None):
    n_bands = n_bands or rng.integers(1, 7)
    n_relays = n_relays or rng.integers(1, 5)
    n_users = n_users or rng.integers(1, 4)
    owner = rng.integers(-1, n_users, size=n_relays)
    common_user = rng.integers(-1, n_users, size=n_bands)
    bits = rng.integers(0, 2, size=(n_relays, n_bands)).astype(np.int8)
    snr = rng.uniform(0.1, 50.0, size=(n_bands, n_relays))
    return n_users, owner, common_user, bits, snr


class TestAvailabilityHelpers:
    def test_two_slot_rule(self):
        sensed = np.array([GOOD, BAD, BUSY, GOOD])
        predicted = np.array([GOOD, BUSY, GOOD, BAD])
        np.testing.assert_array_equal(
            two_slot_availability(sensed, predicted), [True, False, False, True]
        )

    def test_bits_free_only_when_predicted_good(self):
        predicted = np.array([GOOD, BAD, BUSY])
        np.testing.assert_array_equal(prediction_bits(predicted), [0, 1, 1])

    def test_prediction_report_wrapper(self):
        report = PredictionReport.from_states(np.array([[GOOD, BUSY], [BAD, GOOD]]))
        np.testing.assert_array_equal(report.bits, [[0, 1], [1, 0]])
        with pytest.raises(ValueError):
            PredictionReport(np.array([[0, 2]]))


class TestAssignRelays:
    def test_single_pair_relay_joins_it(self):
        topology = topo([[False, False, True]])
        assignment = assign_relays(topology, np.array([[1.0, 1.0, 1.0]]))
        assert assignment.owner[0] == 2

    def test_uncovered_relay_dropped(self):
        topology = topo([[False, False]])
        assignment = assign_relays(topology, np.zeros((1, 2)))
        assert assignment.owner[0] == UNASSIGNED
        assert list(assignment.dropped) == [0]

    def test_multi_coverage_takes_best_throughput(self):
        topology = topo([[True, True]])
        assignment = assign_relays(topology, np.array([[5e6, 7e6]]))
        assert assignment.owner[0] == 1

    def test_two_way_brute_force(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            rates = rng.uniform(1.0, 10.0, size=(1, 2))
            topology = topo([[True, True]])
            assignment = assign_relays(topology, rates)
            best = 0 if rates[0, 0] >= rates[0, 1] else 1
            assert assignment.owner[0] == best

    def test_tie_breaks_to_lowest_user(self):
        topology = topo([[True, True, True]])
        assignment = assign_relays(topology, np.array([[3.0, 3.0, 3.0]]))
        assert assignment.owner[0] == 0

    def test_partition_property(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            coverage = rng.random((6, 3)) < 0.5
            topology = topo(coverage)
            rates = rng.uniform(0, 1, size=(6, 3))
            assignment = assign_relays(topology, rates)
            owned = {int(r) for u in range(3) for r in assignment.relays_of(u)}
            assert owned | set(map(int, assignment.dropped)) == set(range(6))
            # an assigned relay always covers its pair
            for relay, user in enumerate(assignment.owner):
                if user >= 0:
                    assert coverage[relay, user]


class TestCommonFreeSpectrum:
    def test_band_free_for_single_user_joins_it(self):
        assignment = RelayAssignment(users=2, owner=np.array([0, 1]))
        source_avail = np.array([[True], [False]])
        relay_avail = np.array([[True], [True]])
        snr = np.array([[1.0, 9.0]])
        common = common_free_spectrum(assignment, source_avail, relay_avail, snr)
        assert common.band_user[0] == 0

    def test_band_busy_everywhere_dropped(self):
        assignment = RelayAssignment(users=2, owner=np.array([0, 1]))
        source_avail = np.array([[True], [True]])
        relay_avail = np.array([[False], [False]])
        snr = np.array([[1.0, 9.0]])
        common = common_free_spectrum(assignment, source_avail, relay_avail, snr)
        assert common.band_user[0] == UNASSIGNED

    def test_contested_band_goes_to_owner_of_best_relay(self):
        assignment = RelayAssignment(users=2, owner=np.array([0, 1]))
        source_avail = np.array([[True], [True]])
        relay_avail = np.array([[True], [True]])
        snr = np.array([[1.0, 9.0]])  # relay 1 (user 1) is globally best
        common = common_free_spectrum(assignment, source_avail, relay_avail, snr)
        assert common.band_user[0] == 1

    def test_winner_outside_any_set_drops_band(self):
        # the strongest free relay is unowned: the band is dropped, not
        # reassigned to the runner-up
        assignment = RelayAssignment(users=2, owner=np.array([0, 1, UNASSIGNED]))
        source_avail = np.array([[True], [True]])
        relay_avail = np.array([[True], [True], [True]])
        snr = np.array([[1.0, 2.0, 50.0]])
        common = common_free_spectrum(assignment, source_avail, relay_avail, snr)
        assert common.band_user[0] == UNASSIGNED

    def test_exhaustive_candidate_scan(self):
        # replicate the selection rule with plain loops over all
        # (user, relay) candidates and compare band by band
        rng = np.random.default_rng(8)
        for _ in range(300):
            n_users = int(rng.integers(1, 4))
            n_relays = int(rng.integers(1, 6))
            n_bands = int(rng.integers(1, 8))
            owner = rng.integers(-1, n_users, size=n_relays)
            assignment = RelayAssignment(users=n_users, owner=owner)
            source_avail = rng.random((n_users, n_bands)) < 0.7
            relay_avail = rng.random((n_relays, n_bands)) < 0.7
            snr = rng.uniform(0.1, 20.0, size=(n_bands, n_relays))

            expected = np.full(n_bands, UNASSIGNED)
            for band in range(n_bands):
                candidates = [
                    user
                    for user in range(n_users)
                    if source_avail[user, band]
                    and any(
                        owner[r] == user and relay_avail[r, band]
                        for r in range(n_relays)
                    )
                ]
                if not candidates:
                    continue
                if len(candidates) == 1:
                    expected[band] = candidates[0]
                    continue
                free = [r for r in range(n_relays) if relay_avail[r, band]]
                winner = max(free, key=lambda r: (snr[band, r], -r))
                if owner[winner] in candidates:
                    expected[band] = owner[winner]

            common = common_free_spectrum(assignment, source_avail, relay_avail, snr)
            np.testing.assert_array_equal(common.band_user, expected)


class TestAllocateSpectrum:
    def test_single_relay_single_band(self):
        assignment = RelayAssignment(users=1, owner=np.array([0]))
        common_user = np.array([0])
        bits = np.zeros((1, 1), dtype=np.int8)
        snr = np.array([[4.0]])
        alloc = allocate_spectrum(
            _common(1, common_user), assignment, bits, snr
        )
        assert alloc.band_relay[0] == 0
        assert alloc.snr_total == 4.0

    def test_fully_occupied_prediction_unallocates(self):
        assignment = RelayAssignment(users=1, owner=np.array([0, 0]))
        common_user = np.array([0])
        bits = np.ones((2, 1), dtype=np.int8)
        snr = np.array([[4.0, 8.0]])
        alloc = allocate_spectrum(_common(1, common_user), assignment, bits, snr)
        assert alloc.band_relay[0] == UNASSIGNED
        assert alloc.snr_total == 0.0
        scored = aggregate_and_score(alloc, RadioParams())
        assert scored.total_throughput_bps == 0.0

    def test_matches_exhaustive_oracle_on_random_instances(self):
        rng = np.random.default_rng(123)
        for _ in range(300):
            n_users, owner, common_user, bits, snr = random_instance(rng)
            assignment = RelayAssignment(users=n_users, owner=owner)
            alloc = allocate_spectrum(
                _common(n_users, common_user), assignment, bits, snr
            )
            best, chosen = exhaustive_best_assignment(common_user, owner, bits, snr)
            assert alloc.snr_total == pytest.approx(best, rel=1e-12, abs=1e-12)
            # with continuous SNRs the maximiser is unique a.s.
            np.testing.assert_array_equal(alloc.band_relay, chosen)

    def test_tie_breaks_to_lowest_relay(self):
        assignment = RelayAssignment(users=1, owner=np.array([0, 0, 0]))
        bits = np.zeros((3, 1), dtype=np.int8)
        snr = np.array([[7.0, 7.0, 7.0]])
        alloc = allocate_spectrum(_common(1, np.array([0])), assignment, bits, snr)
        assert alloc.band_relay[0] == 0


class TestAggregateAndScore:
    def test_empty_allocation(self):
        assignment = RelayAssignment(users=2, owner=np.array([0, 1]))
        alloc = allocate_spectrum(
            _common(2, np.array([UNASSIGNED, UNASSIGNED])),
            assignment,
            np.zeros((2, 2), dtype=np.int8),
            np.ones((2, 2)),
        )
        scored = aggregate_and_score(alloc, RadioParams())
        assert scored.total_throughput_bps == 0.0
        np.testing.assert_array_equal(scored.user_throughput_bps, [0.0, 0.0])

    def test_snr_one_band_at_2mhz(self):
        scored = _score_two_band_case(snrs=[1.0], params=RadioParams(band_width_hz=2e6))
        assert scored.total_throughput_bps == 2e6

    def test_two_band_sum(self):
        scored = _score_two_band_case(snrs=[1.0, 3.0], params=RadioParams(band_width_hz=2e6))
        assert scored.total_throughput_bps == 6e6  # 2 Mb/s + 4 Mb/s

    def test_per_band_sum_oracle(self):
        rng = np.random.default_rng(77)
        params = RadioParams()
        for _ in range(100):
            n_users, owner, common_user, bits, snr = random_instance(rng)
            assignment = RelayAssignment(users=n_users, owner=owner)
            alloc = allocate_spectrum(_common(n_users, common_user), assignment, bits, snr)
            scored = aggregate_and_score(alloc, params)
            expected = sum(
                params.band_width_hz * np.log2(1.0 + alloc.band_snr[band])
                for band in range(len(common_user))
                if alloc.band_relay[band] >= 0
            )
            assert scored.total_throughput_bps == pytest.approx(expected, rel=1e-12)
            assert scored.user_throughput_bps.sum() == pytest.approx(
                scored.total_throughput_bps, rel=1e-9
            )


class TestEngineInvariants:
    def test_aggregation_dominates_any_single_band(self):
        rng = np.random.default_rng(31)
        params = RadioParams()
        for _ in range(100):
            n_users, owner, common_user, bits, snr = random_instance(rng)
            assignment = RelayAssignment(users=n_users, owner=owner)
            alloc = aggregate_and_score(
                allocate_spectrum(_common(n_users, common_user), assignment, bits, snr),
                params,
            )
            for band in np.flatnonzero(alloc.allocated):
                single = params.band_width_hz * np.log2(1.0 + alloc.band_snr[band])
                assert alloc.total_throughput_bps >= single - 1e-9

    def test_freeing_a_bit_never_hurts(self):
        rng = np.random.default_rng(13)
        for _ in range(100):
            n_users, owner, common_user, bits, snr = random_instance(rng)
            assignment = RelayAssignment(users=n_users, owner=owner)
            base = allocate_spectrum(_common(n_users, common_user), assignment, bits, snr)
            ones = np.argwhere(bits == 1)
            if ones.size == 0:
                continue
            relay, band = ones[rng.integers(len(ones))]
            flipped = bits.copy()
            flipped[relay, band] = 0
            better = allocate_spectrum(
                _common(n_users, common_user), assignment, flipped, snr
            )
            assert better.snr_total >= base.snr_total - 1e-12

    def test_conservation_of_allocated_bands(self):
        rng = np.random.default_rng(19)
        for _ in range(100):
            n_users, owner, common_user, bits, snr = random_instance(rng)
            assignment = RelayAssignment(users=n_users, owner=owner)
            alloc = allocate_spectrum(_common(n_users, common_user), assignment, bits, snr)
            grouped = sum(len(v) for v in alloc.relay_bands().values())
            assert grouped == int(alloc.allocated.sum())

    def test_determinism_byte_for_byte(self):
        rng_a = np.random.default_rng(99)
        rng_b = np.random.default_rng(99)
        results = []
        for rng in (rng_a, rng_b):
            n_users, owner, common_user, bits, snr = random_instance(rng)
            assignment = RelayAssignment(users=n_users, owner=owner)
            alloc = aggregate_and_score(
                allocate_spectrum(_common(n_users, common_user), assignment, bits, snr),
                RadioParams(),
            )
            results.append(pickle.dumps(alloc))
        assert results[0] == results[1]


class TestAllocationCsv:
    def test_rows_and_file(self, tmp_path):
        assignment = RelayAssignment(users=1, owner=np.array([0]))
        alloc = aggregate_and_score(
            allocate_spectrum(
                _common(1, np.array([0, UNASSIGNED])),
                assignment,
                np.zeros((1, 2), dtype=np.int8),
                np.array([[2.0], [3.0]]),
            ),
            RadioParams(),
        )
        rows = allocation_rows(5, alloc)
        assert rows[0] == [5, 0, 0, 0, 2.0, 1]
        assert rows[1][:4] == [5, 1, -1, -1] and rows[1][5] == 0
        path = tmp_path / "alloc.csv"
        write_allocation_csv(path, [(5, alloc)])
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "slot,band,user,relay,snr,allocated"
        assert len(lines) == 3


def _common(users, band_user):
    from specagg.aggregation import CommonSpectrumSet

    return CommonSpectrumSet(users=users, band_user=np.asarray(band_user))


def _score_two_band_case(snrs, params):
    n = len(snrs)
    assignment = RelayAssignment(users=1, owner=np.array([0]))
    alloc = allocate_spectrum(
        _common(1, np.zeros(n, dtype=np.int64)),
        assignment,
        np.zeros((1, n), dtype=np.int8),
        np.array(snrs)[:, None],
    )
    return aggregate_and_score(alloc, params)
