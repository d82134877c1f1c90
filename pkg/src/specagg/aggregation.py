"""Four-step spectrum aggregation engine.

Per slot pair the engine takes the network's sensing and prediction
views plus per-(band, relay) SNRs and produces a full allocation:

1. assign each relay to one user pair (or drop it),
2. collect each user's common free bands,
3. give every common band to the best predicted-free relay of its user,
4. group bands by winning relay and score the total throughput.

Every step is a pure function with deterministic tie-breaking (lowest
index wins), so identical inputs produce identical results.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .markov import SpectrumState
from .radio import RadioParams, link_throughput

UNASSIGNED = -1


def two_slot_availability(sensed: np.ndarray, predicted: np.ndarray) -> np.ndarray:
    """Idle-both-slots mask: sensed not Busy now and predicted not Busy next."""
    return (np.asarray(sensed) != SpectrumState.BUSY) & (
        np.asarray(predicted) != SpectrumState.BUSY
    )


def prediction_bits(predicted: np.ndarray) -> np.ndarray:
    """Occupancy bits from predicted states: 0 = free (predicted Good), 1 = occupied."""
    return (np.asarray(predicted) != SpectrumState.GOOD).astype(np.int8)


@dataclass(frozen=True)
class PredictionReport:
    """Per-(relay, band) predicted availability bits (0 free, 1 occupied)."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.int8)
        if bits.ndim != 2 or not np.isin(bits, (0, 1)).all():
            raise ValueError("bits must be a 2-d array of 0/1")
        bits = bits.copy()
        bits.flags.writeable = False
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_states(cls, predicted_relay_states: np.ndarray) -> "PredictionReport":
        return cls(prediction_bits(predicted_relay_states))


@dataclass(frozen=True)
class RelayAssignment:
    """Outcome of step 1: each relay's owning user pair, or dropped.

    ``owner[r]`` is the user index the relay serves, or -1 when dropped.
    """

    users: int
    owner: np.ndarray

    def __post_init__(self):
        owner = np.asarray(self.owner, dtype=np.int64)
        if np.any(owner < UNASSIGNED) or np.any(owner >= self.users):
            raise ValueError("owner entries must be -1 or a valid user index")
        owner = owner.copy()
        owner.flags.writeable = False
        object.__setattr__(self, "owner", owner)

    def relays_of(self, user: int) -> np.ndarray:
        return np.flatnonzero(self.owner == user)

    @property
    def dropped(self) -> np.ndarray:
        return np.flatnonzero(self.owner == UNASSIGNED)


def assign_relays(topology, pair_throughput: np.ndarray) -> RelayAssignment:
    """Step 1: distribute relays to user pairs.

    A relay covering exactly one pair joins that pair.  A relay covering
    several pairs joins the covered pair with the highest relay-to-
    destination throughput (ties to the lowest user index).  A relay
    covering nothing is dropped.

    `pair_throughput[r, i]` must be defined wherever relay r covers
    pair i.
    """
    pair_throughput = np.asarray(pair_throughput, dtype=np.float64)
    if pair_throughput.shape != (topology.relays, topology.users):
        raise ValueError("pair_throughput must be (relays, users)")
    covered = topology.coverage
    n_covered = covered.sum(axis=1)

    scores = np.where(covered, pair_throughput, -np.inf)
    best_pair = scores.argmax(axis=1)  # first max = lowest user index

    owner = np.where(n_covered > 0, best_pair, UNASSIGNED)
    return RelayAssignment(users=topology.users, owner=owner)


@dataclass(frozen=True)
class CommonSpectrumSet:
    """Outcome of step 2: the owning user of every band, or -1 if dropped."""

    users: int
    band_user: np.ndarray

    def __post_init__(self):
        band_user = np.asarray(self.band_user, dtype=np.int64)
        if np.any(band_user < UNASSIGNED) or np.any(band_user >= self.users):
            raise ValueError("band_user entries must be -1 or a valid user index")
        band_user = band_user.copy()
        band_user.flags.writeable = False
        object.__setattr__(self, "band_user", band_user)

    def bands_of(self, user: int) -> np.ndarray:
        return np.flatnonzero(self.band_user == user)

    def sets(self) -> list[np.ndarray]:
        return [self.bands_of(i) for i in range(self.users)]


def common_free_spectrum(
    assignment: RelayAssignment,
    source_available: np.ndarray,
    relay_available: np.ndarray,
    snr: np.ndarray,
) -> CommonSpectrumSet:
    """Step 2: resolve every band to at most one user's common free set.

    A band qualifies for user i when it is available (idle both slots)
    at source i and at one or more of i's relays.  A band qualifying for
    exactly one user joins that user's set.  A contested band goes to
    the owner of the globally best available relay (highest SNR on that
    band, ties to the lowest relay index) -- unless that relay is
    unowned or its owner does not qualify, in which case the band is
    dropped rather than reassigned.

    Args:
        source_available: (users, bands) bool mask.
        relay_available: (relays, bands) bool mask.
        snr: (bands, relays) per-band received SNR of each relay.
    """
    source_available = np.asarray(source_available, dtype=bool)
    relay_available = np.asarray(relay_available, dtype=bool)
    snr = np.asarray(snr, dtype=np.float64)
    users = assignment.users
    n_bands = source_available.shape[1]

    ownership = assignment.owner[None, :] == np.arange(users)[:, None]  # (T, Rr)
    user_relay_free = (ownership.astype(np.int8) @ relay_available.astype(np.int8)) > 0
    candidates = source_available & user_relay_free  # (T, N)
    n_candidates = candidates.sum(axis=0)

    band_user = np.full(n_bands, UNASSIGNED, dtype=np.int64)

    sole = n_candidates == 1
    band_user[sole] = candidates[:, sole].argmax(axis=0)

    contested = n_candidates >= 2
    if contested.any():
        free = relay_available.T  # (N, Rr)
        scores = np.where(free, snr, -np.inf)
        winner = scores.argmax(axis=1)
        winner_owner = assignment.owner[winner]
        owner_qualifies = (winner_owner >= 0) & candidates[
            np.clip(winner_owner, 0, users - 1), np.arange(n_bands)
        ]
        band_user[contested & owner_qualifies] = winner_owner[
            contested & owner_qualifies
        ]
    return CommonSpectrumSet(users=users, band_user=band_user)


@dataclass(frozen=True)
class AllocationResult:
    """Outcome of steps 3-4 for one slot pair.

    ``band_relay[n]`` is the winning relay of band n (-1 when the band
    is unallocated), ``band_snr[n]`` its received SNR (0 when
    unallocated) and ``band_user[n]`` the owning user from step 2.
    ``snr_total`` is the sum of winning SNRs; the throughput fields are
    filled by `aggregate_and_score`.
    """

    users: int
    band_user: np.ndarray
    band_relay: np.ndarray
    band_snr: np.ndarray
    snr_total: float
    total_throughput_bps: float | None = None
    user_throughput_bps: np.ndarray | None = None

    @property
    def allocated(self) -> np.ndarray:
        """Boolean mask of bands that got a relay."""
        return self.band_relay >= 0

    def relay_bands(self) -> dict[int, np.ndarray]:
        """Step-4 grouping: bands aggregated per winning relay."""
        out: dict[int, np.ndarray] = {}
        for relay in np.unique(self.band_relay[self.allocated]):
            out[int(relay)] = np.flatnonzero(self.band_relay == relay)
        return out


def allocate_spectrum(
    common: CommonSpectrumSet,
    assignment: RelayAssignment,
    bits: np.ndarray,
    snr: np.ndarray,
) -> AllocationResult:
    """Step 3: per band, pick the owner's best predicted-free relay.

    Only relays whose prediction bit for the band is 0 are eligible;
    among those the highest SNR wins (ties to the lowest relay index).
    A band with no eligible relay stays unallocated and contributes
    nothing to the SNR total.

    Args:
        bits: (relays, bands) prediction bits, 0 = free.
        snr: (bands, relays) per-band received SNR of each relay.
    """
    bits = np.asarray(bits)
    snr = np.asarray(snr, dtype=np.float64)
    n_bands = common.band_user.shape[0]
    band_user = common.band_user

    owned = assignment.owner[None, :] == band_user[:, None]  # (N, Rr)
    eligible = owned & (bits.T == 0) & (band_user >= 0)[:, None]
    scores = np.where(eligible, snr, -np.inf)
    has_winner = eligible.any(axis=1)
    band_relay = np.where(has_winner, scores.argmax(axis=1), UNASSIGNED)
    band_snr = np.where(has_winner, snr[np.arange(n_bands), band_relay], 0.0)

    return AllocationResult(
        users=common.users,
        band_user=band_user,
        band_relay=band_relay,
        band_snr=band_snr,
        snr_total=float(band_snr.sum()),
    )


def aggregate_and_score(
    allocation: AllocationResult, params: RadioParams
) -> AllocationResult:
    """Step 4: total and per-user throughput of the allocation.

    Each allocated band contributes b*log2(1 + winning SNR); a user's
    capacity is the same sum restricted to that user's bands.
    """
    per_band = np.where(
        allocation.allocated, link_throughput(params, allocation.band_snr), 0.0
    )
    user_throughput = np.zeros(allocation.users)
    alloc = allocation.allocated
    np.add.at(user_throughput, allocation.band_user[alloc], per_band[alloc])
    return replace(
        allocation,
        total_throughput_bps=float(per_band.sum()),
        user_throughput_bps=user_throughput,
    )


def allocation_rows(slot: int, allocation: AllocationResult) -> list[list]:
    """Flatten an allocation into ``slot,band,user,relay,snr,allocated`` rows."""
    rows = []
    for band in range(allocation.band_user.shape[0]):
        relay = int(allocation.band_relay[band])
        rows.append(
            [
                slot,
                band,
                int(allocation.band_user[band]),
                relay,
                float(allocation.band_snr[band]),
                int(relay >= 0),
            ]
        )
    return rows


def write_allocation_csv(
    path: str | Path, allocations: list[tuple[int, AllocationResult]]
) -> None:
    """Write ``(slot, allocation)`` pairs as one CSV row per band."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["slot", "band", "user", "relay", "snr", "allocated"])
        for slot, allocation in allocations:
            writer.writerows(allocation_rows(slot, allocation))
