"""Node population, relay coverage, and per-band ground-truth state processes.

The network holds T source-destination pairs and Rr candidate relays.
Coverage is a Bernoulli incidence relation: each relay is independently
in range of each pair.  Every spectrum band evolves as an independent
copy of one three-state Markov chain whose stationary idle mass equals
the configured idle probability; nodes observe band states through
(optionally noisy) sensing.

Each band owns its own random substream, so adding a band never perturbs
another band's trajectory and trajectories replay bit-exactly per seed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .markov import (
    N_STATES,
    SpectrumState,
    TransitionMatrix,
    stationary_distribution,
)

IDLE_MASS_TOL = 1e-6


@dataclass(frozen=True)
class Topology:
    """Immutable node population with relay->pair coverage incidence.

    ``coverage[r, i]`` is True when relay ``r`` is in range of both ends
    of user pair ``i``.
    """

    users: int
    relays: int
    coverage: np.ndarray

    def __post_init__(self):
        if self.users < 1 or self.relays < 1:
            raise ValueError("need at least one user pair and one relay")
        cov = np.asarray(self.coverage, dtype=bool)
        if cov.shape != (self.relays, self.users):
            raise ValueError(
                f"coverage must be ({self.relays}, {self.users}), got {cov.shape}"
            )
        cov = cov.copy()
        cov.flags.writeable = False
        object.__setattr__(self, "coverage", cov)

    def covered_pairs(self, relay: int) -> np.ndarray:
        """Indices of user pairs relay `relay` can serve."""
        return np.flatnonzero(self.coverage[relay])

    def restrict_to_user(self, user: int = 0) -> "Topology":
        """Single-pair view of this topology (same relays, one column)."""
        return Topology(users=1, relays=self.relays, coverage=self.coverage[:, [user]])

    def write_coverage_csv(self, path: str | Path) -> None:
        """Dump the incidence relation as ``relay,user,covered`` rows."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["relay", "user", "covered"])
            for relay in range(self.relays):
                for user in range(self.users):
                    writer.writerow([relay, user, int(self.coverage[relay, user])])


def build_topology(
    users: int, relays: int, coverage_probability: float, rng: np.random.Generator
) -> Topology:
    """Draw a Bernoulli coverage incidence, one row per relay.

    Each relay is in range of each pair independently with
    `coverage_probability`; rows are drawn relay by relay so a larger
    relay population extends, rather than reshuffles, a smaller one
    drawn from the same stream.
    """
    if not 0.0 < coverage_probability <= 1.0:
        raise ValueError("coverage_probability must lie in (0, 1]")
    rows = [rng.random(users) < coverage_probability for _ in range(relays)]
    return Topology(users=users, relays=relays, coverage=np.array(rows))


def derive_ground_truth_matrix(
    p0_idle: float, persistence: float, good_fraction: float
) -> TransitionMatrix:
    """Build a chain whose stationary idle mass is exactly `p0_idle`.

    The chain is the lazy reversible form

        P = persistence * I + (1 - persistence) * ones @ pi

    with pi = (p0*good_fraction, p0*(1-good_fraction), 1-p0), so its
    stationary distribution is pi itself and the idle states carry mass
    p0_idle by construction.  `persistence` is the probability of
    freezing in place for one slot; 0 gives i.i.d. slots.
    """
    if not 0.0 < p0_idle < 1.0:
        raise ValueError("p0_idle must lie in (0, 1)")
    if not 0.0 <= persistence < 1.0:
        raise ValueError("persistence must lie in [0, 1)")
    if not 0.0 < good_fraction < 1.0:
        raise ValueError("good_fraction must lie in (0, 1)")
    pi = np.array(
        [p0_idle * good_fraction, p0_idle * (1.0 - good_fraction), 1.0 - p0_idle]
    )
    probs = persistence * np.eye(N_STATES) + (1.0 - persistence) * np.ones(
        (N_STATES, 1)
    ) * pi
    return TransitionMatrix(probs)


@dataclass(frozen=True)
class SpectrumProcessConfig:
    """Shape of the per-band ground-truth process.

    Validates that the chain's stationary idle mass (Good + Bad) matches
    the declared idle probability within 1e-6.
    """

    band_count: int
    p0_idle: float
    ground_truth_matrix: TransitionMatrix

    def __post_init__(self):
        if self.band_count < 1:
            raise ValueError("band_count must be >= 1")
        if not 0.0 < self.p0_idle < 1.0:
            raise ValueError("p0_idle must lie in (0, 1)")
        pi = stationary_distribution(self.ground_truth_matrix)
        idle_mass = pi[SpectrumState.GOOD] + pi[SpectrumState.BAD]
        if abs(idle_mass - self.p0_idle) > IDLE_MASS_TOL:
            raise ValueError(
                f"stationary idle mass {idle_mass:.8f} does not match "
                f"p0_idle {self.p0_idle}"
            )


@dataclass
class BandProcess:
    """Read-only snapshot of one band's trajectory so far."""

    band_id: int
    true_state_history: np.ndarray


@dataclass(frozen=True)
class SensingReport:
    """One node's view of every band at one slot."""

    node_id: str
    slot: int
    states: np.ndarray


class BandProcessSet:
    """Ground-truth Markov trajectories for every band.

    Initial states are drawn from the chain's stationary distribution
    (the network is observed in steady state).  Each band consumes
    uniforms from its own child stream of `seed_seq`; the whole
    trajectory is therefore fixed by the seed alone, regardless of how
    the set is advanced or how many *other* bands exist.

    `max_slots` bounds how often `advance` may be called; each band
    pre-draws its uniforms in one block so trajectories are stable
    prefixes when `max_slots` grows.
    """

    def __init__(
        self,
        config: SpectrumProcessConfig,
        seed_seq: np.random.SeedSequence,
        max_slots: int,
    ):
        if max_slots < 1:
            raise ValueError("max_slots must be >= 1")
        self.config = config
        self.max_slots = max_slots
        n = config.band_count
        pi = stationary_distribution(config.ground_truth_matrix)
        self._pi_cum = np.cumsum(pi)
        self._row_cum = np.cumsum(config.ground_truth_matrix.probs, axis=1)

        # one child stream per band: uniform 0 picks the initial state,
        # uniforms 1..max_slots drive the transitions
        children = seed_seq.spawn(n)
        draws = np.empty((n, max_slots + 1))
        for band, child in enumerate(children):
            draws[band] = np.random.default_rng(child).random(max_slots + 1)
        self._draws = draws

        initial = np.searchsorted(self._pi_cum, draws[:, 0], side="right")
        initial = np.minimum(initial, N_STATES - 1).astype(np.int8)
        self._history = [initial]

    @property
    def band_count(self) -> int:
        return self.config.band_count

    @property
    def slot(self) -> int:
        """Index of the latest realised slot (0-based)."""
        return len(self._history) - 1

    @property
    def states(self) -> np.ndarray:
        """True states of every band at the latest slot."""
        return self._history[-1]

    def advance(self) -> np.ndarray:
        """Advance every band one slot and return the new state vector."""
        t = len(self._history)
        if t > self.max_slots:
            raise RuntimeError(f"band processes exhausted after {self.max_slots} slots")
        u = self._draws[:, t]
        cum = self._row_cum[self._history[-1]]
        nxt = (u[:, None] >= cum).sum(axis=1)
        nxt = np.minimum(nxt, N_STATES - 1).astype(np.int8)
        self._history.append(nxt)
        return nxt

    def history(self) -> np.ndarray:
        """Full trajectory so far as a (slots, bands) array."""
        return np.stack(self._history)

    def band(self, band_id: int) -> BandProcess:
        return BandProcess(
            band_id=band_id, true_state_history=self.history()[:, band_id]
        )

    def write_trajectory_csv(self, path: str | Path) -> None:
        """Dump the realised trajectories as ``band,slot,state`` rows."""
        hist = self.history()
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["band", "slot", "state"])
            for band in range(hist.shape[1]):
                for slot in range(hist.shape[0]):
                    writer.writerow([band, slot, int(hist[slot, band])])


def sense(
    true_states: np.ndarray,
    sensing_error_rate: float = 0.0,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Observe band states, flipping each to a uniformly random other
    state with probability `sensing_error_rate`.

    The default is perfect sensing (the report equals the truth) and
    consumes no randomness.
    """
    if not 0.0 <= sensing_error_rate <= 1.0:
        raise ValueError("sensing_error_rate must lie in [0, 1]")
    true_states = np.asarray(true_states, dtype=np.int8)
    if sensing_error_rate == 0.0:
        return true_states.copy()
    if rng is None:
        raise ValueError("an rng is required when sensing_error_rate > 0")
    flip = rng.random(true_states.shape) < sensing_error_rate
    # offset 1 or 2 sends a state to one of the two other states
    offset = rng.integers(1, N_STATES, size=true_states.shape)
    sensed = true_states.copy()
    sensed[flip] = (true_states[flip] + offset[flip]) % N_STATES
    return sensed


def make_sensing_report(
    node_id: str,
    slot: int,
    true_states: np.ndarray,
    sensing_error_rate: float = 0.0,
    rng: np.random.Generator | None = None,
) -> SensingReport:
    """Package one node's sensing outcome for one slot."""
    return SensingReport(
        node_id=node_id,
        slot=slot,
        states=sense(true_states, sensing_error_rate, rng),
    )


def occupancy_bits(states: np.ndarray) -> np.ndarray:
    """Binary occupancy projection of a state array: 1 = Busy, 0 = idle."""
    return (np.asarray(states) == SpectrumState.BUSY).astype(np.int8)
