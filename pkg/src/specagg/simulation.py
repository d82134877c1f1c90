"""Two-slot episode simulation: sense, train, predict, allocate, score.

An episode walks a network through `slots` time slots.  After a training
prefix, every slot t starts a transmission pair (t, t+1): nodes sense at
slot t, a per-band transition matrix is refit on the most recent sensed
window, slot t+1 states are predicted, the aggregation engine allocates
bands under the idle-both-slots rule, and the ground truth then advances
to t+1 to score the outcome.  An allocated band whose true t+1 state is
Busy or Bad is an outage; throughput counts only non-outage bands.

Four strategies share identical ground truth, topology, link budgets and
fading draws per (seed, episode) -- comparisons between them are paired:

* ``PREDICT_AGGREGATE``: Markov prediction + full aggregation.
* ``NO_PREDICTION``: assumes slot t+1 equals the sensed slot t state.
* ``NO_AGGREGATION``: predicts, but each user keeps only its single
  best allocated band.
* ``SINGLE_USER``: the same pipeline with only the first user pair
  present (it keeps every relay that covers it).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

import numpy as np

from .aggregation import (
    UNASSIGNED,
    AllocationResult,
    aggregate_and_score,
    allocate_spectrum,
    assign_relays,
    common_free_spectrum,
    prediction_bits,
    two_slot_availability,
)
from .markov import SpectrumState, estimate_transition_matrices, predict_next_states
from .radio import RadioParams, link_throughput, sample_hop_snrs
from .seeds import derive_rng, derive_seed_sequence
from .topology import (
    BandProcessSet,
    SpectrumProcessConfig,
    Topology,
    build_topology,
    derive_ground_truth_matrix,
    sense,
)


class ConfigError(ValueError):
    """Raised for episode configurations that cannot run."""


class Strategy(Enum):
    PREDICT_AGGREGATE = "predict_aggregate"
    NO_PREDICTION = "no_prediction"
    NO_AGGREGATION = "no_aggregation"
    SINGLE_USER = "single_user"


@dataclass(frozen=True)
class EpisodeConfig:
    """Episode shape: slot count, training window and strategy.

    `slots` must cover the training prefix plus at least one slot pair.
    """

    slots: int = 100
    episodes: int = 20
    n_train: int = 20
    strategy: Strategy = Strategy.PREDICT_AGGREGATE
    seed: int = 1
    sensing_error_rate: float = 0.0
    designated_band: int = 0

    def __post_init__(self):
        if self.n_train < 2:
            raise ConfigError("n_train must be >= 2 (need one observed transition)")
        if self.slots < self.n_train + 2:
            raise ConfigError(
                f"slots must be >= n_train + 2, got slots={self.slots} "
                f"n_train={self.n_train}"
            )
        if self.episodes < 1:
            raise ConfigError("episodes must be >= 1")

    @property
    def pairs(self) -> int:
        """Number of scored slot pairs per episode."""
        return self.slots - self.n_train


@dataclass(frozen=True)
class NetworkScenario:
    """Population and band-dynamics parameters of one experiment cell."""

    users: int = 5
    relays: int = 20
    bands: int = 100
    coverage_probability: float = 0.4
    p0_idle: float = 0.4
    persistence: float = 0.6
    good_fraction: float = 0.75


@dataclass
class EpisodeMetrics:
    """Per-episode accounting of allocations, outages and throughput."""

    strategy: Strategy
    episode: int
    pair_slots: np.ndarray
    pair_allocated: np.ndarray
    pair_outages: np.ndarray
    pair_throughput_bps: np.ndarray
    user_capacity_bps: np.ndarray
    prediction_match_count: int
    default_match_count: int
    trace: np.ndarray  # (pairs, 3): actual, default, predicted for one band

    @property
    def allocation_count(self) -> int:
        return int(self.pair_allocated.sum())

    @property
    def outage_count(self) -> int:
        return int(self.pair_outages.sum())

    @property
    def outage_rate(self) -> float:
        """Outage bands over allocated bands; 0 when nothing was allocated."""
        allocated = self.allocation_count
        return self.outage_count / allocated if allocated > 0 else 0.0

    @property
    def slot_outage_rate(self) -> float:
        """Fraction of slot pairs that saw at least one outage."""
        return float((self.pair_outages > 0).mean())

    @property
    def mean_throughput_bps(self) -> float:
        return float(self.pair_throughput_bps.mean())


def state_match_trace(metrics: EpisodeMetrics) -> tuple[int, int, np.ndarray]:
    """(prediction matches, default matches, per-slot state triples)."""
    return metrics.prediction_match_count, metrics.default_match_count, metrics.trace


def _band_relay_snr(
    hop_snr: np.ndarray, owner: np.ndarray, gains: np.ndarray, params: RadioParams
) -> np.ndarray:
    """Per-(band, relay) received SNR for one slot pair.

    A relay's SNR budget toward its own destination scales the per-band
    fading gain, divided by the SNR gap: snr[n, r] = P_tx * hop[r] *
    h[n, r] / gamma.  Unowned relays carry zero SNR on every band.
    """
    relays = hop_snr.shape[0]
    hop_owned = np.where(
        owner >= 0, hop_snr[np.arange(relays), np.clip(owner, 0, None)], 0.0
    )
    return params.tx_power_w * hop_owned[None, :] * gains / params.gamma


def reduce_to_best_band(
    allocation: AllocationResult, params: RadioParams
) -> AllocationResult:
    """No-aggregation policy: keep each user's best allocated band only.

    The kept band is the one with the highest winning SNR (ties to the
    lowest band id); every other band is released.  Throughput fields
    are re-scored.
    """
    band_relay = np.full_like(allocation.band_relay, UNASSIGNED)
    band_snr = np.zeros_like(allocation.band_snr)
    for user in range(allocation.users):
        bands = np.flatnonzero((allocation.band_user == user) & allocation.allocated)
        if bands.size == 0:
            continue
        best = bands[np.argmax(allocation.band_snr[bands])]
        band_relay[best] = allocation.band_relay[best]
        band_snr[best] = allocation.band_snr[best]
    reduced = replace(
        allocation,
        band_relay=band_relay,
        band_snr=band_snr,
        snr_total=float(band_snr.sum()),
    )
    return aggregate_and_score(reduced, params)


def run_episode(
    config: EpisodeConfig,
    topology: Topology,
    processes: BandProcessSet,
    params: RadioParams,
    episode: int = 0,
    base_users: int | None = None,
) -> EpisodeMetrics:
    """Run one episode and return its metrics.

    `base_users` is the user count the link-budget draws are shaped for;
    leaving it at the topology's own user count is correct for
    standalone runs, while the single-user strategy passes the full
    population so its draws stay paired with the multi-user runs.
    """
    users, relays, bands = topology.users, topology.relays, processes.band_count
    n_pairs = config.pairs
    seed = config.seed
    draw_users = base_users if base_users is not None else users
    if draw_users < users:
        raise ConfigError("base_users must cover the topology's user count")
    predicting = config.strategy != Strategy.NO_PREDICTION

    # Per-relay budget streams and per-band fading streams: adding a
    # relay or band never perturbs the draws of the existing ones.
    hop1 = np.empty((relays, n_pairs, draw_users))
    hop2 = np.empty((relays, n_pairs, draw_users))
    for r in range(relays):
        rng = derive_rng(seed, "budget", episode, r)
        hop1[r], hop2[r] = sample_hop_snrs(params, rng, (n_pairs, draw_users))
    if params.snr_combining == "min_hop":
        hop = np.minimum(hop1, hop2)
    elif params.snr_combining == "second_hop":
        hop = hop2
    else:
        raise ValueError(f"unknown snr_combining {params.snr_combining!r}")
    hop = hop[:, :, :users]

    if params.gain_model == "rayleigh":
        gains = np.empty((n_pairs, bands, relays))
        for n in range(bands):
            rng = derive_rng(seed, "gain", episode, n)
            gains[:, n, :] = rng.exponential(1.0, size=(n_pairs, relays))
    elif params.gain_model == "unit":
        gains = np.ones((n_pairs, bands, relays))
    else:
        raise ValueError(f"unknown gain_model {params.gain_model!r}")

    err = config.sensing_error_rate
    if err > 0.0:
        src_rngs = [derive_rng(seed, "sense", episode, "src", i) for i in range(users)]
        rel_rngs = [derive_rng(seed, "sense", episode, "rel", r) for r in range(relays)]

    def sense_all(truth: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if err == 0.0:
            sensed = np.asarray(truth, dtype=np.int8)
            return (
                np.broadcast_to(sensed, (users, bands)),
                np.broadcast_to(sensed, (relays, bands)),
            )
        src = np.stack([sense(truth, err, rng) for rng in src_rngs])
        rel = np.stack([sense(truth, err, rng) for rng in rel_rngs])
        return src, rel

    pair_slots = np.zeros(n_pairs, dtype=np.int64)
    pair_allocated = np.zeros(n_pairs, dtype=np.int64)
    pair_outages = np.zeros(n_pairs, dtype=np.int64)
    pair_throughput = np.zeros(n_pairs)
    user_capacity = np.zeros((n_pairs, users))
    trace = np.zeros((n_pairs, 3), dtype=np.int8)
    pred_matches = 0
    default_matches = 0

    designated = config.designated_band
    training_history = np.zeros((config.slots, bands), dtype=np.int8)

    truth = processes.states  # slot 0
    sensed_src, sensed_rel = sense_all(truth)
    training_history[0] = sensed_src[0]

    first_pair_slot = config.n_train - 1
    for t in range(config.slots - 1):
        pair_index = t - first_pair_slot
        pending = None
        if pair_index >= 0:
            window = training_history[t - config.n_train + 1 : t + 1]  # ends at t
            if predicting:
                chains = estimate_transition_matrices(window.T)
                if err == 0.0:
                    # perfect sensing: every node sees the same states
                    pred = predict_next_states(chains, sensed_src[0])
                    pred_src = np.broadcast_to(pred, (users, bands))
                    pred_rel = np.broadcast_to(pred, (relays, bands))
                else:
                    pred_src = np.stack(
                        [predict_next_states(chains, sensed_src[i]) for i in range(users)]
                    )
                    pred_rel = np.stack(
                        [predict_next_states(chains, sensed_rel[r]) for r in range(relays)]
                    )
            else:
                pred_src, pred_rel = sensed_src, sensed_rel

            source_avail = two_slot_availability(sensed_src, pred_src)
            relay_avail = two_slot_availability(sensed_rel, pred_rel)
            bits = prediction_bits(pred_rel)

            pair_snr = params.tx_power_w * hop[:, pair_index, :] / params.gamma
            pair_rate = link_throughput(params, pair_snr)
            assignment = assign_relays(topology, pair_rate)

            snr = _band_relay_snr(
                hop[:, pair_index, :], assignment.owner, gains[pair_index], params
            )
            common = common_free_spectrum(assignment, source_avail, relay_avail, snr)
            alloc = allocate_spectrum(common, assignment, bits, snr)
            alloc = aggregate_and_score(alloc, params)
            if config.strategy == Strategy.NO_AGGREGATION:
                alloc = reduce_to_best_band(alloc, params)
            pending = (alloc, sensed_src[0].copy(), pred_src[0].copy())

        truth = processes.advance()  # slot t + 1
        sensed_src, sensed_rel = sense_all(truth)
        training_history[t + 1] = sensed_src[0]

        if pending is not None:
            alloc, default_states, predicted_states = pending
            failed = (truth == SpectrumState.BUSY) | (truth == SpectrumState.BAD)
            outage = alloc.allocated & failed
            good_bands = alloc.allocated & ~failed
            realized = np.where(
                good_bands, link_throughput(params, alloc.band_snr), 0.0
            )
            pair_slots[pair_index] = t
            pair_allocated[pair_index] = int(alloc.allocated.sum())
            pair_outages[pair_index] = int(outage.sum())
            pair_throughput[pair_index] = float(realized.sum())
            np.add.at(
                user_capacity[pair_index],
                alloc.band_user[good_bands],
                realized[good_bands],
            )
            actual = int(truth[designated])
            default = int(default_states[designated])
            predicted = int(predicted_states[designated])
            trace[pair_index] = (actual, default, predicted)
            pred_matches += int(predicted == actual)
            default_matches += int(default == actual)

    return EpisodeMetrics(
        strategy=config.strategy,
        episode=episode,
        pair_slots=pair_slots,
        pair_allocated=pair_allocated,
        pair_outages=pair_outages,
        pair_throughput_bps=pair_throughput,
        user_capacity_bps=user_capacity.mean(axis=0),
        prediction_match_count=pred_matches,
        default_match_count=default_matches,
        trace=trace,
    )


def run_baseline_no_prediction(config, topology, processes, params, episode=0, base_users=None):
    """`run_episode` with prediction replaced by last-state persistence."""
    cfg = replace(config, strategy=Strategy.NO_PREDICTION)
    return run_episode(cfg, topology, processes, params, episode, base_users)


def run_baseline_no_aggregation(config, topology, processes, params, episode=0, base_users=None):
    """`run_episode` where each user keeps only its best allocated band."""
    cfg = replace(config, strategy=Strategy.NO_AGGREGATION)
    return run_episode(cfg, topology, processes, params, episode, base_users)


def run_baseline_single_user(config, topology, processes, params, episode=0, base_users=None):
    """`run_episode` with only the first user pair present.

    Takes the full multi-user topology and restricts it, so the run
    shares its world with the multi-user strategies.
    """
    cfg = replace(config, strategy=Strategy.SINGLE_USER)
    restricted = topology.restrict_to_user(0)
    return run_episode(
        cfg, restricted, processes, params, episode, base_users or topology.users
    )


def build_episode_world(
    scenario: NetworkScenario, config: EpisodeConfig, episode: int
) -> tuple[Topology, BandProcessSet]:
    """Construct the (topology, band processes) shared by all strategies.

    Derivation uses only (seed, episode, entity) tokens -- never the
    strategy -- so every strategy observes the same world.
    """
    topology = build_topology(
        scenario.users,
        scenario.relays,
        scenario.coverage_probability,
        derive_rng(config.seed, "topology", episode),
    )
    chain = derive_ground_truth_matrix(
        scenario.p0_idle, scenario.persistence, scenario.good_fraction
    )
    process_config = SpectrumProcessConfig(
        band_count=scenario.bands,
        p0_idle=scenario.p0_idle,
        ground_truth_matrix=chain,
    )
    processes = BandProcessSet(
        process_config,
        derive_seed_sequence(config.seed, "truth", episode),
        max_slots=config.slots - 1,
    )
    return topology, processes


def run_strategy(
    scenario: NetworkScenario, config: EpisodeConfig, params: RadioParams
) -> list[EpisodeMetrics]:
    """Run every episode of one strategy on freshly built, seed-paired worlds."""
    out = []
    for episode in range(config.episodes):
        topology, processes = build_episode_world(scenario, config, episode)
        if config.strategy == Strategy.SINGLE_USER:
            metrics = run_baseline_single_user(
                config, topology, processes, params, episode
            )
        else:
            metrics = run_episode(
                config, topology, processes, params, episode, scenario.users
            )
        out.append(metrics)
    return out


@dataclass(frozen=True)
class StrategySummary:
    """Episode-averaged results of one strategy on one cell."""

    strategy: Strategy
    episodes: int
    outage_rates: np.ndarray
    slot_outage_rates: np.ndarray
    throughputs_bps: np.ndarray
    min_user_capacities_bps: np.ndarray
    max_user_capacities_bps: np.ndarray

    @property
    def mean_outage_rate(self) -> float:
        return float(self.outage_rates.mean())

    @property
    def mean_throughput_bps(self) -> float:
        return float(self.throughputs_bps.mean())

    @property
    def min_user_capacity_bps(self) -> float:
        return float(self.min_user_capacities_bps.mean())

    @property
    def max_user_capacity_bps(self) -> float:
        return float(self.max_user_capacities_bps.mean())


def summarize(metrics_list: list[EpisodeMetrics]) -> StrategySummary:
    return StrategySummary(
        strategy=metrics_list[0].strategy,
        episodes=len(metrics_list),
        outage_rates=np.array([m.outage_rate for m in metrics_list]),
        slot_outage_rates=np.array([m.slot_outage_rate for m in metrics_list]),
        throughputs_bps=np.array([m.mean_throughput_bps for m in metrics_list]),
        min_user_capacities_bps=np.array(
            [m.user_capacity_bps.min() for m in metrics_list]
        ),
        max_user_capacities_bps=np.array(
            [m.user_capacity_bps.max() for m in metrics_list]
        ),
    )


def write_metrics_csv(
    path: str | Path, metrics_by_strategy: dict[Strategy, list[EpisodeMetrics]]
) -> None:
    """Per-slot-pair CSV: ``episode,slot,strategy,allocated,outages,throughput_bps``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["episode", "slot", "strategy", "allocated", "outages", "throughput_bps"]
        )
        for strategy in sorted(metrics_by_strategy, key=lambda s: s.value):
            for m in metrics_by_strategy[strategy]:
                for k in range(m.pair_slots.shape[0]):
                    writer.writerow(
                        [
                            m.episode,
                            int(m.pair_slots[k]),
                            strategy.value,
                            int(m.pair_allocated[k]),
                            int(m.pair_outages[k]),
                            repr(float(m.pair_throughput_bps[k])),
                        ]
                    )


def write_trace_csv(path: str | Path, metrics_list: list[EpisodeMetrics]) -> None:
    """Designated-band state trace CSV: ``episode,slot,actual,default,predicted``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["episode", "slot", "actual", "default", "predicted"])
        for m in metrics_list:
            for k in range(m.pair_slots.shape[0]):
                writer.writerow(
                    [
                        m.episode,
                        int(m.pair_slots[k]) + 1,  # the predicted/actual slot
                        int(m.trace[k, 0]),
                        int(m.trace[k, 1]),
                        int(m.trace[k, 2]),
                    ]
                )
