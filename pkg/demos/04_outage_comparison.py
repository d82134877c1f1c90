#!/usr/bin/env python3
"""Walkthrough: what state prediction buys (and when it cannot help).

Runs paired episodes -- identical ground truth, budgets and fading --
under the predicting strategy and the persistence baseline, first on a
deterministically alternating channel where prediction shines, then on
the default lazy channel where persistence is already the best
single-state predictor.
"""

from dataclasses import replace

import numpy as np

from specagg import (
    BandProcessSet,
    EpisodeConfig,
    NetworkScenario,
    RadioParams,
    SpectrumProcessConfig,
    Strategy,
    Topology,
    TransitionMatrix,
    run_episode,
    run_strategy,
    summarize,
)

PERIOD_TWO = TransitionMatrix(
    np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
)


def alternating_channel():
    print("--- alternating channel: every band flips Good <-> Busy each slot ---")
    config = EpisodeConfig(slots=30, episodes=1, n_train=4, seed=7)

    def world():
        topology = Topology(users=2, relays=4, coverage=np.ones((4, 2), dtype=bool))
        processes = BandProcessSet(
            SpectrumProcessConfig(band_count=16, p0_idle=0.5, ground_truth_matrix=PERIOD_TWO),
            np.random.SeedSequence(7),
            max_slots=29,
        )
        return topology, processes

    for strategy in (Strategy.PREDICT_AGGREGATE, Strategy.NO_PREDICTION):
        topology, processes = world()
        metrics = run_episode(
            replace(config, strategy=strategy), topology, processes, RadioParams()
        )
        print(
            f"  {strategy.value:>17}: allocated={metrics.allocation_count:>3}"
            f"  outage rate={metrics.outage_rate:.2f}"
            f"  throughput={metrics.mean_throughput_bps / 1e6:.1f} Mb/s"
        )
    print("  the trained predictor refuses bands about to turn Busy;")
    print("  the persistence baseline walks into an outage every time.\n")


def lazy_channel():
    print("--- lazy channel (default): states freeze in place 60% of slots ---")
    scenario = NetworkScenario()  # 5 users, 20 relays, 100 bands, P0=0.4
    config = EpisodeConfig(slots=100, episodes=20, n_train=20, seed=1)
    params = RadioParams()
    for strategy in (Strategy.PREDICT_AGGREGATE, Strategy.NO_PREDICTION):
        summary = summarize(
            run_strategy(scenario, replace(config, strategy=strategy), params)
        )
        print(
            f"  {strategy.value:>17}: outage rate={summary.mean_outage_rate:.4f}"
            f"  throughput={summary.mean_throughput_bps / 1e6:.1f} Mb/s"
        )
    print("  here the most likely next state IS the current state, so the")
    print("  persistence baseline is already optimal and training noise makes")
    print("  the predictor slightly worse -- prediction only pays off when the")
    print("  channel has real transition structure to learn.")


def main():
    alternating_channel()
    lazy_channel()


if __name__ == "__main__":
    main()
