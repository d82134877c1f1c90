"""Three-state Markov machinery for spectrum band dynamics.

A band is always in one of three conditions: Good (idle, channel quality
supports transmission), Bad (idle, quality too poor) or Busy (licensed
user active).  This module provides the state alphabet, transition-matrix
estimation from observed state sequences, n-step evolution, stationary
distributions, and single-slot state prediction.

All operations are pure functions of their inputs; the value types are
immutable after construction and safe to share across workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

import numpy as np

N_STATES = 3

ROW_SUM_TOL = 1e-12
STATIONARY_RESIDUAL_TOL = 1e-9
SINGULARITY_RCOND = 1e-10


class EstimationError(ValueError):
    """Raised when a state sequence is too short to estimate transitions."""


class NonUniqueStationaryError(ValueError):
    """Raised when a chain has no unique stationary distribution."""


class SpectrumState(IntEnum):
    """Band condition codes.  Idle states (Good, Bad) are contiguous."""

    GOOD = 0
    BAD = 1
    BUSY = 2


def is_idle(state: int) -> bool:
    """True when the licensed user is absent (Good or Bad)."""
    return state != SpectrumState.BUSY


def is_usable(state: int) -> bool:
    """True when the band supports transmission (Good only)."""
    return state == SpectrumState.GOOD


def idle_mask(states: np.ndarray) -> np.ndarray:
    """Vectorised `is_idle` over an integer state array."""
    return states != SpectrumState.BUSY


def usable_mask(states: np.ndarray) -> np.ndarray:
    """Vectorised `is_usable` over an integer state array."""
    return states == SpectrumState.GOOD


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic 3x3 matrix over (Good, Bad, Busy).

    Entry ``probs[i, j]`` is the probability of moving from state ``i``
    to state ``j`` in one slot.  Rows must sum to 1 within 1e-12 and every
    entry must lie in [0, 1]; violations raise ``ValueError`` at
    construction.  The wrapped array is made read-only.
    """

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.shape != (N_STATES, N_STATES):
            raise ValueError(f"transition matrix must be 3x3, got {p.shape}")
        if np.any(p < 0.0) or np.any(p > 1.0):
            raise ValueError("transition probabilities must lie in [0, 1]")
        row_sums = p.sum(axis=1)
        if np.any(np.abs(row_sums - 1.0) > ROW_SUM_TOL):
            raise ValueError(f"rows must sum to 1, got {row_sums}")
        p = p.copy()
        p.flags.writeable = False
        object.__setattr__(self, "probs", p)

    def row(self, state: int) -> np.ndarray:
        return self.probs[int(state)]

    def __eq__(self, other):
        if isinstance(other, TransitionMatrix):
            return np.array_equal(self.probs, other.probs)
        return NotImplemented


def count_transitions(states: np.ndarray) -> np.ndarray:
    """Count one-step transitions in a state sequence.

    Returns a 3x3 integer array where entry (i, j) is the number of
    adjacent pairs (i, j) observed in the sequence.
    """
    states = np.asarray(states, dtype=np.int64)
    if states.ndim != 1:
        raise ValueError("expected a one-dimensional state sequence")
    if np.any((states < 0) | (states >= N_STATES)):
        raise ValueError("state codes must be 0, 1 or 2")
    pair_codes = states[:-1] * N_STATES + states[1:]
    return np.bincount(pair_codes, minlength=N_STATES * N_STATES).reshape(
        N_STATES, N_STATES
    )


def estimate_transition_matrix(
    states: np.ndarray, fallback_row: np.ndarray | None = None
) -> TransitionMatrix:
    """Estimate a transition matrix from an observed state sequence.

    Each entry is the exact count ratio count(i -> j) / count(i -> *).
    States with no outgoing observations get ``fallback_row`` (uniform
    1/3 each when not given), which keeps the matrix row-stochastic
    without injecting prior structure.

    Raises:
        EstimationError: if the sequence holds fewer than two states
            (no transition to count).
    """
    states = np.asarray(states, dtype=np.int64)
    if states.size < 2:
        raise EstimationError(
            f"need at least 2 observed states to estimate transitions, got {states.size}"
        )
    if fallback_row is None:
        fallback_row = np.full(N_STATES, 1.0 / N_STATES)
    else:
        fallback_row = np.asarray(fallback_row, dtype=np.float64)
        if fallback_row.shape != (N_STATES,) or abs(fallback_row.sum() - 1.0) > ROW_SUM_TOL:
            raise ValueError("fallback_row must be a probability 3-vector")

    counts = count_transitions(states).astype(np.float64)
    totals = counts.sum(axis=1, keepdims=True)
    unseen = totals[:, 0] == 0
    totals[unseen] = 1.0  # avoid 0/0; rows overwritten below
    probs = counts / totals
    probs[unseen] = fallback_row
    return TransitionMatrix(probs)


def estimate_transition_matrices(windows: np.ndarray) -> np.ndarray:
    """Batch transition-matrix estimation, one row of `windows` per band.

    Applies the same counting rule as `estimate_transition_matrix` to
    every row of a (bands, window_length) array at once and returns raw
    (bands, 3, 3) probabilities with the uniform fallback for unseen
    rows.  This is the hot path of the per-slot predictor retraining.
    """
    windows = np.asarray(windows, dtype=np.int64)
    if windows.ndim != 2 or windows.shape[1] < 2:
        raise EstimationError("windows must be (bands, length>=2)")
    n_bands = windows.shape[0]
    pair_codes = windows[:, :-1] * N_STATES + windows[:, 1:]
    offsets = np.arange(n_bands)[:, None] * (N_STATES * N_STATES)
    flat = (pair_codes + offsets).ravel()
    counts = np.bincount(flat, minlength=n_bands * N_STATES * N_STATES).reshape(
        n_bands, N_STATES, N_STATES
    ).astype(np.float64)
    totals = counts.sum(axis=2, keepdims=True)
    unseen = totals[:, :, 0] == 0
    totals[totals == 0.0] = 1.0
    probs = counts / totals
    probs[unseen] = 1.0 / N_STATES
    return probs


def stationary_distribution(matrix: TransitionMatrix) -> np.ndarray:
    """Solve for the stationary distribution pi with pi P = pi, sum(pi) = 1.

    The underdetermined balance system is closed by replacing its last
    equation with the normalisation constraint.  A chain whose closed
    system is singular (reciprocal condition number below 1e-10) has no
    unique stationary distribution and raises
    ``NonUniqueStationaryError``.
    """
    p = matrix.probs
    a = p.T - np.eye(N_STATES)
    a[-1, :] = 1.0
    b = np.zeros(N_STATES)
    b[-1] = 1.0

    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or 1.0 / cond < SINGULARITY_RCOND:
        raise NonUniqueStationaryError(
            "stationary distribution is not unique (singular balance system)"
        )
    pi = np.linalg.solve(a, b)
    pi = np.clip(pi, 0.0, 1.0)
    pi = pi / pi.sum()
    residual = np.abs(pi @ p - pi).max()
    if residual > STATIONARY_RESIDUAL_TOL:
        raise NonUniqueStationaryError(
            f"stationary solve residual {residual:.3e} exceeds {STATIONARY_RESIDUAL_TOL}"
        )
    return pi


def n_step_distribution(p0: np.ndarray, matrix: TransitionMatrix, n: int) -> np.ndarray:
    """Evolve an initial state distribution n slots forward: p0 P^n."""
    p0 = np.asarray(p0, dtype=np.float64)
    if p0.shape != (N_STATES,) or np.any(p0 < 0) or abs(p0.sum() - 1.0) > ROW_SUM_TOL:
        raise ValueError("p0 must be a probability 3-vector")
    if n < 0:
        raise ValueError("n must be >= 0")
    return p0 @ np.linalg.matrix_power(matrix.probs, n)


def predict_next_state(matrix: TransitionMatrix, current: int) -> SpectrumState:
    """Most likely next state given the current one.

    Ties in the row maximum break by fixed priority Good > Bad > Busy,
    which is the index order, so the first argmax wins.
    """
    return SpectrumState(int(np.argmax(matrix.row(current))))


def predict_next_states(prob_batch: np.ndarray, current: np.ndarray) -> np.ndarray:
    """Vectorised prediction: argmax of each band's row for its current state.

    `prob_batch` is (bands, 3, 3) and `current` is (bands,).  The same
    Good > Bad > Busy tie priority applies (first argmax).
    """
    rows = prob_batch[np.arange(prob_batch.shape[0]), current]
    return rows.argmax(axis=1).astype(np.int8)


def parse_observations(text: str) -> list[np.ndarray]:
    """Parse observation sequences from digit-string lines.

    One sequence per line, digits 0/1/2 with no separators, e.g. a line
    ``00010210000112010001`` parses to a 20-slot state array.  Blank
    lines are skipped.
    """
    sequences = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if not set(line) <= {"0", "1", "2"}:
            raise ValueError(f"line {line_no}: expected only digits 0/1/2, got {line!r}")
        sequences.append(np.array([int(c) for c in line], dtype=np.int8))
    return sequences


def load_observations(path: str | Path) -> list[np.ndarray]:
    """Read observation sequences from a plain text file (see `parse_observations`)."""
    return parse_observations(Path(path).read_text())
