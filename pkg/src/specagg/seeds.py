"""Deterministic random-substream derivation.

Every random draw in a run descends from the master seed plus a tuple of
string/int/float tokens naming the consumer (episode, band, relay, ...).
Tokens hash through SHA-256, so the same (seed, tokens) pair yields the
same stream in any process, on any platform, in any execution order.

Floats are encoded by their IEEE-754 bits, so e.g. a sweep value of 0.4
derives the same stream no matter where it sits in the sweep list.
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np


def _encode(token) -> bytes:
    if isinstance(token, bool):
        return b"b" + (b"1" if token else b"0")
    if isinstance(token, (int, np.integer)):
        return b"i" + str(int(token)).encode()
    if isinstance(token, (float, np.floating)):
        return b"f" + struct.pack("<d", float(token))
    if isinstance(token, str):
        return b"s" + token.encode()
    raise TypeError(f"cannot derive a seed from token of type {type(token)!r}")


def derive_seed_sequence(master_seed: int, *tokens) -> np.random.SeedSequence:
    """SeedSequence for the substream named by `tokens` under `master_seed`."""
    digest = hashlib.sha256(b"\x1f".join(_encode(t) for t in tokens)).digest()
    words = np.frombuffer(digest[:16], dtype=np.uint32)
    return np.random.SeedSequence([int(master_seed) & 0xFFFFFFFF, *map(int, words)])


def derive_rng(master_seed: int, *tokens) -> np.random.Generator:
    """Generator for the substream named by `tokens` under `master_seed`."""
    return np.random.default_rng(derive_seed_sequence(master_seed, *tokens))
