"""Seeded random streams.

All randomness flows from a 64-bit master seed through numpy's counter-based
Philox generator. A substream is keyed by hashing ``(seed, stream_id)`` with
:class:`numpy.random.SeedSequence`, so a draw depends only on the seed and the
stream it belongs to, never on the order in which streams are consumed.
"""

from __future__ import annotations

import hashlib

import numpy as np

MAX_SEED = 2**64 - 1


def _stream_key(stream_id) -> int:
    if isinstance(stream_id, (int, np.integer)) and stream_id >= 0:
        return int(stream_id)
    digest = hashlib.sha256(str(stream_id).encode("utf-8")).digest()
    # keep string keys disjoint from small integer ids
    return int.from_bytes(digest[:8], "little") | (1 << 64)


def agent_stream(seed: int, stream_id) -> np.random.Generator:
    """Independent generator for ``stream_id`` under master ``seed``."""
    if not 0 <= int(seed) <= MAX_SEED:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed!r}")
    ss = np.random.SeedSequence([int(seed), _stream_key(stream_id)])
    return np.random.Generator(np.random.Philox(ss))
