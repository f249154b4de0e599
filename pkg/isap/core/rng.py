"""Seeded random streams.

Every stochastic component draws from a Philox (counter-based, 64-bit) generator
keyed by a root seed plus a tuple of integer stream ids, so runs are bit-reproducible
and independent components never share a stream.
"""
import numpy as np

UINT64_MASK = (1 << 64) - 1


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    entropy = [int(seed) & UINT64_MASK, *(int(s) & UINT64_MASK for s in stream)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def derive_seed(seed: int, *stream: int) -> int:
    """Deterministic 64-bit child seed."""
    entropy = [int(seed) & UINT64_MASK, *(int(s) & UINT64_MASK for s in stream)]
    return int(np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint64)[0])
