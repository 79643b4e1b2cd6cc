"""Deterministic derivation of independent random streams.

Every stream is a ``numpy.random.Generator`` backed by PCG64 and seeded from a
``SeedSequence`` whose spawn key encodes *where* the stream is used (block
index, purpose tag). Streams therefore do not depend on the order in which
work is executed.
"""

import hashlib

import numpy as np

# Monte-Carlo trials are drawn in fixed-size blocks; block b always uses the
# stream keyed by b, whatever worker evaluates it.
BLOCK_SIZE = 4096


def stable_hash(*parts) -> int:
    """Platform-independent 63-bit hash of the ``repr`` of ``parts``."""
    text = "\x1f".join(repr(p) for p in parts).encode()
    return int.from_bytes(hashlib.blake2b(text, digest_size=8).digest(), "little") >> 1


def tag_value(tag) -> int:
    if isinstance(tag, (int, np.integer)):
        return int(tag)
    return stable_hash(tag)


def derive_stream(root_seed, *key) -> np.random.Generator:
    """Generator for ``root_seed`` and a spawn key made of ints or strings."""
    seq = np.random.SeedSequence(int(root_seed), spawn_key=tuple(tag_value(k) for k in key))
    return np.random.Generator(np.random.PCG64(seq))


def derive_seed(root_seed, *key) -> int:
    """An integer seed derived from ``root_seed`` and ``key``."""
    seq = np.random.SeedSequence(int(root_seed), spawn_key=tuple(tag_value(k) for k in key))
    return int(seq.generate_state(1, np.uint64)[0]) >> 1


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def block_layout(n_trials: int, block_size: int = BLOCK_SIZE):
    """Yield ``(block_index, size)`` pairs covering ``n_trials``."""
    start = 0
    block = 0
    while start < n_trials:
        size = min(block_size, n_trials - start)
        yield block, size
        start += size
        block += 1
