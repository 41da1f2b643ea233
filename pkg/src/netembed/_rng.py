"""Seed derivation.

Every random stream in the package is addressed by a 64-bit base seed plus a
tuple of labels (strings or non-negative ints).  ``derive_seed`` maps that
address to an independent 64-bit key through :class:`numpy.random.SeedSequence`;
``generator`` wraps the key in a counter-based Philox bit generator.

The compiled kernels draw from splitmix64 streams keyed by ``derive_seed``
output; :func:`stream_key`, :func:`next_u64` and :func:`u64_to_unit` are the
pure-Python reference for that generator and must stay in lockstep with
``_kernels/_core.pyx``.
"""
from __future__ import annotations

import hashlib
from typing import Union

import numpy as np

Label = Union[str, int]

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_TO_UNIT = 1.0 / 9007199254740992.0  # 2**-53


def _label_to_int(label: Label) -> int:
    if isinstance(label, (bool, np.bool_)):
        raise TypeError("boolean seed labels are ambiguous")
    if isinstance(label, (int, np.integer)):
        if label < 0:
            raise ValueError(f"integer seed labels must be non-negative, got {label}")
        return int(label)
    if isinstance(label, str):
        digest = hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "little")
    if isinstance(label, float) and label >= 0:
        # fractions show up as perturbation levels; hash their exact repr
        return _label_to_int(repr(label))
    raise TypeError(f"unsupported seed label {label!r}")


def derive_seed(seed: int, *labels: Label) -> int:
    """Return an independent 64-bit seed for the stream ``(seed, *labels)``."""
    if seed < 0:
        raise ValueError("seed must be non-negative")
    ss = np.random.SeedSequence(
        entropy=int(seed) & MASK64, spawn_key=tuple(_label_to_int(x) for x in labels)
    )
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def generator(seed: int, *labels: Label) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(derive_seed(seed, *labels)))


def mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def stream_key(base: int, index: int) -> int:
    """Initial splitmix64 state for sub-stream ``index`` of ``base``."""
    return mix64((base + (index + 1) * GOLDEN) & MASK64)


def next_u64(state: int) -> tuple[int, int]:
    state = (state + GOLDEN) & MASK64
    return state, mix64(state)


def u64_to_unit(x: int) -> float:
    return (x >> 11) * _TO_UNIT
