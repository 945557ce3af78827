"""Deterministic RNG streams.

Every random draw in the package comes from a counter-based Philox generator
keyed by (run_seed, stream_tag, a, b). Keys are fixed-arity because numpy's
SeedSequence treats (s, t) and (s, t, 0) as the same entropy; distinct nonzero
tags keep streams from colliding. Per-key generators make results independent
of thread scheduling and iteration order.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError

# Stream tags. Never reuse a value.
STREAM_CROSS_SET = 1  # random cross-class sampling, keyed per (epoch, sample)
STREAM_SHUFFLE = 2  # per-epoch batch permutation
STREAM_SYNTH = 3  # synthetic bundle generation, keyed per draw purpose


def stream(seed: int, tag: int, a: int = 0, b: int = 0) -> np.random.Generator:
    """Return a fresh generator for the (seed, tag, a, b) key."""
    if seed < 0:
        raise ValidationError(f"seed must be >= 0, got {seed}")
    key = np.random.SeedSequence((seed, tag, a, b))
    return np.random.Generator(np.random.Philox(key))
