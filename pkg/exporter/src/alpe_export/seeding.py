"""Keyed random generators.

Each consumer derives its own Philox generator from a fixed-arity integer
key, so streams never collide and adding one draw somewhere cannot shift
unrelated output.
"""

from __future__ import annotations

import numpy as np


def philox(key: tuple[int, ...]) -> np.random.Generator:
    """Independent generator for an integer key tuple."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))
