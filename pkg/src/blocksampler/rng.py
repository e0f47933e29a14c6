"""Seedable, platform-independent uniform stream.

The bit source is numpy's PCG64 (PCG XSL RR 128/64), whose output stream for a
given seed is fixed across platforms and numpy releases. Uniform doubles are
formed from the top 53 bits of each 64-bit output, ``(x >> 11) * 2**-53``, so
the mapping from raw bits to floats is ours and does not depend on numpy's
distribution code.
"""

from __future__ import annotations

import numpy as np

from blocksampler.errors import InputError

_INV_2_53 = 1.0 / float(1 << 53)


class PortableRNG:
    """Uniform ``[0, 1)`` doubles from a seeded PCG64 stream."""

    algorithm = "pcg64-xsl-rr/top53"

    def __init__(self, seed: int):
        if not isinstance(seed, (int, np.integer)) or seed < 0:
            raise InputError(f"seed must be a non-negative integer, got {seed!r}")
        self.seed = int(seed)
        self._bits = np.random.PCG64(self.seed)

    def raw(self, size: int) -> np.ndarray:
        return self._bits.random_raw(size).astype(np.uint64)

    def uniform(self, size: int) -> np.ndarray:
        return (self.raw(size) >> np.uint64(11)).astype(np.float64) * _INV_2_53
