"""Small shared helpers: deterministic seed mixing and quasi-uniform points."""

from __future__ import annotations

import numpy as np
from scipy.stats import qmc

_M64 = (1 << 64) - 1


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return z ^ (z >> 31)


def mix64(*parts) -> int:
    """Fold ints and strings into one 64-bit seed.

    Each part is serialized (ints as their 64-bit value, strings as utf-8
    bytes plus a length tag) and folded through splitmix64, so e.g.
    mix64(seed, "noise") and mix64(seed, "candidates") give decorrelated
    streams and the derivation is reproducible across platforms.
    """
    h = 0x8000000000000000
    for part in parts:
        if isinstance(part, (int, np.integer)):
            h = _splitmix64(h ^ (int(part) & _M64))
        elif isinstance(part, str):
            data = part.encode("utf-8")
            h = _splitmix64(h ^ len(data))
            for i in range(0, len(data), 8):
                chunk = int.from_bytes(data[i : i + 8], "little")
                h = _splitmix64(h ^ chunk)
        else:
            raise TypeError("mix64 parts must be ints or strings, got %r" % (part,))
    return h


def halton_points(bounds: np.ndarray, n: int, seed: int) -> np.ndarray:
    """n quasi-uniform points in the box given by bounds (d, 2)."""
    bounds = np.asarray(bounds, dtype=np.float64)
    d = bounds.shape[0]
    sampler = qmc.Halton(d=d, scramble=True, seed=seed)
    unit = sampler.random(n)
    return bounds[:, 0] + unit * (bounds[:, 1] - bounds[:, 0])
