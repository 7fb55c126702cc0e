"""Deterministic seed derivation.

All randomness in the toolkit funnels through a single run seed.  Subsystem
and per-repetition seeds are derived by hashing ``(seed, *scope)`` with
SHA-256, so results are identical regardless of scheduling, worker count, or
platform.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(seed: int, *scope) -> int:
    """Derive a 64-bit child seed from a root seed and a scope path.

    ``derive_seed(7, "montecarlo", 12)`` is a pure function of its
    arguments; distinct scopes give statistically independent streams.
    """
    msg = ":".join([str(int(seed)), *map(str, scope)]).encode()
    return int.from_bytes(hashlib.sha256(msg).digest()[:8], "big")


def rng_from(seed: int, *scope) -> np.random.Generator:
    """Counter-based generator (Philox) seeded from a derived seed."""
    return np.random.Generator(np.random.Philox(key=derive_seed(seed, *scope)))


def standard_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard normals via the Box-Muller transform.

    Uses explicit Box-Muller over the generator's uniforms instead of the
    library's ziggurat sampler so that streams are reproducible across
    library versions from the seed alone.  ``u1`` is reflected into (0, 1]
    to keep the logarithm finite.
    """
    u1 = 1.0 - rng.random(shape)
    u2 = rng.random(shape)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
