import zlib

import numpy as np
from scipy import special

NOISE_STREAM = "noise"
INIT_STREAM = "init"

_MANTISSA = 2.0**53


def stream_key(label: str) -> int:
    # crc32 is stable across interpreter runs, unlike hash()
    return zlib.crc32(label.encode())


def seeded_generator(seed: int, label: str, *key: int) -> np.random.Generator:
    """Counter-based generator for the stream `label` of `seed`, optionally split further by integer keys."""
    if seed < 0:
        raise ValueError(f"Seed must be nonnegative, got {seed}")
    sequence = np.random.SeedSequence(seed, spawn_key=(stream_key(label), *key))
    return np.random.Generator(np.random.Philox(sequence))


def replica_generator(seed: int, replica: int, label: str = NOISE_STREAM) -> np.random.Generator:
    return seeded_generator(seed, label, replica)


def normals(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    """Standard normals by inverse CDF of midpoint-shifted 53-bit uniforms (never exactly 0 or 1)."""
    u = (np.floor(rng.random(shape) * _MANTISSA) + 0.5) / _MANTISSA
    return special.ndtri(u)


class NoiseStream:
    """Sequential normal increments of one replica, drawn in fixed-size blocks of steps.

    The block size is a constant, so the values seen at step k do not depend on how replicas are
    grouped or scheduled.
    """

    def __init__(self, seed: int, replica: int, shape: tuple[int, ...], block_steps: int):
        self.rng = replica_generator(seed, replica)
        self.shape = shape
        self.block_steps = block_steps
        self.block = np.empty((0, *shape))
        self.position = 0

    def next_block(self) -> np.ndarray:
        self.block = normals(self.rng, (self.block_steps, *self.shape))
        self.position += self.block_steps
        return self.block
