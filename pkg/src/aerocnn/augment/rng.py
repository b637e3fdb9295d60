"""Counter-based random streams keyed by (seed, sample_id, epoch)."""

from hashlib import blake2b

import numpy as np


def sample_key(sample_id) -> int:
    """Stable 64-bit integer for any sample id (text or int)."""
    digest = blake2b(str(sample_id).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


class AugRng:
    """
    Philox stream for one (seed, sample, epoch) key. Identical keys give
    identical draw sequences, whichever worker or thread asks for them.
    """

    def __init__(self, seed: int, sample_id, epoch: int):
        if seed < 0 or epoch < 0:
            raise ValueError(f"seed and epoch must be non-negative, got {seed}, {epoch}")
        self.seed = int(seed)
        self.sample_id = sample_id
        self.epoch = int(epoch)

    @property
    def key(self) -> tuple[int, int, int]:
        return self.seed, sample_key(self.sample_id), self.epoch

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(np.random.SeedSequence(list(self.key))))

    def __repr__(self):
        return f"AugRng(seed={self.seed}, sample_id={self.sample_id!r}, epoch={self.epoch})"
