"""
Training samples, the augmenting dataset and an epoch-keyed sampler.

The sampler yields (index, epoch) keys, so a worker process only needs the
key to reproduce the augmentation of a sample; the arrival order of batches
has no influence on what a sample looks like.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch
from torch.utils.data import Dataset, Sampler

from ..augment import AugPolicy, apply_policy
from ..utilities.manifest import Manifest, ManifestError
from ..voxelizer import SdfGrid, read_vsdf
from .scaler import Scaler

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainingSample:
    sample_id: str
    project: str
    grid: SdfGrid
    cd: float
    is_baseline: bool = False


def load_training_samples(manifest: Manifest, split: str = "train") -> list[TrainingSample]:
    """Read the VSDF of every record in `split`; all grids must share dims."""
    samples = []
    dims = None
    for r in manifest.split(split):
        if r.cd is None:
            raise ManifestError(f"{split} sample {r.sample_id!r} has no cd label")
        path = manifest.resolve(r.sdf_path)
        if path is None:
            raise ManifestError(f"{split} sample {r.sample_id!r} has no sdf_path")
        grid = read_vsdf(path)
        if dims is None:
            dims = grid.dims
        elif grid.dims != dims:
            raise ManifestError(
                f"sample {r.sample_id!r} has dims {'x'.join(map(str, grid.dims))}, "
                f"expected {'x'.join(map(str, dims))}"
            )
        samples.append(TrainingSample(r.sample_id, r.project, grid, r.cd, r.is_baseline))
    return samples


def stratified_split(
    samples: Sequence[TrainingSample], fraction: float, seed: int = 0
) -> tuple[list[TrainingSample], list[TrainingSample]]:
    """
    Hold out `fraction` of every project's non-baseline samples. Baselines
    always stay in the training part.
    """
    if not 0.0 <= fraction < 1.0:
        raise ValueError(f"validation fraction {fraction} outside [0, 1)")
    if fraction == 0.0:
        return list(samples), []

    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 1])))
    held = set()
    for project in sorted({s.project for s in samples}):
        candidates = [s.sample_id for s in samples if s.project == project and not s.is_baseline]
        n_val = min(int(round(fraction * len(candidates))), max(len(candidates) - 1, 0))
        if n_val:
            held.update(candidates[i] for i in rng.permutation(len(candidates))[:n_val])
    train = [s for s in samples if s.sample_id not in held]
    val = [s for s in samples if s.sample_id in held]
    logger.info("Validation split: %d train / %d validation samples", len(train), len(val))
    return train, val


class EpochKeyedSampler(Sampler):
    def __init__(self, n: int, seed: int = 0, shuffle: bool = True):
        self.n = n
        self.seed = seed
        self.shuffle = shuffle
        self.epoch = 0

    def set_epoch(self, epoch: int):
        self.epoch = int(epoch)

    def __len__(self):
        return self.n

    def __iter__(self):
        if self.shuffle:
            rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([self.seed, self.epoch])))
            order = rng.permutation(self.n)
        else:
            order = np.arange(self.n)
        epoch = self.epoch
        return iter([(int(i), epoch) for i in order])


class SdfDataset(Dataset):
    """
    Keys are (index, epoch) pairs; a plain index means epoch 0. With no
    policy the grids are returned unaugmented.
    """

    def __init__(self, samples: Sequence[TrainingSample], scaler: Scaler, policy: AugPolicy | None = None):
        self.samples = list(samples)
        self.scaler = scaler
        self.policy = policy

    def __len__(self):
        return len(self.samples)

    def __getitem__(self, key):
        idx, epoch = key if isinstance(key, tuple) else (key, 0)
        sample = self.samples[idx]
        grid = sample.grid
        if self.policy is not None:
            grid = apply_policy(grid, self.policy, sample.sample_id, epoch)
        x = torch.from_numpy(self.scaler.standardize_input(grid.values))[None]
        y = torch.tensor(float(self.scaler.standardize_output(sample.cd)), dtype=torch.float32)
        return x, y
