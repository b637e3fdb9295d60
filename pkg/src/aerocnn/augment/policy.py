from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from ..voxelizer import SdfGrid
from .ops import (
    NOISE_KINDS,
    aniso_resample_aug,
    clamp_aug,
    dropout_box_aug,
    elastic_aug,
    noise_aug,
    translate_aug,
)
from .rng import AugRng

# application order is fixed
OPS = ("clamp", "translate", "noise", "elastic", "resample", "dropout")


class AugPolicyError(ValueError):
    pass


def _check_range(name: str, rng_range, lo: float, hi: float):
    a, b = rng_range
    if not (lo <= a <= b <= hi):
        raise AugPolicyError(f"{name} range {tuple(rng_range)} outside [{lo}, {hi}] or reversed")


@dataclass(frozen=True)
class AugPolicy:
    apply_probability: float = 0.75
    ops: tuple[str, ...] = OPS
    seed: int = 0
    clamp_u: tuple[float, float] = (1e-5, 1.0)
    translate_fraction: float = 0.04
    noise_kinds: tuple[str, ...] = NOISE_KINDS
    noise_strength: tuple[float, float] = (0.001, 0.05)
    impulse_fraction: tuple[float, float] = (1e-4, 1e-3)
    elastic_sigma: float = 4.0
    elastic_alpha: tuple[float, float] = (0.1, 0.5)
    resample_factor: tuple[float, float] = (1.2, 2.0)
    dropout_boxes: tuple[int, int] = (1, 4)
    dropout_volume: tuple[float, float] = (0.01, 0.05)

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, list):
                object.__setattr__(self, f.name, tuple(value))
        if not 0.0 <= self.apply_probability <= 1.0:
            raise AugPolicyError(f"apply_probability {self.apply_probability} outside [0, 1]")
        unknown = set(self.ops) - set(OPS)
        if unknown:
            raise AugPolicyError(f"unknown augmentation op(s): {sorted(unknown)}")
        bad_kinds = set(self.noise_kinds) - set(NOISE_KINDS)
        if bad_kinds or not self.noise_kinds:
            raise AugPolicyError(f"noise kinds must be a nonempty subset of {NOISE_KINDS}")
        _check_range("clamp_u", self.clamp_u, 1e-5, 1.0)
        _check_range("noise_strength", self.noise_strength, 0.0, 0.05)
        _check_range("impulse_fraction", self.impulse_fraction, 0.0, 1e-3)
        _check_range("elastic_alpha", self.elastic_alpha, 0.0, 0.5)
        _check_range("resample_factor", self.resample_factor, 1.0, 2.0)
        _check_range("dropout_boxes", self.dropout_boxes, 1, 4)
        _check_range("dropout_volume", self.dropout_volume, 0.01, 0.05)
        if not 0.0 <= self.translate_fraction <= 0.04:
            raise AugPolicyError(f"translate_fraction {self.translate_fraction} outside [0, 0.04]")
        if self.elastic_sigma <= 0:
            raise AugPolicyError("elastic_sigma must be positive")
        if self.seed < 0:
            raise AugPolicyError("seed must be non-negative")

    @classmethod
    def from_config(cls, config: dict | None, seed: int = 0) -> "AugPolicy":
        config = dict(config or {})
        known = {f.name for f in fields(cls)}
        unknown = set(config) - known
        if unknown:
            raise AugPolicyError(f"unknown augmentation keys: {sorted(unknown)}")
        config.setdefault("seed", seed)
        return cls(**config)

    @property
    def enabled(self) -> tuple[str, ...]:
        return tuple(op for op in OPS if op in self.ops)

    def choose(self, rng: np.random.Generator) -> tuple[str, ...]:
        """Coin with apply_probability, then a uniform nonempty subset of the enabled ops."""
        applied = rng.random() < self.apply_probability
        enabled = self.enabled
        if not applied or not enabled:
            return ()
        mask = int(rng.integers(1, 1 << len(enabled)))
        return tuple(op for bit, op in enumerate(enabled) if mask >> bit & 1)

    def draw(self, sample_id, epoch: int) -> tuple[str, ...]:
        return self.choose(AugRng(self.seed, sample_id, epoch).generator())

    def run_op(self, name: str, g: SdfGrid, rng: np.random.Generator) -> SdfGrid:
        if name == "clamp":
            return clamp_aug(g, rng, u_range=self.clamp_u)
        if name == "translate":
            return translate_aug(g, rng, fraction=self.translate_fraction)
        if name == "noise":
            return noise_aug(
                g, rng,
                kinds=self.noise_kinds,
                strength_range=self.noise_strength,
                impulse_range=self.impulse_fraction,
            )
        if name == "elastic":
            return elastic_aug(g, rng, sigma=self.elastic_sigma, alpha_range=self.elastic_alpha)
        if name == "resample":
            return aniso_resample_aug(g, rng, factor_range=self.resample_factor)
        if name == "dropout":
            return dropout_box_aug(g, rng, count_range=self.dropout_boxes, volume_range=self.dropout_volume)
        raise AugPolicyError(f"unknown augmentation op {name!r}")


def apply_policy(g: SdfGrid, policy: AugPolicy, sample_id, epoch: int) -> SdfGrid:
    """All randomness comes from AugRng(policy.seed, sample_id, epoch)."""
    rng = AugRng(policy.seed, sample_id, epoch).generator()
    for name in policy.choose(rng):
        g = policy.run_op(name, g, rng)
    return g


def apply_op(g: SdfGrid, name: str, seed: int, sample_id="preview", epoch: int = 0, policy: AugPolicy | None = None) -> SdfGrid:
    """One named operator under the keyed stream; used by augment-preview."""
    policy = policy or AugPolicy(seed=seed)
    return policy.run_op(name, g, AugRng(seed, sample_id, epoch).generator())
