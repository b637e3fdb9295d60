from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np


class ScalerError(ValueError):
    pass


@dataclass(frozen=True)
class Scaler:
    """Global input mean/std over all training cells, output mean/std over training c_d."""

    input_mean: float
    input_std: float
    output_mean: float
    output_std: float

    def __post_init__(self):
        for name in ("input_mean", "input_std", "output_mean", "output_std"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise ScalerError(f"{name} is not finite")
            object.__setattr__(self, name, value)
        if self.input_std <= 0 or self.output_std <= 0:
            raise ScalerError("scaler std must be positive")

    def standardize_input(self, values: np.ndarray) -> np.ndarray:
        return ((np.asarray(values, dtype=np.float64) - self.input_mean) / self.input_std).astype(np.float32)

    def standardize_output(self, cd):
        return (np.asarray(cd, dtype=np.float64) - self.output_mean) / self.output_std

    def destandardize_output(self, z):
        out = np.asarray(z, dtype=np.float64) * self.output_std + self.output_mean
        return float(out) if out.ndim == 0 else out

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "Scaler":
        return cls(**d)


def _combine(a: tuple[int, float, float], b: tuple[int, float, float]) -> tuple[int, float, float]:
    """Merge (count, mean, M2) moments of two disjoint sets."""
    na, mean_a, m2_a = a
    nb, mean_b, m2_b = b
    n = na + nb
    delta = mean_b - mean_a
    return n, mean_a + delta * nb / n, m2_a + m2_b + delta * delta * na * nb / n


def fit_scalers(grids: Iterable, targets: Sequence[float]) -> Scaler:
    """
    Fit on the training split only. `grids` may be SdfGrids or arrays and is
    consumed once, so it can stream from disk. Population std everywhere.
    """
    targets = np.asarray(targets, dtype=np.float64)
    if targets.size < 2:
        raise ScalerError(f"need at least 2 training samples, got {targets.size}")
    if not np.all(np.isfinite(targets)):
        raise ScalerError("training c_d values must be finite")

    moments = None
    for grid in grids:
        values = np.asarray(getattr(grid, "values", grid), dtype=np.float64).ravel()
        part = (values.size, float(values.mean()), float(((values - values.mean()) ** 2).sum()))
        moments = part if moments is None else _combine(moments, part)
    if moments is None:
        raise ScalerError("no training grids")

    n, mean, m2 = moments
    input_std = float(np.sqrt(m2 / n))
    output_std = float(targets.std())
    if input_std == 0.0:
        raise ScalerError("zero variance over training SDF cells")
    if output_std == 0.0:
        raise ScalerError("zero variance over training c_d values")
    return Scaler(mean, input_std, float(targets.mean()), output_std)
