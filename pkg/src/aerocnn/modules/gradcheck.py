"""
Central finite differences against autograd.

The check differentiates the scalar sum(op(*inputs) * w) for a fixed random
w. Large tensors are probed at a seeded random subset of coordinates.
Failures are reported, never raised.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Callable, Sequence

import torch
import torch.nn as nn


@dataclass
class GradCheckEntry:
    name: str
    probes: int
    max_abs_error: float
    scale: float
    rel_error: float
    passed: bool


@dataclass
class GradCheckReport:
    tolerance: float
    entries: list[GradCheckEntry] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    @property
    def max_rel_error(self) -> float:
        return max((e.rel_error for e in self.entries), default=0.0)

    def failures(self) -> list[GradCheckEntry]:
        return [e for e in self.entries if not e.passed]

    def to_text(self) -> str:
        header = f"{'tensor':<40} {'probes':>6} {'max|fd-ad|':>12} {'scale':>12} {'rel.err':>10}  ok"
        lines = [header, "-" * len(header)]
        for e in self.entries:
            lines.append(
                f"{e.name:<40} {e.probes:>6d} {e.max_abs_error:>12.3e} {e.scale:>12.3e} "
                f"{e.rel_error:>10.2e}  {'yes' if e.passed else 'NO'}"
            )
        lines.append(f"max rel. error {self.max_rel_error:.2e} (tolerance {self.tolerance:.0e})")
        return "\n".join(lines)

    def __str__(self):
        return self.to_text()


def grad_check(
    op: Callable,
    input_shapes: Sequence[Sequence[int]],
    tolerance: float = 1e-3,
    step: float = 1e-3,
    seed: int = 0,
    probes: int = 24,
    check_params: bool = True,
) -> GradCheckReport:
    """
    Compare reverse-mode gradients of `op` with central differences using
    h = step * max(|x|, 1), all in float64. `op` is a function or module
    taking one tensor per shape; a module is copied and cast, its own mode
    (train/eval) is kept.
    """
    generator = torch.Generator().manual_seed(seed)
    if isinstance(op, nn.Module):
        op = copy.deepcopy(op).double()
        params = [(n, p) for n, p in op.named_parameters() if p.requires_grad] if check_params else []
    else:
        params = []

    inputs = [
        torch.randn(tuple(shape), generator=generator, dtype=torch.float64).requires_grad_(True)
        for shape in input_shapes
    ]
    out = op(*inputs)
    weight = torch.randn(out.shape, generator=generator, dtype=torch.float64)

    def objective() -> float:
        return float((op(*inputs) * weight).sum())

    tensors = [(f"input{i}", t) for i, t in enumerate(inputs)] + params
    analytic = torch.autograd.grad(
        (out * weight).sum(), [t for _, t in tensors], allow_unused=True
    )

    analytic = [torch.zeros_like(t) if ad is None else ad for (_, t), ad in zip(tensors, analytic)]
    # near-zero gradients (e.g. a bias feeding a normalization) are measured
    # against the largest gradient of the whole check
    floor = max(1e-4 * max(float(ad.abs().max()) for ad in analytic), 1e-12)

    report = GradCheckReport(tolerance=tolerance)
    with torch.no_grad():
        for (name, tensor), ad in zip(tensors, analytic):
            flat = tensor.view(-1)
            ad_flat = ad.reshape(-1)
            if flat.numel() <= probes:
                picks = torch.arange(flat.numel())
            else:
                picks = torch.randperm(flat.numel(), generator=generator)[:probes]

            worst = 0.0
            for i in picks.tolist():
                x = float(flat[i])
                h = step * max(abs(x), 1.0)
                flat[i] = x + h
                f_plus = objective()
                flat[i] = x - h
                f_minus = objective()
                flat[i] = x
                fd = (f_plus - f_minus) / (2.0 * h)
                worst = max(worst, abs(fd - float(ad_flat[i])))

            scale = max(float(ad.abs().max()), floor)
            rel = worst / scale
            report.entries.append(
                GradCheckEntry(name, len(picks), worst, scale, rel, rel <= tolerance)
            )
    return report
