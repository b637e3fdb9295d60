"""
Layers used by the drag surrogate.

torch.autograd is the reverse-mode core; these wrappers pin the shape
contracts (3x3x3 kernels with padding = dilation, divisible groups/heads)
and add the gating, attention and stochastic-depth blocks.
"""

from __future__ import annotations

import torch
import torch.nn as nn
import torch.nn.functional as F
from einops import rearrange


class ShapeMismatchError(ValueError):
    pass


class DivisibilityError(ValueError):
    pass


def conv3d(input, weight, bias=None, stride: int = 1, dilation: int = 1):
    """3x3x3 cross-correlation, zero padding = dilation so stride 1 keeps the shape."""
    if input.dim() != 5:
        raise ShapeMismatchError(f"conv3d expects [N, C, D, H, W], got {tuple(input.shape)}")
    if weight.dim() != 5 or tuple(weight.shape[2:]) != (3, 3, 3):
        raise ShapeMismatchError(f"conv3d expects a 3x3x3 kernel, got {tuple(weight.shape)}")
    if weight.shape[1] != input.shape[1]:
        raise ShapeMismatchError(
            f"conv3d: input has {input.shape[1]} channels, kernel expects {weight.shape[1]}"
        )
    return F.conv3d(input, weight, bias, stride=stride, padding=dilation, dilation=dilation)


def group_norm(input, groups: int, gamma=None, beta=None, eps: float = 1e-5):
    if input.shape[1] % groups:
        raise DivisibilityError(f"{input.shape[1]} channels not divisible into {groups} groups")
    return F.group_norm(input, groups, gamma, beta, eps)


def conv3x3(in_channels: int, out_channels: int, stride: int = 1, dilation: int = 1) -> nn.Conv3d:
    return nn.Conv3d(
        in_channels, out_channels, 3, stride=stride, padding=dilation, dilation=dilation
    )


def normalization(channels: int, groups: int = 8) -> nn.GroupNorm:
    if channels % groups:
        raise DivisibilityError(f"{channels} channels not divisible into {groups} groups")
    return nn.GroupNorm(groups, channels, eps=1e-5)


ACTIVATIONS = {"relu": nn.ReLU, "silu": nn.SiLU, "gelu": nn.GELU}


def activation(name: str = "relu") -> nn.Module:
    try:
        return ACTIVATIONS[name]()
    except KeyError:
        raise ValueError(f"unknown activation {name!r}, expected one of {sorted(ACTIVATIONS)}") from None


class SCSE(nn.Module):
    """
    Concurrent spatial and channel squeeze-excitation; the two recalibrated
    maps are combined by element-wise maximum.
    """

    def __init__(self, channels: int, reduction: int = 4):
        super().__init__()
        if channels < reduction:
            raise ShapeMismatchError(f"scse needs channels >= reduction ({channels} < {reduction})")
        hidden = channels // reduction
        self.pool = nn.AdaptiveAvgPool3d(1)
        self.fc1 = nn.Linear(channels, hidden)
        self.fc2 = nn.Linear(hidden, channels)
        self.spatial = nn.Conv3d(channels, 1, 1)
        self.channels = channels

    def forward(self, x):
        if x.dim() != 5 or x.shape[1] != self.channels:
            raise ShapeMismatchError(f"scse({self.channels}) got input {tuple(x.shape)}")
        c = self.pool(x).flatten(1)
        c = torch.sigmoid(self.fc2(F.relu(self.fc1(c))))
        channel = x * c[:, :, None, None, None]
        spatial = x * torch.sigmoid(self.spatial(x))
        return torch.maximum(channel, spatial)


class TokenAttention(nn.Module):
    """Self-attention over [N, T, E] tokens with learned Q/K/V/output projections."""

    def __init__(self, embed_dim: int, heads: int = 4):
        super().__init__()
        if embed_dim % heads:
            raise DivisibilityError(f"embedding {embed_dim} not divisible by {heads} heads")
        self.attn = nn.MultiheadAttention(embed_dim, heads, batch_first=True)

    def forward(self, tokens):
        out, _ = self.attn(tokens, tokens, tokens, need_weights=False)
        return out


def spatial_tokens(x):
    return rearrange(x, "b c d h w -> b (d h w) c")


class StochasticDepth(nn.Module):
    """
    Residual wrapper that drops the whole branch with probability 1 - p
    during training (one coin per batch) and scales it by p in eval.
    """

    def __init__(self, branch: nn.Module, skip: nn.Module | None = None, survival_p: float = 1.0):
        super().__init__()
        if not 0.0 < survival_p <= 1.0:
            raise ValueError(f"survival probability {survival_p} outside (0, 1]")
        self.branch = branch
        self.skip = skip if skip is not None else nn.Identity()
        self.survival_p = float(survival_p)
        self.generator: torch.Generator | None = None

    def forward(self, x):
        identity = self.skip(x)
        if self.training and self.survival_p < 1.0:
            coin = torch.rand((), generator=self.generator)
            if coin >= self.survival_p:
                return identity
            out = self.branch(x)
        elif self.training:
            out = self.branch(x)
        else:
            out = self.survival_p * self.branch(x)
        if out.shape != identity.shape:
            raise ShapeMismatchError(
                f"branch output {tuple(out.shape)} does not match skip {tuple(identity.shape)}"
            )
        return identity + out


class BatchStandardize(nn.BatchNorm1d):
    """BatchNorm1d that falls back to running statistics for one-sample batches."""

    def forward(self, x):
        if self.training and x.shape[0] == 1:
            return F.batch_norm(
                x, self.running_mean, self.running_var, self.weight, self.bias, False, 0.0, self.eps
            )
        return super().forward(x)
