"""
3D-CNN drag regressor.

input conv -> 6 residual encoder blocks (scse -> act -> conv -> group norm ->
dropout, wrapped in stochastic depth) -> spatial tokens -> multi-head
attention -> mean pool -> 2 x (act -> batch standardize -> linear) -> c_d.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
import torch
import torch.nn as nn

from ..modules import (
    SCSE,
    BatchStandardize,
    DivisibilityError,
    StochasticDepth,
    TokenAttention,
    activation,
    conv3x3,
    normalization,
    spatial_tokens,
)
from ..voxelizer import SdfGrid
from .scaler import Scaler

# (in, out, stride, dilation)
DEFAULT_BLOCKS = (
    (16, 32, 2, 1),
    (32, 48, 2, 1),
    (48, 64, 2, 1),
    (64, 96, 2, 2),
    (96, 144, 1, 2),
    (144, 192, 1, 4),
)
ENCODER_BLOCKS = 6


class DimensionMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    input_dims: tuple[int, int, int] = (128, 32, 32)  # (nx, ny, nz)
    stem_channels: int = 16
    blocks: tuple[tuple[int, int, int, int], ...] = DEFAULT_BLOCKS
    norm_groups: int = 8
    heads: int = 4
    fc_hidden: int = 128
    dropout: float = 0.1
    survival_min: float = 0.8
    se_reduction: int = 4
    activation: str = "relu"

    def __post_init__(self):
        object.__setattr__(self, "input_dims", tuple(int(d) for d in self.input_dims))
        object.__setattr__(self, "blocks", tuple(tuple(int(v) for v in b) for b in self.blocks))
        if len(self.blocks) != ENCODER_BLOCKS:
            raise ValueError(f"the encoder has exactly {ENCODER_BLOCKS} blocks, got {len(self.blocks)}")
        channels = self.stem_channels
        for i, (cin, cout, stride, dilation) in enumerate(self.blocks):
            if cin != channels:
                raise ValueError(f"block {i} expects {cin} channels, previous stage gives {channels}")
            if cout % self.norm_groups:
                raise DivisibilityError(f"block {i}: {cout} channels not divisible into {self.norm_groups} groups")
            if stride not in (1, 2) or dilation < 1:
                raise ValueError(f"block {i}: stride must be 1 or 2 and dilation >= 1")
            channels = cout
        if channels % self.heads:
            raise DivisibilityError(f"embedding {channels} not divisible by {self.heads} heads")
        if not 0.0 < self.survival_min <= 1.0:
            raise ValueError(f"survival_min {self.survival_min} outside (0, 1]")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout {self.dropout} outside [0, 1)")

    @property
    def embed_dim(self) -> int:
        return self.blocks[-1][1]

    def survival(self, index: int) -> float:
        """Linear decay from 1.0 at the first block to survival_min at the last."""
        return 1.0 - (1.0 - self.survival_min) * index / (len(self.blocks) - 1)

    def miniature(self, input_dims=(16, 8, 8)) -> "ModelConfig":
        """Same plan with every width halved, for gradient checks and quick tests."""
        blocks = tuple((cin // 2, cout // 2, s, d) for cin, cout, s, d in self.blocks)
        return ModelConfig(
            input_dims=tuple(input_dims),
            stem_channels=self.stem_channels // 2,
            blocks=blocks,
            norm_groups=self.norm_groups,
            heads=self.heads,
            fc_hidden=self.fc_hidden // 2,
            dropout=self.dropout,
            survival_min=self.survival_min,
            se_reduction=self.se_reduction,
            activation=self.activation,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["input_dims"] = list(self.input_dims)
        d["blocks"] = [list(b) for b in self.blocks]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


class SurrogateNet(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        self.stem = conv3x3(1, cfg.stem_channels)

        blocks = []
        for i, (cin, cout, stride, dilation) in enumerate(cfg.blocks):
            branch = nn.Sequential(
                SCSE(cin, cfg.se_reduction),
                activation(cfg.activation),
                conv3x3(cin, cout, stride=stride, dilation=dilation),
                normalization(cout, cfg.norm_groups),
                nn.Dropout(cfg.dropout),
            )
            skip = None
            if cin != cout or stride != 1:
                skip = nn.Conv3d(cin, cout, 1, stride=stride, bias=False)
            blocks.append(StochasticDepth(branch, skip, cfg.survival(i)))
        self.encoder = nn.Sequential(*blocks)

        self.attention = TokenAttention(cfg.embed_dim, cfg.heads)
        self.head = nn.Sequential(
            activation(cfg.activation),
            BatchStandardize(cfg.embed_dim),
            nn.Linear(cfg.embed_dim, cfg.fc_hidden),
            activation(cfg.activation),
            BatchStandardize(cfg.fc_hidden),
            nn.Linear(cfg.fc_hidden, 1),
        )

    def forward(self, x):
        h = self.encoder(self.stem(x))
        tokens = self.attention(spatial_tokens(h))
        return self.head(tokens.mean(dim=1)).squeeze(-1)


def init_weights(net: nn.Module, seed: int):
    """Kaiming-uniform (fan-in) weights, zero biases, unit/zero norm affines."""
    generator = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for m in net.modules():
            if isinstance(m, (nn.Conv3d, nn.Linear)):
                nn.init.kaiming_uniform_(m.weight, mode="fan_in", nonlinearity="relu", generator=generator)
                if m.bias is not None:
                    m.bias.zero_()
            elif isinstance(m, nn.MultiheadAttention):
                nn.init.kaiming_uniform_(
                    m.in_proj_weight, mode="fan_in", nonlinearity="relu", generator=generator
                )
                m.in_proj_bias.zero_()
            elif isinstance(m, (nn.GroupNorm, nn.BatchNorm1d)):
                m.weight.fill_(1.0)
                m.bias.zero_()
                if isinstance(m, nn.BatchNorm1d):
                    m.reset_running_stats()


def build_model(cfg: ModelConfig | None = None, seed: int = 0) -> SurrogateNet:
    net = SurrogateNet(cfg or ModelConfig())
    init_weights(net, seed)
    return net


def count_parameters(net: nn.Module) -> int:
    return sum(p.numel() for p in net.parameters() if p.requires_grad)


def grid_tensor(values: np.ndarray) -> torch.Tensor:
    """(nz, ny, nx) standardized values -> [1, 1, nz, ny, nx] float32."""
    return torch.from_numpy(np.ascontiguousarray(values, dtype=np.float32))[None, None]


def predict(net: SurrogateNet, scaler: Scaler, grid: SdfGrid) -> float:
    """De-standardized c_d for one grid, eval mode."""
    if tuple(grid.dims) != tuple(net.cfg.input_dims):
        raise DimensionMismatchError(
            f"grid dims {'x'.join(map(str, grid.dims))} do not match the model's "
            f"{'x'.join(map(str, net.cfg.input_dims))}"
        )
    net.eval()
    with torch.no_grad():
        z = net(grid_tensor(scaler.standardize_input(grid.values)))
    return scaler.destandardize_output(float(z[0]))


@dataclass
class SurrogateModel:
    """Layer stack, scalers and config: everything a prediction needs."""

    net: SurrogateNet
    scaler: Scaler
    metadata: dict = field(default_factory=dict)

    @property
    def config(self) -> ModelConfig:
        return self.net.cfg

    def predict(self, grid: SdfGrid) -> float:
        return predict(self.net, self.scaler, grid)

