"""
Single-model training: L1 on standardized c_d, RAdam with a cyclic learning
rate stepped per batch, online augmentation keyed by (seed, sample, epoch).
"""

from __future__ import annotations

import copy
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import pandas as pd
import pytorch_lightning as pl
import torch
import torch.nn.functional as F
from pytorch_lightning import Trainer, seed_everything
from pytorch_lightning.loggers import CSVLogger
from torch.utils.data import DataLoader

from ..augment import AugPolicy
from ..modules import LrSchedule, RAdam, cyclic_lr_adjuster
from .data import EpochKeyedSampler, SdfDataset, TrainingSample, stratified_split
from .model import ModelConfig, SurrogateModel, SurrogateNet, build_model, count_parameters
from .scaler import Scaler, fit_scalers

logger = logging.getLogger(__name__)


class TrainingDivergedError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 16
    epochs: int = 300
    base_lr: float = 1e-4
    max_lr: float = 1e-3
    step_size_epochs: float = 4
    weight_decay: float = 1e-4
    validation_fraction: float = 0.0
    num_workers: int = 0
    seed: int = 0
    policy: AugPolicy = field(default_factory=AugPolicy)
    progress: bool = False

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.step_size_epochs <= 0:
            raise ValueError("step_size_epochs must be positive")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ValueError(f"validation_fraction {self.validation_fraction} outside [0, 1)")
        if self.num_workers < 0:
            raise ValueError("num_workers must be >= 0")
        LrSchedule(self.base_lr, self.max_lr)

    def schedule(self, batches_per_epoch: int) -> LrSchedule:
        step_size = max(1, int(round(self.step_size_epochs * batches_per_epoch)))
        return LrSchedule(self.base_lr, self.max_lr, step_size)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("progress")
        d["policy"] = {k: list(v) if isinstance(v, tuple) else v for k, v in d["policy"].items()}
        return d


class SurrogateModule(pl.LightningModule):
    def __init__(self, net: SurrogateNet, cfg: TrainConfig, schedule: LrSchedule, sampler: EpochKeyedSampler | None = None):
        super().__init__()
        self.net = net
        self.cfg = cfg
        self.schedule = schedule
        self.sampler = sampler
        self.lr_adjuster = None

        self.loss_curve: list[dict] = []
        self._sum = 0.0
        self._count = 0
        self._val_sum = 0.0
        self._val_count = 0
        self.best_val = math.inf
        self.best_epoch: int | None = None
        self.best_state: dict | None = None

    def forward(self, x):
        return self.net(x)

    def configure_optimizers(self):
        optimizer = RAdam.for_module(self.net, lr=self.schedule.base_lr, weight_decay=self.cfg.weight_decay)
        self.lr_adjuster = cyclic_lr_adjuster(optimizer, self.schedule)
        return optimizer

    def on_train_epoch_start(self):
        if self.sampler is not None:
            self.sampler.set_epoch(self.current_epoch)
        self._sum, self._count = 0.0, 0

    def on_train_batch_start(self, batch, batch_idx):
        lr = self.lr_adjuster(self.global_step)
        self.log("train/lr", lr, on_step=True, on_epoch=False, logger=True)

    def training_step(self, batch, batch_idx):
        x, y = batch
        loss = F.l1_loss(self.net(x), y)
        if not torch.isfinite(loss):
            raise TrainingDivergedError(
                f"non-finite training loss at epoch {self.current_epoch}, batch {batch_idx}"
            )
        self._sum += float(loss.detach()) * len(y)
        self._count += len(y)
        self.log("train/loss", loss, prog_bar=True, logger=True, on_step=True, on_epoch=False, batch_size=len(y))
        return loss

    def on_train_epoch_end(self):
        epoch_loss = self._sum / max(self._count, 1)
        row = {"epoch": self.current_epoch, "train_loss": epoch_loss}
        if self._val_count:
            row["val_loss"] = self._val_sum / self._val_count
        self.loss_curve.append(row)
        self.log("train/loss_epoch", epoch_loss, logger=True, on_step=False, on_epoch=True)

    def on_validation_epoch_start(self):
        self._val_sum, self._val_count = 0.0, 0

    def validation_step(self, batch, batch_idx):
        x, y = batch
        loss = F.l1_loss(self.net(x), y)
        self._val_sum += float(loss) * len(y)
        self._val_count += len(y)

    def on_validation_epoch_end(self):
        if not self._val_count:
            return
        val_loss = self._val_sum / self._val_count
        self.log("val/loss", val_loss, logger=True, on_step=False, on_epoch=True)
        if val_loss < self.best_val:
            self.best_val = val_loss
            self.best_epoch = self.current_epoch
            self.best_state = copy.deepcopy(self.net.state_dict())


@dataclass
class TrainResult:
    model: SurrogateModel
    loss_curve: pd.DataFrame
    best_epoch: int | None = None

    @property
    def final_loss(self) -> float:
        return float(self.loss_curve["train_loss"].iloc[-1])

    def save_loss_curve(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.loss_curve.to_csv(path, index=False)
        return path


def _loader(dataset, batch_size, num_workers, sampler=None):
    return DataLoader(
        dataset,
        batch_size=batch_size,
        sampler=sampler,
        shuffle=False,
        num_workers=num_workers,
        persistent_workers=False,
    )


def train(
    net: SurrogateNet,
    scaler: Scaler,
    samples: Sequence[TrainingSample],
    cfg: TrainConfig,
    val_samples: Sequence[TrainingSample] = (),
    out_dir=None,
) -> TrainResult:
    """
    Fit `net` in place. With validation samples the weights of the best
    validation epoch are restored at the end, otherwise the last epoch is kept.
    """
    if not samples:
        raise ValueError("no training samples")
    dims = tuple(net.cfg.input_dims)
    for s in list(samples) + list(val_samples):
        if tuple(s.grid.dims) != dims:
            raise ValueError(f"sample {s.sample_id!r} has dims {s.grid.dims}, model expects {dims}")

    seed_everything(cfg.seed, workers=True)
    sampler = EpochKeyedSampler(len(samples), seed=cfg.seed)
    train_loader = _loader(SdfDataset(samples, scaler, cfg.policy), cfg.batch_size, cfg.num_workers, sampler)
    val_loader = None
    if val_samples:
        val_loader = _loader(SdfDataset(val_samples, scaler), cfg.batch_size, cfg.num_workers)

    batches_per_epoch = len(train_loader)
    schedule = cfg.schedule(batches_per_epoch)
    module = SurrogateModule(net, cfg, schedule, sampler)

    csv_logger = False
    if out_dir is not None:
        csv_logger = CSVLogger(save_dir=str(out_dir), name="lightning_logs")

    trainer = Trainer(
        accelerator="cpu",
        devices=1,
        max_epochs=cfg.epochs,
        deterministic=True,
        logger=csv_logger,
        log_every_n_steps=max(1, min(50, batches_per_epoch)),
        enable_checkpointing=False,
        enable_progress_bar=cfg.progress,
        enable_model_summary=False,
        num_sanity_val_steps=0,
        use_distributed_sampler=False,
    )

    logger.info(
        "Training %d samples (%d validation), %d batches/epoch, %d epochs, %d parameters",
        len(samples), len(val_samples), batches_per_epoch, cfg.epochs, count_parameters(net),
    )
    trainer.fit(module, train_loader, val_loader)

    if module.best_state is not None:
        net.load_state_dict(module.best_state)
        logger.info("Restored best validation epoch %d (loss %.5f)", module.best_epoch, module.best_val)
    net.eval()

    curve = pd.DataFrame(module.loss_curve)
    if "val_loss" not in curve:
        curve["val_loss"] = float("nan")
    curve = curve[["epoch", "train_loss", "val_loss"]]
    metadata = {
        "training": {
            "seed": cfg.seed,
            "epochs": len(curve),
            "final_loss": float(curve["train_loss"].iloc[-1]),
            "best_epoch": module.best_epoch,
            "samples": len(samples),
        }
    }
    return TrainResult(SurrogateModel(net, scaler, metadata), curve, module.best_epoch)


def fit_model(
    samples: Sequence[TrainingSample],
    model_cfg: ModelConfig,
    cfg: TrainConfig,
    out_dir=None,
) -> TrainResult:
    """Split off validation, fit the scalers on the training part, build and train."""
    train_part, val_part = stratified_split(samples, cfg.validation_fraction, cfg.seed)
    scaler = fit_scalers((s.grid for s in train_part), [s.cd for s in train_part])
    net = build_model(model_cfg, seed=cfg.seed)
    return train(net, scaler, train_part, cfg, val_part, out_dir)
