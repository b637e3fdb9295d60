"""
Drag-prediction metrics: MAE, MaxAE, deltas against the true baseline c_d,
direction prediction accuracy and per-group trend data.

One drag count is 0.001 of c_d.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import spearmanr

logger = logging.getLogger(__name__)

DRAG_COUNT = 0.001
NEAR_CONSTANT_RANGE = 1.0 * DRAG_COUNT
SMALL_DELTA = 7.0 * DRAG_COUNT


class EmptyEvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class EvalPair:
    sample_id: str
    project: str
    baseline_group: str
    cd_true: float
    cd_pred: float

    def __post_init__(self):
        for name in ("cd_true", "cd_pred"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{self.sample_id}: {name} is not finite")
            object.__setattr__(self, name, value)

    @property
    def abs_error(self) -> float:
        return abs(self.cd_true - self.cd_pred)


@dataclass(frozen=True)
class BaselineRef:
    baseline_group: str
    cd_baseline_true: float

    def __post_init__(self):
        value = float(self.cd_baseline_true)
        if not math.isfinite(value):
            raise ValueError(f"baseline {self.baseline_group}: c_d is not finite")
        object.__setattr__(self, "cd_baseline_true", value)


@dataclass(frozen=True)
class DeltaRecord:
    sample_id: str
    project: str
    baseline_group: str
    delta_true: float
    delta_pred: float

    @property
    def direction_correct(self) -> bool:
        return sign(self.delta_true) == sign(self.delta_pred)

    @property
    def quadrant(self):
        return quadrant(self.delta_true, self.delta_pred)


def sign(x: float) -> int:
    """sign(0) is 0; exact zero only."""
    return (x > 0) - (x < 0)


def quadrant(delta_true: float, delta_pred: float):
    """Delta-plot quadrant with true delta on x: 1 and 3 are correct directions."""
    st, sp = sign(delta_true), sign(delta_pred)
    if st == 0 or sp == 0:
        return "axis"
    if st > 0:
        return 1 if sp > 0 else 4
    return 3 if sp < 0 else 2


def _errors(pairs: Sequence[EvalPair]) -> np.ndarray:
    if not pairs:
        raise EmptyEvaluationError("no evaluation pairs")
    return np.array([p.abs_error for p in pairs], dtype=np.float64)


def mae(pairs: Sequence[EvalPair]) -> float:
    return float(_errors(pairs).mean())


def maxae(pairs: Sequence[EvalPair]) -> float:
    return float(_errors(pairs).max())


def baseline_refs(records: Iterable) -> dict[str, BaselineRef]:
    """BaselineRef per group from the train-split baseline records of a manifest."""
    refs = {}
    for r in records:
        if r.is_baseline and r.split == "train" and r.cd is not None:
            refs[r.baseline_group] = BaselineRef(r.baseline_group, r.cd)
    return refs


def compute_deltas(pairs: Sequence[EvalPair], baselines: dict[str, BaselineRef]) -> list[DeltaRecord]:
    """Both deltas subtract the true baseline c_d. Pairs without a baseline are skipped."""
    records = []
    missing = defaultdict(int)
    for p in pairs:
        ref = baselines.get(p.baseline_group)
        if ref is None:
            missing[p.baseline_group] += 1
            continue
        records.append(
            DeltaRecord(
                p.sample_id,
                p.project,
                p.baseline_group,
                p.cd_true - ref.cd_baseline_true,
                p.cd_pred - ref.cd_baseline_true,
            )
        )
    for group, n in sorted(missing.items()):
        logger.warning("Excluded %d sample(s) of group %r from deltas: no training baseline", n, group)
    return records


def dpa(records: Sequence[DeltaRecord], min_abs_delta: float = 0.0) -> float:
    """
    Percentage of records whose predicted change has the true change's sign.
    `min_abs_delta` keeps only records with |delta_true| >= it.
    """
    kept = [r for r in records if abs(r.delta_true) >= min_abs_delta]
    if not kept:
        raise EmptyEvaluationError("no delta records for DPA")
    return 100.0 * sum(r.direction_correct for r in kept) / len(kept)


@dataclass(frozen=True)
class MisdirectionSummary:
    errors: int
    small_delta_errors: int
    threshold: float

    @property
    def small_fraction(self) -> float:
        return self.small_delta_errors / self.errors if self.errors else 0.0


def misdirection_summary(records: Sequence[DeltaRecord], threshold: float = SMALL_DELTA) -> MisdirectionSummary:
    """How many direction errors sit at |delta_true| < threshold."""
    wrong = [r for r in records if not r.direction_correct]
    small = sum(abs(r.delta_true) < threshold for r in wrong)
    return MisdirectionSummary(len(wrong), small, threshold)


@dataclass
class GroupTrend:
    project: str
    baseline_group: str
    pairs: list[EvalPair]
    pred_range: float
    near_constant: bool
    spearman: float | None


def _rank_correlation(a: np.ndarray, b: np.ndarray) -> float | None:
    if len(a) < 2 or np.ptp(a) == 0 or np.ptp(b) == 0:
        return None
    return float(spearmanr(a, b).statistic)


def group_trend_report(
    pairs: Sequence[EvalPair],
    baselines: dict[str, BaselineRef] | None = None,
    min_group_size: int = 2,
    near_constant_range: float = NEAR_CONSTANT_RANGE,
) -> list[GroupTrend]:
    """
    Groups with at least `min_group_size` test samples, each ordered by true
    c_d. `baselines` is accepted for symmetry with compute_deltas; groups are
    reported whether or not they have one.
    """
    groups: dict[str, list[EvalPair]] = defaultdict(list)
    for p in pairs:
        groups[p.baseline_group].append(p)

    trends = []
    for group in sorted(groups):
        members = groups[group]
        if len(members) < min_group_size:
            continue
        members = sorted(members, key=lambda p: (p.cd_true, p.sample_id))
        truth = np.array([p.cd_true for p in members])
        preds = np.array([p.cd_pred for p in members])
        spread = float(np.ptp(preds))
        trends.append(
            GroupTrend(
                project=members[0].project,
                baseline_group=group,
                pairs=members,
                pred_range=spread,
                near_constant=spread < near_constant_range,
                spearman=_rank_correlation(truth, preds),
            )
        )
    return trends


@dataclass(frozen=True)
class MetricRow:
    name: str
    n: int
    mae: float
    maxae: float
    dpa: float | None
    n_deltas: int


def metric_row(name: str, pairs: Sequence[EvalPair], records: Sequence[DeltaRecord]) -> MetricRow:
    return MetricRow(
        name,
        len(pairs),
        mae(pairs),
        maxae(pairs),
        dpa(records) if records else None,
        len(records),
    )


@dataclass
class EvalReport:
    overall: MetricRow
    projects: list[MetricRow]
    deltas: list[DeltaRecord]
    trends: list[GroupTrend]
    pairs: list[EvalPair]
    misdirection: MisdirectionSummary
    dpa_threshold: float = 0.0
    dpa_above_threshold: float | None = None
    unit: str = "counts"
    excluded: list[str] = field(default_factory=list)


def evaluate(
    pairs: Sequence[EvalPair],
    baselines: dict[str, BaselineRef],
    min_abs_delta: float = 0.0,
    min_group_size: int = 2,
    unit: str = "counts",
) -> EvalReport:
    if unit not in ("counts", "raw"):
        raise ValueError(f"unit must be 'counts' or 'raw', got {unit!r}")
    pairs = list(pairs)
    if not pairs:
        raise EmptyEvaluationError("empty test set")

    deltas = compute_deltas(pairs, baselines)
    included = {d.sample_id for d in deltas}
    projects = []
    for project in sorted({p.project for p in pairs}):
        members = [p for p in pairs if p.project == project]
        projects.append(metric_row(project, members, [d for d in deltas if d.project == project]))

    above = None
    if deltas and any(abs(d.delta_true) >= min_abs_delta for d in deltas):
        above = dpa(deltas, min_abs_delta)
    return EvalReport(
        overall=metric_row("overall", pairs, deltas),
        projects=projects,
        deltas=deltas,
        trends=group_trend_report(pairs, baselines, min_group_size),
        pairs=pairs,
        misdirection=misdirection_summary(deltas),
        dpa_threshold=min_abs_delta,
        dpa_above_threshold=above,
        unit=unit,
        excluded=[p.sample_id for p in pairs if p.sample_id not in included],
    )
