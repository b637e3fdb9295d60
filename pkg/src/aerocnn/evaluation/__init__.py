from .metrics import (
    DRAG_COUNT,
    BaselineRef,
    DeltaRecord,
    EmptyEvaluationError,
    EvalPair,
    EvalReport,
    GroupTrend,
    MetricRow,
    MisdirectionSummary,
    baseline_refs,
    compute_deltas,
    dpa,
    evaluate,
    group_trend_report,
    mae,
    maxae,
    misdirection_summary,
    quadrant,
    sign,
)
from .report import read_correlation_csv, render_report, report_summary, report_text

__all__ = [
    "DRAG_COUNT",
    "BaselineRef",
    "DeltaRecord",
    "EmptyEvaluationError",
    "EvalPair",
    "EvalReport",
    "GroupTrend",
    "MetricRow",
    "MisdirectionSummary",
    "baseline_refs",
    "compute_deltas",
    "dpa",
    "evaluate",
    "group_trend_report",
    "mae",
    "maxae",
    "misdirection_summary",
    "quadrant",
    "read_correlation_csv",
    "render_report",
    "report_summary",
    "report_text",
    "sign",
]
