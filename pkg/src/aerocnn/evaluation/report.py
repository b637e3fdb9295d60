"""Text/YAML report and the CSV plot data behind the correlation, delta and trend views."""

from __future__ import annotations

import logging
from pathlib import Path

import pandas as pd
import yaml

from .metrics import DRAG_COUNT, EvalPair, EvalReport, MetricRow

logger = logging.getLogger(__name__)

CORRELATION_COLUMNS = ["sample_id", "project", "cd_true", "cd_pred"]
DELTA_COLUMNS = ["sample_id", "group", "delta_true", "delta_pred", "quadrant", "direction_correct"]
TREND_COLUMNS = ["project", "group", "sample_id", "cd_true", "cd_pred"]


def _scaled(value: float | None, unit: str) -> str:
    if value is None:
        return "-"
    if unit == "counts":
        return f"{value / DRAG_COUNT:.1f}"
    return f"{value:.5f}"


def _row_text(row: MetricRow, unit: str, width: int) -> str:
    dpa = "-" if row.dpa is None else f"{row.dpa:.1f}%"
    return (
        f"{row.name:<{width}} | {row.n:>4d} | {_scaled(row.mae, unit):>8} | "
        f"{_scaled(row.maxae, unit):>8} | {dpa:>6}"
    )


def report_text(report: EvalReport) -> str:
    unit = "drag counts" if report.unit == "counts" else "c_d"
    width = max([len("overall"), len("Project")] + [len(r.name) for r in report.projects])
    header = f"{'Project':<{width}} | {'n':>4} | {'MAE':>8} | {'MaxAE':>8} | {'DPA':>6}"
    lines = [f"MAE / MaxAE in {unit}", header, "-" * len(header)]
    lines += [_row_text(r, report.unit, width) for r in report.projects]
    lines.append("-" * len(header))
    lines.append(_row_text(report.overall, report.unit, width))

    lines.append("")
    if report.dpa_above_threshold is not None:
        lines.append(
            f"DPA for |delta c_d| >= {_scaled(report.dpa_threshold, report.unit)}: "
            f"{report.dpa_above_threshold:.1f}%"
        )
    m = report.misdirection
    lines.append(
        f"Direction errors: {m.errors}, of which {m.small_delta_errors} at "
        f"|delta c_d| < {_scaled(m.threshold, report.unit)}"
    )
    if report.excluded:
        lines.append(f"Samples without a training baseline (no delta): {len(report.excluded)}")
    near = [t for t in report.trends if t.near_constant]
    lines.append(f"Baseline groups with >= 2 test samples: {len(report.trends)}, near-constant predictions: {len(near)}")
    return "\n".join(lines)


def _row_dict(row: MetricRow) -> dict:
    return {"n": row.n, "mae": row.mae, "maxae": row.maxae, "dpa": row.dpa, "n_deltas": row.n_deltas}


def report_summary(report: EvalReport) -> dict:
    return {
        "unit": report.unit,
        "overall": _row_dict(report.overall),
        "projects": {r.name: _row_dict(r) for r in report.projects},
        "dpa_threshold": report.dpa_threshold,
        "dpa_above_threshold": report.dpa_above_threshold,
        "misdirection": {
            "errors": report.misdirection.errors,
            "small_delta_errors": report.misdirection.small_delta_errors,
            "threshold": report.misdirection.threshold,
        },
        "groups": [
            {
                "group": t.baseline_group,
                "project": t.project,
                "n": len(t.pairs),
                "pred_range": t.pred_range,
                "near_constant": t.near_constant,
                "spearman": t.spearman,
            }
            for t in report.trends
        ],
        "excluded": list(report.excluded),
    }


def correlation_frame(report: EvalReport) -> pd.DataFrame:
    rows = [{"sample_id": p.sample_id, "project": p.project, "cd_true": p.cd_true, "cd_pred": p.cd_pred} for p in report.pairs]
    return pd.DataFrame(rows, columns=CORRELATION_COLUMNS)


def deltas_frame(report: EvalReport) -> pd.DataFrame:
    rows = [
        {
            "sample_id": d.sample_id,
            "group": d.baseline_group,
            "delta_true": d.delta_true,
            "delta_pred": d.delta_pred,
            "quadrant": str(d.quadrant),
            "direction_correct": d.direction_correct,
        }
        for d in report.deltas
    ]
    return pd.DataFrame(rows, columns=DELTA_COLUMNS)


def trends_frame(report: EvalReport) -> pd.DataFrame:
    rows = [
        {"project": t.project, "group": t.baseline_group, "sample_id": p.sample_id, "cd_true": p.cd_true, "cd_pred": p.cd_pred}
        for t in report.trends
        for p in t.pairs
    ]
    return pd.DataFrame(rows, columns=TREND_COLUMNS)


def render_report(report: EvalReport, out_dir) -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "report": out_dir / "report.txt",
        "summary": out_dir / "summary.yaml",
        "correlation": out_dir / "correlation.csv",
        "deltas": out_dir / "deltas.csv",
        "trends": out_dir / "trends.csv",
    }
    text = report_text(report)
    paths["report"].write_text(text + "\n")
    with open(paths["summary"], "w") as f:
        yaml.safe_dump(report_summary(report), f, sort_keys=False)
    correlation_frame(report).to_csv(paths["correlation"], index=False)
    deltas_frame(report).to_csv(paths["deltas"], index=False)
    trends_frame(report).to_csv(paths["trends"], index=False)
    logger.info("Evaluation report\n%s", text)
    logger.info("Report written to %s", out_dir)
    return paths


def read_correlation_csv(path, groups: dict[str, str]) -> list[EvalPair]:
    """Re-ingest correlation.csv; `groups` maps sample_id to baseline group."""
    frame = pd.read_csv(path, dtype={"sample_id": str, "project": str}, float_precision="round_trip")
    return [
        EvalPair(row.sample_id, row.project, groups[row.sample_id], row.cd_true, row.cd_pred)
        for row in frame.itertuples(index=False)
    ]
