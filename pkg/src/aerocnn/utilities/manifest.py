"""
Dataset manifests: one JSON record per line.

Relative mesh/SDF paths resolve against the manifest's directory.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

import pandas as pd

logger = logging.getLogger(__name__)

SPLITS = ("train", "test")
COLUMNS = ("sample_id", "project", "baseline_group", "is_baseline", "split", "cd", "sdf_path", "mesh_path")


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class SampleRecord:
    sample_id: str
    project: str
    baseline_group: str
    is_baseline: bool = False
    split: str = "train"
    cd: float | None = None
    sdf_path: str | None = None
    mesh_path: str | None = None

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ManifestError(f"{self.sample_id}: split must be one of {SPLITS}, got {self.split!r}")
        if self.cd is not None:
            object.__setattr__(self, "cd", float(self.cd))
        object.__setattr__(self, "is_baseline", bool(self.is_baseline))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _clean(value):
    # pandas hands back NaN for missing optional fields
    if value is None or (isinstance(value, float) and value != value):
        return None
    return value


@dataclass
class Manifest:
    records: list[SampleRecord]
    root: Path = field(default_factory=lambda: Path("."))

    def __post_init__(self):
        self.root = Path(self.root)
        seen = set()
        for r in self.records:
            if r.sample_id in seen:
                raise ManifestError(f"duplicate sample_id {r.sample_id!r}")
            seen.add(r.sample_id)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([r.to_dict() for r in self.records], columns=list(COLUMNS))

    def split(self, name: str) -> list[SampleRecord]:
        return [r for r in self.records if r.split == name]

    def by_id(self) -> dict[str, SampleRecord]:
        return {r.sample_id: r for r in self.records}

    def resolve(self, path: str | None) -> Path | None:
        if path is None:
            return None
        p = Path(path)
        return p if p.is_absolute() else self.root / p

    def baselines(self) -> dict[str, SampleRecord]:
        """Train-split baseline record per group."""
        return {r.baseline_group: r for r in self.records if r.is_baseline and r.split == "train"}

    def validate(self, require_train_cd: bool = True, require: str | None = None) -> list[str]:
        """
        Raise on hard errors (missing train labels, missing paths of kind
        `require`); return the warnings for recoverable issues.
        """
        if require_train_cd:
            for r in self.split("train"):
                if r.cd is None:
                    raise ManifestError(f"train sample {r.sample_id!r} has no cd label")
        if require:
            for r in self.records:
                path = self.resolve(getattr(r, require))
                if path is None or not path.is_file():
                    raise ManifestError(f"sample {r.sample_id!r}: {require} missing or not a file ({path})")

        warnings = []
        baselines = self.baselines()
        for group in sorted({r.baseline_group for r in self.split("test")} - set(baselines)):
            warnings.append(f"baseline group {group!r} has test samples but no train baseline")
        for w in warnings:
            logger.warning(w)
        return warnings

    def replace(self, updates_by_id: dict[str, dict]) -> "Manifest":
        """New manifest with per-sample field updates, e.g. {"s1": {"sdf_path": ...}}."""
        records = [
            dataclasses.replace(r, **updates_by_id[r.sample_id]) if r.sample_id in updates_by_id else r
            for r in self.records
        ]
        return Manifest(records, self.root)


def read_manifest(path) -> Manifest:
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"manifest not found: {path}")
    records = []
    with open(path, "r") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as e:
                raise ManifestError(f"{path}:{lineno}: {e}") from e
            unknown = set(row) - set(COLUMNS)
            if unknown:
                raise ManifestError(f"{path}:{lineno}: unknown fields {sorted(unknown)}")
            try:
                records.append(SampleRecord(**{k: _clean(v) for k, v in row.items()}))
            except TypeError as e:
                raise ManifestError(f"{path}:{lineno}: {e}") from e
    return Manifest(records, root=path.parent)


def write_manifest(manifest: Manifest, path) -> Path:
    """Write JSON lines; paths are stored relative to the new manifest when possible."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        for r in manifest.records:
            row = r.to_dict()
            for key in ("sdf_path", "mesh_path"):
                resolved = manifest.resolve(row[key])
                if resolved is not None:
                    try:
                        row[key] = os.path.relpath(resolved, path.parent)
                    except ValueError:
                        row[key] = str(resolved.absolute())
            f.write(json.dumps(row) + "\n")
    logger.info("Manifest saved to %s (%d rows)", path, len(manifest))
    return path
