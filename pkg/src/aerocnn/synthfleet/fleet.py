"""
Deterministic synthetic fleet: projects -> baseline groups -> variations.

Every sample draws from its own stream keyed by (seed, sample index), so the
fleet does not depend on generation order. Baselines always go to train;
test samples are spread round-robin over the groups of their project.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
import yaml
from tqdm import tqdm

from ..geometry import write_stl
from ..utilities.manifest import Manifest, SampleRecord, write_manifest
from .shapes import RANGES, InfeasibleShapeError, ShapeParams, build_shape_mesh, pseudo_drag

logger = logging.getLogger(__name__)

PARAMS = tuple(RANGES)

DEFAULT_STEPS = {
    "length": 0.05,
    "width": 0.02,
    "height": 0.02,
    "windshield_angle": 1.5,
    "rear_slant": 2.5,
    "boot": 0.05,
    "clearance": 0.01,
    "chamfer": 0.01,
}


class InfeasibleFleetError(ValueError):
    pass


@dataclass(frozen=True)
class ProjectSpec:
    name: str
    train: int
    test: int
    baselines: int

    def __post_init__(self):
        if self.baselines < 1:
            raise InfeasibleFleetError(f"project {self.name}: needs at least one baseline")
        if self.train < self.baselines:
            raise InfeasibleFleetError(
                f"project {self.name}: {self.baselines} baselines do not fit in {self.train} train samples"
            )
        if self.test < 0:
            raise InfeasibleFleetError(f"project {self.name}: negative test count")


DEFAULT_PROJECTS = (
    ProjectSpec("P1", 179, 45, 16),
    ProjectSpec("P2", 45, 11, 7),
    ProjectSpec("P3", 25, 7, 4),
    ProjectSpec("P4", 18, 4, 3),
    ProjectSpec("P5", 7, 2, 2),
)


@dataclass(frozen=True)
class FleetSpec:
    projects: tuple[ProjectSpec, ...] = DEFAULT_PROJECTS
    seed: int = 0
    project_offset: float = 0.25  # of each parameter range
    baseline_spread: float = 0.3  # of each parameter range
    steps: dict = field(default_factory=lambda: dict(DEFAULT_STEPS))
    max_changed: int = 3
    label_noise: float = 0.0  # drag counts
    max_attempts: int = 50

    def __post_init__(self):
        projects = tuple(p if isinstance(p, ProjectSpec) else ProjectSpec(**p) for p in self.projects)
        object.__setattr__(self, "projects", projects)
        if not projects:
            raise InfeasibleFleetError("fleet needs at least one project")
        names = [p.name for p in projects]
        if len(set(names)) != len(names):
            raise InfeasibleFleetError(f"duplicate project names in {names}")
        steps = dict(DEFAULT_STEPS, **(self.steps or {}))
        unknown = set(steps) - set(PARAMS)
        if unknown:
            raise InfeasibleFleetError(f"unknown step parameters {sorted(unknown)}")
        object.__setattr__(self, "steps", steps)
        if not 1 <= self.max_changed <= len(PARAMS):
            raise InfeasibleFleetError(f"max_changed must be in [1, {len(PARAMS)}]")
        if self.label_noise < 0:
            raise InfeasibleFleetError("label_noise must be >= 0")
        if not 0 <= self.project_offset <= 0.5 or not 0 <= self.baseline_spread <= 0.5:
            raise InfeasibleFleetError("project_offset and baseline_spread must lie in [0, 0.5]")

    @property
    def n_train(self) -> int:
        return sum(p.train for p in self.projects)

    @property
    def n_test(self) -> int:
        return sum(p.test for p in self.projects)

    @classmethod
    def from_dict(cls, d: dict | None) -> "FleetSpec":
        d = dict(d or {})
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise InfeasibleFleetError(f"unknown fleet spec keys {sorted(unknown)}")
        if "projects" in d:
            d["projects"] = tuple(ProjectSpec(**p) for p in d["projects"])
        return cls(**d)


def load_fleet_spec(path) -> FleetSpec:
    with open(path, "r") as f:
        return FleetSpec.from_dict(yaml.safe_load(f))


@dataclass(frozen=True)
class FleetSample:
    record: SampleRecord
    params: ShapeParams
    cd_clean: float


@dataclass
class Fleet:
    spec: FleetSpec
    samples: list[FleetSample]

    @property
    def records(self) -> list[SampleRecord]:
        return [s.record for s in self.samples]

    def manifest(self, root=".") -> Manifest:
        return Manifest(self.records, root)

    def summary(self) -> pd.DataFrame:
        rows = []
        for p in self.spec.projects:
            members = [s.record for s in self.samples if s.record.project == p.name]
            rows.append(
                {
                    "project": p.name,
                    "train": sum(r.split == "train" for r in members),
                    "test": sum(r.split == "test" for r in members),
                    "baselines": sum(r.is_baseline for r in members),
                }
            )
        frame = pd.DataFrame(rows, columns=["project", "train", "test", "baselines"])
        total = {"project": "total", **{k: int(frame[k].sum()) for k in ("train", "test", "baselines")}}
        return pd.concat([frame, pd.DataFrame([total])], ignore_index=True)

    def params_frame(self) -> pd.DataFrame:
        rows = [{"sample_id": s.record.sample_id, **s.params.to_dict(), "cd": s.record.cd} for s in self.samples]
        return pd.DataFrame(rows)


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *key])))


def _clip(name: str, value: float) -> float:
    lo, hi = RANGES[name]
    return float(min(max(value, lo), hi))


def _feasible(values: dict) -> ShapeParams | None:
    params = ShapeParams(**values)
    try:
        build_shape_mesh(params)
    except InfeasibleShapeError:
        return None
    return params


def project_means(spec: FleetSpec) -> list[dict]:
    means = []
    for index, _ in enumerate(spec.projects):
        rng = _stream(spec.seed, 0, index)
        mean = {}
        for name in PARAMS:
            lo, hi = RANGES[name]
            mid = 0.5 * (lo + hi)
            mean[name] = _clip(name, mid + rng.uniform(-1.0, 1.0) * spec.project_offset * (hi - lo))
        means.append(mean)
    return means


def _draw_baseline(spec: FleetSpec, mean: dict, rng, sample_id: str) -> ShapeParams:
    for _ in range(spec.max_attempts):
        values = {}
        for name in PARAMS:
            lo, hi = RANGES[name]
            values[name] = _clip(name, mean[name] + rng.uniform(-1.0, 1.0) * spec.baseline_spread * (hi - lo))
        params = _feasible(values)
        if params is not None:
            return params
    raise InfeasibleFleetError(f"{sample_id}: no feasible baseline in {spec.max_attempts} draws")


def _draw_variation(spec: FleetSpec, base: ShapeParams, rng, sample_id: str) -> ShapeParams:
    for _ in range(spec.max_attempts):
        values = base.to_dict()
        k = int(rng.integers(1, spec.max_changed + 1))
        for name in rng.choice(PARAMS, size=k, replace=False):
            step = spec.steps[name] * rng.uniform(0.5, 2.0) * (1.0 if rng.random() < 0.5 else -1.0)
            values[name] = _clip(name, values[name] + step)
        params = _feasible(values)
        if params is not None:
            return params
    raise InfeasibleFleetError(f"{sample_id}: no feasible variation in {spec.max_attempts} draws")


def _label(spec: FleetSpec, params: ShapeParams, rng) -> tuple[float, float]:
    clean = pseudo_drag(params)
    if spec.label_noise > 0:
        return clean + rng.normal(0.0, spec.label_noise * 1e-3), clean
    return clean, clean


def generate_fleet(spec: FleetSpec | None = None, out_dir=None, progress: bool = False) -> Fleet:
    """Build the fleet; with `out_dir`, also write the meshes, manifest and summaries."""
    spec = spec or FleetSpec()
    means = project_means(spec)

    samples = []
    index = 0
    bar = tqdm(total=spec.n_train + spec.n_test, disable=not progress, desc="fleet")
    for project, mean in zip(spec.projects, means):
        bases = []
        for b in range(project.baselines):
            sample_id = f"{project.name}-b{b:02d}"
            rng = _stream(spec.seed, 1, index)
            params = _draw_baseline(spec, mean, rng, sample_id)
            cd, clean = _label(spec, params, rng)
            record = SampleRecord(sample_id, project.name, sample_id, True, "train", cd, None, f"meshes/{sample_id}.stl")
            bases.append(params)
            samples.append(FleetSample(record, params, clean))
            index += 1
            bar.update()

        n_var = project.train - project.baselines + project.test
        for v in range(n_var):
            group = v % project.baselines
            group_id = f"{project.name}-b{group:02d}"
            sample_id = f"{group_id}-v{v // project.baselines:03d}"
            rng = _stream(spec.seed, 1, index)
            params = _draw_variation(spec, bases[group], rng, sample_id)
            cd, clean = _label(spec, params, rng)
            split = "test" if v < project.test else "train"
            record = SampleRecord(sample_id, project.name, group_id, False, split, cd, None, f"meshes/{sample_id}.stl")
            samples.append(FleetSample(record, params, clean))
            index += 1
            bar.update()
    bar.close()

    fleet = Fleet(spec, samples)
    logger.info("Generated fleet: %d train / %d test samples in %d projects", spec.n_train, spec.n_test, len(spec.projects))
    if out_dir is not None:
        write_fleet(fleet, out_dir, progress)
    return fleet


def write_fleet(fleet: Fleet, out_dir, progress: bool = False) -> Path:
    out_dir = Path(out_dir)
    (out_dir / "meshes").mkdir(parents=True, exist_ok=True)
    for s in tqdm(fleet.samples, disable=not progress, desc="meshes"):
        write_stl(build_shape_mesh(s.params, s.record.sample_id), out_dir / s.record.mesh_path)
    manifest_path = write_manifest(fleet.manifest(out_dir), out_dir / "manifest.jsonl")
    fleet.summary().to_csv(out_dir / "fleet_summary.csv", index=False)
    fleet.params_frame().to_csv(out_dir / "params.csv", index=False)
    return manifest_path


@dataclass(frozen=True)
class GroupSpread:
    within: float
    between: float


def group_spread(records) -> GroupSpread:
    """Mean within-group c_d std (groups of 2+) and std of the group means."""
    frame = pd.DataFrame([{"group": r.baseline_group, "cd": r.cd} for r in records if r.cd is not None])
    grouped = frame.groupby("group")["cd"]
    stds = grouped.std(ddof=0)[grouped.size() >= 2]
    return GroupSpread(float(stds.mean()), float(grouped.mean().std(ddof=0)))
