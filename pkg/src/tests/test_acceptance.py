"""Desk-scale end-to-end run and timing budgets; deselected unless `-m slow`."""

import time

import numpy as np
import pytest

from aerocnn.augment import AugPolicy
from aerocnn.evaluation import DRAG_COUNT, EvalPair, baseline_refs, evaluate
from aerocnn.geometry import DomainSpec, center_in_domain
from aerocnn.surrogate import (
    ModelConfig,
    Scaler,
    SurrogateModel,
    TrainConfig,
    TrainingSample,
    build_model,
    fit_model,
)
from aerocnn.synthfleet import ShapeParams, build_shape_mesh, generate_fleet
from aerocnn.voxelizer import generate_sdf

from .conftest import icosphere

pytestmark = pytest.mark.slow

DESK = DomainSpec.from_bounds([-3.0, -1.2, -1.2, 3.0, 1.2, 1.2], (64, 16, 16))
FULL = DomainSpec.from_bounds([-3.0, -1.2, -1.2, 3.0, 1.2, 1.2], (128, 32, 32))


def test_synthetic_fleet_end_to_end():
    fleet = generate_fleet()
    grids = {
        s.record.sample_id: generate_sdf(center_in_domain(build_shape_mesh(s.params), DESK), DESK)
        for s in fleet.samples
    }
    train = [
        TrainingSample(r.sample_id, r.project, grids[r.sample_id], r.cd, r.is_baseline)
        for r in fleet.records
        if r.split == "train"
    ]
    result = fit_model(train, ModelConfig(input_dims=DESK.dims), TrainConfig(epochs=50, policy=AugPolicy(seed=0)))

    test = [r for r in fleet.records if r.split == "test"]
    pairs = [
        EvalPair(r.sample_id, r.project, r.baseline_group, r.cd, result.model.predict(grids[r.sample_id]))
        for r in test
    ]
    report = evaluate(pairs, baseline_refs(fleet.records), min_abs_delta=2 * DRAG_COUNT)

    mean_cd = np.mean([s.cd for s in train])
    constant_mae = np.mean([abs(r.cd - mean_cd) for r in test])
    assert report.overall.mae <= 0.5 * constant_mae
    assert report.dpa_above_threshold >= 70.0


def test_million_triangle_voxelization():
    mesh = icosphere(8, radius=1.0)
    assert mesh.n_triangles >= 1_000_000
    start = time.perf_counter()
    generate_sdf(center_in_domain(mesh, FULL), FULL, workers=8)
    assert time.perf_counter() - start <= 30.0


def test_prediction_latency():
    model = SurrogateModel(build_model(), Scaler(0.0, 1.0, 0.3, 0.02))
    grid = generate_sdf(center_in_domain(build_shape_mesh(ShapeParams()), FULL), FULL)
    model.predict(grid)
    start = time.perf_counter()
    model.predict(grid)
    assert time.perf_counter() - start <= 1.0