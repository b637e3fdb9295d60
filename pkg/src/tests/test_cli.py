import pandas as pd
import pytest
import yaml

from aerocnn.cli import build_parser, main
from aerocnn.surrogate import checkpoint_domain, load_checkpoint
from aerocnn.utilities import read_manifest
from aerocnn.voxelizer import read_vsdf

FLEET = {
    "seed": 5,
    "projects": [
        {"name": "A", "train": 6, "test": 2, "baselines": 2},
        {"name": "B", "train": 3, "test": 1, "baselines": 1},
    ],
}


def write_yaml(path, data):
    path.write_text(yaml.safe_dump(data))
    return str(path)


@pytest.fixture(scope="module")
def run(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    spec = write_yaml(root / "fleet.yaml", FLEET)
    config = write_yaml(
        root / "run.yaml",
        {
            "version": 1,
            "seed": 0,
            "output": str(root / "default-out"),
            "grid": {"dims": [16, 8, 8], "workers": 2},
            "train": {"epochs": 1, "batch_size": 4},
        },
    )
    assert main(["synth", "--spec", spec, "--out", str(root / "fleet")]) == 0
    assert main(["voxelize", "-c", config, "--manifest", str(root / "fleet" / "manifest.jsonl"), "--out-dir", str(root / "vox")]) == 0
    assert main(["train", "-c", config, "--manifest", str(root / "vox" / "manifest.jsonl"), "--out", str(root / "model")]) == 0
    return root, config


def test_synth(run):
    root, _ = run
    manifest = read_manifest(root / "fleet" / "manifest.jsonl")
    assert len(manifest) == 12
    assert all(manifest.resolve(r.mesh_path).is_file() for r in manifest)
    summary = pd.read_csv(root / "fleet" / "fleet_summary.csv")
    assert summary["project"].tolist() == ["A", "B", "total"]


def test_voxelize_manifest(run):
    root, _ = run
    manifest = read_manifest(root / "vox" / "manifest.jsonl")
    assert len(manifest) == 12
    for r in manifest:
        assert read_vsdf(manifest.resolve(r.sdf_path)).dims == (16, 8, 8)
        assert manifest.resolve(r.mesh_path).is_file()


def test_train_outputs(run):
    root, _ = run
    out = root / "model"
    for name in ("model.ckpt", "loss_curve.csv", "timing.csv", "config.yaml"):
        assert (out / name).is_file(), name
    model = load_checkpoint(out / "model.ckpt")
    assert model.config.input_dims == (16, 8, 8)
    assert checkpoint_domain(model).dims == (16, 8, 8)
    assert len(pd.read_csv(out / "loss_curve.csv")) == 1


def test_predict_mesh_matches_vsdf(run, capsys):
    root, config = run
    ckpt = str(root / "model" / "model.ckpt")
    manifest = read_manifest(root / "vox" / "manifest.jsonl")
    record = manifest.records[0]

    capsys.readouterr()
    assert main(["predict", "-c", config, "--checkpoint", ckpt, "--in", str(manifest.resolve(record.sdf_path))]) == 0
    from_grid = capsys.readouterr().out.strip()
    assert main(["predict", "-c", config, "--checkpoint", ckpt, "--in", str(manifest.resolve(record.mesh_path))]) == 0
    from_mesh = capsys.readouterr().out.strip()
    assert from_grid == from_mesh
    float(from_grid)


def test_predict_and_evaluate(run):
    root, config = run
    ckpt = str(root / "model" / "model.ckpt")
    manifest = str(root / "vox" / "manifest.jsonl")
    pred_dir = root / "pred"
    assert main(["predict", "-c", config, "--checkpoint", ckpt, "--manifest", manifest, "--split", "test", "--out", str(pred_dir)]) == 0
    predictions = pd.read_csv(pred_dir / "predictions.csv")
    assert len(predictions) == 3
    assert set(predictions["split"]) == {"test"}

    report_dir = root / "report"
    args = ["evaluate", "-c", config, "--manifest", manifest, "--predictions", str(pred_dir / "predictions.csv")]
    assert main(args + ["--out", str(report_dir)]) == 0
    summary = yaml.safe_load((report_dir / "summary.yaml").read_text())
    assert summary["overall"]["n"] == 3
    assert "MAE / MaxAE in drag counts" in (report_dir / "report.txt").read_text()

    direct = root / "report-direct"
    assert main(["evaluate", "-c", config, "--manifest", manifest, "--checkpoint", ckpt, "--out", str(direct)]) == 0
    assert yaml.safe_load((direct / "summary.yaml").read_text())["overall"] == summary["overall"]


def test_augment_preview(run):
    root, config = run
    manifest = read_manifest(root / "vox" / "manifest.jsonl")
    source = manifest.resolve(manifest.records[0].sdf_path)
    out = root / "preview.vsdf"
    assert main(["augment-preview", "-c", config, "--in", str(source), "--op", "dropout", "--out", str(out)]) == 0
    assert read_vsdf(out).dims == read_vsdf(source).dims


def test_voxelize_single_with_overrides(run, tmp_path):
    root, _ = run
    mesh = read_manifest(root / "fleet" / "manifest.jsonl").records[0]
    source = root / "fleet" / mesh.mesh_path
    out = tmp_path / "car.vsdf"
    assert main(["voxelize", "--in", str(source), "--out", str(out), "--dims", "12x6x6", "--domain=-3,-1.5,-1.5,3,1.5,1.5"]) == 0
    grid = read_vsdf(out)
    assert grid.dims == (12, 6, 6)
    assert grid.spacing[0] == pytest.approx(0.5)


def test_failures_exit_one(run, tmp_path):
    root, config = run
    manifest = str(root / "vox" / "manifest.jsonl")
    assert main(["train", "--manifest", str(tmp_path / "absent.jsonl")]) == 1
    assert main(["voxelize", "-c", config]) == 1
    assert main(["evaluate", "-c", config, "--manifest", manifest]) == 1
    assert main(["train", "-c", config, "--manifest", manifest, "--dims", "32x8x8", "--out", str(tmp_path)]) == 1
    assert main(["predict", "--checkpoint", str(tmp_path / "absent.ckpt"), "--in", "x.vsdf"]) == 1


def test_parser_defaults():
    args = build_parser().parse_args(["synth", "--out", "fleet", "--label-noise"])
    assert args.label_noise == 0.5
    args = build_parser().parse_args(["evaluate", "--manifest", "m.jsonl"])
    assert args.min_abs_delta == 2.0
    assert args.unit == "counts"
    with pytest.raises(SystemExit):
        build_parser().parse_args(["augment-preview", "--in", "a", "--op", "flip", "--out", "b"])
