import numpy as np
import pytest
import torch

from aerocnn.augment import AugPolicy
from aerocnn.geometry import DomainSpec
from aerocnn.surrogate import (
    CheckpointFormatError,
    DimensionMismatchError,
    EpochKeyedSampler,
    ModelConfig,
    Scaler,
    ScalerError,
    SdfDataset,
    SurrogateModel,
    TrainConfig,
    TrainingSample,
    build_model,
    checkpoint_domain,
    count_parameters,
    fit_model,
    fit_scalers,
    grid_tensor,
    load_checkpoint,
    read_metadata,
    save_checkpoint,
    stratified_split,
    train,
)

from .conftest import random_grid

MINI = ModelConfig().miniature((16, 8, 8))


def make_samples(n=6, dims=(16, 8, 8), projects=("P1", "P2")):
    samples = []
    for i in range(n):
        project = projects[i % len(projects)]
        samples.append(
            TrainingSample(
                sample_id=f"{project}-s{i:02d}",
                project=project,
                grid=random_grid(dims, seed=i),
                cd=0.25 + 0.01 * i,
                is_baseline=i < len(projects),
            )
        )
    return samples


def quiet(epochs=2, **kwargs):
    kwargs.setdefault("policy", AugPolicy(apply_probability=0.0))
    return TrainConfig(batch_size=4, epochs=epochs, **kwargs)


class TestModel:
    def test_parameter_count(self):
        assert 1_500_000 <= count_parameters(build_model()) <= 2_500_000

    def test_full_size_forward(self):
        net = build_model().eval()
        with torch.no_grad():
            out = net(torch.zeros(2, 1, 32, 32, 128))
        assert out.shape == (2,)
        assert torch.isfinite(out).all()

    def test_seeded_init(self):
        a, b, c = build_model(MINI, seed=1), build_model(MINI, seed=1), build_model(MINI, seed=2)
        for (name, pa), pb, pc in zip(a.state_dict().items(), b.state_dict().values(), c.state_dict().values()):
            assert torch.equal(pa, pb), name
        assert not torch.equal(a.stem.weight, c.stem.weight)

    def test_six_encoder_blocks(self):
        with pytest.raises(ValueError, match="6 blocks"):
            ModelConfig(blocks=MINI.blocks[:5])

    def test_channel_chain_checked(self):
        blocks = list(ModelConfig().blocks)
        blocks[2] = (40, 64, 2, 1)
        with pytest.raises(ValueError, match="block 2"):
            ModelConfig(blocks=tuple(blocks))

    def test_survival_decay(self):
        cfg = ModelConfig()
        assert cfg.survival(0) == 1.0
        assert cfg.survival(5) == pytest.approx(0.8)

    def test_config_dict_round_trip(self):
        assert ModelConfig.from_dict(MINI.to_dict()) == MINI

    def test_predict_checks_dims(self):
        model = SurrogateModel(build_model(MINI), Scaler(0.0, 1.0, 0.3, 0.01))
        assert np.isfinite(model.predict(random_grid((16, 8, 8))))
        with pytest.raises(DimensionMismatchError, match="16x8x8"):
            model.predict(random_grid((8, 8, 8)))

    def test_grid_tensor_layout(self):
        values = random_grid((16, 8, 4)).values
        assert grid_tensor(values).shape == (1, 1, 4, 8, 16)


class TestScaler:
    def test_output_stats(self):
        scaler = fit_scalers([np.array([1.0, 2.0]), np.array([3.0, 4.0, 5.0])], [0.25, 0.27])
        assert scaler.output_mean == pytest.approx(0.26)
        assert scaler.output_std == pytest.approx(0.01)
        assert scaler.input_mean == pytest.approx(3.0)
        assert scaler.input_std == pytest.approx(np.sqrt(2.0))

    def test_accepts_grids(self):
        grids = [random_grid(seed=s) for s in range(3)]
        scaler = fit_scalers(iter(grids), [0.2, 0.3, 0.4])
        stacked = np.concatenate([g.values.ravel() for g in grids]).astype(np.float64)
        assert scaler.input_mean == pytest.approx(stacked.mean())
        assert scaler.input_std == pytest.approx(stacked.std())

    def test_standardize_round_trip(self):
        scaler = Scaler(0.0, 1.0, 0.26, 0.01)
        assert scaler.standardize_output(0.27) == pytest.approx(1.0)
        assert scaler.destandardize_output(1.0) == pytest.approx(0.27)

    def test_zero_variance(self):
        with pytest.raises(ScalerError, match="c_d"):
            fit_scalers([np.array([1.0, 2.0])] * 2, [0.3, 0.3])
        with pytest.raises(ScalerError, match="SDF"):
            fit_scalers([np.ones(4)] * 2, [0.3, 0.4])

    def test_needs_two_samples(self):
        with pytest.raises(ScalerError):
            fit_scalers([np.array([1.0, 2.0])], [0.3])


class TestData:
    def test_split_keeps_baselines(self):
        samples = make_samples(12)
        train_part, val_part = stratified_split(samples, 0.25, seed=0)
        assert len(train_part) + len(val_part) == 12
        assert all(not s.is_baseline for s in val_part)
        assert {s.project for s in val_part} == {"P1", "P2"}

    def test_zero_fraction(self):
        samples = make_samples(4)
        assert stratified_split(samples, 0.0) == (samples, [])

    def test_sampler_keyed_by_epoch(self):
        sampler = EpochKeyedSampler(10, seed=3)
        first = list(sampler)
        assert list(sampler) == first
        assert sorted(i for i, _ in first) == list(range(10))
        sampler.set_epoch(1)
        second = list(sampler)
        assert all(e == 1 for _, e in second)
        assert [i for i, _ in second] != [i for i, _ in first]

    def test_dataset_item(self):
        samples = make_samples(2)
        scaler = Scaler(0.0, 2.0, 0.25, 0.01)
        x, y = SdfDataset(samples, scaler)[1]
        assert x.shape == (1, 8, 8, 16)
        assert y.item() == pytest.approx(1.0)
        torch.testing.assert_close(x[0], torch.from_numpy(samples[1].grid.values / 2.0))

    def test_dataset_augmentation_keyed(self):
        dataset = SdfDataset(make_samples(2), Scaler(0.0, 1.0, 0.3, 0.1), AugPolicy(apply_probability=1.0))
        assert torch.equal(dataset[(0, 3)][0], dataset[(0, 3)][0])
        assert not torch.equal(dataset[(0, 3)][0], dataset[(0, 4)][0])


class TestCheckpoint:
    def model(self):
        return SurrogateModel(build_model(MINI, seed=4).eval(), Scaler(0.1, 0.5, 0.3, 0.02))

    def test_round_trip(self, tmp_path):
        model = self.model()
        domain = DomainSpec.from_bounds([-3, -1.2, -1.2, 3, 1.2, 1.2], (16, 8, 8))
        path = save_checkpoint(model, tmp_path / "model.ckpt", domain=domain)
        loaded = load_checkpoint(path)
        assert loaded.config == MINI
        assert loaded.scaler == model.scaler
        for name, tensor in model.net.state_dict().items():
            assert torch.equal(loaded.net.state_dict()[name], tensor), name
        grid = random_grid((16, 8, 8))
        assert loaded.predict(grid) == model.predict(grid)
        restored = checkpoint_domain(loaded)
        assert restored.dims == (16, 8, 8)
        np.testing.assert_allclose(restored.box.min, [-3, -1.2, -1.2])

    def test_metadata(self, tmp_path):
        path = save_checkpoint(self.model(), tmp_path / "model.ckpt")
        metadata, _ = read_metadata(path)
        assert metadata["encoder_blocks"] == 6
        assert metadata["parameter_count"] == count_parameters(build_model(MINI))
        assert len(metadata["config"]["blocks"]) == 6
        assert checkpoint_domain(load_checkpoint(path)) is None

    def test_truncated(self, tmp_path):
        path = save_checkpoint(self.model(), tmp_path / "model.ckpt")
        data = path.read_bytes()
        path.write_bytes(data[:-100])
        with pytest.raises(CheckpointFormatError, match="truncated payload"):
            load_checkpoint(path)
        path.write_bytes(data[:10])
        with pytest.raises(CheckpointFormatError, match="truncated header"):
            load_checkpoint(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "model.ckpt"
        path.write_bytes(b"NOTACKPT" + bytes(64))
        with pytest.raises(CheckpointFormatError, match="bad magic"):
            load_checkpoint(path)

    def test_missing(self, tmp_path):
        with pytest.raises(CheckpointFormatError, match="not found"):
            load_checkpoint(tmp_path / "absent.ckpt")


class TestTraining:
    def test_config_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(batch_size=0)
        with pytest.raises(ValueError):
            TrainConfig(base_lr=1e-2, max_lr=1e-3)
        with pytest.raises(ValueError):
            TrainConfig(validation_fraction=1.0)

    def test_schedule_in_batches(self):
        assert TrainConfig(step_size_epochs=4).schedule(3).step_size == 12

    def test_loss_curve(self, tmp_path):
        result = fit_model(make_samples(6), MINI, quiet(epochs=2), out_dir=tmp_path)
        assert list(result.loss_curve.columns) == ["epoch", "train_loss", "val_loss"]
        assert list(result.loss_curve["epoch"]) == [0, 1]
        assert np.isfinite(result.final_loss)
        assert result.model.metadata["training"]["epochs"] == 2
        path = result.save_loss_curve(tmp_path / "loss.csv")
        assert path.read_text().startswith("epoch,train_loss,val_loss")

    def test_validation_split_restores_best(self):
        result = fit_model(make_samples(12), MINI, quiet(epochs=3, validation_fraction=0.25))
        assert result.best_epoch in (0, 1, 2)
        assert result.loss_curve["val_loss"].notna().all()

    def test_deterministic(self):
        samples = make_samples(6)
        cfg = quiet(epochs=2, policy=AugPolicy(apply_probability=1.0, seed=2))
        a = fit_model(samples, MINI, cfg).model.net.state_dict()
        b = fit_model(samples, MINI, cfg).model.net.state_dict()
        for name, tensor in a.items():
            assert torch.equal(tensor, b[name]), name

    def test_rejects_mismatched_dims(self):
        samples = make_samples(2) + make_samples(1, dims=(8, 8, 8))
        net = build_model(MINI)
        with pytest.raises(ValueError, match="model expects"):
            train(net, Scaler(0.0, 1.0, 0.3, 0.01), samples, quiet())

    @pytest.mark.slow
    def test_memorizes_one_sample(self):
        cfg = ModelConfig(dropout=0.0, survival_min=1.0).miniature((16, 8, 8))
        sample = make_samples(1)[0]
        scaler = Scaler(0.0, 1.0, 0.24, 0.01)
        result = train(
            build_model(cfg, seed=0),
            scaler,
            [sample],
            TrainConfig(batch_size=1, epochs=300, base_lr=1e-4, max_lr=3e-4, policy=AugPolicy(apply_probability=0.0)),
        )
        assert abs(result.model.predict(sample.grid) - sample.cd) <= 1e-3
