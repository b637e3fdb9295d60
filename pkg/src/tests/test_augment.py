from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from aerocnn.augment import (
    OPS,
    AugPolicy,
    AugPolicyError,
    AugRng,
    aniso_resample_aug,
    apply_op,
    apply_policy,
    clamp_aug,
    dropout_box_aug,
    elastic_aug,
    noise_aug,
    sample_box,
    translate_aug,
    warp,
)
from aerocnn.augment.ops import impulse_count, resample, shift_x
from aerocnn.augment.rng import sample_key
from aerocnn.voxelizer import SdfGrid

from .conftest import ramp_grid, random_grid


def rng(seed=0):
    return AugRng(seed, "sample", 0).generator()


def constant_grid(dims=(8, 6, 5), value=0.7):
    nx, ny, nz = dims
    return SdfGrid(dims, (1.0, 2.0, 3.0), (0.5, 0.25, 0.25), np.full((nz, ny, nx), value))


class TestClamp:
    def test_u_one_is_identity(self):
        g = random_grid()
        np.testing.assert_array_equal(clamp_aug(g, rng(), u=1.0).values, g.values)

    def test_manual_threshold(self):
        g = SdfGrid((4, 1, 1), (0, 0, 0), (1, 1, 1), [-2.0, -0.5, 0.3, 2.0])
        out = clamp_aug(g, rng(), u=0.25)
        np.testing.assert_allclose(out.values.ravel(), [-0.5, -0.5, 0.3, 0.5])

    def test_zero_grid(self):
        g = constant_grid(value=0.0)
        np.testing.assert_array_equal(clamp_aug(g, rng()).values, 0.0)

    def test_bound_and_sign(self):
        g = random_grid()
        for seed in range(20):
            out = clamp_aug(g, rng(seed)).values
            t = np.abs(out).max()
            assert t <= np.abs(g.values).max()
            same_sign = np.sign(out) == np.sign(g.values)
            assert np.all(same_sign | np.isclose(np.abs(out), t))


class TestTranslate:
    def test_zero_shift(self):
        g = random_grid()
        np.testing.assert_array_equal(translate_aug(g, rng(), k=0).values, g.values)

    def test_edge_replication(self):
        g = SdfGrid((4, 1, 1), (0, 0, 0), (1, 1, 1), [0.0, 1.0, 2.0, 3.0])
        np.testing.assert_array_equal(translate_aug(g, rng(), k=1).values.ravel(), [0, 0, 1, 2])
        np.testing.assert_array_equal(translate_aug(g, rng(), k=-1).values.ravel(), [1, 2, 3, 3])

    def test_range_at_128(self):
        g = ramp_grid((128, 2, 2))
        shifts = {64 - int(translate_aug(g, rng(seed)).values[0, 0, 64]) for seed in range(300)}
        assert shifts == set(range(-5, 6))

    def test_inverse_restores_interior(self):
        g = random_grid((20, 4, 4))
        k = 3
        back = shift_x(shift_x(g.values, k), -k)
        np.testing.assert_array_equal(back[..., k : 20 - k], g.values[..., k : 20 - k])


class TestNoise:
    def test_zero_strength_is_identity(self):
        g = random_grid()
        for kind in ("gaussian", "uniform"):
            np.testing.assert_array_equal(noise_aug(g, rng(), kind=kind, strength=0.0).values, g.values)

    def test_gaussian_reproducible(self):
        g = random_grid()
        a = noise_aug(g, rng(3), kind="gaussian")
        b = noise_aug(g, rng(3), kind="gaussian")
        np.testing.assert_array_equal(a.values, b.values)
        assert not np.array_equal(a.values, g.values)

    def test_impulse_single_cell(self):
        g = random_grid((10, 10, 10))
        assert impulse_count(1000, 1e-3) == 1
        expected = rng(5).choice(1000, size=1, replace=False)[0]
        out = noise_aug(g, rng(5), kind="impulse", strength=1e-3).values.ravel()
        changed = np.flatnonzero(out != g.values.ravel())
        assert set(changed.tolist()) <= {expected}
        assert abs(out[expected]) == pytest.approx(np.abs(g.values).max())

    def test_strength_scales_with_std(self):
        g = random_grid((32, 16, 16))
        out = noise_aug(g, rng(), kind="gaussian", strength=0.05).values
        ratio = (out - g.values).std() / g.values.std()
        assert ratio == pytest.approx(0.05, rel=0.05)


class TestElastic:
    def test_zero_alpha(self):
        g = random_grid()
        np.testing.assert_allclose(elastic_aug(g, rng(), alpha=0.0).values, g.values, atol=1e-6)

    def test_constant_unchanged(self):
        g = constant_grid()
        np.testing.assert_allclose(elastic_aug(g, rng()).values, g.values, atol=1e-6)

    def test_uniform_shift_of_ramp(self):
        values = ramp_grid((10, 6, 6)).values
        displacement = np.zeros((3,) + values.shape)
        displacement[2] = 1.0
        out = warp(values, displacement)
        np.testing.assert_allclose(out[..., :-1], values[..., 1:], atol=1e-12)

    def test_displacement_bounded(self):
        g = ramp_grid((16, 16, 16))
        out = elastic_aug(g, rng(), alpha=0.5).values
        assert np.abs(out - g.values).max() <= 0.5 + 1e-6


class TestResample:
    def test_constant_unchanged(self):
        g = constant_grid()
        np.testing.assert_allclose(aniso_resample_aug(g, rng()).values, g.values, atol=1e-6)

    def test_unit_factor_is_identity(self):
        values = random_grid((8, 6, 5)).values
        np.testing.assert_allclose(resample(values, (1.0, 1.0, 1.0)), values, atol=1e-6)

    def test_linear_ramp_preserved(self):
        g = ramp_grid((32, 8, 8))
        out = aniso_resample_aug(g, rng(), factors=(1.7, 1.3, 2.0))
        np.testing.assert_allclose(out.values, g.values, atol=1e-5)


class TestDropout:
    def test_one_percent_box(self):
        g = constant_grid((100, 10, 10), 1.0)
        out = dropout_box_aug(g, rng(), boxes=[((0, 0, 0), (10, 10, 1))])
        assert np.count_nonzero(out.values == 0.0) == 100

    def test_zero_grid(self):
        g = constant_grid(value=0.0)
        np.testing.assert_array_equal(dropout_box_aug(g, rng()).values, 0.0)

    @pytest.mark.parametrize("dims", [(128, 32, 32), (64, 16, 16), (20, 20, 20)])
    def test_box_volume_range(self, dims):
        total = np.prod(dims)
        gen = rng()
        for _ in range(200):
            start, size = sample_box(dims, gen)
            assert 0.01 <= np.prod(size) / total <= 0.05
            assert all(0 <= s and s + n <= d for s, n, d in zip(start, size, dims))

    def test_at_most_twenty_percent(self):
        g = constant_grid((32, 16, 16), 1.0)
        for seed in range(30):
            zeroed = np.count_nonzero(dropout_box_aug(g, rng(seed)).values == 0.0)
            assert 0 < zeroed <= 0.2 * g.n_cells


@pytest.mark.parametrize("op", OPS)
def test_ops_preserve_metadata_and_input(op):
    g = random_grid((16, 8, 8))
    before = g.values.copy()
    out = apply_op(g, op, seed=1)
    assert out.dims == g.dims
    np.testing.assert_array_equal(out.origin, g.origin)
    np.testing.assert_array_equal(out.spacing, g.spacing)
    assert out.positive_inside == g.positive_inside
    np.testing.assert_array_equal(g.values, before)


class TestPolicy:
    def test_zero_probability_is_identity(self):
        g = random_grid()
        policy = AugPolicy(apply_probability=0.0)
        for epoch in range(10):
            assert apply_policy(g, policy, "s", epoch) is g

    def test_clamp_only(self):
        g = random_grid()
        policy = AugPolicy(apply_probability=1.0, ops=("clamp",), seed=4)
        for epoch in range(5):
            assert policy.draw("s", epoch) == ("clamp",)
            gen = AugRng(4, "s", epoch).generator()
            gen.random()
            gen.integers(1, 2)
            expected = clamp_aug(g, gen)
            np.testing.assert_array_equal(apply_policy(g, policy, "s", epoch).values, expected.values)

    def test_application_rate(self):
        policy = AugPolicy(seed=0)
        applied = sum(bool(policy.draw(i, 0)) for i in range(10_000))
        assert 0.73 <= applied / 10_000 <= 0.77

    def test_subsets_follow_fixed_order(self):
        policy = AugPolicy(apply_probability=1.0)
        seen = set()
        for i in range(500):
            ops = policy.draw(f"s{i}", 0)
            assert ops and list(ops) == [op for op in OPS if op in ops]
            seen.add(ops)
        assert len(seen) > 30

    def test_deterministic_across_threads(self):
        g = random_grid((16, 8, 8))
        policy = AugPolicy(apply_probability=1.0, seed=7)
        keys = [(f"s{i}", e) for i in range(6) for e in range(2)]
        serial = [apply_policy(g, policy, s, e).values for s, e in keys]
        with ThreadPoolExecutor(max_workers=4) as pool:
            threaded = list(pool.map(lambda k: apply_policy(g, policy, *k).values, reversed(keys)))
        for a, b in zip(serial, reversed(threaded)):
            np.testing.assert_array_equal(a, b)

    def test_validation(self):
        with pytest.raises(AugPolicyError, match="unknown augmentation op"):
            AugPolicy(ops=("clamp", "flip"))
        with pytest.raises(AugPolicyError):
            AugPolicy(apply_probability=1.5)
        with pytest.raises(AugPolicyError):
            AugPolicy(resample_factor=(0.5, 2.0))
        with pytest.raises(AugPolicyError, match="unknown augmentation keys"):
            AugPolicy.from_config({"mixup": 0.5})

    def test_from_config(self):
        policy = AugPolicy.from_config({"ops": ["clamp", "noise"], "apply_probability": 0.5}, seed=9)
        assert policy.ops == ("clamp", "noise")
        assert policy.seed == 9


class TestAugRng:
    def test_same_key_same_stream(self):
        a = AugRng(1, "P1-b00", 3).generator().random(5)
        b = AugRng(1, "P1-b00", 3).generator().random(5)
        np.testing.assert_array_equal(a, b)

    def test_keys_differ(self):
        base = AugRng(1, "P1-b00", 3).generator().random()
        assert AugRng(1, "P1-b00", 4).generator().random() != base
        assert AugRng(2, "P1-b00", 3).generator().random() != base
        assert AugRng(1, "P1-b01", 3).generator().random() != base

    def test_sample_key_stable(self):
        assert sample_key(5) == sample_key("5")
        assert sample_key("a") != sample_key("b")

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            AugRng(-1, "s", 0)
