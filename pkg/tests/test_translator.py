import numpy as np
import pytest
import torch

from archstyle.losses import LossWeights
from archstyle.network import (
    NetConfig,
    TranslatorBundle,
    interpolate_style,
    load_bundle,
    load_checkpoint,
    sample_style,
    save_bundle,
    save_checkpoint,
)

CFG = NetConfig(base_width=8, style_dim=8, n_disc_scales=1, image_size=32, seed=5)


def small_weights():
    return LossWeights.foreground()


class TestBundleStructure:
    def test_shared_block_is_one_object(self):
        b = TranslatorBundle(CFG)
        assert b.content_encoders["1"].shared is b.content_encoders["2"].shared

    def test_shared_block_perturbation_affects_both_domains(self):
        b = TranslatorBundle(CFG)
        x = torch.rand(1, 3, 32, 32)
        before_1 = b.encode_content(x, "1").detach().clone()
        before_2 = b.encode_content(x, "2").detach().clone()
        with torch.no_grad():
            for p in b.shared_block.parameters():
                p.add_(0.5)
        assert not torch.equal(b.encode_content(x, "1"), before_1)
        assert not torch.equal(b.encode_content(x, "2"), before_2)

    def test_parameter_count_deterministic(self):
        n1 = sum(p.numel() for p in TranslatorBundle(CFG).parameters())
        n2 = sum(p.numel() for p in TranslatorBundle(CFG).parameters())
        assert n1 == n2

    def test_shared_parameters_counted_once_in_optimizer(self):
        b = TranslatorBundle(CFG)
        opt_params = [p for group in b.gen_opt.param_groups for p in group["params"]]
        assert len(opt_params) == len({id(p) for p in opt_params})


class TestTranslate:
    def test_output_dims_match_input(self):
        b = TranslatorBundle(CFG)
        x = torch.rand(3, 48, 36)
        out = b.translate(x, torch.rand(3, 32, 32), "1to2")
        assert out.shape == x.shape
        assert torch.isfinite(out).all()

    def test_two_styles_differ(self):
        b = TranslatorBundle(CFG)
        x = torch.rand(3, 32, 32)
        g = torch.Generator().manual_seed(0)
        s1, s2 = sample_style(g), sample_style(g)
        assert not torch.equal(b.translate(x, s1), b.translate(x, s2))

    def test_style_image_and_code_paths(self):
        b = TranslatorBundle(CFG)
        x = torch.rand(3, 32, 32)
        style_img = torch.rand(3, 32, 32)
        code = b.encode_style(style_img.unsqueeze(0), "2")
        via_img = b.translate(x, style_img, "1to2")
        via_code = b.translate(x, code, "1to2")
        assert torch.equal(via_img, via_code)

    def test_direction_validated(self):
        b = TranslatorBundle(CFG)
        with pytest.raises(ValueError):
            b.translate(torch.rand(3, 32, 32), torch.rand(3, 32, 32), "sideways")


class TestSampleStyle:
    def test_reproducible_per_seed(self):
        a = sample_style(torch.Generator().manual_seed(7))
        b = sample_style(torch.Generator().manual_seed(7))
        assert torch.equal(a, b) and a.shape == (8,)

    def test_two_seeds_differ(self):
        a = sample_style(torch.Generator().manual_seed(1))
        b = sample_style(torch.Generator().manual_seed(2))
        assert not torch.equal(a, b)

    def test_moments(self):
        g = torch.Generator().manual_seed(3)
        draws = sample_style(g, batch=100_000)
        assert torch.all(draws.mean(dim=0).abs() < 0.02)
        assert torch.all((draws.std(dim=0) - 1).abs() < 0.02)


class TestInterpolateStyle:
    def test_endpoints(self):
        a, b = torch.zeros(8), torch.full((8,), 2.0)
        assert torch.equal(interpolate_style(a, b, 0.0), a)
        assert torch.equal(interpolate_style(a, b, 1.0), b)

    def test_midpoint(self):
        a, b = torch.zeros(8), torch.full((8,), 2.0)
        assert torch.equal(interpolate_style(a, b, 0.5), torch.ones(8))

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            interpolate_style(torch.zeros(8), torch.zeros(8), 1.5)


class TestTrainStep:
    def test_losses_finite(self):
        b = TranslatorBundle(CFG)
        rep = b.train_step(torch.rand(2, 3, 32, 32), torch.rand(2, 3, 32, 32), small_weights())
        for value in rep.gen.as_dict().values():
            assert np.isfinite(value)
        assert np.isfinite(rep.dis)

    def test_background_weights_log_exact_zero(self):
        b = TranslatorBundle(CFG)
        rep = b.train_step(
            torch.rand(2, 3, 32, 32), torch.rand(2, 3, 32, 32), LossWeights.background()
        )
        assert rep.gen.gd == 0.0 and rep.gen.kl == 0.0
        assert rep.gen.x > 0.0

    def test_deterministic_sequence(self):
        def run():
            torch.manual_seed(99)
            b = TranslatorBundle(CFG)
            g = torch.Generator().manual_seed(123)
            reports = []
            for _ in range(3):
                x1 = torch.rand(2, 3, 32, 32, generator=g)
                x2 = torch.rand(2, 3, 32, 32, generator=g)
                reports.append(b.train_step(x1, x2, small_weights()))
            return [(r.gen.as_dict(), r.dis) for r in reports]

        assert run() == run()

    def test_mismatched_batch_dims_rejected(self):
        b = TranslatorBundle(CFG)
        with pytest.raises(ValueError):
            b.train_step(torch.rand(2, 3, 32, 32), torch.rand(2, 3, 16, 16), small_weights())

    def test_nan_aborts_with_term_name(self):
        b = TranslatorBundle(CFG)
        with torch.no_grad():
            next(b.generators["2"].parameters()).fill_(float("nan"))
        with pytest.raises(ValueError, match="non-finite"):
            b.train_step(torch.rand(2, 3, 32, 32), torch.rand(2, 3, 32, 32), small_weights())


class TestCheckpoint:
    def test_container_roundtrip(self, tmp_path):
        path = tmp_path / "c.ckpt"
        tensors = {
            "a.weight": np.arange(12, dtype=np.float32).reshape(3, 4),
            "b.bias": np.array([1.5, -2.0], dtype=np.float32),
        }
        save_checkpoint(path, {"k": "v", "n": "3"}, tensors)
        config, back = load_checkpoint(path)
        assert config == {"k": "v", "n": "3"}
        assert set(back) == set(tensors)
        for name in tensors:
            assert np.array_equal(back[name], tensors[name])

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.ckpt"
        path.write_bytes(b"NOTACKPT" + b"\x00" * 16)
        with pytest.raises(ValueError, match="magic"):
            load_checkpoint(path)

    def test_bundle_roundtrip_preserves_outputs(self, tmp_path):
        b = TranslatorBundle(CFG)
        path = tmp_path / "bundle.ckpt"
        save_bundle(b, path, {"branch": "fg"})
        loaded, config = load_bundle(path)
        assert config["branch"] == "fg"
        assert loaded.cfg == CFG
        x = torch.rand(3, 32, 32)
        s = sample_style(torch.Generator().manual_seed(4))
        assert torch.equal(b.translate(x, s), loaded.translate(x, s))

    def test_mismatched_shapes_rejected(self, tmp_path):
        b = TranslatorBundle(CFG)
        path = tmp_path / "bundle.ckpt"
        save_bundle(b, path)
        config, tensors = load_checkpoint(path)
        config["base_width"] = "16"
        save_checkpoint(path, config, tensors)
        with pytest.raises(ValueError, match="mismatch"):
            load_bundle(path)
