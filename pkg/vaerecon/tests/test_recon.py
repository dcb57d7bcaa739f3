"""Reconstruction contract: crop math, codec behavior, batch isolation."""

from __future__ import annotations

import numpy as np
import pytest
from click.testing import CliRunner
from PIL import Image

from vaerecon import (
    BUILTIN_DCT,
    CheckpointUnavailable,
    DeviceError,
    NoInputs,
    ReconJob,
    batch_reconstruct,
    center_crop_multiple,
    reconstruct,
    resolve_codec,
)
from vaerecon.cli import main as cli_main


class TestCenterCrop:
    def test_multiple_unchanged(self):
        img = np.zeros((96, 104, 3), np.uint8)
        assert center_crop_multiple(img).shape == (96, 104, 3)

    def test_odd_margins_go_bottom_right(self):
        img = np.arange(101 * 107).reshape(101, 107) % 255
        out = center_crop_multiple(img)
        assert out.shape == (96, 104)
        np.testing.assert_array_equal(out, img[2:98, 1:105])

    def test_too_small(self):
        with pytest.raises(ValueError):
            center_crop_multiple(np.zeros((5, 40, 3), np.uint8))


class TestResolveCodec:
    def test_builtin(self):
        codec = resolve_codec(BUILTIN_DCT)
        assert codec.name == BUILTIN_DCT

    def test_remote_id_unavailable(self):
        with pytest.raises(CheckpointUnavailable):
            resolve_codec("stabilityai/stable-diffusion-2-1")

    def test_unknown_device(self, tmp_path):
        target = tmp_path / "m.pt"
        target.write_bytes(b"not a module")
        with pytest.raises((DeviceError, CheckpointUnavailable)):
            resolve_codec(str(target), device="tpu")

    def test_garbage_checkpoint(self, tmp_path):
        target = tmp_path / "m.pt"
        target.write_bytes(b"not a module")
        with pytest.raises(CheckpointUnavailable):
            resolve_codec(str(target))


class TestReconstruct:
    def test_dimension_preservation(self, fixture_images):
        img = center_crop_multiple(fixture_images[0])
        out = reconstruct(img, BUILTIN_DCT)
        assert out.shape == img.shape and out.dtype == np.uint8

    def test_requires_multiple_of_8(self, fixture_images):
        with pytest.raises(ValueError):
            reconstruct(fixture_images[0][:97], BUILTIN_DCT)

    def test_deterministic(self, fixture_images):
        img = center_crop_multiple(fixture_images[1])
        a = reconstruct(img, BUILTIN_DCT)
        b = reconstruct(img, BUILTIN_DCT)
        np.testing.assert_array_equal(a, b)

    def test_lossy_but_close(self, fixture_images):
        img = center_crop_multiple(fixture_images[2])
        out = reconstruct(img, BUILTIN_DCT)
        err = float(np.mean((out.astype(float) - img.astype(float)) ** 2))
        assert 0.0 < err < 255.0**2 / 16


class TestBatchReconstruct:
    def test_three_inputs_three_pngs(self, tmp_path, fixture_images):
        src = tmp_path / "in"
        src.mkdir()
        for i in range(3):
            Image.fromarray(fixture_images[i]).save(src / f"a{i}.png")
        out = tmp_path / "out"
        summary = batch_reconstruct(ReconJob(src, out, BUILTIN_DCT))
        assert summary.n_ok == 3 and summary.n_failed == 0
        assert sorted(p.name for p in out.iterdir()) == ["a0.png", "a1.png", "a2.png"]

    def test_corrupt_input_isolated(self, tmp_path, fixture_images):
        src = tmp_path / "in"
        src.mkdir()
        for i in range(2):
            Image.fromarray(fixture_images[i]).save(src / f"a{i}.png")
        (src / "broken.jpg").write_bytes(b"\xff\xd8 not really")
        summary = batch_reconstruct(ReconJob(src, tmp_path / "out", BUILTIN_DCT))
        assert summary.n_ok == 2 and summary.n_failed == 1
        bad = [e for e in summary.entries if e["status"] != "ok"]
        assert bad[0]["input"].endswith("broken.jpg")

    def test_empty_dir(self, tmp_path):
        src = tmp_path / "empty"
        src.mkdir()
        with pytest.raises(NoInputs):
            batch_reconstruct(ReconJob(src, tmp_path / "out", BUILTIN_DCT))

    def test_two_runs_byte_identical(self, input_dir, tmp_path):
        outs = []
        for name in ("one", "two"):
            out = tmp_path / name
            batch_reconstruct(ReconJob(input_dir, out, BUILTIN_DCT))
            outs.append({p.name: p.read_bytes() for p in out.iterdir()})
        assert outs[0] == outs[1]


class TestTorchCheckpointPath:
    @pytest.fixture()
    def scripted_identity(self, tmp_path):
        torch = pytest.importorskip("torch")

        class Shuffle8(torch.nn.Module):
            """Exact identity factored through an 8x-downsampled latent."""

            def forward(self, x):
                z = torch.pixel_unshuffle(x, 8)
                return torch.pixel_shuffle(z, 8)

        target = tmp_path / "shuffle8.pt"
        torch.jit.script(Shuffle8()).save(str(target))
        return target

    def test_scripted_module_roundtrip(self, scripted_identity, fixture_images):
        img = center_crop_multiple(fixture_images[0])
        out = reconstruct(img, str(scripted_identity))
        assert out.shape == img.shape
        # The module is an exact identity, so only the [-1,1] quantization
        # of the wire format may move pixels, and at most by one.
        assert np.abs(out.astype(int) - img.astype(int)).max() <= 1

    def test_batch_with_torch_module(self, scripted_identity, input_dir, tmp_path):
        summary = batch_reconstruct(
            ReconJob(input_dir, tmp_path / "out", str(scripted_identity),
                     device="cpu", batch_size=4)
        )
        assert summary.n_ok == 10 and summary.n_failed == 0

    def test_cuda_unavailable(self, scripted_identity):
        torch = pytest.importorskip("torch")
        if torch.cuda.is_available():
            pytest.skip("cuda present; the error path does not apply")
        with pytest.raises(DeviceError):
            resolve_codec(str(scripted_identity), device="cuda")


class TestCli:
    def test_run_and_summary(self, input_dir, tmp_path):
        runner = CliRunner()
        out_dir = tmp_path / "out"
        summary_json = tmp_path / "summary.json"
        result = runner.invoke(
            cli_main,
            [str(input_dir), str(out_dir), "--vae", BUILTIN_DCT,
             "--summary-json", str(summary_json)],
            catch_exceptions=False,
        )
        assert result.exit_code == 0, result.output
        assert "reconstructed 10 images" in result.output
        assert summary_json.exists()
        assert len(list(out_dir.glob("*.png"))) == 10

    def test_empty_dir_exit_2(self, tmp_path):
        src = tmp_path / "none"
        src.mkdir()
        runner = CliRunner()
        result = runner.invoke(cli_main, [str(src), str(tmp_path / "out")])
        assert result.exit_code == 2

    def test_unavailable_checkpoint_exit_2(self, input_dir, tmp_path):
        runner = CliRunner()
        result = runner.invoke(
            cli_main, [str(input_dir), str(tmp_path / "out"), "--vae", "hub/fake-id"]
        )
        assert result.exit_code == 2
