import json

import numpy as np
import pytest

from ksrecon.cli.main import exit_code_for, main
from ksrecon.errors import (
    DimensionMismatchError,
    DivergenceError,
    FileFormatError,
    SliceReconstructionError,
)
from ksrecon.persistence.mask_store import load_mask
from ksrecon.persistence.volume_store import load_real_volume, load_volume, save_real_volume
from ksrecon.phantom import default_phantom_spec, gen_phantom


@pytest.fixture(scope="module")
def phantom_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("phantom")
    assert main(["phantom", "--dims", "8x32x32", "--coils", "4", "--seed", "1", "--snr", "30", "-o", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def mask_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("mask")
    assert main(["mask", "--dims", "32x32", "--rate", "2", "--acs", "12x12", "--seed", "3", "-o", str(out)]) == 0
    return out


def manifest(out) -> dict:
    return json.loads((out / "manifest.json").read_text())


class TestExitCodes:
    def test_mapping(self):
        assert exit_code_for(FileFormatError("x")) == 3
        assert exit_code_for(DimensionMismatchError("x")) == 3
        assert exit_code_for(DivergenceError("x", 3)) == 4
        assert exit_code_for(SliceReconstructionError({0: DivergenceError("x", 1, 0)})) == 4
        assert exit_code_for(SliceReconstructionError({0: DimensionMismatchError("x")})) == 3
        assert exit_code_for(RuntimeError("x")) == 1

    def test_unknown_method_is_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as info:
            main(["recon", "--method", "grappa", "-o", str(tmp_path)])
        assert info.value.code == 2


class TestPhantomCommand:
    def test_outputs(self, phantom_dir):
        for name in ("phantom.cfg", "image.hdr", "image.real", "maps.cplx", "kspace.cplx", "kspace_noisy.cplx"):
            assert (phantom_dir / name).is_file()
        record = manifest(phantom_dir)
        assert record["command"] == "phantom"
        assert record["error"] is None
        assert record["seeds"]["noise"] == 2
        assert str(phantom_dir / "kspace.cplx") in record["outputs"]
        assert load_volume(phantom_dir / "kspace").coils == 4

    def test_repeatable(self, phantom_dir, tmp_path):
        assert main(["phantom", "--dims", "8x32x32", "--coils", "4", "--seed", "1", "--snr", "30", "-o", str(tmp_path)]) == 0
        for name in ("image.real", "kspace.cplx", "kspace_noisy.cplx"):
            assert (tmp_path / name).read_bytes() == (phantom_dir / name).read_bytes()

    def test_infinite_snr(self, tmp_path):
        assert main(["phantom", "--dims", "8x16x16", "--coils", "2", "--snr", "inf", "-o", str(tmp_path)]) == 0
        assert (tmp_path / "kspace_noisy.cplx").read_bytes() == (tmp_path / "kspace.cplx").read_bytes()

    def test_spec_file_round_trip(self, phantom_dir, tmp_path):
        assert main(["phantom", "--spec", str(phantom_dir / "phantom.cfg"), "--coils", "4", "--seed", "1", "-o", str(tmp_path)]) == 0
        assert (tmp_path / "image.real").read_bytes() == (phantom_dir / "image.real").read_bytes()


class TestMaskCommand:
    def test_rate(self, tmp_path):
        assert main(["mask", "--dims", "64x32", "--rate", "4", "--acs", "40x10", "-o", str(tmp_path)]) == 0
        mask = load_mask(tmp_path / "mask.msk")
        assert mask.achieved_rate == pytest.approx(4.0, rel=0.02)
        assert manifest(tmp_path)["config"]["achieved_rate"] == mask.achieved_rate

    def test_missing_rate(self, tmp_path, capsys):
        assert main(["mask", "--dims", "64x32", "-o", str(tmp_path)]) == 2
        assert "usage" in capsys.readouterr().err
        assert "ConfigurationError" in manifest(tmp_path)["error"]

    def test_flags_override_config_file(self, tmp_path):
        config = tmp_path / "mask.cfg"
        config.write_text("dims=32x16\nrate=3\nacs=8x4\n")
        out = tmp_path / "out"
        assert main(["mask", "--config", str(config), "--rate", "4", "-o", str(out)]) == 0
        mask = load_mask(out / "mask.msk")
        assert mask.dims == (32, 16)
        assert mask.target_rate == 4.0

    def test_infeasible_acs(self, tmp_path):
        assert main(["mask", "--dims", "16x8", "--rate", "8", "--acs", "8x8", "-o", str(tmp_path)]) == 2


class TestReconCommand:
    def test_spirit_end_to_end(self, phantom_dir, mask_dir, tmp_path):
        code = main(
            [
                "recon", "--method", "spirit", "--iters", "5",
                "--data", str(phantom_dir / "kspace_noisy.hdr"),
                "--mask", str(mask_dir / "mask.msk"),
                "-o", str(tmp_path),
            ]
        )
        assert code == 0
        assert (tmp_path / "kernels.ker").is_file()
        assert load_real_volume(tmp_path / "recon").shape == (8, 32, 32)
        lines = (tmp_path / "losses.csv").read_text().splitlines()
        assert lines[0] == "slice,iter,loss"
        assert len(lines) == 1 + 8 * 5
        record = manifest(tmp_path)
        assert record["config"]["recon"]["method"] == "spirit"
        assert record["error"] is None

    def test_sraki_writes_network(self, phantom_dir, mask_dir, tmp_path):
        code = main(
            [
                "recon", "--method", "sraki", "--iters", "2", "--calib-iters", "3",
                "--data", str(phantom_dir / "kspace.hdr"),
                "--mask", str(mask_dir / "mask.msk"),
                "-o", str(tmp_path),
            ]
        )
        assert code == 0
        assert (tmp_path / "network.net").is_file()
        assert b"scale=" in (tmp_path / "network.net").read_bytes()

    def test_mask_dimension_mismatch(self, phantom_dir, tmp_path):
        mask_out = tmp_path / "mask"
        assert main(["mask", "--dims", "16x16", "--rate", "2", "--acs", "6x6", "-o", str(mask_out)]) == 0
        out = tmp_path / "recon"
        code = main(
            [
                "recon", "--method", "spirit",
                "--data", str(phantom_dir / "kspace.hdr"),
                "--mask", str(mask_out / "mask.msk"),
                "-o", str(out),
            ]
        )
        assert code == 3
        assert "DimensionMismatchError" in manifest(out)["error"]

    def test_soft_mode_needs_beta(self, phantom_dir, mask_dir, tmp_path):
        code = main(
            [
                "recon", "--method", "sraki", "--dc", "soft",
                "--data", str(phantom_dir / "kspace.hdr"),
                "--mask", str(mask_dir / "mask.msk"),
                "-o", str(tmp_path),
            ]
        )
        assert code == 2


class TestMetricsCommand:
    def test_reference_against_itself(self, tmp_path):
        ref = gen_phantom(default_phantom_spec((16, 32, 32)))
        save_real_volume(tmp_path / "ref", ref)
        out = tmp_path / "metrics"
        args = ["metrics", "--recon", str(tmp_path / "ref.hdr"), "--ref", str(tmp_path / "ref.hdr"), "-o", str(out)]
        assert main(args + ["--method", "spirit", "--rate", "2", "--seed", "0"]) == 0
        assert main(args + ["--method", "spirit", "--rate", "2", "--seed", "1"]) == 0
        lines = (out / "results.csv").read_text().splitlines()
        assert len(lines) == 3
        assert lines[1].startswith("spirit,2.0,0,0.0,")

    def test_missing_reference(self, tmp_path):
        ref = np.ones((4, 16, 16))
        save_real_volume(tmp_path / "recon", ref)
        assert main(["metrics", "--recon", str(tmp_path / "recon.hdr"), "-o", str(tmp_path / "m")]) == 3

    def test_shape_mismatch(self, tmp_path):
        save_real_volume(tmp_path / "a", np.ones((4, 16, 16)))
        save_real_volume(tmp_path / "b", np.ones((4, 16, 8)))
        code = main(["metrics", "--recon", str(tmp_path / "a.hdr"), "--ref", str(tmp_path / "b.hdr"), "-o", str(tmp_path / "m")])
        assert code == 3

    def test_ttest(self, tmp_path):
        header = "method,rate,seed,nmse,sharpness_rca,runtime_s\n"
        (tmp_path / "a.csv").write_text(header + "".join(f"spirit,2.0,{s},{0.1 + 0.01 * s * s},0.3,1.0\n" for s in range(4)))
        (tmp_path / "b.csv").write_text(header + "".join(f"sraki,2.0,{s},{0.05 + 0.01 * s},0.35,2.0\n" for s in range(4)))
        out = tmp_path / "m"
        assert main(["metrics", "--ttest", str(tmp_path / "a.csv"), str(tmp_path / "b.csv"), "-o", str(out)]) == 0
        lines = (out / "ttest.csv").read_text().splitlines()
        assert lines[0] == "pair,t,p,n"
        assert lines[1].startswith("nmse:spirit-vs-sraki@R2,")
        assert lines[1].endswith(",4")


class TestExportCommand:
    def test_default_slice(self, tmp_path):
        volume = np.zeros((4, 6, 5))
        volume[2] = 3.0
        save_real_volume(tmp_path / "vol", volume)
        out = tmp_path / "png"
        assert main(["export", "--volume", str(tmp_path / "vol.hdr"), "-o", str(out)]) == 0
        data = (out / "slice_x2.pgm").read_bytes()
        header = b"P5\n5 6\n65535\n"
        assert data.startswith(header)
        pixels = np.frombuffer(data[len(header):], dtype=">u2")
        assert pixels.size == 30
        assert np.all(pixels == 65535)

    def test_index_out_of_range(self, tmp_path):
        save_real_volume(tmp_path / "vol", np.ones((4, 6, 5)))
        assert main(["export", "--volume", str(tmp_path / "vol.hdr"), "--axis", "z", "--index", "9", "-o", str(tmp_path / "o")]) == 3

    def test_complex_kspace_volume(self, phantom_dir, tmp_path):
        assert main(["export", "--volume", str(phantom_dir / "kspace.hdr"), "--axis", "y", "--index", "16", "-o", str(tmp_path)]) == 0
        assert (tmp_path / "slice_y16.pgm").read_bytes().startswith(b"P5\n32 8\n65535\n")
