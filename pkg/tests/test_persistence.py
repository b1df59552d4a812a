import json

import numpy as np
import pytest

from ksrecon.core import ComplexVolume, Domain
from ksrecon.core.convolution import real_weights
from ksrecon.errors import FileFormatError
from ksrecon.metrics import MetricsRow, TTestRow
from ksrecon.persistence.manifest import RunManifest, file_digest, timed
from ksrecon.persistence.model_store import load_kernels, load_network, save_kernels, save_network
from ksrecon.persistence.report_store import (
    read_results,
    write_loss_traces,
    write_results,
    write_ttests,
)
from ksrecon.persistence.volume_store import (
    load_real_volume,
    load_volume,
    load_volume_with_header,
    read_header,
    save_real_volume,
    save_volume,
)
from ksrecon.scnn import NetParams, net_init
from ksrecon.spirit import SpiritKernelSet

from tests.conftest import random_complex


class TestVolumeFiles:
    def test_complex_round_trip(self, tmp_path, rng):
        data = random_complex(rng, (2, 3, 4, 5)).astype(np.complex64)
        vol = ComplexVolume(domain=Domain.KSPACE, data=data)
        hdr, body = save_volume(tmp_path / "kspace", vol, scale=0.5)
        assert (hdr.name, body.name) == ("kspace.hdr", "kspace.cplx")
        assert body.stat().st_size == data.size * 8
        loaded, header = load_volume_with_header(tmp_path / "kspace.hdr")
        np.testing.assert_array_equal(loaded.data, data)
        assert loaded.domain == Domain.KSPACE
        assert (header.coils, header.nx, header.ny, header.nz, header.scale) == (2, 3, 4, 5, 0.5)

    def test_real_round_trip(self, tmp_path, rng):
        image = rng.random((3, 4, 5)).astype(np.float32)
        save_real_volume(tmp_path / "image", image)
        np.testing.assert_array_equal(load_real_volume(tmp_path / "image"), image)
        assert read_header(tmp_path / "image").kind == "real"
        with pytest.raises(FileFormatError):
            load_volume(tmp_path / "image")

    def test_truncated_body(self, tmp_path, random_kspace):
        _, body = save_volume(tmp_path / "vol", random_kspace)
        body.write_bytes(body.read_bytes()[:-8])
        with pytest.raises(FileFormatError):
            load_volume(tmp_path / "vol")

    def test_bad_header(self, tmp_path, random_kspace):
        hdr, _ = save_volume(tmp_path / "vol", random_kspace)
        hdr.write_text(hdr.read_text().replace("layout=c,x,y,z;z-fastest", "layout=x,y,z,c"))
        with pytest.raises(FileFormatError):
            load_volume(tmp_path / "vol")
        with pytest.raises(FileFormatError):
            load_volume(tmp_path / "missing")


class TestModelFiles:
    def test_kernels(self, tmp_path, rng):
        taps = random_complex(rng, (3, 3, 5, 5))
        taps[np.arange(3), np.arange(3), 2, 2] = 0
        path = save_kernels(tmp_path / "kernels.ker", SpiritKernelSet(taps=taps))
        np.testing.assert_array_equal(load_kernels(path).taps, taps)

    def test_network(self, tmp_path):
        params = net_init(3, seed=2)
        path = save_network(tmp_path / "network.net", params, scale=0.25)
        loaded, scale = load_network(path)
        assert scale == 0.25
        assert loaded.layers == params.layers
        for a, b in zip(loaded.weights, params.weights):
            np.testing.assert_array_equal(a, b)

    def test_network_with_linear_branch(self, tmp_path, rng):
        taps = random_complex(rng, (3, 3, 5, 5))
        taps[np.arange(3), np.arange(3), 2, 2] = 0
        base = net_init(3, seed=2)
        params = NetParams(layers=base.layers, weights=base.weights, linear=real_weights(taps))
        path = save_network(tmp_path / "network.net", params)
        assert b"linear=5" in path.read_bytes()
        loaded, scale = load_network(path)
        assert scale is None
        np.testing.assert_array_equal(loaded.linear, params.linear)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(FileFormatError):
            load_network(path)

    def test_network_truncated(self, tmp_path):
        path = save_network(tmp_path / "network.net", net_init(1, seed=0))
        path.write_bytes(path.read_bytes()[:-16])
        with pytest.raises(FileFormatError):
            load_network(path)


class TestReports:
    def test_results_append(self, tmp_path):
        path = tmp_path / "results.csv"
        first = MetricsRow(method="spirit", rate=2.0, seed=0, nmse=0.1, sharpness_rca=0.4, runtime_s=1.5)
        second = first.model_copy(update={"method": "sraki", "nmse": 0.05})
        write_results(path, [first])
        write_results(path, [second], append=True)
        lines = path.read_text().splitlines()
        assert lines[0] == "method,rate,seed,nmse,sharpness_rca,runtime_s"
        assert len(lines) == 3
        assert read_results(path) == [first, second]

    def test_ttest_columns(self, tmp_path):
        path = write_ttests(tmp_path / "ttest.csv", [TTestRow(pair="nmse:a-vs-b@R2", t=1.5, p=0.2, n=4)])
        assert path.read_text().splitlines() == ["pair,t,p,n", "nmse:a-vs-b@R2,1.5,0.2,4"]

    def test_loss_traces(self, tmp_path):
        path = write_loss_traces(tmp_path / "losses.csv", {1: [3.0, 2.0], 0: [1.0]})
        assert path.read_text().splitlines() == ["slice,iter,loss", "0,1,1.0", "1,1,3.0", "1,2,2.0"]

    def test_missing_columns(self, tmp_path):
        path = tmp_path / "results.csv"
        path.write_text("method,rate\nspirit,2\n")
        with pytest.raises(FileFormatError):
            read_results(path)


class TestManifest:
    def test_digests_and_timings(self, tmp_path):
        data = tmp_path / "input.bin"
        data.write_bytes(b"k-space")
        manifest = RunManifest(command="recon", config={"method": "spirit"}, seeds={"seed": 3})
        manifest.add_input(data)
        with timed(manifest, "solve"):
            pass
        path = manifest.write(tmp_path / "out")
        stored = json.loads(path.read_text())
        assert stored["inputs"][str(data)] == file_digest(data)
        assert len(file_digest(data)) == 16
        assert stored["timings"]["solve"] >= 0
        assert stored["error"] is None
