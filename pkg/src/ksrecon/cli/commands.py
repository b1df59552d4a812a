"""Subcommand implementations; each writes its outputs plus a manifest into one directory."""

import argparse
import math
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterator

import numpy as np

from common.utils import get_flow_aware_logger
from ksrecon.cli.options import (
    REQUIRED,
    parse_bool,
    parse_dims,
    parse_enum,
    parse_float,
    parse_int,
    parse_list,
    resolve,
)
from ksrecon.core.transforms import ifft3, rss_combine
from ksrecon.core.volume import ComplexVolume, Domain
from ksrecon.errors import ConfigurationError, DimensionMismatchError, FileFormatError, OutOfBoundsError
from ksrecon.metrics.report import MetricsRow, compare_methods
from ksrecon.metrics.scoring import score_volume
from ksrecon.metrics.sharpness import DEFAULT_HALF_WIDTH
from ksrecon.persistence.manifest import RunManifest, timed
from ksrecon.persistence.mask_store import load_mask, save_mask
from ksrecon.persistence.model_store import save_kernels, save_network
from ksrecon.persistence.report_store import read_results, write_loss_traces, write_results, write_ttests
from ksrecon.persistence.volume_store import (
    load_real_volume,
    load_volume,
    read_header,
    save_real_volume,
    save_volume,
)
from ksrecon.phantom.generator import (
    add_noise,
    default_phantom_spec,
    gen_phantom,
    gen_sensitivities,
    load_phantom_spec,
    simulate_kspace,
)
from ksrecon.phantom.models import PhantomSpec
from ksrecon.sampling.operators import apply_mask
from ksrecon.sampling.poisson import gen_poisson_mask
from ksrecon.sraki.calibration import sraki_calibrate
from ksrecon.sraki.config import Method, ReconConfig
from ksrecon.sraki.pipeline import calibrate_linear, reconstruct

logger = get_flow_aware_logger("ksrecon.cli")

RESULTS_CSV = "results.csv"
TTEST_CSV = "ttest.csv"


def _out_dir(args: argparse.Namespace) -> Path:
    out = resolve(args, {"out": (Path, REQUIRED)})["out"]
    return Path(out)


def _config_dump(args: argparse.Namespace, resolved: dict[str, Any]) -> dict[str, Any]:
    dump = {k: v for k, v in vars(args).items() if not callable(v)}
    dump.update(resolved)
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in dump.items()}


@contextmanager
def recorded_run(command: str, out_dir: Path, args: argparse.Namespace) -> Iterator[RunManifest]:
    """Yield a manifest that is written to ``out_dir`` whether or not the body raises"""
    manifest = RunManifest(command=command, config=_config_dump(args, {}))
    try:
        with timed(manifest, "total"):
            yield manifest
    except Exception as e:
        manifest.error = f"{type(e).__name__}: {e}"
        raise
    finally:
        manifest.write(out_dir)


def _record_outputs(manifest: RunManifest, paths) -> None:
    for path in paths:
        manifest.add_output(path)


PHANTOM_OPTIONS = {
    "coils": (parse_int, 8),
    "dims": (parse_dims(3), (64, 64, 32)),
    "snr": (parse_float, None),
    "seed": (parse_int, 0),
    "spec": (Path, None),
}


def phantom_spec_file_text(spec: PhantomSpec) -> str:
    lines = [f"dims={'x'.join(str(d) for d in spec.dims)}", f"seed={spec.seed}"]
    for i, e in enumerate(spec.ellipsoids):
        values = list(e.center) + list(e.semi_axes) + [e.intensity]
        lines.append(f"ellipsoid.{i}=" + ",".join(repr(float(v)) for v in values))
    if spec.vessel is None:
        lines.append("vessel=none")
    else:
        points = ";".join(",".join(repr(float(c)) for c in p) for p in spec.vessel.points)
        lines += [
            f"vessel.points={points}",
            f"vessel.radius={spec.vessel.radius!r}",
            f"vessel.peak={spec.vessel.peak!r}",
        ]
    return "\n".join(lines) + "\n"


def cmd_phantom(args: argparse.Namespace) -> list[Path]:
    out_dir = _out_dir(args)
    with recorded_run("phantom", out_dir, args) as manifest:
        opts = resolve(args, PHANTOM_OPTIONS)
        manifest.config.update(_config_dump(args, opts))
        seed = opts["seed"]
        if opts["spec"] is not None:
            spec = load_phantom_spec(opts["spec"])
            manifest.add_input(opts["spec"])
        else:
            spec = default_phantom_spec(opts["dims"], seed)
        manifest.seeds.update({"phantom": spec.seed, "coils": seed, "noise": seed + 1})

        with timed(manifest, "generate"):
            image = gen_phantom(spec)
            maps = gen_sensitivities(opts["coils"], spec.dims, seed)
            kspace = simulate_kspace(image, maps)

        outputs: list[Path] = []
        spec_path = out_dir / "phantom.cfg"
        spec_path.write_text(phantom_spec_file_text(spec))
        outputs.append(spec_path)
        outputs += save_real_volume(out_dir / "image", image)
        outputs += save_volume(out_dir / "maps", ComplexVolume(domain=Domain.IMAGE, data=maps.maps))
        outputs += save_volume(out_dir / "kspace", kspace)
        if opts["snr"] is not None:
            noisy = add_noise(kspace, opts["snr"], seed + 1)
            outputs += save_volume(out_dir / "kspace_noisy", noisy)
        _record_outputs(manifest, outputs)
    return outputs


MASK_OPTIONS = {
    "dims": (parse_dims(2), REQUIRED),
    "rate": (parse_float, REQUIRED),
    "acs": (parse_dims(2), (40, 10)),
    "seed": (parse_int, 0),
}


def cmd_mask(args: argparse.Namespace) -> list[Path]:
    out_dir = _out_dir(args)
    with recorded_run("mask", out_dir, args) as manifest:
        opts = resolve(args, MASK_OPTIONS)
        manifest.config.update(_config_dump(args, opts))
        manifest.seeds["mask"] = opts["seed"]
        ny, nz = opts["dims"]
        with timed(manifest, "generate"):
            mask = gen_poisson_mask(ny, nz, opts["rate"], opts["acs"], opts["seed"])
        path = save_mask(out_dir / "mask.msk", mask)
        manifest.config["achieved_rate"] = mask.achieved_rate
        _record_outputs(manifest, [path])
    return [path]


UNDERSAMPLE_OPTIONS = {"data": (Path, REQUIRED), "mask": (Path, REQUIRED)}


def cmd_undersample(args: argparse.Namespace) -> list[Path]:
    out_dir = _out_dir(args)
    with recorded_run("undersample", out_dir, args) as manifest:
        opts = resolve(args, UNDERSAMPLE_OPTIONS)
        manifest.config.update(_config_dump(args, opts))
        vol = load_volume(opts["data"])
        mask = load_mask(opts["mask"])
        manifest.add_input(opts["mask"])
        outputs = save_volume(out_dir / "kspace_und", apply_mask(vol, mask))
        _record_outputs(manifest, outputs)
    return list(outputs)


RECON_OPTIONS = {
    "method": (parse_enum(Method), Method.SRAKI),
    "data": (Path, REQUIRED),
    "mask": (Path, REQUIRED),
    "iters": (parse_int, None),
    "lr": (parse_float, 2.0),
    "lr_calib": (parse_float, 0.01),
    "calib_iters": (parse_int, 1000),
    "kernel": (parse_int, 5),
    "thresh_frac": (parse_float, 0.0005),
    "tikhonov": (parse_float, None),
    "dc": (str, "strict"),
    "beta": (parse_float, None),
    "seed": (parse_int, 0),
    "per_slice": (parse_bool, False),
    "mask_mode": (str, "checkerboard"),
    "linear_branch": (parse_bool, True),
    "solver": (str, "cg"),
    "threads": (parse_int, None),
}


def recon_config(opts: dict[str, Any]) -> ReconConfig:
    return ReconConfig(
        method=opts["method"],
        iters=opts["iters"],
        lr_recon=opts["lr"],
        lr_calib=opts["lr_calib"],
        calib_iters=opts["calib_iters"],
        kernel_size=opts["kernel"],
        thresh_frac=opts["thresh_frac"],
        tikhonov=opts["tikhonov"],
        dc_mode=opts["dc"],
        beta=opts["beta"],
        seed=opts["seed"],
        per_slice_networks=opts["per_slice"],
        mask_mode=opts["mask_mode"],
        linear_branch=opts["linear_branch"],
        solver=opts["solver"],
    )


def cmd_recon(args: argparse.Namespace) -> list[Path]:
    out_dir = _out_dir(args)
    with recorded_run("recon", out_dir, args) as manifest:
        opts = resolve(args, RECON_OPTIONS)
        config = recon_config(opts)
        manifest.config.update(_config_dump(args, opts))
        manifest.config["recon"] = config.model_dump(mode="json")
        manifest.seeds["recon"] = config.seed

        vol = load_volume(opts["data"])
        mask = load_mask(opts["mask"])
        manifest.add_input(opts["mask"])
        if vol.dims[1:] != mask.dims:
            raise DimensionMismatchError(f"Data (ny, nz) {vol.dims[1:]} does not match mask {mask.dims}")

        outputs: list[Path] = []
        net, kernels = None, None
        with timed(manifest, "calibration"):
            if config.method == Method.SRAKI:
                net = sraki_calibrate(vol, mask, config)
                outputs.append(save_network(out_dir / "network.net", net.params, net.scale.scale))
            else:
                kernels = calibrate_linear(vol, mask, config)
                outputs.append(save_kernels(out_dir / "kernels.ker", kernels))

        with timed(manifest, "reconstruction"):
            result = reconstruct(
                vol, mask, config, net=net, max_workers=opts["threads"], kernels=kernels
            )
        outputs += save_real_volume(out_dir / "recon", result.image)
        outputs += save_volume(out_dir / "recon_kspace", result.kspace)
        outputs.append(write_loss_traces(out_dir / "losses.csv", result.traces))
        manifest.timings["runtime_s"] = result.runtime_s
        _record_outputs(manifest, outputs)
    return outputs


METRICS_OPTIONS = {
    "recon": (Path, None),
    "ref": (Path, None),
    "phantom": (Path, None),
    "profile": (parse_int, None),
    "half_width": (parse_int, DEFAULT_HALF_WIDTH),
    "alpha": (parse_float, 1.0),
    "method": (str, "unknown"),
    "rate": (parse_float, 1.0),
    "seed": (parse_int, 0),
    "runtime": (parse_float, 0.0),
    "ttest": (parse_list(Path), None),
}


def magnitude_volume(path: Path) -> np.ndarray:
    """Real magnitude volume from either a real file or a complex multi-coil file"""
    header = read_header(path)
    if header.kind == "real":
        return load_real_volume(path)
    vol = load_volume(path)
    if vol.domain == Domain.KSPACE:
        vol = ifft3(vol)
    elif vol.domain == Domain.HYBRID:
        raise FileFormatError(f"{path}: hybrid-domain volumes cannot be exported or scored")
    return rss_combine(vol)


def _results_path(path: Path) -> Path:
    return path / RESULTS_CSV if path.is_dir() else path


def cmd_metrics(args: argparse.Namespace) -> list[Path]:
    out_dir = _out_dir(args)
    with recorded_run("metrics", out_dir, args) as manifest:
        opts = resolve(args, METRICS_OPTIONS)
        manifest.config.update(_config_dump(args, opts))
        outputs: list[Path] = []

        if opts["recon"] is not None or opts["ref"] is not None:
            if opts["ref"] is None:
                raise FileFormatError("metrics needs a reference volume (--ref)")
            if opts["recon"] is None:
                raise ConfigurationError("Missing required option --recon")
            recon = magnitude_volume(opts["recon"])
            ref = magnitude_volume(opts["ref"])
            if recon.shape != ref.shape:
                raise DimensionMismatchError(f"Reconstruction {recon.shape} and reference {ref.shape} differ")
            if opts["phantom"] is not None:
                spec = load_phantom_spec(opts["phantom"])
                manifest.add_input(opts["phantom"])
            else:
                spec = default_phantom_spec(ref.shape, 0)  # type: ignore[arg-type]
            error, sharpness = score_volume(
                recon, ref, spec, opts["profile"], opts["half_width"], opts["alpha"]
            )
            row = MetricsRow(
                method=opts["method"],
                rate=opts["rate"],
                seed=opts["seed"],
                nmse=error,
                sharpness_rca=sharpness,
                runtime_s=opts["runtime"],
            )
            outputs.append(write_results(out_dir / RESULTS_CSV, [row], append=True))
            logger.info(f"{row.method} R={row.rate:g} seed={row.seed}: nmse {error:.4e}, sharpness {sharpness:.4f}")

        if opts["ttest"]:
            if len(opts["ttest"]) != 2:
                raise ConfigurationError("--ttest takes exactly two result files or directories")
            rows = []
            for source in opts["ttest"]:
                path = _results_path(source)
                manifest.add_input(path)
                rows += read_results(path)
            outputs.append(write_ttests(out_dir / TTEST_CSV, compare_methods(rows, ("nmse",))))

        if not outputs:
            raise ConfigurationError("metrics needs --recon/--ref or --ttest")
        _record_outputs(manifest, outputs)
    return outputs


EXPORT_OPTIONS = {
    "volume": (Path, REQUIRED),
    "axis": (str, "x"),
    "index": (parse_int, None),
    "name": (str, None),
}

_AXES = {"x": 0, "y": 1, "z": 2}


def render_pgm(plane: np.ndarray) -> bytes:
    """16-bit binary PGM, intensities windowed to [0, max]"""
    plane = np.clip(np.asarray(plane, dtype=np.float64), 0.0, None)
    peak = plane.max()
    scaled = np.zeros_like(plane) if peak <= 0 else np.rint(plane / peak * 65535.0)
    height, width = plane.shape
    header = f"P5\n{width} {height}\n65535\n".encode("ascii")
    return header + scaled.astype(">u2").tobytes()


def cmd_export(args: argparse.Namespace) -> list[Path]:
    out_dir = _out_dir(args)
    with recorded_run("export", out_dir, args) as manifest:
        opts = resolve(args, EXPORT_OPTIONS)
        manifest.config.update(_config_dump(args, opts))
        if opts["axis"] not in _AXES:
            raise ConfigurationError(f"--axis must be one of x, y, z, got '{opts['axis']}'")
        volume = magnitude_volume(opts["volume"])
        axis = _AXES[opts["axis"]]
        index = volume.shape[axis] // 2 if opts["index"] is None else opts["index"]
        if not 0 <= index < volume.shape[axis]:
            raise OutOfBoundsError(
                f"Slice {index} is outside 0..{volume.shape[axis] - 1} along {opts['axis']}"
            )
        plane = np.take(volume, index, axis=axis)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / (opts["name"] or f"slice_{opts['axis']}{index}.pgm")
        path.write_bytes(render_pgm(plane))
        logger.info(f"Wrote {path} ({plane.shape[0]}x{plane.shape[1]})")
        _record_outputs(manifest, [path])
    return [path]


BENCH_OPTIONS = {
    "rates": (parse_list(parse_float), [2.0, 3.0, 4.0, 5.0]),
    "seeds": (parse_int, 3),
    "methods": (parse_list(parse_enum(Method)), [Method.SPIRIT, Method.L1SPIRIT, Method.SRAKI]),
    "dims": (parse_dims(3), (64, 64, 32)),
    "coils": (parse_int, 8),
    "snr": (parse_float, 15.0),
    "acs": (parse_dims(2), (40, 10)),
    "calib_iters": (parse_int, 1000),
    "iters": (parse_int, None),
    "threads": (parse_int, None),
}


def cmd_bench(args: argparse.Namespace) -> list[Path]:
    from ksrecon.flows.bench_flow import BenchConfig, run_bench
    from ksrecon.settings import thread_count

    out_dir = _out_dir(args)
    with recorded_run("bench", out_dir, args) as manifest:
        opts = resolve(args, BENCH_OPTIONS)
        manifest.config.update(_config_dump(args, opts))
        if opts["snr"] is not None and math.isnan(opts["snr"]):
            raise ConfigurationError("--snr must be a number or inf")
        config = BenchConfig(
            out_dir=str(out_dir),
            rates=opts["rates"],
            seeds=opts["seeds"],
            methods=opts["methods"],
            dims=opts["dims"],
            coils=opts["coils"],
            snr_db=opts["snr"],
            acs=opts["acs"],
            calib_iters=opts["calib_iters"],
            iters=opts["iters"],
        )
        manifest.seeds.update({f"seed{s}": s for s in range(config.seeds)})
        with timed(manifest, "bench"):
            report, outputs = run_bench(config, workers=opts["threads"] or thread_count())
        print(report.to_table())
        _record_outputs(manifest, outputs)
    return outputs
