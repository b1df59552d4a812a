"""Whole-volume reconstruction: normalise, split along x, reconstruct slices, recombine."""

import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np
from pydantic import BaseModel, ConfigDict

from common.utils import get_flow_aware_logger
from ksrecon.core.normalization import denormalize, normalize_power
from ksrecon.core.transforms import fft_x, ifft2_yz, ifft_x, rss_combine
from ksrecon.core.volume import ComplexVolume, Domain, HybridSlice
from ksrecon.errors import ConfigurationError, DimensionMismatchError, SliceReconstructionError
from ksrecon.sampling.models import SamplingMask
from ksrecon.sampling.operators import apply_mask, extract_acs
from ksrecon.settings import thread_count
from ksrecon.spirit.kernels import SpiritKernelSet, calibrate_kernels, self_consistency_residual
from ksrecon.spirit.recon import l1spirit_recon, spirit_cg_recon
from ksrecon.sraki.calibration import SelfConsistencyNet, sraki_calibrate
from ksrecon.sraki.config import Method, ReconConfig
from ksrecon.sraki.recon import sraki_recon_slice

logger = get_flow_aware_logger("ksrecon.sraki.pipeline")

SliceSolver = Callable[[HybridSlice, list[float]], HybridSlice]


class ReconResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    method: Method
    image: np.ndarray
    kspace: ComplexVolume
    traces: dict[int, list[float]]
    calib_losses: list[float]
    runtime_s: float


def coil_combine(kspace: ComplexVolume) -> np.ndarray:
    """RSS magnitude image of a k-space volume via per-slice 2D transforms"""
    return rss_combine([ifft2_yz(s) for s in ifft_x(kspace).slices()])


def calibrate_linear(vol: ComplexVolume, mask: SamplingMask, config: ReconConfig) -> SpiritKernelSet:
    """SPIRiT kernels from the ACS of a k-space volume, at the same scale reconstruct works in"""
    vol.require(Domain.KSPACE, "calibrate_linear")
    normalized, _ = normalize_power(apply_mask(vol, mask), mask)
    return calibrate_kernels(extract_acs(ifft_x(normalized), mask), config.kernel_size, config.tikhonov)


def _solver(
    hybrid: ComplexVolume,
    mask: SamplingMask,
    config: ReconConfig,
    net: SelfConsistencyNet | None,
    kernels: SpiritKernelSet | None,
) -> tuple[SliceSolver, list[float]]:
    if config.method == Method.SRAKI:
        if net is None:
            raise ConfigurationError("sRAKI reconstruction needs a calibrated network")

        def solve_sraki(item: HybridSlice, trace: list[float]) -> HybridSlice:
            return sraki_recon_slice(item, mask, net.for_slice(item.x_index), config, trace)

        return solve_sraki, list(net.losses)

    patches = extract_acs(hybrid, mask)
    if kernels is None:
        kernels = calibrate_kernels(patches, config.kernel_size, config.tikhonov)
    calib = [self_consistency_residual(kernels, patches)]
    if config.method == Method.SPIRIT:

        def solve_spirit(item: HybridSlice, trace: list[float]) -> HybridSlice:
            return spirit_cg_recon(item, mask, kernels, config.iters, trace)

        return solve_spirit, calib

    def solve_l1(item: HybridSlice, trace: list[float]) -> HybridSlice:
        return l1spirit_recon(item, mask, kernels, config.iters, config.thresh_frac, trace)

    return solve_l1, calib


def reconstruct(
    vol: ComplexVolume,
    mask: SamplingMask,
    config: ReconConfig,
    net: SelfConsistencyNet | None = None,
    max_workers: int | None = None,
    kernels: SpiritKernelSet | None = None,
) -> ReconResult:
    """Reconstruct undersampled (or fully sampled and then masked) k-space with ``config.method``.

    Acquired samples of the returned k-space are taken verbatim from ``vol``.
    """
    vol.require(Domain.KSPACE, "reconstruct")
    if vol.dims[1:] != mask.dims:
        raise DimensionMismatchError(f"Volume (ny, nz) {vol.dims[1:]} does not match mask {mask.dims}")
    started = time.perf_counter()
    acquired = apply_mask(vol, mask)

    if config.method == Method.SRAKI:
        if net is None:
            net = sraki_calibrate(acquired, mask, config)
        scale = net.scale
        normalized = acquired.with_data(acquired.data * scale.scale)
    else:
        normalized, scale = normalize_power(acquired, mask)

    hybrid = ifft_x(normalized)
    solve, calib_losses = _solver(hybrid, mask, config, net, kernels)

    traces: dict[int, list[float]] = {}
    failures: dict[int, Exception] = {}

    def run(item: HybridSlice) -> tuple[int, HybridSlice | None]:
        trace: list[float] = []
        traces[item.x_index] = trace
        try:
            return item.x_index, solve(item, trace)
        except Exception as e:
            failures[item.x_index] = e
            return item.x_index, None

    workers = max_workers or thread_count()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(run, hybrid.slices()))
    if failures:
        raise SliceReconstructionError(failures)

    recon = ComplexVolume.from_slices([s for _, s in results if s is not None])
    kspace = fft_x(denormalize(recon, scale))
    kspace = kspace.with_data(np.where(mask.bits, vol.data, kspace.data))
    image = coil_combine(kspace)

    runtime = time.perf_counter() - started
    logger.info(
        f"{config.method.value} reconstruction of {vol.dims[0]} slices done in {runtime:.2f}s "
        f"({workers} worker(s))"
    )
    return ReconResult(
        method=config.method,
        image=image,
        kspace=kspace,
        traces=dict(sorted(traces.items())),
        calib_losses=calib_losses,
        runtime_s=runtime,
    )
