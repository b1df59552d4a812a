"""Per-slice SPIRiT and l1-SPIRiT reconstructions with strict data consistency."""

import numpy as np

from common.utils import get_flow_aware_logger
from ksrecon.core.transforms import fft2_yz, ifft2_yz
from ksrecon.core.volume import Domain, HybridSlice
from ksrecon.errors import DimensionMismatchError, DivergenceError
from ksrecon.sampling.models import SamplingMask
from ksrecon.spirit.kernels import SpiritKernelSet, apply_g, apply_g_adjoint
from ksrecon.spirit.solvers import conjugate_gradient
from ksrecon.spirit.wavelets import dwt2, idwt2, soft_threshold

logger = get_flow_aware_logger("ksrecon.spirit.recon")

CG_SUBSTEPS = 5


class _FreeEntryProblem:
    """min_u ||(G - I)(y + P^T u)||^2 over the non-acquired entries u"""

    def __init__(self, kernels: SpiritKernelSet, acquired: np.ndarray, bits: np.ndarray):
        self.taps = kernels.taps
        self.acquired = acquired
        self.free = ~bits

    def embed(self, u: np.ndarray) -> np.ndarray:
        x = self.acquired.copy()
        x[:, self.free] = u
        return x

    def residual(self, x: np.ndarray) -> np.ndarray:
        return apply_g(self.taps, x) - x

    def residual_adjoint(self, r: np.ndarray) -> np.ndarray:
        return apply_g_adjoint(self.taps, r) - r

    def normal_op(self, u: np.ndarray) -> np.ndarray:
        x = np.zeros_like(self.acquired)
        x[:, self.free] = u
        return self.residual_adjoint(self.residual(x))[:, self.free]

    def rhs(self) -> np.ndarray:
        return -self.residual_adjoint(self.residual(self.acquired))[:, self.free]

    def solve(self, u0: np.ndarray, n_iter: int, trace: list[float] | None = None) -> np.ndarray:
        def record(u: np.ndarray, _it: int) -> None:
            if trace is not None:
                trace.append(float(np.linalg.norm(self.residual(self.embed(u)))))

        return conjugate_gradient(self.normal_op, self.rhs(), u0, n_iter, callback=record)


def _prepare(und_slice: HybridSlice, mask: SamplingMask, kernels: SpiritKernelSet, op: str):
    und_slice.require(Domain.HYBRID, op)
    if und_slice.dims != mask.dims:
        raise DimensionMismatchError(f"{op}: slice dims {und_slice.dims} do not match mask {mask.dims}")
    if und_slice.coils != kernels.coils:
        raise DimensionMismatchError(f"{op}: slice has {und_slice.coils} coils, kernels expect {kernels.coils}")
    acquired = np.where(mask.bits, und_slice.data, 0)
    return _FreeEntryProblem(kernels, acquired, mask.bits)


def spirit_cg_recon(
    und_slice: HybridSlice,
    mask: SamplingMask,
    kernels: SpiritKernelSet,
    iters: int = 50,
    trace: list[float] | None = None,
) -> HybridSlice:
    problem = _prepare(und_slice, mask, kernels, "spirit_cg_recon")
    u0 = np.zeros_like(problem.acquired[:, problem.free])
    try:
        u = problem.solve(u0, iters, trace)
    except DivergenceError as e:
        raise DivergenceError("SPIRiT CG diverged", e.iteration, und_slice.x_index) from e
    out = problem.embed(u)
    out[:, mask.bits] = und_slice.data[:, mask.bits]
    logger.debug(f"SPIRiT slice {und_slice.x_index}: {iters} CG iterations")
    return und_slice.with_data(out)


def l1spirit_recon(
    und_slice: HybridSlice,
    mask: SamplingMask,
    kernels: SpiritKernelSet,
    iters: int = 15,
    thresh_frac: float = 0.0005,
    trace: list[float] | None = None,
    cg_substeps: int = CG_SUBSTEPS,
) -> HybridSlice:
    """Alternate warm-started CG sub-steps, image-plane wavelet shrinkage and data consistency"""
    if thresh_frac < 0:
        raise ValueError(f"thresh_frac must be >= 0, got {thresh_frac}")
    problem = _prepare(und_slice, mask, kernels, "l1spirit_recon")
    y = und_slice.data
    x = problem.acquired.copy()
    for it in range(1, iters + 1):
        try:
            u = problem.solve(x[:, problem.free], cg_substeps)
        except DivergenceError as e:
            raise DivergenceError("l1-SPIRiT CG diverged", it, und_slice.x_index) from e
        x = problem.embed(u)

        image = ifft2_yz(und_slice.with_data(x))
        coeffs = dwt2(image.data)
        lam = thresh_frac * coeffs.max_abs()
        image = image.with_data(idwt2(soft_threshold(coeffs, lam)))
        x = np.array(fft2_yz(image).data)
        x[:, mask.bits] = y[:, mask.bits]

        if not np.all(np.isfinite(x)):
            raise DivergenceError("l1-SPIRiT produced a non-finite value", it, und_slice.x_index)
        if trace is not None:
            trace.append(float(np.linalg.norm(problem.residual(x))))
    logger.debug(f"l1-SPIRiT slice {und_slice.x_index}: {iters} outer iterations")
    return und_slice.with_data(x)
