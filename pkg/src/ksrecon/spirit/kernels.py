"""Linear self-consistency kernels: calibration on ACS windows and the G operator."""

import warnings
from typing import Sequence

import numpy as np
import scipy.linalg
from numpy.lib.stride_tricks import sliding_window_view
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from common.utils import get_flow_aware_logger
from ksrecon.core.convolution import conv2d_same, conv2d_same_adjoint
from ksrecon.core.volume import Domain, HybridSlice
from ksrecon.errors import CalibrationError, DimensionMismatchError, SolverError

logger = get_flow_aware_logger("ksrecon.spirit.kernels")

RIDGE_FRACTION = 1e-4


class SpiritKernelSet(BaseModel):
    """taps[j, c, i, k]: weight of coil c at offset (i - h, k - h) when predicting coil j"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    taps: np.ndarray

    @field_validator("taps", mode="before")
    @classmethod
    def _check_taps(cls, v):
        arr = np.asarray(v, dtype=np.complex128)
        if arr.ndim != 4 or arr.shape[0] != arr.shape[1] or arr.shape[2] != arr.shape[3]:
            raise ValueError(f"Kernel taps must be (nc, nc, k, k), got {arr.shape}")
        if arr.shape[2] % 2 == 0:
            raise ValueError(f"Kernel size must be odd, got {arr.shape[2]}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("Kernel taps must be finite")
        if arr.flags.writeable:
            arr = arr.copy()
            arr.flags.writeable = False
        return arr

    @model_validator(mode="after")
    def _zero_self_tap(self):
        h = self.kernel_size // 2
        if np.any(self.taps[np.arange(self.coils), np.arange(self.coils), h, h] != 0):
            raise ValueError("Self taps (coil j, centre) must be exactly zero")
        return self

    @property
    def coils(self) -> int:
        return self.taps.shape[0]

    @property
    def kernel_size(self) -> int:
        return self.taps.shape[2]


def calibration_rows(acs_patches: Sequence[np.ndarray], kernel_size: int) -> np.ndarray:
    """Neighbourhood matrix over the valid interior of every patch, (rows, nc * k * k)"""
    if not acs_patches:
        raise CalibrationError("No ACS patches to calibrate on")
    rows = []
    for patch in acs_patches:
        patch = np.asarray(patch, dtype=np.complex128)
        if patch.ndim != 3:
            raise DimensionMismatchError(f"ACS patches are (nc, wy, wz), got {patch.shape}")
        nc, wy, wz = patch.shape
        if wy < kernel_size or wz < kernel_size:
            raise CalibrationError(
                f"ACS extent {wy}x{wz} is smaller than the {kernel_size}x{kernel_size} kernel"
            )
        windows = sliding_window_view(patch, (kernel_size, kernel_size), axis=(1, 2))
        rows.append(windows.transpose(1, 2, 0, 3, 4).reshape(-1, nc * kernel_size**2))
    if len({r.shape[1] for r in rows}) != 1:
        raise DimensionMismatchError("ACS patches disagree on the coil count")
    return np.concatenate(rows, axis=0)


def calibrate_kernels(
    acs_patches: Sequence[np.ndarray], kernel_size: int = 5, tikhonov: float | None = None
) -> SpiritKernelSet:
    """Ridge least squares per target coil; ``tikhonov=None`` picks 1e-4 * trace(A^H A) / n"""
    A = calibration_rows(acs_patches, kernel_size)
    n = A.shape[1]
    nc = n // kernel_size**2
    h = kernel_size // 2
    normal = A.conj().T @ A
    lam = RIDGE_FRACTION * float(np.real(np.trace(normal))) / n if tikhonov is None else tikhonov
    if lam < 0:
        raise CalibrationError(f"Tikhonov weight must be >= 0, got {lam}")

    taps = np.zeros((nc, n), dtype=np.complex128)
    for j in range(nc):
        self_col = j * kernel_size**2 + h * kernel_size + h
        keep = np.arange(n) != self_col
        lhs = normal[np.ix_(keep, keep)] + lam * np.eye(n - 1)
        rhs = A[:, keep].conj().T @ A[:, self_col]
        taps[j, keep] = _solve_hermitian(lhs, rhs, lam, j)

    kernels = SpiritKernelSet(taps=taps.reshape(nc, nc, kernel_size, kernel_size))
    logger.info(
        f"Calibrated {nc} SPIRiT kernels ({kernel_size}x{kernel_size}) on {A.shape[0]} ACS windows, "
        f"lambda={lam:.3e}"
    )
    return kernels


def _solve_hermitian(lhs: np.ndarray, rhs: np.ndarray, lam: float, target: int) -> np.ndarray:
    with warnings.catch_warnings():
        warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
        try:
            return scipy.linalg.solve(lhs, rhs, assume_a="her")
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as e:
            hint = " (use a positive Tikhonov weight)" if lam == 0 else ""
            raise SolverError(f"Calibration normal matrix for coil {target} is singular{hint}: {e}") from e


def _check_slice(kernels: SpiritKernelSet, item: HybridSlice, operation: str) -> None:
    item.require(Domain.HYBRID, operation)
    if item.coils != kernels.coils:
        raise DimensionMismatchError(
            f"{operation}: slice has {item.coils} coils, kernels expect {kernels.coils}"
        )


def apply_g(taps: np.ndarray, data: np.ndarray) -> np.ndarray:
    """G on a raw (nc, ny, nz) array"""
    return conv2d_same(data[None], taps)[0]


def apply_g_adjoint(taps: np.ndarray, data: np.ndarray) -> np.ndarray:
    return conv2d_same_adjoint(data[None], taps)[0]


def apply_G_linear(kernels: SpiritKernelSet, item: HybridSlice) -> HybridSlice:
    _check_slice(kernels, item, "apply_G_linear")
    return item.with_data(apply_g(kernels.taps, item.data))


def apply_G_linear_adjoint(kernels: SpiritKernelSet, item: HybridSlice) -> HybridSlice:
    _check_slice(kernels, item, "apply_G_linear_adjoint")
    return item.with_data(apply_g_adjoint(kernels.taps, item.data))


def self_consistency_residual(kernels: SpiritKernelSet, acs_patches: Sequence[np.ndarray]) -> float:
    """||x - Gx||^2 / ||x||^2 pooled over the valid interior of the ACS patches"""
    k = kernels.kernel_size
    A = calibration_rows(acs_patches, k)
    nc = kernels.coils
    h = k // 2
    centres = A[:, [c * k * k + h * k + h for c in range(nc)]]
    predicted = A @ kernels.taps.reshape(nc, -1).T
    return float(np.sum(np.abs(centres - predicted) ** 2) / np.sum(np.abs(centres) ** 2))
