"""Daubechies wavelet transform over the (y, z) image plane of every coil."""

import numpy as np
import pywt
from pydantic import BaseModel, ConfigDict

WAVELET = "db2"
LEVELS = 3
MODE = "periodization"


class WaveletCoeffs(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    approx: np.ndarray
    details: list[tuple[np.ndarray, np.ndarray, np.ndarray]]
    levels: int = LEVELS
    shape: tuple[int, int]
    wavelet: str = WAVELET

    @property
    def size(self) -> int:
        return self.approx.size + sum(band.size for level in self.details for band in level)

    def max_abs(self) -> float:
        peaks = [np.abs(self.approx).max(initial=0.0)]
        peaks += [np.abs(band).max(initial=0.0) for level in self.details for band in level]
        return float(max(peaks))

    def with_details(self, details: list[tuple[np.ndarray, np.ndarray, np.ndarray]]) -> "WaveletCoeffs":
        return self.model_copy(update={"details": details})


def _padding(n: int, levels: int) -> int:
    block = 2**levels
    return (-n) % block


def dwt2(plane: np.ndarray, levels: int = LEVELS, wavelet: str = WAVELET) -> WaveletCoeffs:
    """Forward transform of a (..., ny, nz) array; edges are symmetric-padded up to a multiple of 2**levels"""
    plane = np.asarray(plane)
    ny, nz = plane.shape[-2:]
    pad = [(0, 0)] * (plane.ndim - 2) + [(0, _padding(ny, levels)), (0, _padding(nz, levels))]
    if any(p[1] for p in pad):
        plane = np.pad(plane, pad, mode="symmetric")
    coeffs = pywt.wavedec2(plane, wavelet, mode=MODE, level=levels, axes=(-2, -1))
    return WaveletCoeffs(
        approx=coeffs[0],
        details=[tuple(level) for level in coeffs[1:]],
        levels=levels,
        shape=(ny, nz),
        wavelet=wavelet,
    )


def idwt2(coeffs: WaveletCoeffs) -> np.ndarray:
    plane = pywt.waverec2(
        [coeffs.approx] + [tuple(level) for level in coeffs.details],
        coeffs.wavelet,
        mode=MODE,
        axes=(-2, -1),
    )
    ny, nz = coeffs.shape
    return plane[..., :ny, :nz]


def soft_threshold(coeffs: WaveletCoeffs, lam: float) -> WaveletCoeffs:
    """Shrink detail magnitudes by ``lam`` keeping their phase; the approximation band is untouched"""
    if lam < 0:
        raise ValueError(f"Threshold must be >= 0, got {lam}")
    if lam == 0:
        return coeffs
    shrunk = [
        tuple(pywt.threshold(band, lam, mode="soft") for band in level) for level in coeffs.details
    ]
    return coeffs.with_details(shrunk)  # type: ignore[arg-type]
