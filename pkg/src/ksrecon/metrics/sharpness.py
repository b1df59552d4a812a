"""Vessel edge sharpness from recursive (Deriche) derivative filtering of line profiles."""

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from scipy.ndimage import gaussian_filter1d, map_coordinates
from scipy.signal import lfilter, lfilter_zi

from ksrecon.errors import DegenerateInputError, OutOfBoundsError, ShapeError

MIN_SAMPLES = 9
DEFAULT_HALF_WIDTH = 6


class VesselProfile(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    samples: np.ndarray
    center_index: int
    spacing: float = 1.0

    @field_validator("samples", mode="before")
    @classmethod
    def _samples(cls, v):
        arr = np.asarray(v, dtype=np.float64)
        if arr.ndim != 1 or arr.size < MIN_SAMPLES:
            raise ValueError(f"A profile needs at least {MIN_SAMPLES} samples, got shape {arr.shape}")
        arr = arr.copy()
        arr.flags.writeable = False
        return arr

    @model_validator(mode="after")
    def _interior(self):
        if not 2 <= self.center_index <= self.samples.size - 3:
            raise ValueError(f"Centre index {self.center_index} must leave two samples on each side")
        return self

    @property
    def center_value(self) -> float:
        return float(self.samples[self.center_index])


def deriche_coefficients(alpha: float) -> tuple[np.ndarray, np.ndarray, float]:
    r = np.exp(-alpha)
    b = np.array([0.0, r])
    a = np.array([1.0, -2.0 * r, r * r])
    gain = (1.0 - r) ** 3 / (2.0 * r * (1.0 + r))
    return b, a, gain


def deriche_gradient(profile: VesselProfile | np.ndarray, alpha: float = 1.0) -> np.ndarray:
    """Smoothed first derivative: causal plus anticausal second-order recursions.

    Normalised so a unit ramp has derivative 1; edges are treated as replicated samples.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    x = profile.samples if isinstance(profile, VesselProfile) else np.asarray(profile, dtype=np.float64)
    if x.ndim != 1 or x.size < 3:
        raise ShapeError(f"Profile too short for derivative filtering: shape {x.shape}")
    b, a, gain = deriche_coefficients(alpha)
    zi = lfilter_zi(b, a)
    shifted = x - x[0]
    causal, _ = lfilter(b, a, shifted, zi=zi * shifted[0])
    reversed_ = shifted[::-1]
    anticausal, _ = lfilter(b, a, reversed_, zi=zi * reversed_[0])
    return gain * (anticausal[::-1] - causal)


def vessel_sharpness(profile: VesselProfile, alpha: float = 1.0) -> float:
    """Mean of the peak edge gradients on both sides, divided by the centre intensity"""
    center = profile.center_value
    if center <= 0.0:
        raise DegenerateInputError(f"Vessel centre intensity must be positive, got {center}")
    grad = np.abs(deriche_gradient(profile, alpha))
    c = profile.center_index
    left, right = grad[:c].max(), grad[c + 1 :].max()
    return float(0.5 * (left + right) / center)


def extract_profile(
    volume: np.ndarray,
    center: tuple[float, float, float],
    direction: tuple[float, float, float],
    half_width: int = DEFAULT_HALF_WIDTH,
) -> VesselProfile:
    """Linearly interpolated samples at unit spacing along ``direction`` through ``center``"""
    volume = np.asarray(volume, dtype=np.float64)
    d = np.asarray(direction, dtype=np.float64)
    norm = np.linalg.norm(d)
    if norm == 0.0:
        raise ValueError("Profile direction must be non-zero")
    d = d / norm
    steps = np.arange(-half_width, half_width + 1, dtype=np.float64)
    coords = np.asarray(center, dtype=np.float64)[:, None] + d[:, None] * steps[None, :]
    upper = np.asarray(volume.shape, dtype=np.float64)[:, None] - 1.0
    if np.any(coords < -1e-9) or np.any(coords > upper + 1e-9):
        raise OutOfBoundsError(
            f"Profile through {tuple(center)} with half width {half_width} leaves volume {volume.shape}"
        )
    coords = np.clip(coords, 0.0, upper)
    samples = map_coordinates(volume, coords, order=1, mode="nearest")
    return VesselProfile(samples=samples, center_index=half_width)


def gaussian_blur_profile(profile: VesselProfile, sigma: float) -> VesselProfile:
    if sigma <= 0:
        return profile
    blurred = gaussian_filter1d(profile.samples, sigma, mode="nearest")
    return VesselProfile(samples=blurred, center_index=profile.center_index, spacing=profile.spacing)
