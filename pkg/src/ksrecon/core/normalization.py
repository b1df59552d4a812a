from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

from ksrecon.core.volume import ComplexVolume, NormScale
from ksrecon.errors import DegenerateInputError, DimensionMismatchError

if TYPE_CHECKING:
    from ksrecon.sampling.models import SamplingMask


def counted_power(data: np.ndarray, bits: np.ndarray | None = None) -> float:
    """Mean squared magnitude over the counted samples (acquired (y, z) locations if bits given)"""
    power = data.real**2 + data.imag**2
    if bits is None:
        return float(power.mean())
    if power.shape[-2:] != bits.shape:
        raise DimensionMismatchError(
            f"Mask dims {bits.shape} do not match data (ny, nz) {power.shape[-2:]}"
        )
    selected = power[..., bits]
    if selected.size == 0:
        raise DegenerateInputError("Mask selects no samples")
    return float(selected.mean())


def normalize_power(
    vol: ComplexVolume, mask: SamplingMask | None = None
) -> tuple[ComplexVolume, NormScale]:
    mean_power = counted_power(vol.data, None if mask is None else mask.bits)
    if mean_power == 0.0:
        raise DegenerateInputError("Cannot normalise: every counted sample is zero")
    scale = NormScale(scale=1.0 / np.sqrt(mean_power))
    return vol.with_data(vol.data * scale.scale), scale


def denormalize(vol: ComplexVolume, scale: NormScale) -> ComplexVolume:
    return vol.with_data(vol.data * (1.0 / scale.scale))
