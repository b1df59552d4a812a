import numpy as np

from ksrecon.core.volume import ComplexVolume, Domain
from ksrecon.errors import ConfigurationError, DimensionMismatchError
from ksrecon.sampling.models import SamplingMask, acs_bounds


def _check_dims(vol: ComplexVolume, mask: SamplingMask, operation: str) -> None:
    if vol.dims[1:] != mask.dims:
        raise DimensionMismatchError(
            f"{operation}: volume (ny, nz) {vol.dims[1:]} does not match mask {mask.dims}"
        )


def apply_mask(vol: ComplexVolume, mask: SamplingMask) -> ComplexVolume:
    """Zero every (ky, kz) location the mask does not acquire, across all coils and kx"""
    vol.require(Domain.KSPACE, "apply_mask")
    _check_dims(vol, mask, "apply_mask")
    return vol.with_data(np.where(mask.bits, vol.data, 0))


def extract_acs(vol: ComplexVolume, mask: SamplingMask) -> list[np.ndarray]:
    """Per x-slice copies of the centred ACS block, each (nc, wy, wz)"""
    vol.require(Domain.HYBRID, "extract_acs")
    _check_dims(vol, mask, "extract_acs")
    if not mask.has_acs:
        raise ConfigurationError(f"Mask has no ACS region (acs={mask.acs})")
    ys, zs = acs_bounds(*mask.dims, mask.acs)
    block = vol.data[:, :, ys, zs]
    return [np.array(block[:, x]) for x in range(vol.dims[0])]
