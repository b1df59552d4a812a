import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


def acs_bounds(ny: int, nz: int, acs: tuple[int, int]) -> tuple[slice, slice]:
    """Centred ACS rectangle, floor-based offsets around (ny // 2, nz // 2)"""
    wy, wz = acs
    y0 = ny // 2 - wy // 2
    z0 = nz // 2 - wz // 2
    return slice(y0, y0 + wy), slice(z0, z0 + wz)


class SamplingMask(BaseModel):
    """Binary ky-kz acquisition pattern with a fully sampled centred ACS block"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    bits: np.ndarray
    acs: tuple[int, int] = (0, 0)
    target_rate: float = Field(default=1.0, ge=1.0)
    seed: int = 0
    r_min: float = Field(default=0.0, ge=0.0)

    @field_validator("bits", mode="before")
    @classmethod
    def _freeze(cls, v):
        arr = np.asarray(v, dtype=bool)
        if arr.ndim != 2:
            raise ValueError(f"Mask bits must be 2-D (ny, nz), got shape {arr.shape}")
        if arr.flags.writeable:
            arr = arr.copy()
            arr.flags.writeable = False
        return arr

    @model_validator(mode="after")
    def _check_acs(self):
        ny, nz = self.bits.shape
        wy, wz = self.acs
        if not (0 <= wy <= ny and 0 <= wz <= nz):
            raise ValueError(f"ACS {self.acs} does not fit the {ny}x{nz} grid")
        ys, zs = acs_bounds(ny, nz, self.acs)
        if not self.bits[ys, zs].all():
            raise ValueError("Every ACS location must be sampled")
        if not self.bits.any():
            raise ValueError("Mask samples nothing")
        return self

    @property
    def dims(self) -> tuple[int, int]:
        return self.bits.shape[0], self.bits.shape[1]

    @property
    def has_acs(self) -> bool:
        return self.acs[0] > 0 and self.acs[1] > 0

    @property
    def sampled(self) -> int:
        return int(self.bits.sum())

    @property
    def achieved_rate(self) -> float:
        ny, nz = self.dims
        return ny * nz / self.sampled

    def acs_bits(self) -> np.ndarray:
        out = np.zeros(self.dims, dtype=bool)
        ys, zs = acs_bounds(*self.dims, self.acs)
        out[ys, zs] = True
        return out
