import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

Vec3 = tuple[float, float, float]


class EllipsoidSpec(BaseModel):
    center: Vec3
    semi_axes: Vec3
    intensity: float = Field(ge=0.0, le=1.0)

    @field_validator("semi_axes")
    @classmethod
    def _positive(cls, v: Vec3) -> Vec3:
        if min(v) <= 0:
            raise ValueError(f"Semi-axes must be positive, got {v}")
        return v


class VesselSpec(BaseModel):
    """Bright tube around a polyline centreline; radius and coordinates in voxels"""

    points: list[Vec3] = Field(min_length=2)
    radius: float = Field(default=3.0, ge=1.0)
    peak: float = Field(default=1.0, ge=0.0, le=1.0)


class PhantomSpec(BaseModel):
    dims: tuple[int, int, int] = (64, 64, 32)
    ellipsoids: list[EllipsoidSpec] = Field(default_factory=list)
    vessel: VesselSpec | None = None
    seed: int = 0

    @field_validator("dims")
    @classmethod
    def _dims(cls, v: tuple[int, int, int]) -> tuple[int, int, int]:
        if min(v) < 1:
            raise ValueError(f"Phantom dims must be positive, got {v}")
        return v


class VesselProbe(BaseModel):
    """A centreline point with a unit direction perpendicular to the vessel"""

    center: Vec3
    direction: Vec3


class CoilMaps(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    maps: np.ndarray

    @field_validator("maps", mode="before")
    @classmethod
    def _freeze(cls, v):
        arr = np.asarray(v, dtype=np.complex128)
        if arr.ndim != 4:
            raise ValueError(f"Coil maps are (nc, nx, ny, nz), got shape {arr.shape}")
        if arr.flags.writeable:
            arr = arr.copy()
            arr.flags.writeable = False
        return arr

    @property
    def coils(self) -> int:
        return self.maps.shape[0]

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.maps.shape[1], self.maps.shape[2], self.maps.shape[3]
