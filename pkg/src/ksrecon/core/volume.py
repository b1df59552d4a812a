from __future__ import annotations

import math
from enum import Enum
from typing import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ksrecon.errors import DomainMismatchError, ShapeError


class Domain(str, Enum):
    KSPACE = "kspace"
    HYBRID = "hybrid"
    IMAGE = "image"


def _frozen_complex(value, ndim: int) -> np.ndarray:
    arr = np.asarray(value, dtype=np.complex128)
    if arr.ndim != ndim:
        raise ShapeError(f"Expected a {ndim}-D complex array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("Samples must be finite (no NaN/Inf)")
    # views of an already read-only array are shared, anything writable is copied
    if arr.flags.writeable:
        arr = arr.copy()
        arr.flags.writeable = False
    return arr


class ComplexVolume(BaseModel):
    """Multi-coil complex 3D samples laid out (coil, x, y, z), z fastest"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    domain: Domain
    data: np.ndarray

    @field_validator("data", mode="before")
    @classmethod
    def _check_data(cls, v):
        return _frozen_complex(v, ndim=4)

    @property
    def coils(self) -> int:
        return self.data.shape[0]

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape[1], self.data.shape[2], self.data.shape[3]

    def require(self, domain: Domain, operation: str) -> None:
        if self.domain != domain:
            raise DomainMismatchError(domain.value, self.domain.value, operation)

    def slice_at(self, x_index: int) -> HybridSlice:
        if self.domain == Domain.KSPACE:
            raise DomainMismatchError("hybrid|image", self.domain.value, "slice_at")
        return HybridSlice(domain=self.domain, x_index=x_index, data=self.data[:, x_index])

    def slices(self) -> list[HybridSlice]:
        return [self.slice_at(x) for x in range(self.dims[0])]

    @classmethod
    def from_slices(cls, slices: Sequence[HybridSlice]) -> ComplexVolume:
        if not slices:
            raise ShapeError("Cannot assemble a volume from zero slices")
        ordered = sorted(slices, key=lambda s: s.x_index)
        if [s.x_index for s in ordered] != list(range(len(ordered))):
            raise ShapeError("Slices must cover x indices 0..nx-1 exactly once")
        domains = {s.domain for s in ordered}
        if len(domains) != 1:
            raise DomainMismatchError(ordered[0].domain.value, "mixed", "from_slices")
        return cls(domain=ordered[0].domain, data=np.stack([s.data for s in ordered], axis=1))

    def with_data(self, data: np.ndarray, domain: Domain | None = None) -> ComplexVolume:
        return ComplexVolume(domain=domain or self.domain, data=data)


class HybridSlice(BaseModel):
    """One readout position of a hybrid-space volume: (coil, y, z) samples"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    domain: Domain = Domain.HYBRID
    x_index: int = Field(default=0, ge=0)
    data: np.ndarray

    @field_validator("data", mode="before")
    @classmethod
    def _check_data(cls, v):
        return _frozen_complex(v, ndim=3)

    @model_validator(mode="after")
    def _check_domain(self):
        if self.domain == Domain.KSPACE:
            raise ValueError("A HybridSlice is either in the hybrid or the image domain")
        return self

    @property
    def coils(self) -> int:
        return self.data.shape[0]

    @property
    def dims(self) -> tuple[int, int]:
        return self.data.shape[1], self.data.shape[2]

    def require(self, domain: Domain, operation: str) -> None:
        if self.domain != domain:
            raise DomainMismatchError(domain.value, self.domain.value, operation)

    def with_data(self, data: np.ndarray, domain: Domain | None = None) -> HybridSlice:
        return HybridSlice(domain=domain or self.domain, x_index=self.x_index, data=data)


class NormScale(BaseModel):
    model_config = ConfigDict(frozen=True)

    scale: float = Field(gt=0)

    @field_validator("scale")
    @classmethod
    def _finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("scale must be finite")
        return v
