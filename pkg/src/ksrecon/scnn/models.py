from enum import Enum
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

Parity = Literal["all", "odd", "even"]
MaskMode = Literal["checkerboard", "center"]


class Activation(str, Enum):
    RELU = "relu"
    LINEAR = "linear"


class LayerSpec(BaseModel):
    """One bias-free 'same' convolution; ``parity`` restricts taps to offsets with (dy + dz) of that parity"""

    model_config = ConfigDict(frozen=True)

    in_channels: int = Field(ge=1)
    out_channels: int = Field(ge=1)
    kernel: tuple[int, int]
    activation: Activation = Activation.RELU
    center_masked: bool = False
    parity: Parity = "all"

    @field_validator("kernel")
    @classmethod
    def _odd(cls, v: tuple[int, int]) -> tuple[int, int]:
        if v[0] < 1 or v[1] < 1 or v[0] % 2 == 0 or v[1] % 2 == 0:
            raise ValueError(f"Kernel dims must be odd and positive, got {v}")
        return v

    @property
    def weight_shape(self) -> tuple[int, int, int, int]:
        return (self.out_channels, self.in_channels) + self.kernel

    def tap_mask(self) -> np.ndarray:
        """(kh, kw) boolean of trainable taps"""
        kh, kw = self.kernel
        dy, dz = np.meshgrid(np.arange(kh) - kh // 2, np.arange(kw) - kw // 2, indexing="ij")
        keep = np.ones((kh, kw), dtype=bool)
        if self.parity == "odd":
            keep &= (dy + dz) % 2 == 1
        elif self.parity == "even":
            keep &= (dy + dz) % 2 == 0
        if self.center_masked:
            keep[kh // 2, kw // 2] = False
        return keep


def _frozen_weights(arrays) -> list[np.ndarray]:
    out = []
    for w in arrays:
        arr = np.asarray(w, dtype=np.float64)
        if arr.flags.writeable:
            arr = arr.copy()
            arr.flags.writeable = False
        out.append(arr)
    return out


class NetParams(BaseModel):
    """Ordered layer weights (out, in, kh, kw) of a bias-free convolutional network.

    ``linear`` is an optional real (2nc, 2nc, k, k) convolution added to the network output. It may
    read other coils at the output location but never the same coil there.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    layers: list[LayerSpec] = Field(min_length=1)
    weights: list[np.ndarray]
    linear: np.ndarray | None = None

    @field_validator("weights", mode="before")
    @classmethod
    def _freeze(cls, v):
        return _frozen_weights(v)

    @field_validator("linear", mode="before")
    @classmethod
    def _freeze_linear(cls, v):
        return None if v is None else _frozen_weights([v])[0]

    @model_validator(mode="after")
    def _check(self):
        if len(self.layers) != len(self.weights):
            raise ValueError(f"{len(self.layers)} layer specs but {len(self.weights)} weight arrays")
        for i, (spec, w) in enumerate(zip(self.layers, self.weights)):
            if w.shape != spec.weight_shape:
                raise ValueError(f"Layer {i}: weights {w.shape}, spec expects {spec.weight_shape}")
            if not np.all(np.isfinite(w)):
                raise ValueError(f"Layer {i}: weights must be finite")
            if np.any(w[:, :, ~spec.tap_mask()] != 0):
                raise ValueError(f"Layer {i}: masked taps must be exactly zero")
            if spec.center_masked and i != 0:
                raise ValueError("Only the first layer may be centre-masked")
        for prev, nxt in zip(self.layers[:-1], self.layers[1:]):
            if prev.out_channels != nxt.in_channels:
                raise ValueError("Consecutive layers disagree on channel counts")
        if self.linear is not None:
            self._check_linear(self.linear)
        return self

    def _check_linear(self, w: np.ndarray) -> None:
        c = self.in_channels
        if c % 2:
            raise ValueError(f"A linear branch needs an even (real-embedded) channel count, got {c}")
        if w.ndim != 4 or w.shape[:2] != (c, c) or w.shape[2] != w.shape[3] or w.shape[2] % 2 == 0:
            raise ValueError(f"Linear branch must be ({c}, {c}, k, k) with odd k, got {w.shape}")
        if self.layers[-1].out_channels != c:
            raise ValueError("A linear branch needs matching input and output channels")
        if not np.all(np.isfinite(w)):
            raise ValueError("Linear branch must be finite")
        h = w.shape[2] // 2
        coil = np.arange(c) % (c // 2)
        if np.any(w[:, :, h, h][coil[:, None] == coil[None, :]] != 0):
            raise ValueError("Linear branch must not read a coil's own sample at the centre")

    @property
    def in_channels(self) -> int:
        return self.layers[0].in_channels

    @property
    def coils(self) -> int:
        return self.in_channels // 2

    def tap_masks(self) -> list[np.ndarray]:
        return [spec.tap_mask() for spec in self.layers]

    def with_weights(self, weights: list[np.ndarray]) -> "NetParams":
        return NetParams(layers=self.layers, weights=weights, linear=self.linear)


class AdamState(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = Field(default=0, ge=0)
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, arrays: list[np.ndarray], **hyper) -> "AdamState":
        return cls(m=[np.zeros_like(a) for a in arrays], v=[np.zeros_like(a) for a in arrays], **hyper)


class TrainingResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    params: NetParams
    losses: list[float]
