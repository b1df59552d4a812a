from enum import Enum
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ksrecon.scnn.models import MaskMode


class Method(str, Enum):
    SPIRIT = "spirit"
    L1SPIRIT = "l1spirit"
    SRAKI = "sraki"


DEFAULT_ITERS = {Method.SPIRIT: 50, Method.L1SPIRIT: 15, Method.SRAKI: 50}


class ReconConfig(BaseModel):
    """Hyperparameters of one reconstruction; ``iters`` defaults per method when omitted.

    ``solver`` picks the sRAKI reconstruction descent: nonlinear conjugate gradients, or Adam with
    ``lr_recon`` as a step relative to the local k-space amplitude.
    """

    model_config = ConfigDict(frozen=True)

    method: Method = Method.SRAKI
    iters: int = Field(default=50, ge=1)
    lr_recon: float = Field(default=2.0, gt=0)
    lr_calib: float = Field(default=0.01, gt=0)
    calib_iters: int = Field(default=1000, ge=1)
    kernel_size: int = Field(default=5, ge=3)
    thresh_frac: float = Field(default=0.0005, ge=0)
    tikhonov: float | None = Field(default=None, ge=0)
    dc_mode: Literal["strict", "soft"] = "strict"
    beta: float | None = None
    seed: int = 0
    per_slice_networks: bool = False
    mask_mode: MaskMode = "checkerboard"
    linear_branch: bool = True
    solver: Literal["cg", "adam"] = "cg"

    @model_validator(mode="before")
    @classmethod
    def _method_defaults(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("iters") is None:
            data = {k: v for k, v in data.items() if k != "iters"}
            data["iters"] = DEFAULT_ITERS[Method(data.get("method", Method.SRAKI))]
        return data

    @model_validator(mode="after")
    def _check(self):
        if self.kernel_size % 2 == 0:
            raise ValueError(f"kernel_size must be odd, got {self.kernel_size}")
        if self.dc_mode == "soft" and (self.beta is None or self.beta <= 0):
            raise ValueError("Soft data consistency needs beta > 0")
        return self
