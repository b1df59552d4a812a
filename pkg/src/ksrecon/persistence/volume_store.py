"""Volume file pairs: a text header ``<name>.hdr`` plus a little-endian float32 body.

Complex volumes use ``<name>.cplx`` (interleaved real, imag); real magnitude volumes use
``<name>.real``. Bodies follow the header's declared layout (coil, x, y, z; z fastest).
"""

from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from common.utils import get_flow_aware_logger
from ksrecon.core.volume import ComplexVolume, Domain
from ksrecon.errors import FileFormatError

logger = get_flow_aware_logger("ksrecon.persistence.volume")

LAYOUT = "c,x,y,z;z-fastest"
_COMPLEX_DTYPE = np.dtype("<c8")
_REAL_DTYPE = np.dtype("<f4")


class VolumeHeader(BaseModel):
    coils: int = Field(ge=1)
    nx: int = Field(ge=1)
    ny: int = Field(ge=1)
    nz: int = Field(ge=1)
    domain: Domain
    layout: str = LAYOUT
    scale: float = 1.0
    kind: Literal["complex", "real"] = "complex"

    @property
    def count(self) -> int:
        return self.coils * self.nx * self.ny * self.nz

    def render(self) -> str:
        lines = [
            f"coils={self.coils}",
            f"nx={self.nx}",
            f"ny={self.ny}",
            f"nz={self.nz}",
            f"domain={self.domain.value}",
            f"layout={self.layout}",
            f"scale={self.scale!r}",
            f"kind={self.kind}",
        ]
        return "\n".join(lines) + "\n"


def _stem(path: str | Path) -> Path:
    path = Path(path)
    return path.with_suffix("") if path.suffix in {".hdr", ".cplx", ".real"} else path


def read_header(path: str | Path) -> VolumeHeader:
    hdr_path = _stem(path).with_suffix(".hdr")
    if not hdr_path.is_file():
        raise FileFormatError(f"Header not found: {hdr_path}")
    fields: dict[str, str] = {}
    for line_no, line in enumerate(hdr_path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise FileFormatError(f"{hdr_path}:{line_no}: expected key=value, got '{line}'")
        fields[key.strip()] = value.strip()
    try:
        header = VolumeHeader.model_validate(fields)
    except ValidationError as e:
        raise FileFormatError(f"Invalid header {hdr_path}: {e}") from e
    if header.layout != LAYOUT:
        raise FileFormatError(f"Unsupported layout '{header.layout}' in {hdr_path}")
    return header


def save_volume(path: str | Path, vol: ComplexVolume, scale: float = 1.0) -> tuple[Path, Path]:
    stem = _stem(path)
    stem.parent.mkdir(parents=True, exist_ok=True)
    nc, (nx, ny, nz) = vol.coils, vol.dims
    header = VolumeHeader(coils=nc, nx=nx, ny=ny, nz=nz, domain=vol.domain, scale=scale)
    hdr_path, body_path = stem.with_suffix(".hdr"), stem.with_suffix(".cplx")
    hdr_path.write_text(header.render())
    np.ascontiguousarray(vol.data, dtype=_COMPLEX_DTYPE).tofile(body_path)
    logger.info(f"Wrote complex volume {body_path} ({nc} coils, {nx}x{ny}x{nz}, {vol.domain.value})")
    return hdr_path, body_path


def load_volume_with_header(path: str | Path) -> tuple[ComplexVolume, VolumeHeader]:
    header = read_header(path)
    if header.kind != "complex":
        raise FileFormatError(f"{path} holds a real volume; use load_real_volume")
    body_path = _stem(path).with_suffix(".cplx")
    data = _read_body(body_path, _COMPLEX_DTYPE, header.count)
    shape = (header.coils, header.nx, header.ny, header.nz)
    return ComplexVolume(domain=header.domain, data=data.astype(np.complex128).reshape(shape)), header


def load_volume(path: str | Path) -> ComplexVolume:
    return load_volume_with_header(path)[0]


def save_real_volume(path: str | Path, volume: np.ndarray, scale: float = 1.0) -> tuple[Path, Path]:
    volume = np.asarray(volume, dtype=np.float64)
    if volume.ndim != 3:
        raise FileFormatError(f"Real volumes are (nx, ny, nz), got shape {volume.shape}")
    stem = _stem(path)
    stem.parent.mkdir(parents=True, exist_ok=True)
    nx, ny, nz = volume.shape
    header = VolumeHeader(
        coils=1, nx=nx, ny=ny, nz=nz, domain=Domain.IMAGE, scale=scale, kind="real"
    )
    hdr_path, body_path = stem.with_suffix(".hdr"), stem.with_suffix(".real")
    hdr_path.write_text(header.render())
    np.ascontiguousarray(volume, dtype=_REAL_DTYPE).tofile(body_path)
    logger.info(f"Wrote real volume {body_path} ({nx}x{ny}x{nz})")
    return hdr_path, body_path


def load_real_volume(path: str | Path) -> np.ndarray:
    header = read_header(path)
    if header.kind != "real":
        raise FileFormatError(f"{path} holds a complex volume; use load_volume")
    data = _read_body(_stem(path).with_suffix(".real"), _REAL_DTYPE, header.count)
    return data.astype(np.float64).reshape(header.nx, header.ny, header.nz)


def _read_body(body_path: Path, dtype: np.dtype, expected: int) -> np.ndarray:
    if not body_path.is_file():
        raise FileFormatError(f"Body file not found: {body_path}")
    size = body_path.stat().st_size
    if size != expected * dtype.itemsize:
        raise FileFormatError(
            f"{body_path} holds {size} bytes, header declares {expected} samples "
            f"({expected * dtype.itemsize} bytes)"
        )
    return np.fromfile(body_path, dtype=dtype)
