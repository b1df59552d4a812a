"""``.msk`` files: key=value header lines, a blank line, then one 0/1 byte per (ky, kz), row-major."""

from pathlib import Path

import numpy as np

from common.utils import get_flow_aware_logger
from ksrecon.errors import FileFormatError
from ksrecon.sampling.models import SamplingMask

logger = get_flow_aware_logger("ksrecon.persistence.mask")

_SEPARATOR = b"\n\n"


def save_mask(path: str | Path, mask: SamplingMask) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    ny, nz = mask.dims
    header = "\n".join(
        [
            f"ny={ny}",
            f"nz={nz}",
            f"acs={mask.acs[0]}x{mask.acs[1]}",
            f"rate={mask.target_rate!r}",
            f"seed={mask.seed}",
            f"achieved={mask.achieved_rate!r}",
            f"r_min={mask.r_min!r}",
        ]
    )
    path.write_bytes(header.encode("ascii") + _SEPARATOR + mask.bits.astype(np.uint8).tobytes())
    logger.info(f"Wrote mask {path} ({ny}x{nz}, achieved rate {mask.achieved_rate:.3f})")
    return path


def load_mask(path: str | Path) -> SamplingMask:
    path = Path(path)
    if not path.is_file():
        raise FileFormatError(f"Mask file not found: {path}")
    raw = path.read_bytes()
    head, sep, body = raw.partition(_SEPARATOR)
    if not sep:
        raise FileFormatError(f"{path}: missing header terminator")
    fields: dict[str, str] = {}
    for line in head.decode("ascii", errors="replace").splitlines():
        key, eq, value = line.partition("=")
        if not eq:
            raise FileFormatError(f"{path}: expected key=value, got '{line}'")
        fields[key.strip()] = value.strip()
    try:
        ny, nz = int(fields["ny"]), int(fields["nz"])
        wy, wz = (int(v) for v in fields["acs"].split("x"))
        rate = float(fields["rate"])
        seed = int(fields["seed"])
        r_min = float(fields.get("r_min", "0"))
    except (KeyError, ValueError) as e:
        raise FileFormatError(f"{path}: invalid mask header ({e})") from e
    if len(body) != ny * nz:
        raise FileFormatError(f"{path}: body holds {len(body)} bytes, expected {ny * nz}")
    bits = np.frombuffer(body, dtype=np.uint8)
    if np.any(bits > 1):
        raise FileFormatError(f"{path}: mask bytes must be 0 or 1")
    try:
        return SamplingMask(
            bits=bits.reshape(ny, nz).astype(bool),
            acs=(wy, wz),
            target_rate=rate,
            seed=seed,
            r_min=r_min,
        )
    except ValueError as e:
        raise FileFormatError(f"{path}: {e}") from e
