"""Binary kernel (``.ker``) and network (``.net``) files.

Both use ASCII ``key=value`` header lines, a blank line, then little-endian float64 values:
complex kernel taps interleaved (real, imag), network taps layer by layer followed by the
optional linear branch (declared by a ``linear=<k>`` line).
"""

from pathlib import Path

import numpy as np

from common.utils import get_flow_aware_logger
from ksrecon.errors import FileFormatError
from ksrecon.scnn.models import Activation, LayerSpec, NetParams
from ksrecon.spirit.kernels import SpiritKernelSet

logger = get_flow_aware_logger("ksrecon.persistence.model")

_SEPARATOR = b"\n\n"


def _split(path: Path) -> tuple[list[tuple[str, str]], bytes]:
    if not path.is_file():
        raise FileFormatError(f"File not found: {path}")
    head, sep, body = path.read_bytes().partition(_SEPARATOR)
    if not sep:
        raise FileFormatError(f"{path}: missing header terminator")
    fields = []
    for line in head.decode("ascii", errors="replace").splitlines():
        key, eq, value = line.partition("=")
        if not eq:
            raise FileFormatError(f"{path}: expected key=value, got '{line}'")
        fields.append((key.strip(), value.strip()))
    return fields, body


def save_kernels(path: str | Path, kernels: SpiritKernelSet) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = f"nc={kernels.coils}\nsize={kernels.kernel_size}".encode("ascii")
    path.write_bytes(header + _SEPARATOR + np.ascontiguousarray(kernels.taps, dtype="<c16").tobytes())
    logger.info(f"Wrote kernel set {path} ({kernels.coils} coils, {kernels.kernel_size}x{kernels.kernel_size})")
    return path


def load_kernels(path: str | Path) -> SpiritKernelSet:
    path = Path(path)
    fields, body = _split(path)
    values = dict(fields)
    try:
        nc, size = int(values["nc"]), int(values["size"])
    except (KeyError, ValueError) as e:
        raise FileFormatError(f"{path}: invalid kernel header ({e})") from e
    expected = nc * nc * size * size * 16
    if len(body) != expected:
        raise FileFormatError(f"{path}: body holds {len(body)} bytes, expected {expected}")
    taps = np.frombuffer(body, dtype="<c16").reshape(nc, nc, size, size)
    try:
        return SpiritKernelSet(taps=taps.astype(np.complex128))
    except ValueError as e:
        raise FileFormatError(f"{path}: {e}") from e


def _render_layer(spec: LayerSpec) -> str:
    kh, kw = spec.kernel
    return ",".join(
        [
            str(spec.in_channels),
            str(spec.out_channels),
            f"{kh}x{kw}",
            spec.activation.value,
            str(int(spec.center_masked)),
            spec.parity,
        ]
    )


def _parse_layer(text: str) -> LayerSpec:
    in_ch, out_ch, kernel, activation, masked, parity = text.split(",")
    kh, kw = kernel.split("x")
    return LayerSpec(
        in_channels=int(in_ch),
        out_channels=int(out_ch),
        kernel=(int(kh), int(kw)),
        activation=Activation(activation),
        center_masked=bool(int(masked)),
        parity=parity,  # type: ignore[arg-type]
    )


def save_network(path: str | Path, params: NetParams, scale: float | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"layer={_render_layer(spec)}" for spec in params.layers]
    arrays = list(params.weights)
    if params.linear is not None:
        lines.append(f"linear={params.linear.shape[-1]}")
        arrays.append(params.linear)
    if scale is not None:
        lines.append(f"scale={scale!r}")
    body = b"".join(np.ascontiguousarray(w, dtype="<f8").tobytes() for w in arrays)
    path.write_bytes("\n".join(lines).encode("ascii") + _SEPARATOR + body)
    logger.info(f"Wrote network {path} ({len(params.layers)} layers)")
    return path


def load_network(path: str | Path) -> tuple[NetParams, float | None]:
    path = Path(path)
    fields, body = _split(path)
    try:
        layers = [_parse_layer(v) for k, v in fields if k == "layer"]
        scale = next((float(v) for k, v in fields if k == "scale"), None)
        linear_size = next((int(v) for k, v in fields if k == "linear"), None)
    except ValueError as e:
        raise FileFormatError(f"{path}: invalid layer header ({e})") from e
    if not layers:
        raise FileFormatError(f"{path}: no layers declared")
    if linear_size is not None and linear_size < 1:
        raise FileFormatError(f"{path}: invalid linear branch size {linear_size}")
    shapes = [spec.weight_shape for spec in layers]
    if linear_size is not None:
        channels = layers[0].in_channels
        shapes.append((channels, channels, linear_size, linear_size))
    sizes = [int(np.prod(shape)) for shape in shapes]
    if len(body) != 8 * sum(sizes):
        raise FileFormatError(f"{path}: body holds {len(body)} bytes, expected {8 * sum(sizes)}")
    flat = np.frombuffer(body, dtype="<f8").astype(np.float64)
    weights, offset = [], 0
    for shape, size in zip(shapes, sizes):
        weights.append(flat[offset : offset + size].reshape(shape))
        offset += size
    linear = weights.pop() if linear_size is not None else None
    try:
        return NetParams(layers=layers, weights=weights, linear=linear), scale
    except ValueError as e:
        raise FileFormatError(f"{path}: {e}") from e
