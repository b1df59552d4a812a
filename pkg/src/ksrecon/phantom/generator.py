"""Numerical phantom: painted ellipsoids, a raised-cosine vessel and smooth receive-coil maps."""

import math
from pathlib import Path

import numpy as np

from common.utils import get_flow_aware_logger
from ksrecon.core.transforms import fft3
from ksrecon.core.volume import ComplexVolume, Domain
from ksrecon.errors import ConfigurationError, DimensionMismatchError
from ksrecon.phantom.models import CoilMaps, EllipsoidSpec, PhantomSpec, VesselProbe, VesselSpec
from ksrecon.settings import read_flat_config

logger = get_flow_aware_logger("ksrecon.phantom")

# coil lobes live in coordinates scaled by half the largest extent
RING_RADIUS = 1.2
LOBE_WIDTH = 1.0
PHASE_SLOPE = 0.5
PHASE_CROSS = 0.25


def _grid(dims: tuple[int, int, int]) -> np.ndarray:
    """(nx, ny, nz, 3) voxel index coordinates"""
    return np.stack(np.meshgrid(*(np.arange(n, dtype=np.float64) for n in dims), indexing="ij"), axis=-1)


def polyline_distance(coords: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Euclidean distance from each coordinate (..., 3) to the polyline through ``points``"""
    best = np.full(coords.shape[:-1], np.inf)
    for a, b in zip(points[:-1], points[1:]):
        seg = b - a
        length2 = float(seg @ seg)
        if length2 == 0.0:
            t = np.zeros(coords.shape[:-1])
        else:
            t = np.clip((coords - a) @ seg / length2, 0.0, 1.0)
        nearest = a + t[..., None] * seg
        best = np.minimum(best, np.linalg.norm(coords - nearest, axis=-1))
    return best


def raised_cosine(distance: np.ndarray, radius: float, peak: float) -> np.ndarray:
    inside = distance <= radius
    return np.where(inside, peak * 0.5 * (1.0 + np.cos(np.pi * np.minimum(distance, radius) / radius)), 0.0)


def check_vessel_bounds(vessel: VesselSpec, dims: tuple[int, int, int]) -> None:
    pts = np.asarray(vessel.points, dtype=np.float64)
    upper = np.asarray(dims, dtype=np.float64) - 1.0
    if np.any(pts - vessel.radius < 0.0) or np.any(pts + vessel.radius > upper):
        raise ConfigurationError(
            f"Vessel of radius {vessel.radius} leaves the {dims} field of view"
        )


def gen_phantom(spec: PhantomSpec) -> np.ndarray:
    """Real (nx, ny, nz) image; ellipsoids painted in order, vessel combined by maximum"""
    image = np.zeros(spec.dims, dtype=np.float64)
    if not spec.ellipsoids and spec.vessel is None:
        return image
    coords = _grid(spec.dims)
    for ellipsoid in spec.ellipsoids:
        scaled = (coords - np.asarray(ellipsoid.center)) / np.asarray(ellipsoid.semi_axes)
        image[np.sum(scaled**2, axis=-1) <= 1.0] = ellipsoid.intensity
    if spec.vessel is not None:
        check_vessel_bounds(spec.vessel, spec.dims)
        distance = polyline_distance(coords, np.asarray(spec.vessel.points, dtype=np.float64))
        image = np.maximum(image, raised_cosine(distance, spec.vessel.radius, spec.vessel.peak))
    return image


def gen_sensitivities(nc: int, dims: tuple[int, int, int], seed: int = 0) -> CoilMaps:
    """Gaussian lobes on a ring in the y-z plane with low-order polynomial phase, RSS-normalised"""
    if nc < 1:
        raise ConfigurationError(f"Need at least one coil, got {nc}")
    rng = np.random.default_rng(seed)
    half = max(dims) / 2.0
    u = (_grid(dims) - np.asarray([n // 2 for n in dims], dtype=np.float64)) / half

    maps = np.empty((nc,) + tuple(dims), dtype=np.complex128)
    for c in range(nc):
        theta = 2.0 * np.pi * c / nc + rng.uniform(-0.1, 0.1)
        center = np.array([rng.uniform(-0.2, 0.2), RING_RADIUS * np.cos(theta), RING_RADIUS * np.sin(theta)])
        magnitude = np.exp(-np.sum((u - center) ** 2, axis=-1) / (2.0 * LOBE_WIDTH**2))
        slopes = rng.uniform(-PHASE_SLOPE, PHASE_SLOPE, size=3)
        cross = rng.uniform(-PHASE_CROSS, PHASE_CROSS)
        phase = rng.uniform(-np.pi, np.pi) + u @ slopes + cross * u[..., 1] * u[..., 2]
        maps[c] = magnitude * np.exp(1j * phase)

    rss = np.sqrt(np.sum(np.abs(maps) ** 2, axis=0))
    return CoilMaps(maps=maps / rss)


def simulate_kspace(image: np.ndarray, maps: CoilMaps) -> ComplexVolume:
    image = np.asarray(image)
    if image.shape != maps.dims:
        raise DimensionMismatchError(f"Image dims {image.shape} do not match coil maps {maps.dims}")
    return fft3(ComplexVolume(domain=Domain.IMAGE, data=maps.maps * image))


def add_noise(kspace: ComplexVolume, snr_db: float, seed: int = 0) -> ComplexVolume:
    """Circular complex Gaussian noise at the requested signal-to-noise power ratio"""
    if math.isnan(snr_db) or snr_db == -math.inf:
        raise ConfigurationError(f"SNR must be finite or +inf, got {snr_db}")
    if snr_db == math.inf:
        return kspace
    signal_power = float(np.mean(np.abs(kspace.data) ** 2))
    sigma = math.sqrt(signal_power / 10.0 ** (snr_db / 10.0) / 2.0)
    rng = np.random.default_rng(seed)
    shape = kspace.data.shape
    noise = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return kspace.with_data(kspace.data + sigma * noise)


def default_phantom_spec(dims: tuple[int, int, int] = (64, 64, 32), seed: int = 0) -> PhantomSpec:
    """Torso, heart and blood pool ellipsoids plus a curved vessel running along x"""
    nx, ny, nz = dims
    cx, cy, cz = nx / 2.0, ny / 2.0, nz / 2.0
    ellipsoids = [
        EllipsoidSpec(center=(cx, cy, cz), semi_axes=(0.45 * nx, 0.45 * ny, 0.45 * nz), intensity=0.2),
        EllipsoidSpec(
            center=(cx, cy - 0.05 * ny, cz), semi_axes=(0.28 * nx, 0.25 * ny, 0.3 * nz), intensity=0.35
        ),
        EllipsoidSpec(
            center=(cx, cy - 0.08 * ny, cz), semi_axes=(0.12 * nx, 0.1 * ny, 0.15 * nz), intensity=0.5
        ),
    ]
    radius = max(1.0, min(3.0, min(ny, nz) / 8.0))
    x_lo = max(0.15 * nx, radius + 1.0)
    x_hi = min(0.85 * nx, nx - 2.0 - radius)
    points = []
    for t in np.linspace(0.0, 1.0, 7):
        x = x_lo + t * (x_hi - x_lo)
        y = cy + 0.15 * ny + 0.1 * ny * math.sin(math.pi * t)
        z = cz + 0.1 * nz * math.cos(math.pi * t)
        points.append((float(x), float(y), float(z)))
    vessel = VesselSpec(points=points, radius=radius, peak=1.0)
    return PhantomSpec(dims=dims, ellipsoids=ellipsoids, vessel=vessel, seed=seed)


def parse_dims(text: str, ndim: int) -> tuple[int, ...]:
    try:
        dims = tuple(int(v) for v in text.lower().split("x"))
    except ValueError as e:
        raise ConfigurationError(f"Dims must look like 64x64x32, got '{text}'") from e
    if len(dims) != ndim or min(dims) < 1:
        raise ConfigurationError(f"Expected {ndim} positive dims, got '{text}'")
    return dims


def _floats(text: str, count: int, key: str) -> tuple[float, ...]:
    try:
        values = tuple(float(v) for v in text.split(","))
    except ValueError as e:
        raise ConfigurationError(f"{key}: expected numbers, got '{text}'") from e
    if len(values) != count:
        raise ConfigurationError(f"{key}: expected {count} values, got {len(values)}")
    return values


def phantom_spec_from_values(values: dict[str, str]) -> PhantomSpec:
    """Build a spec from flat keys; components not mentioned fall back to the default phantom"""
    dims = parse_dims(values.get("dims", "64x64x32"), 3)
    seed = int(values.get("seed", "0"))
    base = default_phantom_spec(dims, seed)  # type: ignore[arg-type]

    ellipsoid_keys = sorted(
        (k for k in values if k.startswith("ellipsoid.")), key=lambda k: int(k.split(".", 1)[1])
    )
    ellipsoids = base.ellipsoids
    if ellipsoid_keys:
        ellipsoids = []
        for key in ellipsoid_keys:
            v = _floats(values[key], 7, key)
            ellipsoids.append(EllipsoidSpec(center=v[:3], semi_axes=v[3:6], intensity=v[6]))

    vessel = base.vessel
    if values.get("vessel", "").lower() == "none":
        vessel = None
    elif vessel is not None:
        points = vessel.points
        if "vessel.points" in values:
            points = [_floats(p, 3, "vessel.points") for p in values["vessel.points"].split(";") if p]
        vessel = VesselSpec(
            points=points,
            radius=float(values.get("vessel.radius", vessel.radius)),
            peak=float(values.get("vessel.peak", vessel.peak)),
        )
    return PhantomSpec(dims=dims, ellipsoids=ellipsoids, vessel=vessel, seed=seed)  # type: ignore[arg-type]


def load_phantom_spec(path: str | Path) -> PhantomSpec:
    spec = phantom_spec_from_values(read_flat_config(path))
    logger.info(f"Loaded phantom spec {path}: dims {spec.dims}, {len(spec.ellipsoids)} ellipsoid(s)")
    return spec


def vessel_probe(spec: PhantomSpec, index: int | None = None) -> VesselProbe:
    """Centreline vertex (middle one by default) and a direction perpendicular to the vessel.

    The direction stays in the x-slice plane when possible.
    """
    if spec.vessel is None:
        raise ConfigurationError("Phantom spec has no vessel")
    pts = np.asarray(spec.vessel.points, dtype=np.float64)
    if index is None:
        index = len(pts) // 2
    if not -len(pts) <= index < len(pts):
        raise ConfigurationError(f"Vessel has {len(pts)} points, index {index} is out of range")
    index %= len(pts)
    tangent = pts[min(index + 1, len(pts) - 1)] - pts[max(index - 1, 0)]
    tangent /= np.linalg.norm(tangent)
    for axis in (np.array([0.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0])):
        direction = axis - (axis @ tangent) * tangent
        norm = np.linalg.norm(direction)
        if norm > 1e-6:
            break
    direction /= norm
    return VesselProbe(center=tuple(pts[index]), direction=tuple(direction))  # type: ignore[arg-type]
