import numpy as np

from common.utils import get_flow_aware_logger
from ksrecon.metrics.error import nmse
from ksrecon.metrics.sharpness import DEFAULT_HALF_WIDTH, extract_profile, vessel_sharpness
from ksrecon.phantom.generator import vessel_probe
from ksrecon.phantom.models import PhantomSpec

logger = get_flow_aware_logger("ksrecon.metrics.scoring")


def score_volume(
    recon: np.ndarray,
    ref: np.ndarray,
    spec: PhantomSpec | None,
    profile_index: int | None = None,
    half_width: int = DEFAULT_HALF_WIDTH,
    alpha: float = 1.0,
) -> tuple[float, float]:
    """(nmse, vessel sharpness) of a magnitude reconstruction; the profile crosses the phantom vessel"""
    error = nmse(recon, ref)
    if spec is None or spec.vessel is None:
        logger.warning("No vessel geometry available, sharpness reported as 0")
        return error, 0.0
    probe = vessel_probe(spec, profile_index)
    profile = extract_profile(recon, probe.center, probe.direction, half_width)
    return error, vessel_sharpness(profile, alpha)
