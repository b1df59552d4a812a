"""Uniform-density Poisson-disc masks on the integer ky-kz grid.

Darts are thrown over the non-ACS locations in a seeded random order and rejected when
they fall closer than ``r_min`` to an already accepted dart; throwing stops once the sample
budget implied by the target rate is met. ``r_min`` is tuned by bisection to the largest
value whose throw still meets the budget.
"""

import math

import numpy as np

from common.utils import get_flow_aware_logger
from ksrecon.errors import ConfigurationError
from ksrecon.sampling.models import SamplingMask, acs_bounds

logger = get_flow_aware_logger("ksrecon.sampling.poisson")

MAX_BISECTIONS = 40
RATE_TOLERANCE = 0.02


def _disc_offsets(r_min: float) -> np.ndarray:
    reach = max(int(math.ceil(r_min)) - 1, 0)
    dy, dz = np.mgrid[-reach : reach + 1, -reach : reach + 1]
    d2 = dy**2 + dz**2
    keep = (d2 > 0) & (d2 < r_min**2)
    return np.stack([dy[keep], dz[keep]], axis=1)


def _throw(order: np.ndarray, shape: tuple[int, int], r_min: float, budget: int) -> np.ndarray:
    """Accepted candidate coordinates (at most ``budget`` of them) for a given hard-core radius"""
    offsets = _disc_offsets(r_min)
    reach = int(np.abs(offsets).max()) if offsets.size else 0
    occupied = np.zeros((shape[0] + 2 * reach, shape[1] + 2 * reach), dtype=bool)
    accepted: list[int] = []
    for idx in order:
        if len(accepted) == budget:
            break
        y, z = divmod(int(idx), shape[1])
        if offsets.size and occupied[offsets[:, 0] + y + reach, offsets[:, 1] + z + reach].any():
            continue
        occupied[y + reach, z + reach] = True
        accepted.append(int(idx))
    return np.asarray(accepted, dtype=np.int64)


def gen_poisson_mask(
    ny: int, nz: int, rate: float, acs: tuple[int, int] = (40, 10), seed: int = 0
) -> SamplingMask:
    if rate < 1.0:
        raise ConfigurationError(f"Acceleration rate must be >= 1, got {rate}")
    wy, wz = acs
    if not (0 <= wy <= ny and 0 <= wz <= nz):
        raise ConfigurationError(f"ACS {acs} does not fit the {ny}x{nz} grid")

    total = ny * nz
    target = max(int(round(total / rate)), 1)
    acs_mask = np.zeros((ny, nz), dtype=bool)
    ys, zs = acs_bounds(ny, nz, acs)
    acs_mask[ys, zs] = True
    acs_count = int(acs_mask.sum())
    if acs_count > target:
        raise ConfigurationError(
            f"ACS {wy}x{wz} alone holds {acs_count} samples, above the budget of {target} "
            f"for rate {rate} on {ny}x{nz}"
        )

    budget = target - acs_count
    candidates = np.flatnonzero(~acs_mask.ravel())
    order = np.random.default_rng(seed).permutation(candidates)

    def feasible(radius: float) -> bool:
        return len(_throw(order, (ny, nz), radius, budget)) == budget

    lo, hi = 1.0, math.hypot(ny, nz)
    if budget == 0 or feasible(hi):
        lo = hi
    else:
        for _ in range(MAX_BISECTIONS):
            mid = 0.5 * (lo + hi)
            if feasible(mid):
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-3:
                break

    bits = acs_mask.copy()
    bits.ravel()[_throw(order, (ny, nz), lo, budget)] = True
    mask = SamplingMask(bits=bits, acs=(wy, wz), target_rate=rate, seed=seed, r_min=lo if budget else 0.0)

    deviation = abs(mask.achieved_rate - rate) / rate
    if deviation > RATE_TOLERANCE:
        logger.warning(
            f"Achieved rate {mask.achieved_rate:.3f} deviates {100 * deviation:.1f}% from target "
            f"{rate} on the {ny}x{nz} grid"
        )
    logger.info(
        f"Poisson-disc mask {ny}x{nz} rate {rate}: {mask.sampled} samples, "
        f"achieved {mask.achieved_rate:.3f}, r_min {mask.r_min:.3f}"
    )
    return mask
