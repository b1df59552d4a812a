from functools import partial

import numpy as np
from pydantic import BaseModel, ConfigDict

from common.utils import get_flow_aware_logger
from ksrecon.core.convolution import real_weights
from ksrecon.core.normalization import normalize_power
from ksrecon.core.transforms import ifft_x
from ksrecon.core.volume import ComplexVolume, Domain, NormScale
from ksrecon.errors import ConfigurationError
from ksrecon.sampling.models import SamplingMask
from ksrecon.sampling.operators import apply_mask, extract_acs
from ksrecon.scnn.models import NetParams
from ksrecon.scnn.training import train_self_consistency
from ksrecon.spirit.kernels import calibrate_kernels
from ksrecon.sraki.config import ReconConfig

logger = get_flow_aware_logger("ksrecon.sraki.calibration")


class SelfConsistencyNet(BaseModel):
    """Trained network(s) plus the k-space scale they were trained at"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    params: NetParams
    scale: NormScale
    losses: list[float]
    slice_params: list[NetParams] | None = None

    def for_slice(self, x_index: int) -> NetParams:
        if self.slice_params is None:
            return self.params
        return self.slice_params[x_index]


def sraki_calibrate(vol: ComplexVolume, mask: SamplingMask, config: ReconConfig) -> SelfConsistencyNet:
    """normalize (acquired samples only) -> ifft_x -> ACS patches -> linear branch -> train"""
    vol.require(Domain.KSPACE, "sraki_calibrate")
    if not mask.has_acs:
        raise ConfigurationError("sRAKI calibration needs an ACS region")
    normalized, scale = normalize_power(apply_mask(vol, mask), mask)
    patches = extract_acs(ifft_x(normalized), mask)

    linear = None
    if config.linear_branch:
        linear = real_weights(calibrate_kernels(patches, config.kernel_size, config.tikhonov).taps)
    train = partial(
        train_self_consistency,
        lr=config.lr_calib,
        max_iters=config.calib_iters,
        seed=config.seed,
        mask_mode=config.mask_mode,
        linear=linear,
    )

    if config.per_slice_networks:
        results = [train([p]) for p in patches]
        losses = [float(v) for v in np.mean([r.losses for r in results], axis=0)]
        logger.info(
            f"sRAKI calibration done: {len(results)} per-slice networks, mean final loss {losses[-1]:.4e}, "
            f"scale {scale.scale:.4e}"
        )
        return SelfConsistencyNet(
            params=results[0].params,
            scale=scale,
            losses=losses,
            slice_params=[r.params for r in results],
        )

    result = train(patches)
    logger.info(f"sRAKI calibration done: final loss {result.losses[-1]:.4e}, scale {scale.scale:.4e}")
    return SelfConsistencyNet(params=result.params, scale=scale, losses=result.losses)
