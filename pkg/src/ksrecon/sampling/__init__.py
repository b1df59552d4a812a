from ksrecon.sampling.models import SamplingMask, acs_bounds
from ksrecon.sampling.operators import apply_mask, extract_acs
from ksrecon.sampling.poisson import gen_poisson_mask

__all__ = ["SamplingMask", "acs_bounds", "apply_mask", "extract_acs", "gen_poisson_mask"]
