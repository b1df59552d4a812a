from ksrecon.sraki.calibration import SelfConsistencyNet, sraki_calibrate
from ksrecon.sraki.config import Method, ReconConfig
from ksrecon.sraki.pipeline import ReconResult, coil_combine, reconstruct
from ksrecon.sraki.recon import self_consistency_loss, sraki_recon_slice

__all__ = [
    "Method",
    "ReconConfig",
    "ReconResult",
    "SelfConsistencyNet",
    "coil_combine",
    "reconstruct",
    "self_consistency_loss",
    "sraki_calibrate",
    "sraki_recon_slice",
]
