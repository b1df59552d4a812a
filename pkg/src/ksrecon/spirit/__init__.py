from ksrecon.spirit.kernels import (
    SpiritKernelSet,
    apply_G_linear,
    apply_G_linear_adjoint,
    calibrate_kernels,
    self_consistency_residual,
)
from ksrecon.spirit.recon import l1spirit_recon, spirit_cg_recon
from ksrecon.spirit.solvers import conjugate_gradient
from ksrecon.spirit.wavelets import WaveletCoeffs, dwt2, idwt2, soft_threshold

__all__ = [
    "SpiritKernelSet",
    "WaveletCoeffs",
    "apply_G_linear",
    "apply_G_linear_adjoint",
    "calibrate_kernels",
    "conjugate_gradient",
    "dwt2",
    "idwt2",
    "l1spirit_recon",
    "self_consistency_residual",
    "soft_threshold",
    "spirit_cg_recon",
]
