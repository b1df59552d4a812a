import numpy as np

from ksrecon.errors import DegenerateInputError, DimensionMismatchError


def nmse(recon: np.ndarray, ref: np.ndarray) -> float:
    """||recon - ref||^2 / ||ref||^2 on magnitude volumes"""
    recon = np.asarray(recon, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if recon.shape != ref.shape:
        raise DimensionMismatchError(f"Reconstruction {recon.shape} and reference {ref.shape} differ")
    energy = float(np.sum(ref**2))
    if energy == 0.0:
        raise DegenerateInputError("Reference volume has zero energy")
    return float(np.sum((recon - ref) ** 2)) / energy
