from ksrecon.core.normalization import denormalize, normalize_power
from ksrecon.core.transforms import (
    embed_real,
    fft2_yz,
    fft3,
    fft_x,
    ifft2_yz,
    ifft3,
    ifft_x,
    rss_combine,
    split_complex,
)
from ksrecon.core.volume import ComplexVolume, Domain, HybridSlice, NormScale

__all__ = [
    "ComplexVolume",
    "Domain",
    "HybridSlice",
    "NormScale",
    "denormalize",
    "embed_real",
    "fft2_yz",
    "fft3",
    "fft_x",
    "ifft2_yz",
    "ifft3",
    "ifft_x",
    "normalize_power",
    "rss_combine",
    "split_complex",
]
