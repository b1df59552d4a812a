"""Centred orthonormal Fourier transforms between k-space, hybrid space and image space.

Index ``n // 2`` along every transformed axis holds the zero frequency (and the image
centre), so a delta at the centred coordinate ``k = 0`` maps to a constant ``1/sqrt(n)``.
"""

from typing import Sequence

import numpy as np
import scipy.fft as sfft

from ksrecon.core.volume import ComplexVolume, Domain, HybridSlice
from ksrecon.errors import DomainMismatchError, ShapeError


def centered_ifft(data: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    shifted = sfft.ifftshift(data, axes=axes)
    return sfft.fftshift(sfft.ifftn(shifted, axes=axes, norm="ortho"), axes=axes)


def centered_fft(data: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    shifted = sfft.ifftshift(data, axes=axes)
    return sfft.fftshift(sfft.fftn(shifted, axes=axes, norm="ortho"), axes=axes)


def ifft_x(vol: ComplexVolume) -> ComplexVolume:
    vol.require(Domain.KSPACE, "ifft_x")
    return ComplexVolume(domain=Domain.HYBRID, data=centered_ifft(vol.data, axes=(1,)))


def fft_x(vol: ComplexVolume) -> ComplexVolume:
    vol.require(Domain.HYBRID, "fft_x")
    return ComplexVolume(domain=Domain.KSPACE, data=centered_fft(vol.data, axes=(1,)))


def ifft2_yz(item: HybridSlice) -> HybridSlice:
    item.require(Domain.HYBRID, "ifft2_yz")
    return item.with_data(centered_ifft(item.data, axes=(1, 2)), domain=Domain.IMAGE)


def fft2_yz(item: HybridSlice) -> HybridSlice:
    item.require(Domain.IMAGE, "fft2_yz")
    return item.with_data(centered_fft(item.data, axes=(1, 2)), domain=Domain.HYBRID)


def ifft3(vol: ComplexVolume) -> ComplexVolume:
    vol.require(Domain.KSPACE, "ifft3")
    return ComplexVolume(domain=Domain.IMAGE, data=centered_ifft(vol.data, axes=(1, 2, 3)))


def fft3(vol: ComplexVolume) -> ComplexVolume:
    vol.require(Domain.IMAGE, "fft3")
    return ComplexVolume(domain=Domain.KSPACE, data=centered_fft(vol.data, axes=(1, 2, 3)))


def rss_combine(coil_images: Sequence[HybridSlice] | ComplexVolume) -> np.ndarray:
    """Root-sum-of-squares over coils; returns a real (nx, ny, nz) magnitude volume"""
    if isinstance(coil_images, ComplexVolume):
        coil_images.require(Domain.IMAGE, "rss_combine")
        stacked = coil_images.data
    else:
        if not coil_images:
            raise ShapeError("rss_combine needs at least one slice")
        for item in coil_images:
            if item.domain != Domain.IMAGE:
                raise DomainMismatchError(Domain.IMAGE.value, item.domain.value, "rss_combine")
        ordered = sorted(coil_images, key=lambda s: s.x_index)
        stacked = np.stack([s.data for s in ordered], axis=1)
    return np.sqrt(np.sum(stacked.real**2 + stacked.imag**2, axis=0))


def embed_real(item: HybridSlice | np.ndarray) -> np.ndarray:
    """Stack real parts (channels 0..nc-1) over imaginary parts (nc..2nc-1)"""
    data = item.data if isinstance(item, HybridSlice) else np.asarray(item)
    return np.concatenate([data.real, data.imag], axis=0)


def split_complex(channels: np.ndarray) -> np.ndarray:
    if channels.shape[0] % 2:
        raise ShapeError(f"split_complex needs an even channel count, got {channels.shape[0]}")
    nc = channels.shape[0] // 2
    out = np.empty((nc,) + channels.shape[1:], dtype=np.complex128)
    out.real = channels[:nc]
    out.imag = channels[nc:]
    return out
