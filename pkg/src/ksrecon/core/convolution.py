"""Zero-padded 'same' 2D correlation over (batch, channel, y, z) stacks.

Shared by the linear SPIRiT operator (complex taps) and the CNN engine (real taps).
Weights are laid out (out_channels, in_channels, kh, kw); tap (i, j) reads the input at
offset (i - kh // 2, j - kw // 2) from the output location.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ksrecon.errors import ShapeError


def im2col(x: np.ndarray, kh: int, kw: int) -> np.ndarray:
    """(B, C, H, W) -> (B*H*W, C*kh*kw) neighbourhood matrix with zero padding"""
    if kh % 2 == 0 or kw % 2 == 0:
        raise ShapeError(f"Kernel dims must be odd, got {kh}x{kw}")
    b, c, h, w = x.shape
    padded = np.pad(x, ((0, 0), (0, 0), (kh // 2, kh // 2), (kw // 2, kw // 2)))
    windows = sliding_window_view(padded, (kh, kw), axis=(2, 3))
    return windows.transpose(0, 2, 3, 1, 4, 5).reshape(b * h * w, c * kh * kw)


def conv2d_same(x: np.ndarray, weights: np.ndarray, cols: np.ndarray | None = None) -> np.ndarray:
    b, c, h, w = x.shape
    out_ch, in_ch, kh, kw = weights.shape
    if in_ch != c:
        raise ShapeError(f"Input has {c} channels, weights expect {in_ch}")
    if cols is None:
        cols = im2col(x, kh, kw)
    out = cols @ weights.reshape(out_ch, -1).T
    return out.reshape(b, h, w, out_ch).transpose(0, 3, 1, 2)


def flip_transpose(weights: np.ndarray) -> np.ndarray:
    """Weights of the adjoint correlation: swap in/out channels, rotate taps by 180 degrees"""
    return np.ascontiguousarray(weights.transpose(1, 0, 2, 3)[:, :, ::-1, ::-1])


def conv2d_same_adjoint(grad_out: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Exact adjoint (real) / Hermitian adjoint (complex) of conv2d_same with respect to x"""
    return conv2d_same(grad_out, np.conj(flip_transpose(weights)))


def conv2d_weight_grad(grad_out: np.ndarray, cols: np.ndarray, kernel_shape: tuple) -> np.ndarray:
    out_ch = grad_out.shape[1]
    g = grad_out.transpose(0, 2, 3, 1).reshape(-1, out_ch)
    return (g.T @ cols).reshape((out_ch,) + tuple(kernel_shape))


def real_weights(taps: np.ndarray) -> np.ndarray:
    """Real (2 out, 2 in, kh, kw) weights acting on [Re; Im] stacks as complex ``taps`` act on complex data"""
    taps = np.asarray(taps)
    re, im = taps.real, taps.imag
    top = np.concatenate([re, -im], axis=1)
    bottom = np.concatenate([im, re], axis=1)
    return np.ascontiguousarray(np.concatenate([top, bottom], axis=0), dtype=np.float64)
