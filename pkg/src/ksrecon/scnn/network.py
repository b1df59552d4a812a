"""Forward and backward passes of the bias-free self-consistency network."""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ksrecon.core.convolution import conv2d_same, conv2d_same_adjoint, conv2d_weight_grad, im2col
from ksrecon.errors import NumericError, ShapeError
from ksrecon.scnn.models import Activation, LayerSpec, MaskMode, NetParams

HIDDEN_CHANNELS = (16, 8, 16)
KERNELS = ((5, 5), (3, 3), (3, 3), (5, 5))


def architecture(nc: int, mask_mode: MaskMode = "checkerboard") -> list[LayerSpec]:
    """2nc -> 16 -> 8 -> 16 -> 2nc with ReLU after the first three layers.

    ``checkerboard`` gives the first layer odd-parity taps and the rest even-parity taps, so
    every input-to-output path has an odd total offset and no output reads its own location.
    ``center`` only zeroes the first layer's centre taps.
    """
    if nc < 1:
        raise ShapeError(f"Need at least one coil, got {nc}")
    channels = (2 * nc,) + HIDDEN_CHANNELS + (2 * nc,)
    specs = []
    for i, kernel in enumerate(KERNELS):
        first, last = i == 0, i == len(KERNELS) - 1
        if mask_mode == "checkerboard":
            parity = "odd" if first else "even"
        else:
            parity = "all"
        specs.append(
            LayerSpec(
                in_channels=channels[i],
                out_channels=channels[i + 1],
                kernel=kernel,
                activation=Activation.LINEAR if last else Activation.RELU,
                center_masked=first,
                parity=parity,
            )
        )
    return specs


def net_init(nc: int, seed: int = 0, mask_mode: MaskMode = "checkerboard") -> NetParams:
    """Glorot-uniform taps, masked taps zeroed"""
    rng = np.random.default_rng(seed)
    specs = architecture(nc, mask_mode)
    weights = []
    for spec in specs:
        kh, kw = spec.kernel
        bound = np.sqrt(6.0 / ((spec.in_channels + spec.out_channels) * kh * kw))
        w = rng.uniform(-bound, bound, size=spec.weight_shape)
        weights.append(w * spec.tap_mask())
    return NetParams(layers=specs, weights=weights)


@dataclass
class ForwardCache:
    """Per-layer im2col matrices and pre-activations of one forward pass"""

    cols: list[np.ndarray]
    pre: list[np.ndarray]
    batched: bool


def _as_batch(params: NetParams, x: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    batched = x.ndim == 4
    if x.ndim == 3:
        x = x[None]
    elif x.ndim != 4:
        raise ShapeError(f"Network input must be (C, H, W) or (B, C, H, W), got {x.shape}")
    if x.shape[1] != params.in_channels:
        raise ShapeError(f"Network expects {params.in_channels} channels, got {x.shape[1]}")
    return x, batched


def layers_forward(
    layers: Sequence[LayerSpec],
    weights: Sequence[np.ndarray],
    a: np.ndarray,
    first_cols: np.ndarray | None = None,
) -> tuple[np.ndarray, ForwardCache]:
    """Batched pass through the convolution stack only; keeps the dtype of ``a``"""
    cache = ForwardCache(cols=[], pre=[], batched=True)
    for i, (spec, w) in enumerate(zip(layers, weights)):
        cols = first_cols if i == 0 and first_cols is not None else im2col(a, *spec.kernel)
        z = conv2d_same(a, w, cols=cols)
        cache.cols.append(cols)
        cache.pre.append(z)
        a = np.maximum(z, 0.0) if spec.activation == Activation.RELU else z
    return a, cache


def layers_backward(
    layers: Sequence[LayerSpec],
    weights: Sequence[np.ndarray],
    cache: ForwardCache,
    g: np.ndarray,
    weight_grads: bool = True,
    input_grad: bool = True,
) -> tuple[list[np.ndarray], np.ndarray | None]:
    grads: list[np.ndarray] = []
    for i in reversed(range(len(layers))):
        spec, w = layers[i], weights[i]
        if spec.activation == Activation.RELU:
            g = g * (cache.pre[i] > 0.0)
        if weight_grads:
            grads.append(conv2d_weight_grad(g, cache.cols[i], w.shape[1:]) * spec.tap_mask())
        if i > 0 or input_grad:
            g = conv2d_same_adjoint(g, w)
    grads.reverse()
    return grads, (g if input_grad else None)


def net_forward_cached(params: NetParams, x: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    x, batched = _as_batch(params, x)
    a, cache = layers_forward(params.layers, params.weights, x)
    cache.batched = batched
    if params.linear is not None:
        shared = params.linear.shape[2:] == params.layers[0].kernel
        a = a + conv2d_same(x, params.linear, cols=cache.cols[0] if shared else None)
    return (a if batched else a[0]), cache


def net_forward(params: NetParams, x: np.ndarray) -> np.ndarray:
    return net_forward_cached(params, x)[0]


def net_vjp(
    params: NetParams, cache: ForwardCache, grad_out: np.ndarray, weight_grads: bool = True
) -> tuple[list[np.ndarray], np.ndarray]:
    """Pull ``grad_out`` back through the cached pass; returns (weight grads, input grad).

    The linear branch is fixed, so only the convolution stack gets weight gradients; with
    ``weight_grads=False`` the list is empty.
    """
    g = np.asarray(grad_out, dtype=np.float64)
    if not cache.batched:
        g = g[None]
    grads, grad_in = layers_backward(params.layers, params.weights, cache, g, weight_grads)
    assert grad_in is not None
    if params.linear is not None:
        grad_in = grad_in + conv2d_same_adjoint(g, params.linear)
    return grads, (grad_in if cache.batched else grad_in[0])


def net_jvp(params: NetParams, cache: ForwardCache, direction: np.ndarray) -> np.ndarray:
    """Directional derivative of the network at the cached pass, ReLU gates held fixed.

    The network is bias-free and piecewise linear, so ``net_jvp(params, cache_at(x), x)`` is net(x).
    """
    d, _ = _as_batch(params, direction)
    a = d
    for spec, w, z in zip(params.layers, params.weights, cache.pre):
        a = conv2d_same(a, w)
        if spec.activation == Activation.RELU:
            a = a * (z > 0.0)
    if params.linear is not None:
        a = a + conv2d_same(d, params.linear)
    return a if cache.batched else a[0]


def backprop(
    params: NetParams, x: np.ndarray, target: np.ndarray
) -> tuple[float, list[np.ndarray], np.ndarray]:
    """Mean squared error of net(x) against target, with its weight and input gradients"""
    out, cache = net_forward_cached(params, x)
    target = np.asarray(target, dtype=np.float64)
    if target.shape != out.shape:
        raise ShapeError(f"Target shape {target.shape} does not match output {out.shape}")
    diff = out - target
    loss = float(np.mean(diff**2))
    if not np.isfinite(loss):
        raise NumericError("Non-finite training loss", 0)
    grads, grad_input = net_vjp(params, cache, 2.0 * diff / diff.size)
    return loss, grads, grad_input
