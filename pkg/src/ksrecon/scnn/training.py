from typing import Sequence

import numpy as np

from common.utils import get_flow_aware_logger
from ksrecon.core.convolution import conv2d_same, im2col
from ksrecon.core.transforms import embed_real
from ksrecon.errors import CalibrationError, ShapeError, TrainingError
from ksrecon.scnn.models import AdamState, MaskMode, NetParams, TrainingResult
from ksrecon.scnn.network import layers_backward, layers_forward, net_forward, net_init
from ksrecon.scnn.optim import adam_update

logger = get_flow_aware_logger("ksrecon.scnn.training")

MIN_EXTENT = 5
# below this the linear branch already explains the patches and there is nothing left to learn
MIN_RESIDUAL_RATIO = 1e-12


def stack_patches(acs_patches: Sequence[np.ndarray]) -> np.ndarray:
    """Real-embedded (B, 2nc, wy, wz) batch of complex ACS patches"""
    if not acs_patches:
        raise CalibrationError("No ACS patches to train on")
    shapes = {np.shape(p) for p in acs_patches}
    if len(shapes) != 1:
        raise ShapeError(f"ACS patches must share one shape, got {sorted(shapes)}")
    _, wy, wz = shapes.pop()
    if wy < MIN_EXTENT or wz < MIN_EXTENT:
        raise CalibrationError(f"ACS extent {wy}x{wz} is below {MIN_EXTENT}x{MIN_EXTENT}")
    return np.stack([embed_real(np.asarray(p, dtype=np.complex128)) for p in acs_patches])


def _interior(shape: tuple[int, ...], margin: int) -> tuple[slice, ...]:
    h, w = shape[-2:]
    if h - 2 * margin < 1 or w - 2 * margin < 1:
        raise CalibrationError(f"ACS extent {h}x{w} has no interior for a margin of {margin}")
    return (slice(None), slice(None), slice(margin, h - margin), slice(margin, w - margin))


def interior_residual(params: NetParams, batch: np.ndarray, margin: int = 0) -> float:
    """||x - G(x)||^2 / ||x||^2 over the outputs at least ``margin`` samples inside each patch"""
    keep = _interior(batch.shape, margin)
    r = (batch - net_forward(params, batch))[keep]
    return float(np.sum(r * r) / np.sum(batch[keep] ** 2))


def train_self_consistency(
    acs_patches: Sequence[np.ndarray],
    lr: float = 0.01,
    max_iters: int = 1000,
    seed: int = 0,
    mask_mode: MaskMode = "checkerboard",
    linear: np.ndarray | None = None,
) -> TrainingResult:
    """Full-batch Adam on MSE(G(patch), patch) over every pooled patch.

    With a real ``linear`` branch (2nc, 2nc, k, k) the convolution stack learns what the branch
    leaves unexplained: the loss only counts outputs whose k x k window lies inside the patch, the
    residual target is rescaled to the size of the patches, and the last layer starts at zero.
    Training runs in float32. The returned weights are those of the lowest-loss iteration; the
    loss trace is in data units.
    """
    batch = stack_patches(acs_patches)
    nc = batch.shape[1] // 2
    template = net_init(nc, seed, mask_mode)
    margin = 0 if linear is None else np.shape(linear)[-1] // 2
    keep = _interior(batch.shape, margin)

    weights = [w.astype(np.float32) for w in template.weights]
    target, gain = batch, 1.0
    if linear is not None:
        linear = np.asarray(linear, dtype=np.float64)
        target = batch - conv2d_same(batch, linear)
        scale = float(np.sqrt(np.mean(batch[keep] ** 2)))
        gain = float(np.sqrt(np.mean(target[keep] ** 2))) / scale if scale > 0 else 0.0
        weights[-1] = np.zeros_like(weights[-1])
        if gain <= MIN_RESIDUAL_RATIO:
            logger.info("Linear branch fits the ACS exactly; skipping network training")
            residual = float(np.mean(target[keep] ** 2))
            params = NetParams(layers=template.layers, weights=weights, linear=linear)
            return TrainingResult(params=params, losses=[residual] * max_iters)
        target = target / gain

    x = batch.astype(np.float32)
    t = target[keep].astype(np.float32)
    first_cols = im2col(x, *template.layers[0].kernel)
    masks = template.tap_masks()
    state = AdamState.zeros_like(weights)
    best_loss, best = np.inf, weights
    losses: list[float] = []
    logger.info(
        f"Training self-consistency network: {len(batch)} patch(es) of {batch.shape[2]}x{batch.shape[3]}, "
        f"{nc} coils, {max_iters} iterations{', residual to a linear branch' if linear is not None else ''}"
    )
    for it in range(1, max_iters + 1):
        out, cache = layers_forward(template.layers, weights, x, first_cols)
        diff = out[keep] - t
        loss = float(np.mean(diff * diff, dtype=np.float64))
        if not np.isfinite(loss):
            raise TrainingError("Calibration loss became non-finite", it)
        losses.append(loss * gain**2)
        if loss < best_loss:
            best_loss, best = loss, weights
        grad_out = np.zeros_like(out)
        grad_out[keep] = (2.0 / diff.size) * diff
        grads, _ = layers_backward(template.layers, weights, cache, grad_out, input_grad=False)
        weights, state = adam_update(weights, state, grads, lr)
        weights = [w * m for w, m in zip(weights, masks)]
        if not all(np.all(np.isfinite(w)) for w in weights):
            raise TrainingError("Adam step produced non-finite weights", it)
        if it % 100 == 0:
            logger.debug(f"iteration {it}: loss {losses[-1]:.6e}")

    final = [w.astype(np.float64) for w in best]
    final[-1] = final[-1] * gain
    params = NetParams(layers=template.layers, weights=final, linear=linear)
    logger.info(f"Training finished: loss {losses[0]:.4e} -> {losses[-1]:.4e}, best {best_loss * gain**2:.4e}")
    return TrainingResult(params=params, losses=losses)
