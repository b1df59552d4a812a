"""Self-consistency reconstruction of one hybrid slice with the trained network as G."""

import numpy as np
from scipy.ndimage import gaussian_filter

from common.utils import get_flow_aware_logger
from ksrecon.core.transforms import embed_real, split_complex
from ksrecon.core.volume import Domain, HybridSlice
from ksrecon.errors import DimensionMismatchError, DivergenceError
from ksrecon.sampling.models import SamplingMask
from ksrecon.scnn.models import AdamState, NetParams
from ksrecon.scnn.network import ForwardCache, net_forward_cached, net_jvp, net_vjp
from ksrecon.scnn.optim import adam_update
from ksrecon.sraki.config import ReconConfig

logger = get_flow_aware_logger("ksrecon.sraki.recon")

MAX_HALVINGS = 8
# Adam moves an entry by about lr_recon * ADAM_STEP_FRACTION of the local k-space amplitude
ADAM_STEP_FRACTION = 0.01
AMPLITUDE_SIGMA = 2.0


def self_consistency_loss(params: NetParams, v: np.ndarray) -> tuple[float, np.ndarray]:
    """L = ||v - G(v)||^2 on the real embedding and dL/dv = 2r - 2 J_G^T r with r = v - G(v)"""
    out, cache = net_forward_cached(params, v)
    r = v - out
    _, jtr = net_vjp(params, cache, r, weight_grads=False)
    return float(np.sum(r * r)), 2.0 * r - 2.0 * jtr


def amplitude_map(y: np.ndarray, bits: np.ndarray) -> np.ndarray:
    """(ny, nz) RMS amplitude of the acquired samples, spread into the gaps by normalised smoothing"""
    power = np.mean(y * y, axis=0)
    weight = gaussian_filter(bits.astype(np.float64), AMPLITUDE_SIGMA)
    amp = np.sqrt(gaussian_filter(power, AMPLITUDE_SIGMA) / np.maximum(weight, 1e-12))
    peak = float(amp.max())
    if peak == 0.0:
        return np.ones_like(amp)
    return np.maximum(amp, 1e-3 * peak)


class _Objective:
    """||dc||^2 + beta * ||v - G(v)||^2 under soft consistency, ||v - G(v)||^2 under strict"""

    def __init__(self, params: NetParams, y: np.ndarray, bits: np.ndarray, config: ReconConfig):
        self.params = params
        self.y = y
        self.bits = bits
        self.strict = config.dc_mode == "strict"
        self.beta = 1.0 if self.strict else float(config.beta or 0.0)

    def evaluate(self, v: np.ndarray) -> tuple[float, np.ndarray, ForwardCache]:
        out, cache = net_forward_cached(self.params, v)
        r = v - out
        loss = self.beta * float(np.sum(r * r))
        if not self.strict:
            dc = np.where(self.bits, v - self.y, 0.0)
            loss += float(np.sum(dc * dc))
        return loss, r, cache

    def gradient(self, v: np.ndarray, r: np.ndarray, cache: ForwardCache) -> np.ndarray:
        _, jtr = net_vjp(self.params, cache, r, weight_grads=False)
        grad = 2.0 * self.beta * (r - jtr)
        if self.strict:
            grad[:, self.bits] = 0.0
        else:
            grad += 2.0 * np.where(self.bits, v - self.y, 0.0)
        return grad

    def step_length(self, v: np.ndarray, r: np.ndarray, cache: ForwardCache, d: np.ndarray) -> float:
        """Exact minimiser along d of the objective linearised at the current ReLU gates"""
        q = d - net_jvp(self.params, cache, d)
        num = self.beta * float(np.sum(r * q))
        den = self.beta * float(np.sum(q * q))
        if not self.strict:
            dd = np.where(self.bits, d, 0.0)
            num += float(np.sum(np.where(self.bits, v - self.y, 0.0) * dd))
            den += float(np.sum(dd * dd))
        return -num / den if den > 0 else 0.0


def _solve_cg(
    objective: _Objective, v: np.ndarray, iters: int, trace: list[float] | None, x_index: int
) -> np.ndarray:
    """Polak-Ribiere+ conjugate gradients with a backtracked linearised line search.

    Never increases the loss. With a linear G it takes the same steps as CG on the normal equations.
    """
    loss, r, cache = objective.evaluate(v)
    direction: np.ndarray | None = None
    prev_grad: np.ndarray | None = None
    prev_norm = 0.0
    for it in range(1, iters + 1):
        if not np.isfinite(loss):
            raise DivergenceError("Self-consistency loss became non-finite", it, x_index)
        if trace is not None:
            trace.append(loss)
        grad = objective.gradient(v, r, cache)
        norm = float(np.sum(grad * grad))
        if norm == 0.0:
            direction = None
            continue
        if direction is None or prev_grad is None:
            direction = -grad
        else:
            beta = max(0.0, float(np.sum(grad * (grad - prev_grad))) / prev_norm)
            direction = -grad + beta * direction
            if float(np.sum(grad * direction)) >= 0.0:
                direction = -grad
        prev_grad, prev_norm = grad, norm

        step = objective.step_length(v, r, cache, direction)
        for _ in range(MAX_HALVINGS):
            trial = v + step * direction
            trial_loss, trial_r, trial_cache = objective.evaluate(trial)
            if np.isfinite(trial_loss) and trial_loss <= loss:
                v, loss, r, cache = trial, trial_loss, trial_r, trial_cache
                break
            step *= 0.5
        else:
            direction = None
    return v


def _solve_adam(
    objective: _Objective, v: np.ndarray, config: ReconConfig, trace: list[float] | None, x_index: int
) -> np.ndarray:
    """Elementwise Adam with a per-entry rate of lr_recon * ADAM_STEP_FRACTION * local amplitude"""
    lr = config.lr_recon * ADAM_STEP_FRACTION * amplitude_map(objective.y, objective.bits)
    state = AdamState.zeros_like([v])
    for it in range(1, config.iters + 1):
        loss, r, cache = objective.evaluate(v)
        if not np.isfinite(loss):
            raise DivergenceError("Self-consistency loss became non-finite", it, x_index)
        if trace is not None:
            trace.append(loss)
        grad = objective.gradient(v, r, cache)
        (v,), state = adam_update([v], state, [grad], lr)
        if objective.strict:
            v[:, objective.bits] = objective.y[:, objective.bits]
        if not np.all(np.isfinite(v)):
            raise DivergenceError("Reconstruction produced a non-finite value", it, x_index)
    return v


def sraki_recon_slice(
    und_slice: HybridSlice,
    mask: SamplingMask,
    params: NetParams,
    config: ReconConfig,
    trace: list[float] | None = None,
) -> HybridSlice:
    """Minimise the self-consistency loss from the zero-filled slice; data consistency per ``config.dc_mode``.

    The slice must already carry the calibration scale.
    """
    und_slice.require(Domain.HYBRID, "sraki_recon_slice")
    if und_slice.dims != mask.dims:
        raise DimensionMismatchError(f"Slice dims {und_slice.dims} do not match mask {mask.dims}")
    if 2 * und_slice.coils != params.in_channels:
        raise DimensionMismatchError(
            f"Slice has {und_slice.coils} coils, network expects {params.coils}"
        )
    bits = mask.bits
    y = embed_real(np.where(bits, und_slice.data, 0))
    objective = _Objective(params, y, bits, config)
    if config.solver == "adam":
        v = _solve_adam(objective, y.copy(), config, trace, und_slice.x_index)
    else:
        v = _solve_cg(objective, y.copy(), config.iters, trace, und_slice.x_index)

    data = split_complex(v)
    if objective.strict:
        data[:, bits] = und_slice.data[:, bits]
    logger.debug(f"sRAKI slice {und_slice.x_index}: {config.iters} {config.solver} iterations")
    return und_slice.with_data(data)
