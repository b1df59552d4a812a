import numpy as np

from ksrecon.scnn.models import AdamState, NetParams


def adam_update(
    values: list[np.ndarray], state: AdamState, grads: list[np.ndarray], lr: float | np.ndarray
) -> tuple[list[np.ndarray], AdamState]:
    """Bias-corrected Adam on a list of arrays; inputs are left untouched. ``lr`` may be per-entry"""
    t = state.t + 1
    b1, b2 = state.beta1, state.beta2
    m = [b1 * mi + (1.0 - b1) * g for mi, g in zip(state.m, grads)]
    v = [b2 * vi + (1.0 - b2) * g * g for vi, g in zip(state.v, grads)]
    c1, c2 = 1.0 - b1**t, 1.0 - b2**t
    updated = [
        x - lr * (mi / c1) / (np.sqrt(vi / c2) + state.eps) for x, mi, vi in zip(values, m, v)
    ]
    return updated, state.model_copy(update={"m": m, "v": v, "t": t})


def adam_init(params: NetParams) -> AdamState:
    return AdamState.zeros_like(list(params.weights))


def adam_step(
    params: NetParams, state: AdamState, grads: list[np.ndarray], lr: float
) -> tuple[NetParams, AdamState]:
    weights, state = adam_update(list(params.weights), state, grads, lr)
    masked = [w * mask for w, mask in zip(weights, params.tap_masks())]
    return params.with_weights(masked), state
