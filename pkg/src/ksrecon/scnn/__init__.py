from ksrecon.scnn.models import Activation, AdamState, LayerSpec, NetParams, TrainingResult
from ksrecon.scnn.network import (
    architecture,
    backprop,
    net_forward,
    net_forward_cached,
    net_init,
    net_jvp,
    net_vjp,
)
from ksrecon.scnn.optim import adam_init, adam_step, adam_update
from ksrecon.scnn.training import interior_residual, train_self_consistency

__all__ = [
    "Activation",
    "AdamState",
    "LayerSpec",
    "NetParams",
    "TrainingResult",
    "adam_init",
    "adam_step",
    "adam_update",
    "architecture",
    "backprop",
    "interior_residual",
    "net_forward",
    "net_forward_cached",
    "net_init",
    "net_jvp",
    "net_vjp",
    "train_self_consistency",
]
