"""Dense numpy kernels with manual backward passes."""

from .instance import AuxKind, KernelConfigError, KernelShapeError, OpDims, OpInstance, init_op, named_generator
from .counter import MacCounter, matmul
from .functional import (
    backward,
    conv1d_forward,
    embedding_forward,
    ffn_forward,
    forward,
    layernorm_forward,
    length_regulate,
    length_regulate_backward,
    linear_forward,
    mhsa_forward,
    sepconv1d_forward,
    sinusoidal_positions,
)
from .blocks import SlotBlock, build_slot_block
from .gradcheck import NonFiniteGradientError, grad_check, grad_check_block
from .container import load_weights, save_weights

__all__ = [
    'AuxKind', 'KernelConfigError', 'KernelShapeError', 'OpDims', 'OpInstance', 'init_op',
    'named_generator', 'MacCounter', 'matmul', 'backward', 'conv1d_forward',
    'embedding_forward', 'ffn_forward', 'forward', 'layernorm_forward', 'length_regulate',
    'length_regulate_backward', 'linear_forward', 'mhsa_forward', 'sepconv1d_forward',
    'sinusoidal_positions', 'SlotBlock', 'build_slot_block', 'NonFiniteGradientError',
    'grad_check', 'grad_check_block', 'load_weights', 'save_weights',
]
