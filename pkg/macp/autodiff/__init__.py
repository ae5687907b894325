"""Reverse-mode gradients, AdamW and checkpoints."""

from macp.autodiff.tensor import Tensor, Param, Tape, TapeEntry, apply_op, active_tape, backward
from macp.autodiff.optim import OptimState, adamw_step, clip_grad_norm, cosine_lr
from macp.autodiff.gradcheck import grad_check
from macp.autodiff.checkpoint import (
    encode_checkpoint,
    decode_checkpoint,
    save_checkpoint,
    load_checkpoint,
)

__all__ = [
    'Tensor',
    'Param',
    'Tape',
    'TapeEntry',
    'apply_op',
    'active_tape',
    'backward',
    'OptimState',
    'adamw_step',
    'clip_grad_norm',
    'cosine_lr',
    'grad_check',
    'encode_checkpoint',
    'decode_checkpoint',
    'save_checkpoint',
    'load_checkpoint',
]
