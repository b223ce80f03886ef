"""
Autodiff package for feature-capsnet

This package contains the dense tensor engine the networks run on:
- tensor: Tensor, Tape and the float-width switch
- ops: differentiable primitives (conv2d, matmul, softmax, l2norm, ...)
- gradcheck: central finite-difference checks against tape gradients
"""

from .tensor import Handle, Tape, Tensor, active_tape, default_dtype, precision

__all__ = ["Handle", "Tape", "Tensor", "active_tape", "default_dtype", "precision"]
