"""
Finite-difference validation of the manual backward passes.
"""

import logging
from typing import Callable, Dict, Optional

import numpy as np

from .blocks import SlotBlock
from .functional import backward, forward
from .instance import OpInstance

logger = logging.getLogger(__name__)

# Absolute tolerance folded into the relative error: an entry with gradient
# magnitude g passes threshold t when |analytic - numeric| <= t * (g + GRAD_ATOL).
# Sized to the central-difference roundoff at eps=1e-5
GRAD_ATOL = 1e-5


class NonFiniteGradientError(FloatingPointError):
    """Raised when an analytic gradient contains NaN or infinity."""


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Max over entries of |analytic - numeric| / (max(|analytic|, |numeric|) + GRAD_ATOL)."""
    denom = np.maximum(np.abs(analytic), np.abs(numeric)) + GRAD_ATOL
    return float(np.max(np.abs(analytic - numeric) / denom)) if analytic.size else 0.0


def _numeric_grad(loss: Callable[[], float], target: np.ndarray, eps: float) -> np.ndarray:
    """Central differences of loss() w.r.t. every entry of `target`, perturbed in place."""
    grad = np.zeros_like(target)
    for idx in np.ndindex(target.shape):
        orig = target[idx]
        target[idx] = orig + eps
        up = loss()
        target[idx] = orig - eps
        down = loss()
        target[idx] = orig
        grad[idx] = (up - down) / (2.0 * eps)
    return grad


def _compare(loss, params: Dict[str, np.ndarray], analytic: Dict[str, np.ndarray], eps: float) -> float:
    for name, g in analytic.items():
        if g is not None and not np.all(np.isfinite(g)):
            raise NonFiniteGradientError(f"Non-finite analytic gradient for '{name}'")
    worst = 0.0
    for name, target in params.items():
        err = relative_error(analytic[name], _numeric_grad(loss, target, eps))
        logger.debug(f"grad_check {name}: max rel error {err:.3e}")
        worst = max(worst, err)
    return worst


def _validate_eps(eps: float) -> None:
    if not 1e-7 <= eps <= 1e-3:
        raise ValueError(f"eps must lie in [1e-7, 1e-3], got {eps}")


def grad_check(op: OpInstance, x: np.ndarray, eps: float = 1e-5, seed: int = 0) -> float:
    """
    Compare analytic gradients of all weights and of the input against
    central finite differences of sum(G * op(x)) for a random G.

    Token inputs (embedding) are not differentiated.

    Returns:
        Maximum relative error over every checked entry

    Raises:
        NonFiniteGradientError: If an analytic gradient is not finite
    """
    _validate_eps(eps)
    differentiable_input = op.kind != "embedding"
    if differentiable_input:
        x = np.array(x, dtype=np.float64, copy=True)

    cache: dict = {}
    y = forward(op, x, cache=cache)
    upstream = np.random.default_rng(seed).standard_normal(y.shape)
    dx, grads = backward(op, upstream, cache)

    def loss() -> float:
        return float(np.sum(upstream * forward(op, x)))

    params = dict(op.weights)
    analytic = dict(grads)
    if differentiable_input:
        params["input"] = x
        analytic["input"] = dx
    return _compare(loss, params, analytic, eps)


def grad_check_block(block: SlotBlock, x: np.ndarray, eps: float = 1e-5, seed: int = 0) -> float:
    """grad_check for a residual slot block (all stages, norm and input)."""
    _validate_eps(eps)
    x = np.array(x, dtype=np.float64, copy=True)
    cache: dict = {}
    y = block.forward(x, cache=cache)
    upstream = np.random.default_rng(seed).standard_normal(y.shape)
    dx, grads = block.backward(upstream, cache)

    def loss() -> float:
        return float(np.sum(upstream * block.forward(x)))

    params = dict(block.weights)
    params["input"] = x
    grads["input"] = dx
    return _compare(loss, params, grads, eps)
