"""
Dense forward and backward kernels on 2-D float64 arrays (rows = sequence
positions, columns = channels).

Every forward takes an optional `cache` dict that receives the intermediates
its backward needs, and an optional MacCounter. Convolutions use "same" zero
padding and stride 1.
"""

import logging
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .counter import MacCounter, matmul
from .instance import KernelConfigError, KernelShapeError, OpInstance

logger = logging.getLogger(__name__)

Grads = Dict[str, np.ndarray]


def _check_input(x: np.ndarray, width: int, what: str) -> None:
    if x.ndim != 2 or x.shape[1] != width:
        raise KernelShapeError(f"{what} expects input of shape (L, {width}), got {x.shape}")


# Primitive layers on raw arrays

def _linear(x, w, b, counter):
    y = matmul(x, w, counter)
    return y + b if b is not None else y


def _linear_back(dy, x, w, has_bias):
    grads = {"weight": x.T @ dy}
    if has_bias:
        grads["bias"] = dy.sum(axis=0)
    return dy @ w.T, grads


def _pad(x: np.ndarray, k: int) -> np.ndarray:
    p = (k - 1) // 2
    return np.pad(x, ((p, p), (0, 0)))


def _conv(x, w, b, counter):
    """Dense conv: w is (K, I, O); im2col then one matmul."""
    k, i, o = w.shape
    cols = sliding_window_view(_pad(x, k), k, axis=0)           # (L, I, K)
    cols = np.ascontiguousarray(cols.transpose(0, 2, 1)).reshape(x.shape[0], k * i)
    y = matmul(cols, w.reshape(k * i, o), counter)
    if b is not None:
        y = y + b
    return y, cols


def _conv_back(dy, cols, w, has_bias):
    k, i, o = w.shape
    length = dy.shape[0]
    grads = {"weight": (cols.T @ dy).reshape(k, i, o)}
    if has_bias:
        grads["bias"] = dy.sum(axis=0)
    dcols = (dy @ w.reshape(k * i, o).T).reshape(length, k, i)
    dxp = np.zeros((length + k - 1, i))
    for t in range(k):
        dxp[t:t + length] += dcols[:, t, :]
    p = (k - 1) // 2
    return dxp[p:p + length], grads


def _depthwise(x, w, counter):
    """Per-channel conv: w is (K, I)."""
    k = w.shape[0]
    length = x.shape[0]
    xp = _pad(x, k)
    y = np.zeros_like(x)
    for t in range(k):
        y += xp[t:t + length] * w[t]
    if counter is not None:
        counter.add(length * k * x.shape[1])
    return y, xp


def _depthwise_back(dy, xp, w):
    k = w.shape[0]
    length = dy.shape[0]
    dw = np.empty_like(w)
    dxp = np.zeros_like(xp)
    for t in range(k):
        dw[t] = (xp[t:t + length] * dy).sum(axis=0)
        dxp[t:t + length] += dy * w[t]
    p = (k - 1) // 2
    return dxp[p:p + length], dw


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


# Operation-level kernels

def linear_forward(x, op: OpInstance, counter=None, cache=None):
    _check_input(x, op.dims.input, "Linear")
    if cache is not None:
        cache["x"] = x
    return _linear(x, op.weights["weight"], op.weights.get("bias"), counter)


def linear_backward(dy, op: OpInstance, cache) -> Tuple[np.ndarray, Grads]:
    return _linear_back(dy, cache["x"], op.weights["weight"], "bias" in op.weights)


def conv1d_forward(x, op: OpInstance, counter=None, cache=None):
    _check_input(x, op.dims.input, "Conv1d")
    y, cols = _conv(x, op.weights["weight"], op.weights.get("bias"), counter)
    if cache is not None:
        cache["cols"] = cols
    return y


def conv1d_backward(dy, op: OpInstance, cache):
    return _conv_back(dy, cache["cols"], op.weights["weight"], "bias" in op.weights)


def sepconv1d_forward(x, op: OpInstance, counter=None, cache=None):
    """Depthwise conv per channel, then pointwise (1x1) projection I -> O."""
    _check_input(x, op.dims.input, "SepConv")
    h, xp = _depthwise(x, op.weights["depthwise"], counter)
    y = _linear(h, op.weights["pointwise"], op.weights.get("bias"), counter)
    if cache is not None:
        cache["xp"] = xp
        cache["h"] = h
    return y


def sepconv1d_backward(dy, op: OpInstance, cache):
    dh, pw_grads = _linear_back(dy, cache["h"], op.weights["pointwise"], "bias" in op.weights)
    dx, ddw = _depthwise_back(dh, cache["xp"], op.weights["depthwise"])
    grads = {"depthwise": ddw, "pointwise": pw_grads["weight"]}
    if "bias" in pw_grads:
        grads["bias"] = pw_grads["bias"]
    return dx, grads


def mhsa_forward(x, op: OpInstance, counter=None, cache=None):
    """
    Multi-head self-attention without a causal mask.

    Scores are scaled by 1/sqrt(d/h). The attention weights are left in
    cache["attn"] with shape (h, L, L).
    """
    d, h = op.dims.input, op.dims.heads
    _check_input(x, d, "MHSA")
    if h < 1 or d % h != 0:
        raise KernelConfigError(f"MHSA heads {h} must divide hidden size {d}")
    w = op.weights
    length, dh = x.shape[0], d // h

    def split(t):
        return t.reshape(length, h, dh).transpose(1, 0, 2)

    q = split(_linear(x, w["wq"], w.get("bq"), counter))
    k = split(_linear(x, w["wk"], w.get("bk"), counter))
    v = split(_linear(x, w["wv"], w.get("bv"), counter))
    scale = 1.0 / np.sqrt(dh)
    attn = _softmax(matmul(q, k.transpose(0, 2, 1), counter) * scale)
    ctx = matmul(attn, v, counter).transpose(1, 0, 2).reshape(length, d)
    y = _linear(ctx, w["wo"], w.get("bo"), counter)
    if cache is not None:
        cache.update(x=x, q=q, k=k, v=v, attn=attn, ctx=ctx, scale=scale)
    return y


def mhsa_backward(dy, op: OpInstance, cache):
    w = op.weights
    bias = "bo" in w
    x, q, k, v, attn, ctx = (cache[n] for n in ("x", "q", "k", "v", "attn", "ctx"))
    h, length, dh = q.shape
    grads: Grads = {}

    dctx, g = _linear_back(dy, ctx, w["wo"], bias)
    grads["wo"] = g["weight"]
    if bias:
        grads["bo"] = g["bias"]

    dctx = dctx.reshape(length, h, dh).transpose(1, 0, 2)
    dattn = dctx @ v.transpose(0, 2, 1)
    dv = attn.transpose(0, 2, 1) @ dctx
    dscores = attn * (dattn - (dattn * attn).sum(axis=-1, keepdims=True)) * cache["scale"]
    dq = dscores @ k
    dk = dscores.transpose(0, 2, 1) @ q

    dx = np.zeros_like(x)
    for proj, dt in (("q", dq), ("k", dk), ("v", dv)):
        dt = dt.transpose(1, 0, 2).reshape(length, h * dh)
        dxp, g = _linear_back(dt, x, w[f"w{proj}"], bias)
        dx += dxp
        grads[f"w{proj}"] = g["weight"]
        if bias:
            grads[f"b{proj}"] = g["bias"]
    return dx, grads


def ffn_forward(x, op: OpInstance, counter=None, cache=None):
    """Conv1d(d -> f, k_f) -> ReLU -> Linear(f -> d)."""
    _check_input(x, op.dims.input, "FFN")
    w = op.weights
    pre, cols = _conv(x, w["w1"], w.get("b1"), counter)
    act = np.maximum(pre, 0.0)
    y = _linear(act, w["w2"], w.get("b2"), counter)
    if cache is not None:
        cache.update(cols=cols, pre=pre, act=act)
    return y


def ffn_backward(dy, op: OpInstance, cache):
    w = op.weights
    bias = "b2" in w
    dact, g2 = _linear_back(dy, cache["act"], w["w2"], bias)
    dpre = dact * (cache["pre"] > 0)
    dx, g1 = _conv_back(dpre, cache["cols"], w["w1"], bias)
    grads = {"w1": g1["weight"], "w2": g2["weight"]}
    if bias:
        grads["b1"] = g1["bias"]
        grads["b2"] = g2["bias"]
    return dx, grads


def layernorm_forward(x, op: OpInstance, counter=None, cache=None):
    """Per-row normalization followed by an affine gain/shift; costs no MACs."""
    _check_input(x, op.dims.input, "LayerNorm")
    mu = x.mean(axis=1, keepdims=True)
    var = x.var(axis=1, keepdims=True)
    inv = 1.0 / np.sqrt(var + op.dims.eps)
    xhat = (x - mu) * inv
    if cache is not None:
        cache.update(xhat=xhat, inv=inv)
    return xhat * op.weights["gain"] + op.weights["shift"]


def layernorm_backward(dy, op: OpInstance, cache):
    xhat, inv = cache["xhat"], cache["inv"]
    n = xhat.shape[1]
    grads = {"gain": (dy * xhat).sum(axis=0), "shift": dy.sum(axis=0)}
    dxhat = dy * op.weights["gain"]
    dx = inv / n * (
        n * dxhat
        - dxhat.sum(axis=1, keepdims=True)
        - xhat * (dxhat * xhat).sum(axis=1, keepdims=True)
    )
    return dx, grads


def embedding_forward(tokens, op: OpInstance, counter=None, cache=None):
    tokens = np.asarray(tokens, dtype=np.int64)
    if tokens.ndim != 1 or (tokens.size and (tokens.min() < 0 or tokens.max() >= op.dims.input)):
        raise KernelShapeError(f"Embedding expects 1-D tokens in [0, {op.dims.input}), got {tokens}")
    if cache is not None:
        cache["tokens"] = tokens
    return op.weights["table"][tokens]


def embedding_backward(dy, op: OpInstance, cache):
    dtable = np.zeros_like(op.weights["table"])
    np.add.at(dtable, cache["tokens"], dy)
    return None, {"table": dtable}


def length_regulate(h: np.ndarray, durations: Sequence[int]) -> np.ndarray:
    """
    Repeat row i of h durations[i] times, in order.

    Raises:
        KernelShapeError: If durations do not match the rows of h
        ValueError: If durations are negative or all zero
    """
    durations = np.asarray(durations, dtype=np.int64)
    if h.ndim != 2 or durations.shape != (h.shape[0],):
        raise KernelShapeError(f"Need one duration per row: h {h.shape}, durations {durations.shape}")
    if (durations < 0).any():
        raise ValueError("Durations must be non-negative")
    if durations.sum() < 1:
        raise ValueError("Durations sum to zero; nothing to expand")
    return np.repeat(h, durations, axis=0)


def length_regulate_backward(dy: np.ndarray, durations: Sequence[int]) -> np.ndarray:
    durations = np.asarray(durations, dtype=np.int64)
    source = np.repeat(np.arange(durations.shape[0]), durations)
    dh = np.zeros((durations.shape[0], dy.shape[1]))
    np.add.at(dh, source, dy)
    return dh


def length_reg_forward(x, op: OpInstance, counter=None, cache=None):
    return length_regulate(x, op.dims.durations)


def length_reg_backward(dy, op: OpInstance, cache):
    return length_regulate_backward(dy, op.dims.durations), {}


_FORWARD: Dict[str, Callable] = {
    "linear": linear_forward,
    "conv1d": conv1d_forward,
    "sep": sepconv1d_forward,
    "sepconv1d": sepconv1d_forward,
    "mhsa": mhsa_forward,
    "ffn": ffn_forward,
    "layernorm": layernorm_forward,
    "embedding": embedding_forward,
    "length_reg": length_reg_forward,
}

_BACKWARD: Dict[str, Callable] = {
    "linear": linear_backward,
    "conv1d": conv1d_backward,
    "sep": sepconv1d_backward,
    "sepconv1d": sepconv1d_backward,
    "mhsa": mhsa_backward,
    "ffn": ffn_backward,
    "layernorm": layernorm_backward,
    "embedding": embedding_backward,
    "length_reg": length_reg_backward,
}


def forward(op: OpInstance, x: np.ndarray, counter: Optional[MacCounter] = None,
            cache: Optional[dict] = None) -> np.ndarray:
    """Run the forward kernel matching `op`."""
    return _FORWARD[op.kind](x, op, counter, cache)


def backward(op: OpInstance, dy: np.ndarray, cache: dict) -> Tuple[Optional[np.ndarray], Grads]:
    """Gradient of the input (None for token inputs) and of every weight of `op`."""
    return _BACKWARD[op.kind](dy, op, cache)


def sinusoidal_positions(length: int, d: int) -> np.ndarray:
    """Parameter-free sinusoidal position table of shape (length, d)."""
    pos = np.arange(length)[:, None]
    rate = np.power(10000.0, -(2 * (np.arange(d) // 2)) / max(d, 1))
    angles = pos * rate[None, :]
    table = np.zeros((length, d))
    table[:, 0::2] = np.sin(angles[:, 0::2])
    table[:, 1::2] = np.cos(angles[:, 1::2])
    return table
