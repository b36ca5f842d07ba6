"""Elementwise activations and layer normalization, with hand-written gradients.

Each function comes in a `f(x)` / `f_vjp(x, g)` pair; `f_vjp` maps the
upstream cotangent g to the input cotangent.  layer_norm normalizes over
the last axis with epsilon 1e-5.
"""

import numpy as np

LN_EPS = 1e-5


def sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid_vjp(x, g):
    s = sigmoid(x)
    return g * s * (1.0 - s)


def relu(x):
    return np.maximum(x, 0.0)


def relu_vjp(x, g):
    return g * (x > 0)


def silu(x):
    return x * sigmoid(x)


def silu_vjp(x, g):
    s = sigmoid(x)
    return g * (s + x * s * (1.0 - s))


def softplus(x):
    # numerically stable log(1 + e^x)
    return np.logaddexp(0.0, x)


def softplus_vjp(x, g):
    return g * sigmoid(x)


def layer_norm(x):
    mu = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    return (x - mu) / np.sqrt(var + LN_EPS)


def layer_norm_vjp(x, g):
    n = x.shape[-1]
    mu = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + LN_EPS)
    xhat = (x - mu) * inv
    gm = g.mean(axis=-1, keepdims=True)
    gxm = (g * xhat).mean(axis=-1, keepdims=True)
    return inv * (g - gm - xhat * gxm)


PROCESSORS = {
    "sigmoid": (sigmoid, sigmoid_vjp),
    "relu": (relu, relu_vjp),
    "silu": (silu, silu_vjp),
    "layer_norm": (layer_norm, layer_norm_vjp),
}


def get_processor(name):
    try:
        return PROCESSORS[name]
    except KeyError:
        raise KeyError(f"unknown processor {name!r}; choose from {sorted(PROCESSORS)}") from None
