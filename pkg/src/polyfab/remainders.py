"""Remainder functions pi: the additive residual path of a layer.

A remainder is bound to an (m, n) shape pair at construction.  `forward`
maps a (B, m) input plus its own parameter vector to a (B, n) output;
`vjp` returns the input cotangent and the parameter cotangent.
"""

import math

import numpy as np

from .activations import get_processor
from .errors import ConfigError
from .tensorops import as_batch


class Remainder:
    kind = None

    def __init__(self, m, n):
        self.m = int(m)
        self.n = int(n)

    @property
    def param_length(self):
        return 0

    def init_params(self, rng):
        return np.zeros(self.param_length)

    def forward(self, X, params):
        raise NotImplementedError

    def vjp(self, X, params, G):
        raise NotImplementedError


class Zero(Remainder):
    kind = "zero"

    def forward(self, X, params):
        X = as_batch(X, self.m)
        return np.zeros((X.shape[0], self.n))

    def vjp(self, X, params, G):
        return np.zeros((np.asarray(G).shape[0], self.m)), np.zeros(0)


class ConstantRemainder(Remainder):
    """Fixed additive vector c, not learnable."""

    kind = "constant"

    def __init__(self, m, n, c):
        super().__init__(m, n)
        self.c = np.broadcast_to(np.asarray(c, dtype=np.float64), (n,)).copy()

    def forward(self, X, params):
        X = as_batch(X, self.m)
        return np.broadcast_to(self.c, (X.shape[0], self.n)).copy()

    def vjp(self, X, params, G):
        return np.zeros((np.asarray(G).shape[0], self.m)), np.zeros(0)


class IdentityRemainder(Remainder):
    """sigma(x); requires m == n."""

    kind = "identity"

    def __init__(self, m, n, activation=None):
        super().__init__(m, n)
        if m != n:
            raise ConfigError(f"identity remainder requires m == n, got {m} and {n}")
        self.activation = None if activation in (None, "none") else activation
        if self.activation:
            get_processor(self.activation)

    def forward(self, X, params):
        X = as_batch(X, self.m)
        if self.activation:
            return get_processor(self.activation)[0](X)
        return X.copy()

    def vjp(self, X, params, G):
        X = as_batch(X, self.m)
        G = np.asarray(G)
        if self.activation:
            return get_processor(self.activation)[1](X, G), np.zeros(0)
        return G.copy(), np.zeros(0)


class LinearRemainder(Remainder):
    """Learnable affine path with an m x n matrix W'.

    placement "post" (default) computes sigma(x W'); "pre" computes
    sigma(x) W', the order used by spline networks' base path.
    """

    kind = "linear"

    def __init__(self, m, n, activation=None, placement="post"):
        super().__init__(m, n)
        self.activation = None if activation in (None, "none") else activation
        if self.activation:
            get_processor(self.activation)
        if placement not in ("pre", "post"):
            raise ConfigError("linear remainder placement must be 'pre' or 'post'")
        self.placement = placement

    @property
    def param_length(self):
        return self.m * self.n

    def init_params(self, rng):
        return rng.normal(0.0, 1.0 / math.sqrt(self.m), size=self.param_length)

    def forward(self, X, params):
        X = as_batch(X, self.m)
        W = np.asarray(params).reshape(self.m, self.n)
        if self.activation and self.placement == "pre":
            return get_processor(self.activation)[0](X) @ W
        pre = X @ W
        if self.activation:
            return get_processor(self.activation)[0](pre)
        return pre

    def vjp(self, X, params, G):
        X = as_batch(X, self.m)
        W = np.asarray(params).reshape(self.m, self.n)
        G = np.asarray(G)
        if self.activation and self.placement == "pre":
            A = get_processor(self.activation)[0](X)
            gA = G @ W.T
            return get_processor(self.activation)[1](X, gA), (A.T @ G).ravel()
        if self.activation:
            pre = X @ W
            G = get_processor(self.activation)[1](pre, G)
        return G @ W.T, (X.T @ G).ravel()


class Complementary(Remainder):
    """A full extra head (whose own remainder is zero) used as the residual path.

    Equivalent to adding one more head to the layer; kept as a remainder
    kind so configurations can express it directly.
    """

    kind = "complementary"

    def __init__(self, m, n, head):
        super().__init__(m, n)
        if head.remainder.kind != "zero":
            raise ConfigError("complementary remainder's child head must use a zero remainder")
        if head.m != m or head.n != n:
            raise ConfigError("complementary child head shape must match the owning head")
        self.head = head

    @property
    def param_length(self):
        return self.head.param_length

    def init_params(self, rng):
        return self.head.init_params(rng)

    def forward(self, X, params):
        return self.head.forward(X, params)

    def vjp(self, X, params, G):
        return self.head.vjp(X, params, G)


def make_remainder(kind, m, n, **hyper):
    kinds = {
        "zero": Zero,
        "constant": ConstantRemainder,
        "identity": IdentityRemainder,
        "linear": LinearRemainder,
        "complementary": Complementary,
    }
    try:
        cls = kinds[kind]
    except KeyError:
        raise ConfigError(f"unknown remainder kind {kind!r}") from None
    return cls(m, n, **hyper)
