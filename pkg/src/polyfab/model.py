"""Heads, layers, and deep models composing expansion, reconciliation,
and remainder functions.

A head computes sum_c <kappa(x), psi(w_c)> + pi(x) over its channels; a
layer sums its heads; a model chains layers.  Parameters live in one
flat float64 vector, sliced per head in a fixed order: channel
reconciliation vectors first, then remainder parameters.
"""

import numpy as np

from .errors import ConfigError, ShapeError
from .expansions import Expansion, make_expansion
from .reconciliations import Reconciliation, make_reconciliation
from .remainders import Remainder, make_remainder
from .tensorops import as_batch, make_rng


class Head:
    """One (expansion, reconciliation, remainder) triple with C channels."""

    def __init__(self, m, n, expansion, reconciliation, remainder, channels=1):
        if channels < 1:
            raise ConfigError("head needs channels >= 1")
        self.m = int(m)
        self.n = int(n)
        self.expansion = expansion
        self.reconciliation = reconciliation
        self.remainder = remainder
        self.channels = int(channels)
        self.D = expansion.out_dim(self.m)
        if reconciliation.n != self.n or reconciliation.D != self.D:
            raise ConfigError(
                f"reconciliation shape {reconciliation.n} x {reconciliation.D} does not "
                f"match head shape {self.n} x {self.D}")
        if remainder.m != self.m or remainder.n != self.n:
            raise ConfigError("remainder shape does not match head shape")

    @property
    def param_length(self):
        """Stored parameter scalars for this head."""
        return self.channels * self.reconciliation.storage_length + self.remainder.param_length

    @property
    def param_count(self):
        """Learnable parameter count (masking counts only unmasked entries)."""
        return self.channels * self.reconciliation.required_length + self.remainder.param_length

    def init_params(self, rng):
        parts = [self.reconciliation.init_params(rng) for _ in range(self.channels)]
        parts.append(self.remainder.init_params(rng))
        return np.concatenate(parts) if parts else np.zeros(0)

    def _split(self, params):
        params = np.asarray(params, dtype=np.float64)
        if params.shape != (self.param_length,):
            raise ShapeError(
                f"head expects {self.param_length} parameters, got shape {params.shape}")
        ls = self.reconciliation.storage_length
        ws = [params[c * ls:(c + 1) * ls] for c in range(self.channels)]
        return ws, params[self.channels * ls:]

    def _weight(self, ws):
        W = self.reconciliation.fabricate(ws[0])
        for w in ws[1:]:
            W = W + self.reconciliation.fabricate(w)
        return W

    def forward(self, X, params):
        X = as_batch(X, self.m)
        ws, rem = self._split(params)
        E = self.expansion.forward(X)
        return E @ self._weight(ws).T + self.remainder.forward(X, rem)

    def vjp(self, X, params, G):
        """Returns (grad_x (B, m), grad_params (param_length,))."""
        X = as_batch(X, self.m)
        G = np.asarray(G, dtype=np.float64)
        ws, rem = self._split(params)
        E = self.expansion.forward(X)
        gW = G.T @ E  # shared across channels
        gparts = [self.reconciliation.vjp(w, gW) for w in ws]
        gX = self.expansion.vjp(X, G @ self._weight(ws))
        gX_rem, g_rem = self.remainder.vjp(X, rem, G)
        gparts.append(np.asarray(g_rem))
        return gX + gX_rem, np.concatenate(gparts) if gparts else np.zeros(0)


class Layer:
    """Sum of heads sharing the same input and output dimension."""

    def __init__(self, heads):
        if not heads:
            raise ConfigError("layer needs at least one head")
        m, n = heads[0].m, heads[0].n
        for h in heads:
            if (h.m, h.n) != (m, n):
                raise ConfigError("all heads in a layer must agree on (m, n)")
        self.heads = list(heads)
        self.m, self.n = m, n

    @property
    def param_length(self):
        return sum(h.param_length for h in self.heads)

    @property
    def param_count(self):
        return sum(h.param_count for h in self.heads)

    def init_params(self, rng):
        return np.concatenate([h.init_params(rng) for h in self.heads])

    def _slices(self):
        off = 0
        for h in self.heads:
            yield h, slice(off, off + h.param_length)
            off += h.param_length

    def forward(self, X, params):
        out = None
        for h, sl in self._slices():
            y = h.forward(X, params[sl])
            out = y if out is None else out + y
        return out

    def vjp(self, X, params, G):
        gX = np.zeros((np.asarray(G).shape[0], self.m))
        gp = np.zeros(self.param_length)
        for h, sl in self._slices():
            gx_h, gp_h = h.vjp(X, params[sl], G)
            gX += gx_h
            gp[sl] = gp_h
        return gX, gp


class Model:
    """Stack of layers with chained dimensions [d_0, ..., d_K]."""

    def __init__(self, layers):
        if not layers:
            raise ConfigError("model needs at least one layer")
        for a, b in zip(layers, layers[1:]):
            if a.n != b.m:
                raise ConfigError(
                    f"layer output dim {a.n} does not match next layer input dim {b.m}")
        self.layers = list(layers)
        self.dims = [layers[0].m] + [l.n for l in layers]

    @property
    def param_length(self):
        return sum(l.param_length for l in self.layers)

    @property
    def param_count(self):
        return sum(l.param_count for l in self.layers)

    def init_params(self, seed):
        rng = make_rng(seed)
        return np.concatenate([l.init_params(rng) for l in self.layers])

    def _slices(self):
        off = 0
        for l in self.layers:
            yield l, slice(off, off + l.param_length)
            off += l.param_length

    def forward(self, X, params):
        return self.forward_cached(X, params)[0]

    def forward_cached(self, X, params):
        """Returns (output, list of per-layer inputs) for reuse in backward."""
        params = np.asarray(params, dtype=np.float64)
        if params.shape != (self.param_length,):
            raise ShapeError(
                f"model expects {self.param_length} parameters, got shape {params.shape}")
        h = as_batch(X, self.dims[0])
        inputs = []
        for layer, sl in self._slices():
            inputs.append(h)
            h = layer.forward(h, params[sl])
        return h, inputs

    def backward(self, X, params, G, inputs=None):
        """Reverse-mode gradient of <G, output> with respect to all parameters.

        `inputs` is the cache from forward_cached; recomputed if absent.
        Returns (grad_x, grad_params).
        """
        params = np.asarray(params, dtype=np.float64)
        if inputs is None:
            _, inputs = self.forward_cached(X, params)
        G = np.asarray(G, dtype=np.float64)
        gp = np.zeros(self.param_length)
        pairs = list(self._slices())
        for (layer, sl), h in zip(reversed(pairs), reversed(inputs)):
            G, gp[sl] = layer.vjp(h, params[sl], G)
        return G, gp


def build_head(m, n, expansion, reconciliation, remainder=None, channels=1):
    """Assemble a head from specs given as objects or config dicts.

    expansion: Expansion or {"kind": ..., hyper...}
    reconciliation: Reconciliation or {"kind": ..., hyper...} (n, D filled in)
    remainder: Remainder or {"kind": ..., hyper...}; defaults to zero.
    """
    if not isinstance(expansion, Expansion):
        cfg = dict(expansion)
        expansion = make_expansion(cfg.pop("kind"), **cfg)
    D = expansion.out_dim(m)
    if not isinstance(reconciliation, Reconciliation):
        cfg = dict(reconciliation)
        reconciliation = make_reconciliation(cfg.pop("kind"), n, D, **cfg)
    if remainder is None:
        remainder = make_remainder("zero", m, n)
    elif not isinstance(remainder, Remainder):
        cfg = dict(remainder)
        remainder = make_remainder(cfg.pop("kind"), m, n, **cfg)
    return Head(m, n, expansion, reconciliation, remainder, channels=channels)


def build_model(layer_cfgs):
    """Build a model from per-layer config dicts.

    Each layer config: {"m": int, "n": int, "heads": [head cfg, ...]} where a
    head config holds expansion/reconciliation/remainder specs and optional
    channels.
    """
    layers = []
    for cfg in layer_cfgs:
        m, n = cfg["m"], cfg["n"]
        heads = []
        for hc in cfg["heads"]:
            heads.append(build_head(
                m, n,
                expansion=hc["expansion"],
                reconciliation=hc["reconciliation"],
                remainder=hc.get("remainder"),
                channels=hc.get("channels", 1)))
        layers.append(Layer(heads))
    return Model(layers)
