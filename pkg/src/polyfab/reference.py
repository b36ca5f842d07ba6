"""Bridge configurations mapping classic models onto the head framework,
plus independent reference implementations used as equivalence oracles.

The reference implementations deliberately share no code with the main
forward path: they are small, direct transcriptions of each classic
model so that agreement between the two is meaningful evidence.
"""

import math

import numpy as np

from .distributions import DistributionSpec
from .errors import ConfigError
from .model import build_model
from .tensorops import make_rng


# ---------------------------------------------------------------------------
# configuration builders

def mlp_config(dims):
    """Plain MLP as stacked heads: y = W_K s(... s(W_1 x)), no biases.

    Identity expansion everywhere; sigmoid applied to the input of every
    layer after the first; identity reshape reconciliation; zero remainder.
    """
    if len(dims) < 2:
        raise ConfigError("mlp needs at least [in, out] dims")
    layers = []
    for k in range(len(dims) - 1):
        layers.append({
            "m": dims[k], "n": dims[k + 1],
            "heads": [{
                "expansion": {"kind": "identity",
                              "pre_processor": "sigmoid" if k > 0 else None},
                "reconciliation": {"kind": "identity"},
            }],
        })
    return build_model(layers)


def mlp_weights_to_params(weights):
    """Flatten a list of (n_k x m_k) MLP weight matrices into a parameter vector."""
    return np.concatenate([np.asarray(W, dtype=np.float64).ravel() for W in weights])


def reference_mlp_forward(weights, X):
    """Independent MLP evaluation with its own inlined sigmoid."""
    h = np.asarray(X, dtype=np.float64).T  # (features, batch)
    for k, W in enumerate(weights):
        if k > 0:
            h = 1.0 / (1.0 + np.exp(-h))
        h = np.asarray(W) @ h
    return h.T


def kan_config(dims, t=5, degree=3, lo=-1.0, hi=1.0):
    """Spline-network layers: per layer, B-spline expansion with an identity
    reshape reconciliation plus a SiLU-then-linear residual path."""
    layers = []
    for k in range(len(dims) - 1):
        layers.append({
            "m": dims[k], "n": dims[k + 1],
            "heads": [{
                "expansion": {"kind": "bspline", "t": t, "degree": degree,
                              "lo": lo, "hi": hi},
                "reconciliation": {"kind": "identity"},
                "remainder": {"kind": "linear", "activation": "silu",
                              "placement": "pre"},
            }],
        })
    return build_model(layers)


def _ref_bspline_basis(x, t, degree, lo, hi):
    """Scalar Cox-de Boor recursion written directly from the definition."""
    h = (hi - lo) / t
    knots = [lo + (j - degree) * h for j in range(t + 1 + 2 * degree)]
    nb0 = len(knots) - 1
    B = [1.0 if knots[i] <= x < knots[i + 1] else 0.0 for i in range(nb0)]
    if x == knots[-1]:
        B[-1] = 1.0
    for k in range(1, degree + 1):
        nxt = []
        for i in range(nb0 - k):
            a = (x - knots[i]) / (knots[i + k] - knots[i])
            b = (knots[i + k + 1] - x) / (knots[i + k + 1] - knots[i + 1])
            nxt.append(a * B[i] + b * B[i + 1])
        B = nxt
    return B  # length t + degree


def reference_kan_forward(X, spline_coeffs, base_weights, t=5, degree=3,
                          lo=-1.0, hi=1.0):
    """Independent spline-network layer stack.

    spline_coeffs[k] has shape (n, m, t+degree): coefficient of basis b on
    the edge from input i to output j.  base_weights[k] is (m, n) for the
    SiLU base path: out = sum_i coeffs[j,i,:].B(x_i) + silu(x) @ base.
    """
    X = np.asarray(X, dtype=np.float64)
    h = X
    for C, Wb in zip(spline_coeffs, base_weights):
        n, m, nb = C.shape
        out = np.zeros((h.shape[0], n))
        for r in range(h.shape[0]):
            basis = [np.asarray(_ref_bspline_basis(h[r, i], t, degree, lo, hi))
                     for i in range(m)]
            sil = h[r] / (1.0 + np.exp(-h[r]))
            for j in range(n):
                acc = sil @ np.asarray(Wb)[:, j]
                for i in range(m):
                    acc += C[j, i] @ basis[i]
                out[r, j] = acc
        h = out
    return h


def kan_weights_to_params(spline_coeffs, base_weights):
    """Pack reference spline/base weights into the model's parameter order.

    Per layer: the identity reconciliation stores the (n x D) matrix
    row-major with D laid out basis-index-major (basis b outer, feature i
    inner), then the linear remainder stores its (m x n) matrix.
    """
    parts = []
    for C, Wb in zip(spline_coeffs, base_weights):
        n, m, nb = C.shape
        W = np.transpose(C, (0, 2, 1)).reshape(n, nb * m)  # (n, D)
        parts.append(W.ravel())
        parts.append(np.asarray(Wb, dtype=np.float64).ravel())
    return np.concatenate(parts)


def phi_quadratic(x):
    """Explicit degree-2 kernel feature map [x1^2, sqrt(2) x1 x2, x2^2]."""
    x = np.asarray(x, dtype=np.float64)
    return np.array([x[0] ** 2, math.sqrt(2.0) * x[0] * x[1], x[1] ** 2])


def ksvm_config(m, weights, bias=0.0, centers=None, eps=1.0):
    """Single-layer linear scorer over an explicit feature map.

    With centers=None the map is the identity (linear kernel); otherwise a
    Gaussian RBF map over the fixed centers.  The decision is the sign of
    the output; the bias enters as a constant remainder.
    """
    if centers is None:
        expansion = {"kind": "identity"}
    else:
        expansion = {"kind": "gaussian_rbf", "centers": list(centers), "eps": eps}
    model = build_model([{
        "m": m, "n": 1,
        "heads": [{
            "expansion": expansion,
            "reconciliation": {"kind": "identity"},
            "remainder": {"kind": "constant", "c": [bias]},
        }]
    }])
    params = np.asarray(weights, dtype=np.float64).ravel()
    head = model.layers[0].heads[0]
    if params.shape != (head.D,):
        raise ConfigError(f"expected {head.D} weights, got {params.shape}")
    return model, params


def reference_perceptron(X, y, epochs=100, lr=1.0):
    """Margin-style reference classifier: classic perceptron on labels +-1."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    w = np.zeros(X.shape[1])
    b = 0.0
    for _ in range(epochs):
        mistakes = 0
        for xi, yi in zip(X, y):
            if yi * (w @ xi + b) <= 0:
                w = w + lr * yi * xi
                b = b + lr * yi
                mistakes += 1
        if mistakes == 0:
            break
    return w, b


# ---------------------------------------------------------------------------
# naive probabilistic classifier

class NaiveBayesHeads:
    """One single-head scorer per class over per-feature Gaussian densities.

    Each class model is a naive-prob expansion (one vector-parameter
    Gaussian covering all features) reduced by a constant-one
    reconciliation, with the log prior as a constant remainder; prediction
    is the argmax over class scores.
    """

    def __init__(self, models):
        self.models = models  # list of (model, params)

    @classmethod
    def fit(cls, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y).astype(int).ravel()
        models = []
        m = X.shape[1]
        for c in np.unique(y):
            Xc = X[y == c]
            mu = Xc.mean(axis=0)
            sigma = np.maximum(Xc.std(axis=0), 1e-9)
            prior = len(Xc) / len(X)
            dist = DistributionSpec("gaussian", mu=mu, sigma=sigma)
            model = build_model([{
                "m": m, "n": 1,
                "heads": [{
                    "expansion": {"kind": "naive_prob", "dists": [dist]},
                    "reconciliation": {"kind": "constant", "c": 1.0},
                    "remainder": {"kind": "constant", "c": [math.log(prior)]},
                }]
            }])
            models.append((model, np.zeros(0)))
        return cls(models)

    def scores(self, X):
        return np.concatenate(
            [model.forward(X, params) for model, params in self.models], axis=1)

    def predict(self, X):
        return self.scores(X).argmax(axis=1)


def reference_naive_bayes(X_train, y_train, X_test):
    """Brute-force Gaussian naive Bayes written from the density formula."""
    X_train = np.asarray(X_train, dtype=np.float64)
    y_train = np.asarray(y_train).astype(int).ravel()
    X_test = np.asarray(X_test, dtype=np.float64)
    classes = np.unique(y_train)
    scores = np.zeros((X_test.shape[0], len(classes)))
    for ci, c in enumerate(classes):
        Xc = X_train[y_train == c]
        mu = Xc.mean(axis=0)
        var = np.maximum(Xc.var(axis=0), 1e-18)
        log_prior = math.log(len(Xc) / len(X_train))
        ll = -0.5 * np.log(2 * np.pi * var) - (X_test - mu) ** 2 / (2 * var)
        scores[:, ci] = ll.sum(axis=1) + log_prior
    return scores.argmax(axis=1), scores


def bayesnet_style_config(m, d=2, n=1, dists=None):
    """Single layer scoring subset log-likelihoods with learnable weights.

    The trained coefficients over subset log-likelihood features are the
    readout for dependency-structure inspection.
    """
    return build_model([{
        "m": m, "n": n,
        "heads": [{
            "expansion": {"kind": "combinatorial_prob", "d": d,
                          **({"dists": dists} if dists else {})},
            "reconciliation": {"kind": "identity"},
        }]
    }])


def synthetic_class_gaussians(n_per_class=250, m=3, n_classes=3, seed=0, spread=2.5):
    """Blobby multi-class sample set for classifier agreement checks."""
    rng = make_rng(seed)
    X, y = [], []
    for c in range(n_classes):
        center = rng.normal(0.0, spread, size=m)
        X.append(rng.normal(center, 1.0 + 0.3 * c, size=(n_per_class, m)))
        y.append(np.full(n_per_class, c))
    return np.concatenate(X), np.concatenate(y)
