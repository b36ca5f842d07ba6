"""Feature expansion functions kappa: R^m -> R^D.

Every expansion evaluates batches on the last axis: `forward` maps a
(B, m) array to (B, D), and `vjp` pulls a (B, D) cotangent back to
(B, m).  Output layouts are fixed conventions, documented per class,
so that parameter vectors always line up the same way.

Optional pre/post processors (sigmoid, relu, silu, layer_norm) wrap the
raw expansion, applied to the input and output respectively.
"""

import itertools
import math

import numpy as np

from .activations import get_processor
from .distributions import DistributionSpec, MultivariateNormal
from .errors import ConfigError, DomainError
from .tensorops import as_batch, kron_rows

ARC_EPS = 1e-9


class Expansion:
    """Base class: subclasses implement _expand/_vjp and out_dim."""

    kind = None

    def __init__(self, pre_processor=None, post_processor=None):
        self.pre_processor = None if pre_processor in (None, "none") else pre_processor
        self.post_processor = None if post_processor in (None, "none") else post_processor
        if self.pre_processor:
            get_processor(self.pre_processor)
        if self.post_processor:
            get_processor(self.post_processor)

    def out_dim(self, m):
        raise NotImplementedError

    def _expand(self, X):
        raise NotImplementedError

    def _vjp(self, X, G):
        raise NotImplementedError

    def forward(self, X):
        X = as_batch(X)
        if self.pre_processor:
            X = get_processor(self.pre_processor)[0](X)
        out = self._expand(X)
        if self.post_processor:
            out = get_processor(self.post_processor)[0](out)
        return out

    def vjp(self, X, G):
        """Pull a (B, D) cotangent back through the expansion to (B, m)."""
        X = as_batch(X)
        G = np.asarray(G, dtype=np.float64)
        if G.ndim == 1:
            G = G[None, :]
        Xp = X
        if self.pre_processor:
            Xp = get_processor(self.pre_processor)[0](X)
        if self.post_processor:
            inner = self._expand(Xp)
            G = get_processor(self.post_processor)[1](inner, G)
        gx = self._vjp(Xp, G)
        if self.pre_processor:
            gx = get_processor(self.pre_processor)[1](X, gx)
        return gx


class Identity(Expansion):
    kind = "identity"

    def out_dim(self, m):
        return m

    def _expand(self, X):
        return X.copy()

    def _vjp(self, X, G):
        return G.copy()


class Reciprocal(Expansion):
    kind = "reciprocal"

    def out_dim(self, m):
        return m

    def _check(self, X):
        bad = np.where(X == 0.0)
        if bad[0].size:
            raise DomainError(f"reciprocal expansion: zero input at feature index {bad[1][0]}")

    def _expand(self, X):
        self._check(X)
        return 1.0 / X

    def _vjp(self, X, G):
        self._check(X)
        return -G / (X * X)


class Linear(Expansion):
    """Scaled copy c*x, optionally composed with fixed square matrices."""

    kind = "linear"

    def __init__(self, c=1.0, C_pre=None, C_post=None, **kw):
        super().__init__(**kw)
        self.c = float(c)
        self.C_pre = None if C_pre is None else np.asarray(C_pre, dtype=np.float64)
        self.C_post = None if C_post is None else np.asarray(C_post, dtype=np.float64)
        for name, C in (("C_pre", self.C_pre), ("C_post", self.C_post)):
            if C is not None and (C.ndim != 2 or C.shape[0] != C.shape[1]):
                raise ConfigError(f"linear expansion: {name} must be a square matrix")

    def out_dim(self, m):
        return m

    def _expand(self, X):
        out = X
        if self.C_pre is not None:
            out = out @ self.C_pre.T
        out = self.c * out
        if self.C_post is not None:
            out = out @ self.C_post.T
        return out

    def _vjp(self, X, G):
        g = G
        if self.C_post is not None:
            g = g @ self.C_post
        g = self.c * g
        if self.C_pre is not None:
            g = g @ self.C_pre
        return g


class Taylor(Expansion):
    """Multivariate monomials up to order d via repeated Kronecker products.

    Output is [P_1, P_2, ..., P_d] with P_k = P_1 (x) P_{k-1}; duplicate
    products (x1*x2 and x2*x1) are kept, so D = sum_i m^i.
    """

    kind = "taylor"

    def __init__(self, d, **kw):
        super().__init__(**kw)
        if d < 1:
            raise ConfigError("taylor expansion needs order d >= 1")
        self.d = int(d)

    def out_dim(self, m):
        return sum(m ** i for i in range(1, self.d + 1))

    def _blocks(self, X):
        blocks = [X]
        for _ in range(1, self.d):
            blocks.append(kron_rows(X, blocks[-1]))
        return blocks

    def _expand(self, X):
        return np.concatenate(self._blocks(X), axis=1)

    def _vjp(self, X, G):
        B, m = X.shape
        blocks = self._blocks(X)
        sizes = [b.shape[1] for b in blocks]
        offs = np.cumsum([0] + sizes)
        grads = [G[:, offs[k]:offs[k + 1]] for k in range(self.d)]
        gx = np.zeros_like(X)
        # walk orders high to low; each P_k = x (x) P_{k-1} sends cotangent
        # to both x and P_{k-1}
        carry = grads[self.d - 1]
        for k in range(self.d - 1, 0, -1):
            Gk = carry.reshape(B, m, -1)
            prev = blocks[k - 1]
            gx += np.einsum("bij,bj->bi", Gk, prev)
            carry = np.einsum("bij,bi->bj", Gk, X) + grads[k - 1]
        gx += carry
        return gx


class Fourier(Expansion):
    """Harmonics [cos(2*pi*i*x/P), sin(2*pi*i*x/P)] for i=1..N.

    Layout is frequency-major: for each i, a cos block of m values then a
    sin block of m values.  D = 2mN.
    """

    kind = "fourier"

    def __init__(self, P=1.0, N=1, **kw):
        super().__init__(**kw)
        if P <= 0 or N < 1:
            raise ConfigError("fourier expansion needs period P > 0 and N >= 1")
        self.P = float(P)
        self.N = int(N)

    def out_dim(self, m):
        return 2 * m * self.N

    def _phases(self, X):
        freqs = 2.0 * np.pi * np.arange(1, self.N + 1) / self.P
        return X[:, None, :] * freqs[None, :, None]  # (B, N, m)

    def _expand(self, X):
        ph = self._phases(X)
        out = np.stack([np.cos(ph), np.sin(ph)], axis=2)  # (B, N, 2, m)
        return out.reshape(X.shape[0], -1)

    def _vjp(self, X, G):
        B, m = X.shape
        ph = self._phases(X)
        freqs = (2.0 * np.pi * np.arange(1, self.N + 1) / self.P)[None, :, None]
        Gr = G.reshape(B, self.N, 2, m)
        gx = Gr[:, :, 0, :] * (-np.sin(ph) * freqs) + Gr[:, :, 1, :] * (np.cos(ph) * freqs)
        return gx.sum(axis=1)


class BSpline(Expansion):
    """Cox-de Boor B-spline basis on a uniform knot grid over [lo, hi].

    t intervals, degree `degree`, extended by `degree` evenly spaced
    knots on each side, giving t+degree basis functions per feature.
    Layout: basis-index-major, out[i*m + j] = B_i(x_j).
    """

    kind = "bspline"

    def __init__(self, t=5, degree=3, lo=-1.0, hi=1.0, **kw):
        super().__init__(**kw)
        if t < 1 or degree < 0 or hi <= lo:
            raise ConfigError("bspline expansion needs t >= 1, degree >= 0, hi > lo")
        self.t = int(t)
        self.degree = int(degree)
        self.lo = float(lo)
        self.hi = float(hi)
        self.h = (hi - lo) / t
        d = self.degree
        self.knots = lo + (np.arange(t + 1 + 2 * d) - d) * self.h

    def out_dim(self, m):
        return m * (self.t + self.degree)

    def _basis(self, xf, upto):
        """Degree-`upto` basis for flat samples xf; returns (len(xf), nb)."""
        if np.any(np.isnan(xf)):
            raise DomainError("bspline expansion: NaN input")
        tau = self.knots
        n0 = len(tau) - 1
        j = np.floor((xf - tau[0]) / self.h).astype(int)
        inside = (xf >= tau[0]) & (xf <= tau[-1])
        j = np.clip(j, 0, n0 - 1)
        B = np.zeros((len(xf), n0))
        B[np.arange(len(xf)), j] = inside.astype(float)
        for k in range(1, upto + 1):
            nk = n0 - k
            left = (xf[:, None] - tau[None, :nk]) / (k * self.h)
            right = (tau[None, k + 1:k + 1 + nk] - xf[:, None]) / (k * self.h)
            B = left * B[:, :nk] + right * B[:, 1:nk + 1]
        return B

    def _expand(self, X):
        B, m = X.shape
        vals = self._basis(X.ravel(), self.degree)  # (B*m, t+degree)
        return vals.reshape(B, m, -1).transpose(0, 2, 1).reshape(B, -1)

    def _vjp(self, X, G):
        B, m = X.shape
        nb = self.t + self.degree
        if self.degree == 0:
            return np.zeros_like(X)
        Blow = self._basis(X.ravel(), self.degree - 1)  # (B*m, t+degree+1)
        deriv = (Blow[:, :nb] - Blow[:, 1:nb + 1]) / self.h
        Gr = G.reshape(B, nb, m).transpose(0, 2, 1).reshape(B * m, nb)
        return (Gr * deriv).sum(axis=1).reshape(B, m)


class Chebyshev(Expansion):
    """Chebyshev polynomials [T_1, ..., T_d]; order-major layout."""

    kind = "chebyshev"

    def __init__(self, d, **kw):
        super().__init__(**kw)
        if d < 1:
            raise ConfigError("chebyshev expansion needs order d >= 1")
        self.d = int(d)

    def out_dim(self, m):
        return m * self.d

    def _polys(self, X):
        T = [np.ones_like(X), X]
        dT = [np.zeros_like(X), np.ones_like(X)]
        for _ in range(2, self.d + 1):
            T.append(2.0 * X * T[-1] - T[-2])
            dT.append(2.0 * T[-2] + 2.0 * X * dT[-1] - dT[-2])
        return T, dT

    def _expand(self, X):
        T, _ = self._polys(X)
        return np.stack(T[1:], axis=1).reshape(X.shape[0], -1)

    def _vjp(self, X, G):
        B, m = X.shape
        _, dT = self._polys(X)
        Gr = G.reshape(B, self.d, m)
        return sum(Gr[:, k, :] * dT[k + 1] for k in range(self.d))


class Jacobi(Expansion):
    """Jacobi polynomials [P_1^(a,b), ..., P_d^(a,b)]; order-major layout."""

    kind = "jacobi"

    def __init__(self, d, alpha=0.0, beta=0.0, **kw):
        super().__init__(**kw)
        if d < 1:
            raise ConfigError("jacobi expansion needs order d >= 1")
        if alpha <= -1 or beta <= -1:
            raise ConfigError("jacobi expansion needs alpha, beta > -1")
        self.d = int(d)
        self.alpha = float(alpha)
        self.beta = float(beta)

    def out_dim(self, m):
        return m * self.d

    def _polys(self, X):
        a, b = self.alpha, self.beta
        P = [np.ones_like(X), (a + 1.0) + (a + b + 2.0) * (X - 1.0) / 2.0]
        dP = [np.zeros_like(X), np.full_like(X, (a + b + 2.0) / 2.0)]
        for n in range(2, self.d + 1):
            c1 = 2.0 * n * (n + a + b) * (2 * n + a + b - 2)
            c2 = (2 * n + a + b - 1) * (a * a - b * b)
            c3 = (2 * n + a + b - 1) * (2 * n + a + b) * (2 * n + a + b - 2)
            c4 = 2.0 * (n + a - 1) * (n + b - 1) * (2 * n + a + b)
            dP.append(((c2 + c3 * X) * dP[-1] + c3 * P[-1] - c4 * dP[-2]) / c1)
            P.append(((c2 + c3 * X) * P[-1] - c4 * P[-2]) / c1)
        return P, dP

    def _expand(self, X):
        P, _ = self._polys(X)
        return np.stack(P[1:], axis=1).reshape(X.shape[0], -1)

    def _vjp(self, X, G):
        B, m = X.shape
        _, dP = self._polys(X)
        Gr = G.reshape(B, self.d, m)
        return sum(Gr[:, k, :] * dP[k + 1] for k in range(self.d))


class _Triple(Expansion):
    """Shared machinery for the three-function pointwise families.

    Layout is function-major: [f1(x), f2(x), f3(x)], blocks of m.
    """

    funcs = None  # list of (value, derivative) callables

    def out_dim(self, m):
        return 3 * m

    def _check(self, X):
        pass

    def _expand(self, X):
        self._check(X)
        return np.concatenate([f(X) for f, _ in self.funcs], axis=1)

    def _vjp(self, X, G):
        self._check(X)
        B, m = X.shape
        Gr = G.reshape(B, 3, m)
        return sum(Gr[:, k, :] * self.funcs[k][1](X) for k in range(3))


class Trig(_Triple):
    kind = "trig"
    funcs = [
        (np.cos, lambda x: -np.sin(x)),
        (np.sin, np.cos),
        (np.tan, lambda x: 1.0 / np.cos(x) ** 2),
    ]


class ArcTrig(_Triple):
    """[arccos, arcsin, arctan]; needs |x| <= 1, derivative clamped near the ends."""

    kind = "arc_trig"

    @staticmethod
    def _clamped(x):
        return np.clip(x, -1.0 + ARC_EPS, 1.0 - ARC_EPS)

    funcs = [
        (np.arccos, lambda x: -1.0 / np.sqrt(1.0 - ArcTrig._clamped(x) ** 2)),
        (np.arcsin, lambda x: 1.0 / np.sqrt(1.0 - ArcTrig._clamped(x) ** 2)),
        (np.arctan, lambda x: 1.0 / (1.0 + x * x)),
    ]

    def _check(self, X):
        bad = np.where(np.abs(X) > 1.0)
        if bad[0].size:
            raise DomainError(
                f"arc_trig expansion: |x| > 1 at feature index {bad[1][0]}")


class Hyperbolic(_Triple):
    kind = "hyperbolic"
    funcs = [
        (np.cosh, np.sinh),
        (np.sinh, np.cosh),
        (np.tanh, lambda x: 1.0 / np.cosh(x) ** 2),
    ]


class ArcHyperbolic(_Triple):
    """[arccosh, arcsinh, arctanh].

    The three component domains have empty intersection, so inputs are
    clipped into each component's domain before evaluation (arccosh at
    x < 1 reads 0; arctanh saturates near |x| = 1); gradients are zero
    in the clipped regions.
    """

    kind = "arc_hyperbolic"

    funcs = [
        (lambda x: np.arccosh(np.maximum(x, 1.0)),
         lambda x: np.where(x > 1.0, 1.0 / np.sqrt(np.maximum(x * x - 1.0, ARC_EPS)), 0.0)),
        (np.arcsinh, lambda x: 1.0 / np.sqrt(1.0 + x * x)),
        (lambda x: np.arctanh(np.clip(x, -1.0 + ARC_EPS, 1.0 - ARC_EPS)),
         lambda x: np.where(np.abs(x) < 1.0 - ARC_EPS, 1.0 / (1.0 - x * x), 0.0)),
    ]


class RBF(Expansion):
    """Radial basis values for every (center, feature) pair.

    kind_name selects gaussian exp(-(eps*(x-c))^2) or inverse-quadratic
    1/(1+(eps*(x-c))^2).  Layout is center-major: out[i*m + j] = phi(x_j, c_i).
    """

    def __init__(self, centers, eps=1.0, gaussian=True, **kw):
        super().__init__(**kw)
        self.centers = np.atleast_1d(np.asarray(centers, dtype=np.float64))
        if self.centers.ndim != 1 or self.centers.size < 1:
            raise ConfigError("rbf expansion needs a non-empty 1-d center list")
        if eps <= 0:
            raise ConfigError("rbf expansion needs width eps > 0")
        self.eps = float(eps)
        self.gaussian = bool(gaussian)

    @property
    def kind(self):
        return "gaussian_rbf" if self.gaussian else "inverse_quadratic_rbf"

    def out_dim(self, m):
        return m * self.centers.size

    def _z(self, X):
        return self.eps * (X[:, None, :] - self.centers[None, :, None])  # (B, d, m)

    def _expand(self, X):
        z = self._z(X)
        if self.gaussian:
            out = np.exp(-z * z)
        else:
            out = 1.0 / (1.0 + z * z)
        return out.reshape(X.shape[0], -1)

    def _vjp(self, X, G):
        B, m = X.shape
        z = self._z(X)
        if self.gaussian:
            dphi = -2.0 * z * np.exp(-z * z) * self.eps
        else:
            dphi = -2.0 * z * self.eps / (1.0 + z * z) ** 2
        return (G.reshape(B, -1, m) * dphi).sum(axis=1)


def GaussianRBF(centers, eps=1.0, **kw):
    return RBF(centers, eps, gaussian=True, **kw)


def InverseQuadraticRBF(centers, eps=1.0, **kw):
    return RBF(centers, eps, gaussian=False, **kw)


def _subsets(m, d):
    out = []
    for size in range(1, d + 1):
        out.extend(itertools.combinations(range(m), size))
    return out


class Combinatorial(Expansion):
    """Raw feature tuples of every subset of size 1..d, lexicographic order."""

    kind = "combinatorial"

    def __init__(self, d, **kw):
        super().__init__(**kw)
        if d < 1:
            raise ConfigError("combinatorial expansion needs d >= 1")
        self.d = int(d)

    def out_dim(self, m):
        if self.d > m:
            raise ConfigError("combinatorial expansion needs d <= m")
        return sum(i * math.comb(m, i) for i in range(1, self.d + 1))

    def _index(self, m):
        return np.array([j for s in _subsets(m, self.d) for j in s], dtype=int)

    def _expand(self, X):
        return X[:, self._index(X.shape[1])]

    def _vjp(self, X, G):
        gx = np.zeros_like(X)
        np.add.at(gx.T, self._index(X.shape[1]), G.T)
        return gx


class NaiveProb(Expansion):
    """Per-feature log-densities under each listed distribution.

    Layout is distribution-major: for each distribution, a block of m
    log-PDF values.  D = m * len(dists).
    """

    kind = "naive_prob"

    def __init__(self, dists, **kw):
        super().__init__(**kw)
        if not dists:
            raise ConfigError("naive_prob expansion needs a non-empty distribution list")
        self.dists = list(dists)

    def out_dim(self, m):
        return m * len(self.dists)

    def _expand(self, X):
        return np.concatenate([d.logpdf(X) for d in self.dists], axis=1)

    def _vjp(self, X, G):
        B, m = X.shape
        Gr = G.reshape(B, len(self.dists), m)
        return sum(Gr[:, k, :] * d.dlogpdf(X) for k, d in enumerate(self.dists))


class CombinatorialProb(Expansion):
    """Multivariate-normal log-likelihood of every feature subset of size 1..d.

    `dists` maps subset size -> MultivariateNormal (or (mean, cov) pair);
    missing sizes default to the standard normal.  Subset order matches
    the combinatorial expansion.  D = sum_i C(m, i).
    """

    kind = "combinatorial_prob"

    def __init__(self, d, dists=None, **kw):
        super().__init__(**kw)
        if not 1 <= d <= 3:
            raise ConfigError("combinatorial_prob expansion needs 1 <= d <= 3")
        self.d = int(d)
        self.dists = {}
        for size, dist in (dists or {}).items():
            if not isinstance(dist, MultivariateNormal):
                dist = MultivariateNormal(*dist)
            self.dists[int(size)] = dist

    def _dist(self, size):
        if size not in self.dists:
            self.dists[size] = MultivariateNormal(np.zeros(size), np.eye(size))
        return self.dists[size]

    def out_dim(self, m):
        if self.d > m:
            raise ConfigError("combinatorial_prob expansion needs d <= m")
        return sum(math.comb(m, i) for i in range(1, self.d + 1))

    def _expand(self, X):
        cols = []
        for s in _subsets(X.shape[1], self.d):
            cols.append(self._dist(len(s)).logpdf(X[:, list(s)]))
        return np.stack(cols, axis=1)

    def _vjp(self, X, G):
        gx = np.zeros_like(X)
        for k, s in enumerate(_subsets(X.shape[1], self.d)):
            idx = list(s)
            gx[:, idx] += G[:, k:k + 1] * self._dist(len(s)).dlogpdf(X[:, idx])
        return gx


class Nested(Expansion):
    """Composition of expansions, applied left to right."""

    kind = "nested"

    def __init__(self, children, **kw):
        super().__init__(**kw)
        if not children:
            raise ConfigError("nested expansion needs at least one child")
        self.children = list(children)

    def out_dim(self, m):
        for child in self.children:
            m = child.out_dim(m)
        return m

    def _expand(self, X):
        for child in self.children:
            X = child.forward(X)
        return X

    def _vjp(self, X, G):
        inputs = [X]
        for child in self.children[:-1]:
            inputs.append(child.forward(inputs[-1]))
        for child, xin in zip(reversed(self.children), reversed(inputs)):
            G = child.vjp(xin, G)
        return G


class Extended(Expansion):
    """Concatenation of expansions sharing the same input."""

    kind = "extended"

    def __init__(self, children, **kw):
        super().__init__(**kw)
        if not children:
            raise ConfigError("extended expansion needs at least one child")
        self.children = list(children)

    def out_dim(self, m):
        return sum(child.out_dim(m) for child in self.children)

    def _expand(self, X):
        return np.concatenate([child.forward(X) for child in self.children], axis=1)

    def _vjp(self, X, G):
        gx = np.zeros_like(X)
        off = 0
        for child in self.children:
            D = child.out_dim(X.shape[1])
            gx += child.vjp(X, G[:, off:off + D])
            off += D
        return gx


_KINDS = {
    "identity": Identity,
    "reciprocal": Reciprocal,
    "linear": Linear,
    "taylor": Taylor,
    "fourier": Fourier,
    "bspline": BSpline,
    "chebyshev": Chebyshev,
    "jacobi": Jacobi,
    "trig": Trig,
    "arc_trig": ArcTrig,
    "hyperbolic": Hyperbolic,
    "arc_hyperbolic": ArcHyperbolic,
    "gaussian_rbf": GaussianRBF,
    "inverse_quadratic_rbf": InverseQuadraticRBF,
    "combinatorial": Combinatorial,
    "naive_prob": NaiveProb,
    "combinatorial_prob": CombinatorialProb,
    "nested": Nested,
    "extended": Extended,
}


def make_expansion(kind, **hyper):
    """Build an expansion from its kind name and hyper-parameters.

    Nested/extended accept `children` as a list of (kind, hyper) dicts or
    prebuilt Expansion objects.  Probabilistic kinds accept distribution
    dicts of the form {"family": ..., param: value}.
    """
    try:
        cls = _KINDS[kind]
    except KeyError:
        raise ConfigError(f"unknown expansion kind {kind!r}") from None
    hyper = dict(hyper)
    if kind in ("nested", "extended"):
        children = []
        for child in hyper.pop("children", []):
            if isinstance(child, Expansion):
                children.append(child)
            else:
                sub = dict(child)
                children.append(make_expansion(sub.pop("kind"), **sub))
        hyper["children"] = children
    if kind == "naive_prob":
        dists = []
        for d in hyper.pop("dists", []):
            if isinstance(d, DistributionSpec):
                dists.append(d)
            else:
                sub = dict(d)
                dists.append(DistributionSpec(sub.pop("family"), **sub))
        hyper["dists"] = dists
    return cls(**hyper)
