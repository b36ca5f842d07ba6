"""Parameter reconciliation functions psi: R^l -> R^{n x D}.

A reconciliation fabricates a full n x D weight matrix from a short
learnable vector.  Each kind knows its closed-form required length,
fabricates the matrix with `fabricate(w)`, and pulls a matrix cotangent
back to the parameter vector with `vjp(w, G)`.

Sub-vector split order is fixed row-major: LoRR stores A then B; HM
stores A then B; LPHM stores A, S, T; dual LPHM stores P, Q, S, T.
"""

import math

import numpy as np

from .activations import silu, silu_vjp
from .errors import ConfigError, ShapeError
from .tensorops import make_rng


class Reconciliation:
    kind = None

    def __init__(self, n, D):
        if n < 1 or D < 1:
            raise ConfigError(f"reconciliation needs n, D >= 1, got n={n}, D={D}")
        self.n = int(n)
        self.D = int(D)

    @property
    def required_length(self):
        """Count of learnable scalar parameters."""
        raise NotImplementedError

    @property
    def storage_length(self):
        """Length of the stored parameter buffer (== required_length except masking)."""
        return self.required_length

    def fabricate(self, w):
        raise NotImplementedError

    def vjp(self, w, G):
        raise NotImplementedError

    def _check_w(self, w):
        w = np.asarray(w, dtype=np.float64)
        if w.shape != (self.storage_length,):
            raise ShapeError(
                f"{self.kind} reconciliation expects a parameter vector of length "
                f"{self.storage_length}, got shape {w.shape}")
        return w

    def init_params(self, rng):
        l = self.storage_length
        if l == 0:
            return np.zeros(0)
        return rng.normal(0.0, 1.0 / math.sqrt(self.required_length or 1), size=l)


class Constant(Reconciliation):
    """All entries equal to c; the eye variant returns the identity matrix."""

    kind = "constant"

    def __init__(self, n, D, c=0.0, eye=False):
        super().__init__(n, D)
        if eye and n != D:
            raise ConfigError(f"eye reconciliation requires n == D, got {n} x {D}")
        self.c = float(c)
        self.eye = bool(eye)

    @property
    def required_length(self):
        return 0

    def fabricate(self, w):
        self._check_w(w)
        if self.eye:
            return np.eye(self.n)
        return np.full((self.n, self.D), self.c)

    def vjp(self, w, G):
        return np.zeros(0)


class IdentityRecon(Reconciliation):
    """Row-major reshape of w into n x D."""

    kind = "identity"

    @property
    def required_length(self):
        return self.n * self.D

    def fabricate(self, w):
        return self._check_w(w).reshape(self.n, self.D)

    def vjp(self, w, G):
        return np.asarray(G).ravel().copy()


class Masking(Reconciliation):
    """Dense reshape with a fixed binary mask of round(p*nD) learnable entries.

    Storage stays a full nD buffer; the mask zeroes both the fabricated
    entries and their gradients, so masked storage slots are inert.
    """

    kind = "masking"

    def __init__(self, n, D, p, seed=0):
        super().__init__(n, D)
        if not 0.0 <= p <= 1.0:
            raise ConfigError(f"masking ratio must lie in [0, 1], got {p}")
        self.p = float(p)
        self.seed = int(seed)
        total = self.n * self.D
        keep = int(math.floor(self.p * total + 0.5))  # round half up
        order = make_rng(self.seed).permutation(total)
        mask = np.zeros(total)
        mask[order[:keep]] = 1.0
        self.mask = mask.reshape(self.n, self.D)
        self._keep = keep

    @property
    def required_length(self):
        return self._keep

    @property
    def storage_length(self):
        return self.n * self.D

    def fabricate(self, w):
        return self.mask * self._check_w(w).reshape(self.n, self.D)

    def vjp(self, w, G):
        return (self.mask * np.asarray(G)).ravel()


class DuplicatedPadding(Reconciliation):
    """Tile a small (n/p) x (D/q) block p x q times: W = ones(p,q) kron B."""

    kind = "duplicated_padding"

    def __init__(self, n, D, p=1, q=1):
        super().__init__(n, D)
        if p < 1 or q < 1 or n % p or D % q:
            raise ConfigError(
                f"duplicated_padding needs p | n and q | D, got n={n}, D={D}, p={p}, q={q}")
        self.p, self.q = int(p), int(q)
        self.s, self.t = n // p, D // q

    @property
    def required_length(self):
        return self.s * self.t

    def fabricate(self, w):
        B = self._check_w(w).reshape(self.s, self.t)
        return np.kron(np.ones((self.p, self.q)), B)

    def vjp(self, w, G):
        G4 = np.asarray(G).reshape(self.p, self.s, self.q, self.t)
        return G4.sum(axis=(0, 2)).ravel()


class LoRR(Reconciliation):
    """Low-rank product W = A B^T with A (n x r) stored before B (D x r)."""

    kind = "lorr"

    def __init__(self, n, D, r=1):
        super().__init__(n, D)
        if r < 1:
            raise ConfigError(f"lorr rank must be >= 1, got {r}")
        self.r = int(r)

    @property
    def required_length(self):
        return (self.n + self.D) * self.r

    def _split(self, w):
        w = self._check_w(w)
        cut = self.n * self.r
        return w[:cut].reshape(self.n, self.r), w[cut:].reshape(self.D, self.r)

    def fabricate(self, w):
        A, B = self._split(w)
        return A @ B.T

    def vjp(self, w, G):
        A, B = self._split(w)
        G = np.asarray(G)
        return np.concatenate([(G @ B).ravel(), (G.T @ A).ravel()])


class _KronBase(Reconciliation):
    """Shared adjoint for W = A kron B with A (p x q), B (s x t)."""

    def __init__(self, n, D, p, q):
        super().__init__(n, D)
        if p < 1 or q < 1 or n % p or D % q:
            raise ConfigError(
                f"{self.kind} needs p | n and q | D, got n={n}, D={D}, p={p}, q={q}")
        self.p, self.q = int(p), int(q)
        self.s, self.t = n // p, D // q

    def _kron_grads(self, G, A, B):
        G4 = np.asarray(G).reshape(self.p, self.s, self.q, self.t)
        gA = np.einsum("iajb,ab->ij", G4, B)
        gB = np.einsum("iajb,ij->ab", G4, A)
        return gA, gB


class HM(_KronBase):
    """Hypercomplex-style W = A kron B; w stores A (pq) then B (st)."""

    kind = "hm"

    @property
    def required_length(self):
        return self.p * self.q + self.s * self.t

    def _split(self, w):
        w = self._check_w(w)
        cut = self.p * self.q
        return w[:cut].reshape(self.p, self.q), w[cut:].reshape(self.s, self.t)

    def fabricate(self, w):
        A, B = self._split(w)
        return np.kron(A, B)

    def vjp(self, w, G):
        A, B = self._split(w)
        gA, gB = self._kron_grads(G, A, B)
        return np.concatenate([gA.ravel(), gB.ravel()])


class LPHM(_KronBase):
    """W = A kron (S T^T); w stores A (pq), S (s x r), T (t x r)."""

    kind = "lphm"

    def __init__(self, n, D, p, q, r=1):
        super().__init__(n, D, p, q)
        if r < 1:
            raise ConfigError(f"lphm rank must be >= 1, got {r}")
        self.r = int(r)

    @property
    def required_length(self):
        return self.p * self.q + self.r * (self.s + self.t)

    def _split(self, w):
        w = self._check_w(w)
        c1 = self.p * self.q
        c2 = c1 + self.s * self.r
        return (w[:c1].reshape(self.p, self.q),
                w[c1:c2].reshape(self.s, self.r),
                w[c2:].reshape(self.t, self.r))

    def fabricate(self, w):
        A, S, T = self._split(w)
        return np.kron(A, S @ T.T)

    def vjp(self, w, G):
        A, S, T = self._split(w)
        gA, gB = self._kron_grads(G, A, S @ T.T)
        return np.concatenate([gA.ravel(), (gB @ T).ravel(), (gB.T @ S).ravel()])


class DualLPHM(_KronBase):
    """W = (P Q^T) kron (S T^T); w stores P, Q, S, T row-major."""

    kind = "dual_lphm"

    def __init__(self, n, D, p, q, r=1):
        super().__init__(n, D, p, q)
        if r < 1:
            raise ConfigError(f"dual_lphm rank must be >= 1, got {r}")
        self.r = int(r)

    @property
    def required_length(self):
        return self.r * (self.p + self.q + self.s + self.t)

    def _split(self, w):
        w = self._check_w(w)
        r = self.r
        cuts = np.cumsum([self.p * r, self.q * r, self.s * r])
        P = w[:cuts[0]].reshape(self.p, r)
        Q = w[cuts[0]:cuts[1]].reshape(self.q, r)
        S = w[cuts[1]:cuts[2]].reshape(self.s, r)
        T = w[cuts[2]:].reshape(self.t, r)
        return P, Q, S, T

    def fabricate(self, w):
        P, Q, S, T = self._split(w)
        return np.kron(P @ Q.T, S @ T.T)

    def vjp(self, w, G):
        P, Q, S, T = self._split(w)
        gA, gB = self._kron_grads(G, P @ Q.T, S @ T.T)
        return np.concatenate([
            (gA @ Q).ravel(), (gA.T @ P).ravel(),
            (gB @ T).ravel(), (gB.T @ S).ravel()])


class Hypernet(Reconciliation):
    """Frozen random 1-hidden-layer SiLU network mapping w (length l) to n*D.

    The network weights are drawn once from the seed with standard
    deviation 1/sqrt(fan_in), biases zero, and never trained; only w is
    learnable.
    """

    kind = "hypernet"

    def __init__(self, n, D, l, width=64, seed=0):
        super().__init__(n, D)
        if l < 1 or width < 1:
            raise ConfigError("hypernet needs l >= 1 and width >= 1")
        self.l = int(l)
        self.width = int(width)
        self.seed = int(seed)
        rng = make_rng(self.seed)
        self.W1 = rng.normal(0.0, 1.0 / math.sqrt(self.l), size=(self.width, self.l))
        self.b1 = np.zeros(self.width)
        self.W2 = rng.normal(0.0, 1.0 / math.sqrt(self.width), size=(n * D, self.width))
        self.b2 = np.zeros(n * D)

    @property
    def required_length(self):
        return self.l

    def fabricate(self, w):
        w = self._check_w(w)
        h = silu(self.W1 @ w + self.b1)
        return (self.W2 @ h + self.b2).reshape(self.n, self.D)

    def vjp(self, w, G):
        w = self._check_w(w)
        pre = self.W1 @ w + self.b1
        gh = self.W2.T @ np.asarray(G).ravel()
        return self.W1.T @ silu_vjp(pre, gh)


_KINDS = {
    "constant": Constant,
    "identity": IdentityRecon,
    "masking": Masking,
    "duplicated_padding": DuplicatedPadding,
    "lorr": LoRR,
    "hm": HM,
    "lphm": LPHM,
    "dual_lphm": DualLPHM,
    "hypernet": Hypernet,
}


def make_reconciliation(kind, n, D, **hyper):
    try:
        cls = _KINDS[kind]
    except KeyError:
        raise ConfigError(f"unknown reconciliation kind {kind!r}") from None
    return cls(n, D, **hyper)
