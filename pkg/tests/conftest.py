import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def fd_expansion_vjp(expansion, x, G, h=1e-6):
    """Central-difference oracle for an expansion's input gradient."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    for i in range(x.size):
        xp = x.copy()
        xp[i] += h
        up = expansion.forward(xp[None, :])[0]
        xp[i] -= 2 * h
        dn = expansion.forward(xp[None, :])[0]
        out[i] = G @ (up - dn) / (2 * h)
    return out


def fd_recon_vjp(recon, w, G, h=1e-6):
    """Central-difference oracle for d<G, psi(w)>/dw."""
    w = np.asarray(w, dtype=np.float64)
    out = np.zeros_like(w)
    for i in range(w.size):
        wp = w.copy()
        wp[i] += h
        up = float((G * recon.fabricate(wp)).sum())
        wp[i] -= 2 * h
        dn = float((G * recon.fabricate(wp)).sum())
        out[i] = (up - dn) / (2 * h)
    return out


def rel_err(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1.0)
    return float(np.max(np.abs(a - b) / denom)) if a.size else 0.0
