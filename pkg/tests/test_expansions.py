import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polyfab.distributions import DistributionSpec
from polyfab.errors import ConfigError, DomainError
from polyfab.expansions import make_expansion

from conftest import fd_expansion_vjp, rel_err

ALL_KINDS = {
    "identity": {},
    "reciprocal": {},
    "linear": {"c": 2.5},
    "taylor": {"d": 3},
    "fourier": {"P": 2.0, "N": 2},
    "bspline": {"t": 4, "degree": 3, "lo": -2.0, "hi": 2.0},
    "chebyshev": {"d": 4},
    "jacobi": {"d": 3, "alpha": 0.5, "beta": -0.25},
    "trig": {},
    "arc_trig": {},
    "hyperbolic": {},
    "arc_hyperbolic": {},
    "gaussian_rbf": {"centers": [-0.5, 0.0, 0.5], "eps": 1.3},
    "inverse_quadratic_rbf": {"centers": [-0.5, 0.5], "eps": 0.9},
    "combinatorial": {"d": 2},
    "naive_prob": {"dists": [{"family": "gaussian", "mu": 0.0, "sigma": 1.0},
                             {"family": "laplace", "mu": 0.0, "b": 1.0}]},
    "combinatorial_prob": {"d": 2},
    "nested": {"children": [{"kind": "bspline", "t": 3, "degree": 2},
                            {"kind": "taylor", "d": 2}]},
    "extended": {"children": [{"kind": "taylor", "d": 2},
                              {"kind": "bspline", "t": 3, "degree": 2}]},
}


def make(kind, **over):
    hyper = dict(ALL_KINDS[kind])
    hyper.update(over)
    return make_expansion(kind, **hyper)


# ---------------------------------------------------------------------------
# out_dim formulas

def test_out_dim_formulas():
    assert make_expansion("taylor", d=2).out_dim(2) == 6
    assert make_expansion("fourier", P=1.0, N=3).out_dim(2) == 12
    assert make_expansion("bspline", t=5, degree=3).out_dim(2) == 16
    assert make_expansion("chebyshev", d=4).out_dim(3) == 12
    assert make_expansion("jacobi", d=4).out_dim(3) == 12
    assert make_expansion("trig").out_dim(5) == 15
    assert make_expansion("gaussian_rbf", centers=[0, 1, 2]).out_dim(4) == 12
    assert make_expansion("combinatorial", d=2).out_dim(3) == 9
    assert make_expansion("combinatorial_prob", d=2).out_dim(4) == 10
    assert make_expansion("naive_prob",
                          dists=[{"family": "exponential", "lam": 1.0}]).out_dim(3) == 3
    # combinators: sum of children / chained dims
    assert make("extended").out_dim(2) == 6 + 2 * 5
    nested = make_expansion("nested", children=[
        {"kind": "taylor", "d": 2}, {"kind": "taylor", "d": 2}])
    assert nested.out_dim(2) == 6 + 36


def test_unknown_kind_rejected():
    with pytest.raises(ConfigError):
        make_expansion("spline")


# ---------------------------------------------------------------------------
# forward values against hand-computed oracles

def test_pointwise_values():
    assert np.allclose(make_expansion("identity").forward([1.5, -2.0]),
                       [[1.5, -2.0]])
    assert np.allclose(make_expansion("reciprocal").forward([2.0]), [[0.5]])
    assert np.allclose(make_expansion("linear", c=3.0).forward([1.0, 2.0]),
                       [[3.0, 6.0]])
    assert np.allclose(make_expansion("hyperbolic").forward([0.0]),
                       [[1.0, 0.0, 0.0]])


def test_reciprocal_zero_is_domain_error():
    with pytest.raises(DomainError):
        make_expansion("reciprocal").forward([0.0, 1.0])


def test_taylor_values():
    out = make_expansion("taylor", d=2).forward([2.0, 3.0])
    assert np.allclose(out, [[2, 3, 4, 6, 6, 9]])
    assert np.allclose(make_expansion("taylor", d=3).forward([0.0, 0.0]), 0.0)
    assert np.allclose(make_expansion("taylor", d=3).forward([1.0]), [[1, 1, 1]])


def test_fourier_values():
    out = make_expansion("fourier", P=1.0, N=1).forward([0.25])
    assert np.allclose(out, [[0.0, 1.0]], atol=1e-15)
    out = make_expansion("fourier", P=3.0, N=2).forward([0.0])
    assert np.allclose(out, [[1, 0, 1, 0]])


def test_fourier_periodicity():
    e = make_expansion("fourier", P=1.7, N=3)
    x = np.array([[0.3, -0.9]])
    assert np.allclose(e.forward(x), e.forward(x + 1.7), atol=1e-12)


def test_bspline_degree0_one_hot():
    e = make_expansion("bspline", t=4, degree=0, lo=0.0, hi=4.0)
    out = e.forward([2.5])
    assert np.allclose(out, [[0, 0, 1, 0]])


def test_bspline_partition_of_unity(rng):
    for degree in (1, 2, 3):
        e = make_expansion("bspline", t=5, degree=degree)
        X = rng.uniform(-1, 1, size=(50, 2))
        out = e.forward(X).reshape(50, 5 + degree, 2)
        assert np.allclose(out.sum(axis=1), 1.0, atol=1e-10)


def test_bspline_degree1_hat_at_knot():
    e = make_expansion("bspline", t=4, degree=1, lo=0.0, hi=4.0)
    out = e.forward([2.0])[0]
    # at an interior knot exactly one hat function peaks at 1
    assert np.isclose(out.max(), 1.0)
    assert np.isclose(out.sum(), 1.0)


def test_chebyshev_values():
    out = make_expansion("chebyshev", d=3).forward([0.5])
    assert np.allclose(out, [[0.5, -0.5, -1.0]])
    assert np.allclose(make_expansion("chebyshev", d=5).forward([1.0]), 1.0)


def test_chebyshev_cosine_oracle(rng):
    x = rng.uniform(-1, 1, size=(20, 1))
    out = make_expansion("chebyshev", d=6).forward(x).reshape(20, 6)
    oracle = np.cos(np.arange(1, 7)[None, :] * np.arccos(x))
    assert np.max(np.abs(out - oracle)) < 1e-10


def test_jacobi_values(rng):
    assert np.allclose(make_expansion("jacobi", d=1).forward([0.5]), [[0.5]])
    assert np.allclose(make_expansion("jacobi", d=2).forward([1.0]), [[1.0, 1.0]])
    # alpha=beta=0 reduces to Legendre; compare with an explicit recursion
    x = rng.uniform(-1, 1, size=11)
    out = make_expansion("jacobi", d=5).forward(x[None, :]).reshape(5, 11)
    P = [np.ones_like(x), x]
    for n in range(2, 6):
        P.append(((2 * n - 1) * x * P[-1] - (n - 1) * P[-2]) / n)
    assert np.max(np.abs(out - np.stack(P[1:]))) < 1e-12


def test_arc_trig_domain():
    with pytest.raises(DomainError):
        make_expansion("arc_trig").forward([1.5])
    out = make_expansion("arc_trig").forward([0.0])
    assert np.allclose(out, [[np.pi / 2, 0.0, 0.0]])


def test_rbf_values():
    e = make_expansion("gaussian_rbf", centers=[1.0], eps=1.0)
    assert np.allclose(e.forward([2.0]), [[math.exp(-1.0)]])
    assert np.allclose(e.forward([1.0]), [[1.0]])
    iq = make_expansion("inverse_quadratic_rbf", centers=[0.0], eps=2.0)
    assert np.allclose(iq.forward([1.0]), [[1.0 / 5.0]])


def test_rbf_bounded(rng):
    for kind in ("gaussian_rbf", "inverse_quadratic_rbf"):
        e = make_expansion(kind, centers=[-1, 0, 1], eps=1.5)
        out = e.forward(rng.normal(size=(30, 3)))
        assert np.all(out > 0) and np.all(out <= 1.0)


def test_combinatorial_enumeration():
    e = make_expansion("combinatorial", d=2)
    assert np.allclose(e.forward([5.0, 7.0]), [[5, 7, 5, 7]])
    out = e.forward([1.0, 2.0, 3.0])
    assert np.allclose(out, [[1, 2, 3, 1, 2, 1, 3, 2, 3]])


def test_naive_prob_values():
    g = make_expansion("naive_prob", dists=[{"family": "gaussian", "mu": 0.0,
                                             "sigma": 1.0}])
    assert np.allclose(g.forward([0.0]), [[-0.5 * math.log(2 * math.pi)]])
    l = make_expansion("naive_prob", dists=[{"family": "laplace", "mu": 0.0,
                                             "b": 1.0}])
    assert np.allclose(l.forward([0.0]), [[-math.log(2.0)]])
    ex = make_expansion("naive_prob", dists=[{"family": "exponential", "lam": 1.0}])
    assert np.allclose(ex.forward([1.0]), [[-1.0]])


def test_naive_prob_floor():
    g = make_expansion("naive_prob", dists=[{"family": "gaussian", "mu": 0.0,
                                             "sigma": 1.0}])
    out = g.forward([1e6])
    assert np.all(np.isfinite(out))
    assert out[0, 0] == -745.0


def test_combinatorial_prob_values():
    e = make_expansion("combinatorial_prob", d=2)
    out = e.forward([0.0, 0.0])[0]
    assert np.allclose(out[:2], -0.5 * math.log(2 * math.pi))
    assert np.isclose(out[2], -math.log(2 * math.pi))


def test_combinator_identity_laws(rng):
    base = make_expansion("chebyshev", d=3)
    single_nested = make_expansion("nested", children=[base])
    single_ext = make_expansion("extended", children=[base])
    X = rng.uniform(-0.9, 0.9, size=(7, 2))
    assert np.array_equal(single_nested.forward(X), base.forward(X))
    assert np.array_equal(single_ext.forward(X), base.forward(X))
    assert np.array_equal(
        make_expansion("nested", children=[{"kind": "identity"},
                                           {"kind": "identity"}]).forward(X), X)


def test_processors_wrap(rng):
    X = rng.normal(size=(5, 3))
    e = make_expansion("identity", post_processor="relu")
    assert np.allclose(e.forward(X), np.maximum(X, 0))
    e = make_expansion("identity", pre_processor="sigmoid")
    assert np.allclose(e.forward(X), 1 / (1 + np.exp(-X)))
    e = make_expansion("identity", post_processor="layer_norm")
    out = e.forward(X)
    assert np.allclose(out.mean(axis=1), 0.0, atol=1e-9)


# ---------------------------------------------------------------------------
# invariants

@given(st.sampled_from(sorted(ALL_KINDS)), st.integers(2, 5),
       st.integers(0, 10 ** 6))
@settings(max_examples=60, deadline=None)
def test_length_and_determinism(kind, m, seed):
    e = make(kind)
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.1, 0.9, size=(4, m))
    out = e.forward(X)
    assert out.shape == (4, e.out_dim(m))
    assert np.array_equal(out, e.forward(X))  # bit-identical


# ---------------------------------------------------------------------------
# VJP vs finite differences

@pytest.mark.parametrize("kind", sorted(ALL_KINDS))
def test_vjp_matches_finite_differences(kind, rng):
    e = make(kind)
    m = 3
    x = rng.uniform(0.15, 0.85, size=m)
    D = e.out_dim(m)
    G = rng.normal(size=D)
    analytic = e.vjp(x[None, :], G[None, :])[0]
    numeric = fd_expansion_vjp(e, x, G)
    assert rel_err(analytic, numeric) < 1e-5


@pytest.mark.parametrize("proc", ["sigmoid", "relu", "silu", "layer_norm"])
def test_vjp_with_processors(proc, rng):
    e = make_expansion("taylor", d=2, pre_processor=proc, post_processor="silu")
    x = rng.uniform(0.2, 0.8, size=3)
    G = rng.normal(size=e.out_dim(3))
    analytic = e.vjp(x[None, :], G[None, :])[0]
    numeric = fd_expansion_vjp(e, x, G)
    assert rel_err(analytic, numeric) < 1e-5


def test_identity_vjp_trivial(rng):
    G = rng.normal(size=(2, 4))
    X = rng.normal(size=(2, 4))
    assert np.array_equal(make_expansion("identity").vjp(X, G), G)
    assert np.array_equal(make_expansion("taylor", d=1).vjp(X, G), G)
