"""Log-density functions used by the probabilistic feature expansions.

Each family provides `logpdf(x)` and `dlogpdf(x)` (the derivative with
respect to x), vectorized over arrays.  Parameters are frozen constants
fixed at spec time; they may be scalars or arrays broadcastable against
the feature axis.  Log-densities are floored at LOG_FLOOR so that zero
density never produces an infinite value.
"""

import numpy as np
from scipy.special import gammaln

from .errors import ConfigError

# roughly log of the smallest positive normal double
LOG_FLOOR = -745.0

LOG_2PI = np.log(2.0 * np.pi)


class DistributionSpec:
    """A frozen univariate distribution: family name plus its parameters.

    Families and parameters:
        gaussian(mu, sigma), exponential(lam), laplace(mu, b),
        cauchy(x0, gamma), chi2(k), gamma(k, theta)
    """

    FAMILIES = ("gaussian", "exponential", "laplace", "cauchy", "chi2", "gamma")

    def __init__(self, family, **params):
        if family not in self.FAMILIES:
            raise ConfigError(f"unknown distribution family {family!r}")
        self.family = family
        self.params = {k: np.asarray(v, dtype=np.float64) for k, v in params.items()}
        expected = {
            "gaussian": {"mu", "sigma"},
            "exponential": {"lam"},
            "laplace": {"mu", "b"},
            "cauchy": {"x0", "gamma"},
            "chi2": {"k"},
            "gamma": {"k", "theta"},
        }[family]
        if set(self.params) != expected:
            raise ConfigError(
                f"{family} needs parameters {sorted(expected)}, got {sorted(self.params)}")
        for name in ("sigma", "lam", "b", "gamma", "k", "theta"):
            if name in self.params and np.any(self.params[name] <= 0):
                raise ConfigError(f"{family}: parameter {name!r} must be strictly positive")

    def __repr__(self):
        ps = ", ".join(f"{k}={v}" for k, v in self.params.items())
        return f"DistributionSpec({self.family}, {ps})"

    def logpdf(self, x):
        p = self.params
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.family == "gaussian":
                z = (x - p["mu"]) / p["sigma"]
                out = -np.log(p["sigma"]) - 0.5 * LOG_2PI - 0.5 * z * z
            elif self.family == "exponential":
                out = np.where(x >= 0, np.log(p["lam"]) - p["lam"] * x, -np.inf)
            elif self.family == "laplace":
                out = -np.log(2.0 * p["b"]) - np.abs(x - p["mu"]) / p["b"]
            elif self.family == "cauchy":
                z = (x - p["x0"]) / p["gamma"]
                out = -np.log(np.pi * p["gamma"]) - np.log1p(z * z)
            elif self.family == "chi2":
                k = p["k"]
                out = np.where(
                    x > 0,
                    (0.5 * k - 1.0) * np.log(np.maximum(x, 1e-300))
                    - 0.5 * x - 0.5 * k * np.log(2.0) - gammaln(0.5 * k),
                    -np.inf)
            else:  # gamma
                k, theta = p["k"], p["theta"]
                out = np.where(
                    x > 0,
                    (k - 1.0) * np.log(np.maximum(x, 1e-300))
                    - x / theta - k * np.log(theta) - gammaln(k),
                    -np.inf)
        return np.maximum(out, LOG_FLOOR)

    def dlogpdf(self, x):
        """d/dx of logpdf; zero wherever the value sits at the floor."""
        p = self.params
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.family == "gaussian":
                g = -(x - p["mu"]) / (p["sigma"] ** 2)
            elif self.family == "exponential":
                g = np.where(x >= 0, -p["lam"] * np.ones_like(x), 0.0)
            elif self.family == "laplace":
                g = -np.sign(x - p["mu"]) / p["b"]
            elif self.family == "cauchy":
                d = x - p["x0"]
                g = -2.0 * d / (p["gamma"] ** 2 + d * d)
            elif self.family == "chi2":
                g = np.where(x > 0, (0.5 * p["k"] - 1.0) / np.where(x > 0, x, 1.0) - 0.5, 0.0)
            else:  # gamma
                g = np.where(
                    x > 0,
                    (p["k"] - 1.0) / np.where(x > 0, x, 1.0) - 1.0 / p["theta"],
                    0.0)
        floored = self.logpdf(x) <= LOG_FLOOR
        return np.where(floored, 0.0, g)


class MultivariateNormal:
    """Multivariate normal log-likelihood over a fixed subset of features."""

    def __init__(self, mean, cov):
        self.mean = np.asarray(mean, dtype=np.float64)
        self.cov = np.asarray(cov, dtype=np.float64)
        k = self.mean.shape[0]
        if self.cov.shape != (k, k):
            raise ConfigError(f"covariance must be {k}x{k}, got {self.cov.shape}")
        sign, logdet = np.linalg.slogdet(self.cov)
        if sign <= 0:
            raise ConfigError("covariance must be positive definite")
        self.prec = np.linalg.inv(self.cov)
        self._const = -0.5 * (k * LOG_2PI + logdet)

    def logpdf(self, x):
        """x: (..., k) -> (...,) log-density."""
        d = x - self.mean
        q = np.einsum("...i,ij,...j->...", d, self.prec, d)
        return np.maximum(self._const - 0.5 * q, LOG_FLOOR)

    def dlogpdf(self, x):
        """Gradient with respect to x, shape (..., k)."""
        g = -(x - self.mean) @ self.prec.T
        floored = self.logpdf(x) <= LOG_FLOOR
        return np.where(floored[..., None], 0.0, g)
