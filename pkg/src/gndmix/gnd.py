"""Generalized normal distribution: density, analytic moments and sampling.

The density with location ``mu``, scale ``sigma`` and shape ``nu`` is

    f(x) = nu / (2 sigma Gamma(1/nu)) * exp(-|(x - mu) / sigma|^nu)

It is the Laplace law at ``nu = 1`` and the normal law with variance
``sigma**2 / 2`` at ``nu = 2``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .special import log_gamma


@dataclass(frozen=True)
class GndParams:
    mu: float
    sigma: float
    nu: float

    def __post_init__(self):
        for name in ("mu", "sigma", "nu"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if self.sigma <= 0.0:
            raise ValueError(f"sigma must be positive, got {self.sigma!r}")
        if self.nu <= 0.0:
            raise ValueError(f"nu must be positive, got {self.nu!r}")


def log_norm_const(sigma, nu):
    """ln(nu) - ln(2 sigma) - ln Gamma(1/nu)."""
    return math.log(nu) - math.log(2.0 * sigma) - log_gamma(1.0 / nu)


def gnd_log_pdf(p, x):
    """Log-density of ``GND(p)`` at ``x`` (scalar or array)."""
    z = np.abs((np.asarray(x, dtype=float) - p.mu) / p.sigma)
    out = log_norm_const(p.sigma, p.nu) - z ** p.nu
    return float(out) if out.ndim == 0 else out


def gnd_central_moment(p, n):
    """n-th central moment; odd moments vanish by symmetry."""
    n = int(n)
    if n < 0:
        raise ValueError("moment order must be non-negative")
    if n == 0:
        return 1.0
    if n % 2:
        return 0.0
    # sigma^n {1 + (-1)^n} Gamma((n+1)/nu) / (2 Gamma(1/nu)) with n even
    return p.sigma ** n * math.exp(log_gamma((n + 1) / p.nu) - log_gamma(1.0 / p.nu))


def gnd_variance(p):
    return gnd_central_moment(p, 2)


def gnd_kurtosis(p):
    """Standardized fourth moment (3 for the normal case)."""
    inv = 1.0 / p.nu
    return math.exp(log_gamma(inv) + log_gamma(5.0 * inv) - 2.0 * log_gamma(3.0 * inv))


def gnd_sample(p, rng, n):
    """Draw ``n`` variates as ``mu + sigma * S * E**(1/nu)``.

    ``S`` is a random sign and ``E ~ Gamma(1/nu, 1)``; ``|Z|**nu`` of a
    standardized GND variate has exactly that gamma law.
    """
    n = int(n)
    if n < 0:
        raise ValueError("sample size must be non-negative")
    if n == 0:
        return np.empty(0)
    e = rng.gamma(1.0 / p.nu, 1.0, size=n)
    sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    return p.mu + p.sigma * sign * e ** (1.0 / p.nu)
