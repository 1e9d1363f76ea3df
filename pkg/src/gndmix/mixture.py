"""Finite mixtures of generalized normal components."""

import json
import math
from dataclasses import dataclass
from math import comb

import numpy as np

from .gnd import GndParams, gnd_central_moment, log_norm_const

WEIGHT_TOL = 1e-12
JSON_WEIGHT_TOL = 1e-9
SHAPE_TOL = 1e-6


def logsumexp(a, axis=-1):
    """Row-wise log-sum-exp that tolerates rows of all ``-inf``."""
    a = np.asarray(a, dtype=float)
    amax = np.max(a, axis=axis, keepdims=True)
    amax = np.where(np.isfinite(amax), amax, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - amax), axis=axis, keepdims=True)) + amax
    return np.squeeze(out, axis=axis)


def component_log_pdfs(x, mu, sigma, nu):
    """N x K matrix of component log-densities for parameter arrays."""
    x = np.asarray(x, dtype=float)[:, None]
    const = np.array([log_norm_const(s, v) for s, v in zip(sigma, nu)])
    z = np.abs((x - np.asarray(mu)) / np.asarray(sigma))
    return const - z ** np.asarray(nu)


@dataclass(frozen=True)
class MgndModel:
    """K weighted GND components in a fixed order.

    ``components`` is a tuple of ``(pi, GndParams)`` pairs.
    """

    components: tuple

    def __post_init__(self):
        comps = tuple((float(pi), p) for pi, p in self.components)
        if not comps:
            raise ValueError("a mixture needs at least one component")
        for pi, p in comps:
            if not isinstance(p, GndParams):
                raise TypeError("components must hold GndParams")
            if not (0.0 < pi <= 1.0):
                raise ValueError(f"mixing weight {pi!r} outside (0, 1]")
        total = math.fsum(pi for pi, _ in comps)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise ValueError(f"mixing weights sum to {total!r}, not 1")
        object.__setattr__(self, "components", comps)

    @classmethod
    def from_arrays(cls, pi, mu, sigma, nu):
        return cls(tuple(
            (float(w), GndParams(float(m), float(s), float(v)))
            for w, m, s, v in zip(pi, mu, sigma, nu)
        ))

    @property
    def n_components(self):
        return len(self.components)

    @property
    def weights(self):
        return np.array([pi for pi, _ in self.components])

    @property
    def mu(self):
        return np.array([p.mu for _, p in self.components])

    @property
    def sigma(self):
        return np.array([p.sigma for _, p in self.components])

    @property
    def nu(self):
        return np.array([p.nu for _, p in self.components])

    @property
    def n_params(self):
        """Free parameters: K weights less one, plus three per component."""
        return 4 * self.n_components - 1

    def weighted_log_pdfs(self, x):
        """N x K matrix of ``ln pi_k + ln f_k(x_n)``."""
        return np.log(self.weights) + component_log_pdfs(x, self.mu, self.sigma, self.nu)

    def to_dict(self):
        return {"components": [
            {"pi": pi, "mu": p.mu, "sigma": p.sigma, "nu": p.nu}
            for pi, p in self.components
        ]}

    @classmethod
    def from_dict(cls, doc):
        try:
            rows = doc["components"]
            pi = np.array([float(c["pi"]) for c in rows])
            mu = [float(c["mu"]) for c in rows]
            sigma = [float(c["sigma"]) for c in rows]
            nu = [float(c["nu"]) for c in rows]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed mixture document: {exc}") from exc
        total = math.fsum(pi)
        if abs(total - 1.0) > JSON_WEIGHT_TOL:
            raise ValueError(f"mixing weights sum to {total!r}, not 1")
        pi = pi / total
        # Push any residual rounding into the largest weight.
        pi[np.argmax(pi)] += 1.0 - math.fsum(pi)
        return cls.from_arrays(pi, mu, sigma, nu)

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def mixture_log_pdf(m, x):
    """ln sum_k pi_k f_k(x), for a scalar or an array of points."""
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    out = logsumexp(m.weighted_log_pdfs(arr), axis=1)
    return float(out[0]) if np.ndim(x) == 0 else out


def _as_data(data):
    x = np.asarray(data, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("data must be non-empty")
    if not np.all(np.isfinite(x)):
        raise ValueError("data must be finite")
    return x


def log_likelihood(m, data):
    x = _as_data(data)
    return math.fsum(logsumexp(m.weighted_log_pdfs(x), axis=1))


def posterior(weighted):
    """Per-row log normalizer and responsibilities from log joint densities."""
    lse = logsumexp(weighted, axis=1)
    z = np.exp(weighted - lse[:, None])
    return lse, z / z.sum(axis=1, keepdims=True)


def normalize_log_weights(weighted):
    """Turn an N x K matrix of log joint densities into responsibilities."""
    return posterior(weighted)[1]


def responsibilities(m, data):
    """Posterior component probabilities, one row per observation."""
    x = np.asarray(data, dtype=float).ravel()
    return normalize_log_weights(m.weighted_log_pdfs(x))


def mixture_moments(m):
    """Mean, variance, skewness and kurtosis of the mixture.

    Central moments come from expanding each component around the mixture
    mean: E[(X - mean)^r] = sum_k pi_k sum_i C(r, i) (mu_k - mean)^(r-i) c_i(k),
    with c_i(k) the i-th central moment of component k.
    """
    mean = math.fsum(pi * p.mu for pi, p in m.components)

    def central(r):
        return math.fsum(
            pi * comb(r, i) * (p.mu - mean) ** (r - i) * gnd_central_moment(p, i)
            for pi, p in m.components
            for i in range(r + 1)
        )

    var = central(2)
    skew = central(3) / var ** 1.5
    kurt = central(4) / var ** 2
    return mean, var, skew, kurt


_SHAPE_NAMES = {2.0: "normal", 1.0: "Laplace"}


def submodel(m):
    """Name the two-component family implied by the shape parameters."""
    if m.n_components != 2:
        raise ValueError("submodel classification is defined for K = 2 only")

    def kind(nu):
        for ref, name in _SHAPE_NAMES.items():
            if abs(nu - ref) <= SHAPE_TOL:
                return name
        return "GND"

    a, b = (kind(v) for v in m.nu)
    if a == b:
        return f"{a} mixture"
    order = ["normal", "Laplace", "GND"]
    a, b = sorted((a, b), key=order.index)
    return f"{a}-{b} mixture"
