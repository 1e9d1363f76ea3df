"""ECM and ECMs estimation of GND mixtures.

Both estimators share one iteration: an E-step, then for each component a
Newton step on the location, the closed-form scale update and a Newton step
on the shape, then the weight update. They differ only in the shape step and
the stopping rule. Newton steps divide by the magnitude of the curvature, so
they are ordinary Newton steps where Q is concave and still move uphill
where it is not (a location with shape below 1, for instance).

* ECM takes full Newton steps on the shape and stops when the
  log-likelihood changes by at most ``epsilon``.
* ECMs damps the shape step by ``exp(-nu)`` and only updates a component's
  shape while the magnitude of its shape gradient exceeds ``eta``. The
  likelihood stop is only checked in iterations where every component's
  gate is closed.
"""

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .mixture import (
    MgndModel,
    component_log_pdfs,
    normalize_log_weights,
)
from .special import digamma, log_gamma, trigamma

ALGORITHMS = ("ecm", "ecms")
STEP_SIZES = ("unit", "adaptive")
GATES = ("magnitude", "signed")

ABS_FLOOR = 1e-10
LOG_ABS_FLOOR = math.log(ABS_FLOOR)
Q_TOL = 1e-9
SIGMA_FLOOR = 1e-8
INIT_SIGMA_FLOOR = 1e-6
COLLAPSE_MASS = 1e-10
SIGMA_FLOOR_STREAK = 10
KMEANS_ITER = 50


class ComponentCollapse(RuntimeError):
    """A component lost (numerically) all of its responsibility mass."""

    def __init__(self, component, mass):
        super().__init__(f"component {component} collapsed (mass {mass:.3g})")
        self.component = component
        self.mass = mass


class InitializationError(ValueError):
    pass


class FitError(RuntimeError):
    """Every start of a multi-start fit failed."""

    def __init__(self, message, results=()):
        super().__init__(message)
        self.results = tuple(results)


@dataclass(frozen=True)
class FitConfig:
    """Estimator settings.

    ``step_size`` defaults to ``"unit"`` for ECM and ``"adaptive"`` for ECMs.
    An ``eta`` of ``-inf`` switches the shape gate off, in which case the
    likelihood stop is checked every iteration as in plain ECM. With
    ``gate="magnitude"`` a shape is updated while ``|g| > eta``;
    ``gate="signed"`` uses ``g > eta``, which never lets a shape decrease.
    ``track_q`` audits that the scale and weight updates never lower Q.
    """

    algorithm: str = "ecms"
    epsilon: float = 1e-5
    eta: float = 5e-3
    max_iter: int = 500
    n_starts: int = 10
    seed: int = 0
    shape_init_range: tuple = (0.5, 3.0)
    fixed_shape: float = None
    nu_bounds: tuple = (0.1, 30.0)
    step_size: str = None
    gate: str = "magnitude"
    track_q: bool = False

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.step_size is not None and self.step_size not in STEP_SIZES:
            raise ValueError(f"step_size must be one of {STEP_SIZES}")
        if self.gate not in GATES:
            raise ValueError(f"gate must be one of {GATES}")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if math.isnan(self.eta):
            raise ValueError("eta must not be NaN")
        if self.algorithm == "ecms" and not self.eta > 0 and self.eta != -math.inf:
            raise ValueError("eta must be positive (or -inf to disable the gate)")
        if int(self.max_iter) < 1 or int(self.n_starts) < 1:
            raise ValueError("max_iter and n_starts must be positive")
        lo, hi = (float(v) for v in self.nu_bounds)
        if not 0 < lo < hi:
            raise ValueError("nu_bounds must satisfy 0 < low < high")
        a, b = (float(v) for v in self.shape_init_range)
        if not lo <= a <= b <= hi:
            raise ValueError("shape_init_range must lie inside nu_bounds")
        if self.fixed_shape is not None and not float(self.fixed_shape) > 0:
            raise ValueError("fixed_shape must be positive")
        object.__setattr__(self, "nu_bounds", (lo, hi))
        object.__setattr__(self, "shape_init_range", (a, b))
        object.__setattr__(self, "max_iter", int(self.max_iter))
        object.__setattr__(self, "n_starts", int(self.n_starts))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def adaptive(self):
        if self.step_size is None:
            return self.algorithm == "ecms"
        return self.step_size == "adaptive"

    @property
    def gated(self):
        return self.algorithm == "ecms" and self.eta != -math.inf

    def gate_open(self, g):
        return (abs(g) if self.gate == "magnitude" else g) > self.eta

    def with_options(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        return {
            "algorithm": self.algorithm,
            "epsilon": self.epsilon,
            "eta": self.eta,
            "max_iter": self.max_iter,
            "n_starts": self.n_starts,
            "seed": self.seed,
            "shape_init_range": list(self.shape_init_range),
            "fixed_shape": self.fixed_shape,
            "nu_bounds": list(self.nu_bounds),
            "step_size": self.step_size,
            "gate": self.gate,
        }

    @classmethod
    def from_dict(cls, doc):
        doc = dict(doc)
        for key in ("shape_init_range", "nu_bounds"):
            if key in doc:
                doc[key] = tuple(doc[key])
        return cls(**doc)


@dataclass
class Trajectory:
    """Per-iteration record of a fit, one row per completed sweep."""

    loglik: np.ndarray
    pi: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray
    nu: np.ndarray
    shape_gradient: np.ndarray
    gate_closed: np.ndarray

    def __len__(self):
        return len(self.loglik)

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, f), getattr(other, f), equal_nan=True)
            for f in ("loglik", "pi", "mu", "sigma", "nu", "shape_gradient", "gate_closed")
        )

    def rows(self):
        for m in range(len(self)):
            yield {
                "iteration": m + 1,
                "loglik": float(self.loglik[m]),
                "pi": self.pi[m].tolist(),
                "mu": self.mu[m].tolist(),
                "sigma": self.sigma[m].tolist(),
                "nu": self.nu[m].tolist(),
                "shape_gradient": self.shape_gradient[m].tolist(),
            }


@dataclass
class FitResult:
    model: MgndModel
    loglik: float
    iterations: int
    converged: bool
    trajectory: Trajectory
    responsibilities: np.ndarray
    start_index: int = 0
    failed: bool = False
    message: str = ""
    nu_bound_hits: int = 0
    skipped_steps: int = 0
    q_violations: int = 0
    starts: tuple = field(default=(), repr=False)

    def to_dict(self, trajectory=True):
        doc = {
            "model": self.model.to_dict(),
            "loglik": self.loglik,
            "iterations": self.iterations,
            "converged": self.converged,
            "failed": self.failed,
            "message": self.message,
            "start_index": self.start_index,
            "nu_bound_hits": self.nu_bound_hits,
        }
        if trajectory:
            doc["trajectory"] = list(self.trajectory.rows())
        return doc

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)


def start_rng(seed, start_index):
    """Independent, reproducible stream for one start."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(start_index)]))


def _validate_data(data, K):
    x = np.asarray(data, dtype=float).ravel()
    if not np.all(np.isfinite(x)):
        raise ValueError("data must be finite")
    if K < 1:
        raise ValueError("need at least one component")
    if x.size < K:
        raise ValueError(f"need at least K={K} observations, got {x.size}")
    return x


def _lloyd_1d(x, K):
    uniq = np.unique(x)
    if uniq.size < K:
        raise InitializationError(f"fewer than K={K} distinct values in the data")
    centers = np.unique(np.quantile(x, (np.arange(K) + 0.5) / K))
    if centers.size < K:
        # Tied quantiles; spread the seeds over the distinct values instead.
        centers = uniq[np.round(np.linspace(0, uniq.size - 1, K)).astype(int)]
    labels = None
    for _ in range(KMEANS_ITER):
        new_labels = np.argmin(np.abs(x[:, None] - centers[None, :]), axis=1)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for k in range(K):
            members = x[labels == k]
            if members.size:
                centers[k] = members.mean()
    return labels


def kmeans_init(data, K, rng, shape_init_range=(0.5, 3.0)):
    """k-means starting point: cluster means and standard deviations, random shapes and weights.

    Returns ``(model, responsibilities)``.
    """
    x = _validate_data(data, K)
    labels = _lloyd_1d(x, K)
    mu = np.empty(K)
    sigma = np.empty(K)
    for k in range(K):
        members = x[labels == k]
        mu[k] = members.mean()
        sigma[k] = members.std(ddof=1) if members.size > 1 else 0.0
    sigma = np.maximum(sigma, INIT_SIGMA_FLOOR)
    nu = rng.uniform(shape_init_range[0], shape_init_range[1], size=K)
    pi = rng.uniform(0.0, 1.0, size=K)
    pi = pi / pi.sum()
    model = MgndModel.from_arrays(_exact_simplex(pi), mu, sigma, nu)
    z = normalize_log_weights(model.weighted_log_pdfs(x))
    return model, z


def _exact_simplex(pi):
    pi = np.asarray(pi, dtype=float)
    pi = pi / pi.sum()
    pi[np.argmax(pi)] += 1.0 - math.fsum(pi)
    return pi


def e_step(m, data):
    """Responsibilities and the Q-function at the current parameters."""
    x = np.asarray(data, dtype=float).ravel()
    weighted = m.weighted_log_pdfs(x)
    z = normalize_log_weights(weighted)
    return z, math.fsum((z * weighted).ravel())


def q_function(m, data, z):
    """sum_k sum_n z_nk [ln pi_k + ln f_k(x_n)] for fixed responsibilities."""
    x = np.asarray(data, dtype=float).ravel()
    return math.fsum((np.asarray(z) * m.weighted_log_pdfs(x)).ravel())


def update_weights(z):
    """Mixing weights as mean responsibilities (columns of an N x K matrix)."""
    mass = np.asarray(z, dtype=float).sum(axis=0)
    for k, mk in enumerate(mass):
        if not mk >= COLLAPSE_MASS:
            raise ComponentCollapse(k, mk)
    return mass / mass.sum()


# The sweep works from log|x - mu| so every power is a single exp(nu * log).


def _abs_log(x, mu):
    """Signed residuals and log|x - mu| (``-inf`` where x == mu)."""
    d = x - mu
    with np.errstate(divide="ignore"):
        return d, np.log(np.abs(d))


def _location_step(x, zk, mu, nu):
    d, lad = _abs_log(x, mu)
    lad = np.maximum(lad, LOG_ABS_FLOOR)
    p1 = np.exp((nu - 1.0) * lad)
    a = np.dot(zk, np.copysign(p1, d))
    # |curvature| keeps the step uphill when Q is not concave in mu (nu < 1)
    b = np.dot(zk, np.exp((nu - 2.0) * lad)) * abs(nu - 1.0)
    if not math.isfinite(b) or b == 0.0:
        return mu, a != 0.0
    new = mu + a / b
    if not math.isfinite(new):
        return mu, True
    return new, False


def _scale_from_logs(zk, lad, nu, mass):
    s = nu * np.dot(zk, np.exp(nu * lad)) / mass
    return max(float(s ** (1.0 / nu)), SIGMA_FLOOR)


def _shape_derivs_from_logs(zk, lad, sigma, nu, mass):
    lu = np.maximum(lad - math.log(sigma), LOG_ABS_FLOOR)
    w = zk * np.exp(nu * lu) * lu
    inv = 1.0 / nu
    psi = digamma(inv)
    per_obs = inv * (inv * psi + 1.0)
    per_obs2 = -inv * inv * (1.0 + 2.0 * inv * psi + inv * inv * trigamma(inv))
    g = mass * per_obs - np.sum(w)
    gp = mass * per_obs2 - np.dot(w, lu)
    return float(g), float(gp)


def update_location(data, zk, mu, sigma, nu):
    """One Newton step ``mu + A/|B|`` on the location; degenerate steps are no-ops.

    ``sigma`` cancels from the Newton ratio but is kept in the signature so
    the conditional updates share their arguments.
    """
    x = np.asarray(data, dtype=float)
    return _location_step(x, np.asarray(zk, dtype=float), float(mu), float(nu))[0]


def update_scale(data, zk, mu, nu):
    """Closed-form conditional maximizer of Q in the scale."""
    x = np.asarray(data, dtype=float)
    zk = np.asarray(zk, dtype=float)
    _, lad = _abs_log(x, float(mu))
    return _scale_from_logs(zk, lad, float(nu), zk.sum())


def _derivs(data, zk, mu, sigma, nu):
    x = np.asarray(data, dtype=float)
    zk = np.asarray(zk, dtype=float)
    _, lad = _abs_log(x, float(mu))
    return _shape_derivs_from_logs(zk, lad, float(sigma), float(nu), zk.sum())


def shape_gradient(data, zk, mu, sigma, nu):
    """First derivative of Q in the shape of one component."""
    return _derivs(data, zk, mu, sigma, nu)[0]


def shape_curvature(data, zk, mu, sigma, nu):
    """Second derivative of Q in the shape of one component."""
    return _derivs(data, zk, mu, sigma, nu)[1]


def step_size(nu, adaptive=True):
    """Damping factor for the shape Newton step: exp(-nu), or 1 when plain."""
    return math.exp(-nu) if adaptive else 1.0


def _shape_step(nu, g, gp, alpha, bounds):
    """Returns ``(new_nu, hit_bound, skipped)``."""
    new = nu + alpha * (g / abs(gp)) if gp != 0.0 else math.nan
    if not math.isfinite(new):
        return nu, False, True
    lo, hi = bounds
    if new < lo or new > hi:
        return min(max(new, lo), hi), True, False
    return new, False, False


def update_shape(data, zk, mu, sigma, nu, mode="adaptive", nu_bounds=(0.1, 30.0)):
    """Newton step ``nu + alpha g/|g'|``, damped by exp(-nu) in adaptive mode and clamped to bounds."""
    if mode not in ("plain", "adaptive"):
        raise ValueError("mode must be 'plain' or 'adaptive'")
    g, gp = _derivs(data, zk, mu, sigma, nu)
    return _shape_step(float(nu), g, gp, step_size(nu, mode == "adaptive"), nu_bounds)[0]


def _scale_q(mass, wsum, sigma, nu):
    """Terms of Q that move with one component's scale, given sum z |x - mu|^nu."""
    return mass * (math.log(nu) - math.log(2.0 * sigma) - log_gamma(1.0 / nu)) - wsum / sigma ** nu


def fit(data, K, config=None, init=None, start_index=0):
    """Single-start ECM/ECMs fit.

    ``init`` is an optional starting ``MgndModel``; by default a k-means start
    is drawn from the stream for ``(config.seed, start_index)``.
    """
    config = config or FitConfig()
    x = _validate_data(data, K)
    if init is None:
        init, _ = kmeans_init(x, K, start_rng(config.seed, start_index), config.shape_init_range)
    if init.n_components != K:
        raise ValueError("initial model has the wrong number of components")

    pi, mu, sigma = init.weights.copy(), init.mu.copy(), init.sigma.copy()
    nu = init.nu.copy()
    fixed = config.fixed_shape is not None
    if fixed:
        nu[:] = float(config.fixed_shape)
    adaptive, gated = config.adaptive, config.gated

    # Row k of ``weighted`` holds ln pi_k + ln f_k(x_n); K x N keeps rows contiguous.
    weighted = np.log(pi)[:, None] + component_log_pdfs(x, mu, sigma, nu).T
    loglik_prev, z = _posterior_rows(weighted)

    rec = {key: [] for key in ("loglik", "pi", "mu", "sigma", "nu", "grad", "closed")}
    best = (pi.copy(), mu.copy(), sigma.copy(), nu.copy(), loglik_prev, z)
    converged = failed = False
    message = ""
    bound_hits = skipped = q_violations = 0
    floor_streak = np.zeros(K, dtype=int)
    grad = np.zeros(K)
    closed = np.zeros(K, dtype=bool)

    if not math.isfinite(loglik_prev):
        failed, message = True, "non-finite log-likelihood at the starting point"

    for _ in range(config.max_iter if not failed else 0):
        mass = z.sum(axis=1)
        if np.any(~(mass >= COLLAPSE_MASS)):
            k = int(np.argmin(mass))
            failed, message = True, str(ComponentCollapse(k, mass[k]))
            break
        for k in range(K):
            zk = z[k]
            mu[k], skip = _location_step(x, zk, mu[k], nu[k])
            skipped += skip
            _, lad = _abs_log(x, mu[k])
            sigma_old = sigma[k]
            sigma[k] = _scale_from_logs(zk, lad, nu[k], mass[k])
            if config.track_q:
                wsum = np.dot(zk, np.exp(nu[k] * lad))
                if _scale_q(mass[k], wsum, sigma[k], nu[k]) < _scale_q(mass[k], wsum, sigma_old, nu[k]) - Q_TOL:
                    q_violations += 1
            floor_streak[k] = floor_streak[k] + 1 if sigma[k] <= SIGMA_FLOOR else 0

            g, gp = _shape_derivs_from_logs(zk, lad, sigma[k], nu[k], mass[k])
            grad[k] = g
            if fixed or (gated and not config.gate_open(g)):
                closed[k] = True
            else:
                closed[k] = False
                nu[k], hit, skip = _shape_step(nu[k], g, gp, step_size(nu[k], adaptive), config.nu_bounds)
                bound_hits += hit
                skipped += skip
            weighted[k] = (
                math.log(nu[k]) - math.log(2.0 * sigma[k]) - log_gamma(1.0 / nu[k])
                - np.exp(nu[k] * (lad - math.log(sigma[k])))
            )

        new_pi = mass / mass.sum()
        if config.track_q:
            if np.dot(mass, np.log(new_pi)) < np.dot(mass, np.log(pi)) - Q_TOL:
                q_violations += 1
        pi = new_pi
        weighted += np.log(pi)[:, None]
        loglik, z = _posterior_rows(weighted)

        rec["loglik"].append(loglik)
        rec["pi"].append(pi.copy())
        rec["mu"].append(mu.copy())
        rec["sigma"].append(sigma.copy())
        rec["nu"].append(nu.copy())
        rec["grad"].append(grad.copy())
        rec["closed"].append(closed.copy())

        if not math.isfinite(loglik):
            failed, message = True, "non-finite log-likelihood"
            break
        best = (pi.copy(), mu.copy(), sigma.copy(), nu.copy(), loglik, z)
        if np.any(floor_streak >= SIGMA_FLOOR_STREAK):
            k = int(np.argmax(floor_streak))
            failed, message = True, f"component {k} scale stuck at the floor"
            break
        if (not gated or closed.all()) and abs(loglik - loglik_prev) <= config.epsilon:
            converged = True
            break
        loglik_prev = loglik

    pi_b, mu_b, sigma_b, nu_b, loglik_b, z_b = best
    traj = Trajectory(
        loglik=np.asarray(rec["loglik"], dtype=float),
        pi=np.asarray(rec["pi"], dtype=float).reshape(-1, K),
        mu=np.asarray(rec["mu"], dtype=float).reshape(-1, K),
        sigma=np.asarray(rec["sigma"], dtype=float).reshape(-1, K),
        nu=np.asarray(rec["nu"], dtype=float).reshape(-1, K),
        shape_gradient=np.asarray(rec["grad"], dtype=float).reshape(-1, K),
        gate_closed=np.asarray(rec["closed"], dtype=bool).reshape(-1, K),
    )
    return FitResult(
        model=MgndModel.from_arrays(_exact_simplex(pi_b), mu_b, sigma_b, nu_b),
        loglik=loglik_b,
        iterations=len(traj),
        converged=converged and not failed,
        trajectory=traj,
        responsibilities=np.ascontiguousarray(z_b.T),
        start_index=start_index,
        failed=failed,
        message=message or ("converged" if converged else "iteration cap reached"),
        nu_bound_hits=bound_hits,
        skipped_steps=skipped,
        q_violations=q_violations,
    )


def _posterior_rows(weighted):
    """Log-likelihood and K x N responsibilities from K x N log joint densities."""
    top = weighted.max(axis=0)
    top = np.where(np.isfinite(top), top, 0.0)
    e = np.exp(weighted - top)
    tot = e.sum(axis=0)
    with np.errstate(divide="ignore"):
        lse = np.log(tot) + top
    return float(np.sum(lse)), e / tot


def initial_models(data, K, config):
    """The k-means starting points a multi-start fit will use, one per start."""
    x = _validate_data(data, K)
    return [
        kmeans_init(x, K, start_rng(config.seed, i), config.shape_init_range)[0]
        for i in range(config.n_starts)
    ]


def fit_multistart(data, K, config=None, inits=None):
    """Best of ``config.n_starts`` fits by final log-likelihood.

    Failed starts are skipped; ties go to the lowest start index. Passing the
    same ``inits`` to two configurations makes them share starting points.
    """
    config = config or FitConfig()
    x = _validate_data(data, K)
    if inits is None:
        inits = initial_models(x, K, config)
    results = [fit(x, K, config, init=m, start_index=i) for i, m in enumerate(inits)]
    best = None
    for res in results:
        if res.failed:
            continue
        if best is None or res.loglik > best.loglik:
            best = res
    if best is None:
        detail = "; ".join(f"start {r.start_index}: {r.message}" for r in results)
        raise FitError(f"all {len(results)} starts failed ({detail})", results)
    return replace(best, starts=tuple(results))
