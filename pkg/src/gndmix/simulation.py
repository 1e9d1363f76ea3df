"""Monte Carlo study of ECM versus ECMs parameter recovery."""

import itertools
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .em import FitConfig, FitError, fit_multistart, initial_models
from .gnd import gnd_sample
from .mixture import MgndModel

PARAM_NAMES = ("pi", "mu", "sigma", "nu")


def sample_mixture(truth, n, rng, return_labels=False):
    """Composition sampling: one uniform picks the component, then draw from it.

    With ``return_labels`` the component index of every draw is returned too.
    """
    n = int(n)
    if n < 0:
        raise ValueError("sample size must be non-negative")
    u = rng.random(n)
    cum = np.cumsum(truth.weights)
    labels = np.minimum(np.searchsorted(cum, u, side="right"), truth.n_components - 1)
    out = np.empty(n)
    for k, (_, p) in enumerate(truth.components):
        idx = np.flatnonzero(labels == k)
        out[idx] = gnd_sample(p, rng, idx.size)
    return (out, labels) if return_labels else out


def _spread(values):
    s = float(np.max(values) - np.min(values))
    return s if s > 0 else 1.0


def match_components(estimate, truth):
    """Permutation ``perm`` such that ``estimate`` component ``perm[k]`` pairs with truth ``k``.

    Minimizes a spread-normalized distance on location, scale and weight.
    Shapes are left out on purpose so a runaway shape cannot flip the pairing.
    """
    K = truth.n_components
    if estimate.n_components != K:
        raise ValueError("estimate and truth differ in number of components")
    if K > 8:
        raise ValueError("component matching supports K <= 8")
    s_mu, s_sigma = _spread(truth.mu), _spread(truth.sigma)
    cost = (
        ((estimate.mu[None, :] - truth.mu[:, None]) / s_mu) ** 2
        + ((estimate.sigma[None, :] - truth.sigma[:, None]) / s_sigma) ** 2
        + (estimate.weights[None, :] - truth.weights[:, None]) ** 2
    )
    best, best_cost = None, math.inf
    for perm in itertools.permutations(range(K)):
        c = sum(cost[k, perm[k]] for k in range(K))
        if c < best_cost:
            best, best_cost = perm, c
    return best


def param_labels(K):
    return [f"{name}{k + 1}" for k in range(K) for name in PARAM_NAMES]


def flatten(model, perm=None):
    """Parameter vector ordered as :func:`param_labels`, after relabelling."""
    perm = perm if perm is not None else range(model.n_components)
    cols = [model.weights, model.mu, model.sigma, model.nu]
    return np.array([c[j] for j in perm for c in cols])


def summarize(estimates, truth_vector):
    """AVG and RMSE over replicates (rows of ``estimates``)."""
    est = np.asarray(estimates, dtype=float)
    if est.shape[0] == 0:
        nan = np.full(len(truth_vector), np.nan)
        return nan, nan
    avg = est.mean(axis=0)
    rmse = np.sqrt(np.mean((est - np.asarray(truth_vector)) ** 2, axis=0))
    return avg, rmse


@dataclass
class ScenarioSpec:
    truth: MgndModel
    sample_sizes: tuple = (250, 1000)
    replicates: int = 250
    fit_config_ecm: FitConfig = field(default_factory=lambda: FitConfig(algorithm="ecm"))
    fit_config_ecms: FitConfig = field(default_factory=lambda: FitConfig(algorithm="ecms"))
    seed: int = 0
    name: str = "scenario"

    def __post_init__(self):
        if int(self.replicates) < 1:
            raise ValueError("replicates must be at least 1")
        K = self.truth.n_components
        if any(int(n) < 2 * K for n in self.sample_sizes):
            raise ValueError("every sample size must be at least 2K")
        if self.fit_config_ecm.algorithm != "ecm" or self.fit_config_ecms.algorithm != "ecms":
            raise ValueError("fit configs must be ECM and ECMs respectively")
        if self.fit_config_ecm.n_starts != self.fit_config_ecms.n_starts:
            raise ValueError("both algorithms must use the same number of starts")
        self.sample_sizes = tuple(int(n) for n in self.sample_sizes)
        self.replicates = int(self.replicates)

    @property
    def configs(self):
        return {"ecm": self.fit_config_ecm, "ecms": self.fit_config_ecms}

    def to_dict(self):
        return {
            "name": self.name,
            "truth": self.truth.to_dict(),
            "sample_sizes": list(self.sample_sizes),
            "replicates": self.replicates,
            "seed": self.seed,
            "ecm": self.fit_config_ecm.to_dict(),
            "ecms": self.fit_config_ecms.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc):
        n_starts = int(doc.get("n_starts", 10))
        base = {"n_starts": n_starts}
        ecm = FitConfig.from_dict({**base, **doc.get("ecm", {}), "algorithm": "ecm"})
        ecms = FitConfig.from_dict({**base, **doc.get("ecms", {}), "algorithm": "ecms"})
        return cls(
            truth=MgndModel.from_dict(doc["truth"]),
            sample_sizes=tuple(doc.get("sample_sizes", (250, 1000))),
            replicates=int(doc.get("replicates", 250)),
            fit_config_ecm=ecm,
            fit_config_ecms=ecms,
            seed=int(doc.get("seed", 0)),
            name=str(doc.get("name", "scenario")),
        )

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


_TABLE2 = (
    ((0.7, 1.0, 3.0, 5.0), (0.3, 5.0, 1.0, 1.5)),
    ((0.7, 0.0, 1.0, 5.0), (0.3, 0.0, 3.0, 1.5)),
    ((0.7, 1.0, 1.0, 2.0), (0.3, 5.0, 3.0, 0.8)),
    ((0.7, 0.0, 1.0, 2.0), (0.3, 0.0, 3.0, 0.8)),
)


def builtin_scenarios(replicates=250, sample_sizes=(250, 1000), n_starts=10, seed=0):
    """The four two-component benchmark scenarios."""
    specs = []
    for i, rows in enumerate(_TABLE2, start=1):
        pi, mu, sigma, nu = zip(*rows)
        specs.append(ScenarioSpec(
            truth=MgndModel.from_arrays(pi, mu, sigma, nu),
            sample_sizes=sample_sizes,
            replicates=replicates,
            fit_config_ecm=FitConfig(algorithm="ecm", n_starts=n_starts),
            fit_config_ecms=FitConfig(algorithm="ecms", n_starts=n_starts),
            seed=seed + i,
            name=f"scenario{i}",
        ))
    return specs


@dataclass
class ReplicateOutcome:
    n: int
    replicate: int
    estimates: dict
    failed: dict
    converged: dict
    bound_hits: dict
    iterations: dict
    q_violations: dict
    seconds: dict


def _data_rng(seed, n, replicate):
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(n), int(replicate), 0]))


def _start_seed(seed, n, replicate):
    """Seed shared by both algorithms so they consume identical starts."""
    ss = np.random.SeedSequence([int(seed), int(n), int(replicate), 1])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> 1)


def _run_replicate(spec, n, s, fit_fn=None):
    K = spec.truth.n_components
    x = sample_mixture(spec.truth, n, _data_rng(spec.seed, n, s))
    start_seed = _start_seed(spec.seed, n, s)
    inits = None
    out = ReplicateOutcome(n, s, {}, {}, {}, {}, {}, {}, {})
    for alg, cfg in spec.configs.items():
        cfg = cfg.with_options(seed=start_seed)
        t0 = time.perf_counter()
        if fit_fn is not None:
            model = fit_fn(x, K, cfg)
            res = None
        else:
            if inits is None:
                inits = initial_models(x, K, cfg)
            try:
                res = fit_multistart(x, K, cfg, inits=inits)
                model = res.model
            except FitError:
                res, model = None, None
        out.seconds[alg] = time.perf_counter() - t0
        if model is None:
            out.failed[alg] = True
            out.estimates[alg] = None
            out.converged[alg] = False
            out.bound_hits[alg] = 0
            out.iterations[alg] = 0
            out.q_violations[alg] = 0
            continue
        perm = match_components(model, spec.truth)
        out.failed[alg] = False
        out.estimates[alg] = flatten(model, perm).tolist()
        out.converged[alg] = bool(res.converged) if res else True
        out.bound_hits[alg] = int(res.nu_bound_hits) if res else 0
        out.iterations[alg] = int(res.iterations) if res else 0
        out.q_violations[alg] = sum(r.q_violations for r in res.starts) if res else 0
    return out


@dataclass
class SimReport:
    """AVG/RMSE per (algorithm, N, parameter) plus per-replicate detail."""

    name: str
    truth: MgndModel
    rows: list
    replicates: list

    def cell(self, algorithm, n, param):
        for row in self.rows:
            if row["algorithm"] == algorithm and row["n"] == n and row["param"] == param:
                return row
        raise KeyError((algorithm, n, param))

    def rmse(self, algorithm, n, param):
        return self.cell(algorithm, n, param)["rmse"]

    def avg(self, algorithm, n, param):
        return self.cell(algorithm, n, param)["avg"]

    def total_q_violations(self):
        return sum(sum(r.q_violations.values()) for r in self.replicates)

    def to_tsv(self):
        lines = ["algorithm\tn\tparam\ttrue\tavg\trmse\tn_ok\tn_failed\tn_unconverged\tbound_hits"]
        for r in self.rows:
            lines.append("\t".join([
                r["algorithm"], str(r["n"]), r["param"], _fmt(r["true"]),
                _fmt(r["avg"]), _fmt(r["rmse"]), str(r["n_ok"]), str(r["n_failed"]),
                str(r["n_unconverged"]), str(r["bound_hits"]),
            ]))
        return "\n".join(lines) + "\n"

    def to_dict(self):
        return {
            "name": self.name,
            "truth": self.truth.to_dict(),
            "params": param_labels(self.truth.n_components),
            "summary": self.rows,
            "replicates": [
                {
                    "n": r.n,
                    "replicate": r.replicate,
                    "estimates": r.estimates,
                    "failed": r.failed,
                    "converged": r.converged,
                    "bound_hits": r.bound_hits,
                    "iterations": r.iterations,
                }
                for r in self.replicates
            ],
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)


def _fmt(v):
    return "NA" if v is None or not math.isfinite(v) else repr(float(v))


def run_scenario(spec, n_jobs=1, fit_fn=None):
    """Replicated ECM/ECMs fits on fresh draws from ``spec.truth``.

    ``fit_fn(data, K, config) -> MgndModel`` replaces the estimator, which is
    handy for checking the scoring path in isolation. Results do not depend on
    ``n_jobs``: every replicate has its own streams and the report is
    assembled in (N, replicate) order.
    """
    tasks = [(n, s) for n in spec.sample_sizes for s in range(spec.replicates)]
    if n_jobs == 1 or fit_fn is not None:
        outcomes = [_run_replicate(spec, n, s, fit_fn) for n, s in tasks]
    else:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            outcomes = list(pool.map(_run_replicate, *zip(*[(spec, n, s) for n, s in tasks])))

    labels = param_labels(spec.truth.n_components)
    truth_vec = flatten(spec.truth)
    rows = []
    for alg in ("ecm", "ecms"):
        for n in spec.sample_sizes:
            group = [o for o in outcomes if o.n == n]
            ok = [o.estimates[alg] for o in group if not o.failed[alg]]
            avg, rmse = summarize(np.array(ok).reshape(len(ok), len(labels)), truth_vec)
            n_failed = sum(o.failed[alg] for o in group)
            n_unconv = sum(not o.converged[alg] for o in group if not o.failed[alg])
            hits = sum(o.bound_hits[alg] for o in group)
            for j, label in enumerate(labels):
                rows.append({
                    "algorithm": alg,
                    "n": n,
                    "param": label,
                    "true": float(truth_vec[j]),
                    "avg": None if not ok else float(avg[j]),
                    "rmse": None if not ok else float(rmse[j]),
                    "n_ok": len(ok),
                    "n_failed": n_failed,
                    "n_unconverged": n_unconv,
                    "bound_hits": hits,
                })
    return SimReport(name=spec.name, truth=spec.truth, rows=rows, replicates=outcomes)
