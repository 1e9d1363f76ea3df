"""Return-series statistics and information-criterion model comparison."""

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .em import FitConfig, FitError, fit_multistart
from .special import chi2_sf

JB_ALPHA = 0.05


def log_returns(prices):
    """Percentage log-returns ``100 * (ln P_t - ln P_{t-1})``."""
    p = np.asarray(prices, dtype=float).ravel()
    if p.size < 2:
        raise ValueError("need at least two prices")
    if not np.all(np.isfinite(p)) or np.any(p <= 0):
        raise ValueError("prices must be finite and positive")
    return np.diff(np.log(p)) * 100.0


@dataclass(frozen=True)
class SeriesStats:
    n: int
    mean: float
    median: float
    std: float
    skewness: float
    kurtosis: float
    min: float
    max: float
    jb_stat: float
    jb_p_value: float

    @property
    def jb_significant(self):
        return self.jb_p_value <= JB_ALPHA

    def to_dict(self):
        return asdict(self)


def jarque_bera(n, skewness, kurtosis):
    """Statistic and chi-squared(2) p-value; ``kurtosis`` is the raw standardized moment."""
    stat = n / 6.0 * (skewness ** 2 + (kurtosis - 3.0) ** 2 / 4.0)
    return stat, chi2_sf(stat, 2)


def describe(data):
    x = np.asarray(data, dtype=float).ravel()
    if x.size < 4:
        raise ValueError("describe needs at least 4 observations")
    if not np.all(np.isfinite(x)):
        raise ValueError("data must be finite")
    mean = math.fsum(x) / x.size
    d = x - mean
    m2 = math.fsum(d * d) / x.size
    if m2 > 0:
        skew = math.fsum(d ** 3) / x.size / m2 ** 1.5
        kurt = math.fsum(d ** 4) / x.size / m2 ** 2
    else:
        # A constant series has no defined shape; report the normal values.
        skew, kurt = 0.0, 3.0
    stat, p = jarque_bera(x.size, skew, kurt)
    return SeriesStats(
        n=int(x.size),
        mean=mean,
        median=float(np.median(x)),
        std=math.sqrt(m2 * x.size / (x.size - 1)),
        skewness=skew,
        kurtosis=kurt,
        min=float(x.min()),
        max=float(x.max()),
        jb_stat=stat,
        jb_p_value=p,
    )


def aic(loglik, p):
    return 2.0 * p - 2.0 * loglik


def bic(loglik, p, n):
    return p * math.log(n) - 2.0 * loglik


def n_free_params(K, fixed_shape=False):
    """4K - 1 for free shapes, 3K - 1 when shapes are fixed."""
    return (3 if fixed_shape else 4) * K - 1


@dataclass
class Candidate:
    label: str
    K: int
    config: FitConfig


def compare_models(data, candidates):
    """Fit each candidate and rank by BIC, then AIC.

    Returns a list of row dicts; the sort is stable so exact ties keep the
    order the candidates were given in.
    """
    x = np.asarray(data, dtype=float).ravel()
    cands = [c if isinstance(c, Candidate) else Candidate(*c) for c in candidates]
    if not cands:
        raise ValueError("no candidate models given")
    rows = []
    for order, cand in enumerate(cands):
        try:
            res = fit_multistart(x, cand.K, cand.config)
        except FitError as exc:
            rows.append({"label": cand.label, "order": order, "failed": True, "message": str(exc)})
            continue
        p = n_free_params(cand.K, cand.config.fixed_shape is not None)
        rows.append({
            "label": cand.label,
            "order": order,
            "failed": False,
            "K": cand.K,
            "p": p,
            "loglik": res.loglik,
            "aic": aic(res.loglik, p),
            "bic": bic(res.loglik, p, x.size),
            "converged": res.converged,
            "model": res.model.to_dict(),
        })
    ok = [r for r in rows if not r["failed"]]
    if not ok:
        raise FitError("every candidate fit failed")
    ok.sort(key=lambda r: (r["bic"], r["aic"]))
    best_aic = min(ok, key=lambda r: r["aic"])
    for r in ok:
        r["best_bic"] = r is ok[0]
        r["best_aic"] = r is best_aic
    return ok + [r for r in rows if r["failed"]]


def ranking_tsv(rows):
    lines = ["label\tp\tloglik\taic\tbic\tbest_aic\tbest_bic"]
    for r in rows:
        if r["failed"]:
            lines.append(f"{r['label']}\tNA\tNA\tNA\tNA\t0\t0")
            continue
        lines.append(
            f"{r['label']}\t{r['p']}\t{r['loglik']:.6f}\t{r['aic']:.6f}\t{r['bic']:.6f}"
            f"\t{int(r['best_aic'])}\t{int(r['best_bic'])}"
        )
    return "\n".join(lines) + "\n"


def ranking_json(rows, **kwargs):
    return json.dumps(rows, **kwargs)
