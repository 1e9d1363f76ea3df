"""Command-line interface: ``gndmix {fit,simulate,density,stats,select}``."""

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from .em import FitConfig, FitError, InitializationError, fit_multistart
from .mixture import MgndModel, mixture_moments
from .selection import Candidate, compare_models, describe, log_returns, ranking_json, ranking_tsv
from .simulation import ScenarioSpec, builtin_scenarios, run_scenario

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_FIT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def read_series(path):
    """Single numeric column, comma or newline separated, one optional header line."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    lines = text.splitlines()
    if lines and lines[0].strip():
        first = [t.strip() for t in lines[0].split(",") if t.strip()]
        try:
            [float(t) for t in first]
        except ValueError:
            lines = lines[1:]
    values = []
    for lineno, line in enumerate(lines, start=1):
        for token in line.split(","):
            token = token.strip()
            if not token:
                continue
            try:
                v = float(token)
            except ValueError:
                raise DataError(f"{path}: non-numeric value {token!r} (line {lineno})") from None
            if not math.isfinite(v):
                raise DataError(f"{path}: non-finite value {token!r} (line {lineno})")
            values.append(v)
    if not values:
        raise DataError(f"{path}: no data")
    return np.array(values)


def _load_series(args):
    x = read_series(args.input)
    if getattr(args, "from_prices", False):
        try:
            x = log_returns(x)
        except ValueError as exc:
            raise DataError(str(exc)) from exc
    return x


def _emit(text, output):
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _ext(output, default):
    return Path(output).suffix.lower() if output else default


def _fit_config(args, algorithm=None, fixed_shape=None):
    try:
        return FitConfig(
            algorithm=algorithm or args.algorithm,
            epsilon=args.epsilon,
            eta=args.eta,
            max_iter=args.max_iter,
            n_starts=args.starts,
            seed=args.seed,
            fixed_shape=fixed_shape if fixed_shape is not None else getattr(args, "fixed_shape", None),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _trajectory_table(result, sep):
    K = result.model.n_components
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=sep, lineterminator="\n")
    head = ["iteration", "loglik"]
    for name in ("pi", "mu", "sigma", "nu", "grad_nu"):
        head += [f"{name}{k + 1}" for k in range(K)]
    w.writerow(head)
    t = result.trajectory
    for m in range(len(t)):
        w.writerow([m + 1, repr(float(t.loglik[m]))] + [
            repr(float(v)) for arr in (t.pi, t.mu, t.sigma, t.nu, t.shape_gradient) for v in arr[m]
        ])
    return buf.getvalue()


def cmd_fit(args):
    x = _load_series(args)
    if args.components < 1:
        raise UsageError("--components must be at least 1")
    cfg = _fit_config(args)
    try:
        result = fit_multistart(x, args.components, cfg)
    except InitializationError as exc:
        raise DataError(str(exc)) from exc
    ext = _ext(args.output, ".json")
    if ext in (".csv", ".tsv"):
        _emit(_trajectory_table(result, "," if ext == ".csv" else "\t"), args.output)
    else:
        _emit(result.to_json(indent=2) + "\n", args.output)
    comps = " ".join(
        f"[pi={pi:.4f} mu={p.mu:.4f} sigma={p.sigma:.4f} nu={p.nu:.4f}]"
        for pi, p in result.model.components
    )
    msg = (f"loglik={result.loglik:.4f} iterations={result.iterations} "
           f"converged={result.converged} {comps}")
    print(msg, file=sys.stderr if not args.output else sys.stdout)
    return EXIT_OK


def _load_scenario(arg, args):
    if arg in ("1", "2", "3", "4"):
        spec = builtin_scenarios(seed=args.seed)[int(arg) - 1]
    else:
        try:
            spec = ScenarioSpec.from_json(Path(arg).read_text())
        except OSError as exc:
            raise DataError(f"cannot read scenario {arg}: {exc}") from exc
        except (ValueError, KeyError, TypeError) as exc:
            raise DataError(f"invalid scenario file {arg}: {exc}") from exc
    overrides = {}
    for flag, key in (("epsilon", "epsilon"), ("max_iter", "max_iter"), ("starts", "n_starts")):
        if getattr(args, flag) is not None:
            overrides[key] = getattr(args, flag)
    ecm = spec.fit_config_ecm.with_options(**overrides)
    ecms_over = dict(overrides)
    if args.eta is not None:
        ecms_over["eta"] = args.eta
    ecms = spec.fit_config_ecms.with_options(**ecms_over)
    try:
        return ScenarioSpec(
            truth=spec.truth,
            sample_sizes=tuple(args.size) if args.size else spec.sample_sizes,
            replicates=args.replicates if args.replicates is not None else spec.replicates,
            fit_config_ecm=ecm,
            fit_config_ecms=ecms,
            seed=spec.seed,
            name=spec.name,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_simulate(args):
    spec = _load_scenario(args.scenario, args)
    report = run_scenario(spec, n_jobs=args.jobs)
    ext = _ext(args.output, ".tsv")
    if ext == ".json":
        _emit(report.to_json(indent=2) + "\n", args.output)
    else:
        _emit(report.to_tsv(), args.output)
    return EXIT_OK


def _load_model(path):
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path} is not JSON: {exc}") from exc
    if isinstance(doc, dict) and "model" in doc:
        doc = doc["model"]
    try:
        return MgndModel.from_dict(doc)
    except (ValueError, TypeError) as exc:
        raise DataError(f"{path}: {exc}") from exc


def _parse_grid(text, model):
    if text is None:
        mean, var, _, _ = mixture_moments(model)
        sd = math.sqrt(var)
        return mean - 10 * sd, mean + 10 * sd, 2001
    try:
        lo, hi, n = text.split(",")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise UsageError(f"--grid expects MIN,MAX,N, got {text!r}") from None
    if not (hi > lo and n >= 2):
        raise UsageError("--grid needs MAX > MIN and N >= 2")
    return lo, hi, n


def density_table(model, lo, hi, n):
    """Grid of x, mixture pdf and the weighted component pdfs."""
    x = np.linspace(lo, hi, n)
    comps = np.exp(model.weighted_log_pdfs(x))
    return x, comps.sum(axis=1), comps


def cmd_density(args):
    model = _load_model(args.input)
    lo, hi, n = _parse_grid(args.grid, model)
    x, pdf, comps = density_table(model, lo, hi, n)
    sep = "\t" if _ext(args.output, ".csv") == ".tsv" else ","
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=sep, lineterminator="\n")
    w.writerow(["x", "pdf"] + [f"component{k + 1}" for k in range(model.n_components)])
    for i in range(n):
        w.writerow([repr(float(x[i])), repr(float(pdf[i]))] + [repr(float(c)) for c in comps[i]])
    _emit(buf.getvalue(), args.output)
    return EXIT_OK


def cmd_stats(args):
    x = _load_series(args)
    try:
        stats = describe(x)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    if _ext(args.output, ".tsv") == ".json":
        _emit(json.dumps(stats.to_dict(), indent=2) + "\n", args.output)
    else:
        d = stats.to_dict()
        text = "\t".join(d) + "\n" + "\t".join(
            f"{v:.6g}" if isinstance(v, float) else str(v) for v in d.values()
        ) + "\n"
        _emit(text, args.output)
    return EXIT_OK


def cmd_select(args):
    x = _load_series(args)
    K = args.components
    candidates = [
        Candidate(f"MGND{K}", K, _fit_config(args, algorithm="ecms")),
        Candidate(f"MND{K}", K, _fit_config(args, algorithm="ecms", fixed_shape=2.0)),
    ]
    rows = compare_models(x, candidates)
    if _ext(args.output, ".tsv") == ".json":
        _emit(ranking_json(rows, indent=2) + "\n", args.output)
    else:
        _emit(ranking_tsv(rows), args.output)
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="gndmix", description="Mixtures of generalized normal distributions.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def fit_flags(p, starts_default=10, algorithm=True):
        p.add_argument("--input", required=True)
        p.add_argument("--output")
        p.add_argument("--components", type=int, default=2)
        if algorithm:
            p.add_argument("--algorithm", choices=("ecm", "ecms"), default="ecms")
        p.add_argument("--starts", type=int, default=starts_default)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--epsilon", type=float, default=1e-5)
        p.add_argument("--eta", type=float, default=5e-3)
        p.add_argument("--max-iter", type=int, default=500)
        p.add_argument("--from-prices", action="store_true")

    p = sub.add_parser("fit", help="fit a mixture to a data column")
    fit_flags(p)
    p.add_argument("--fixed-shape", type=float)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simulate", help="Monte Carlo comparison of ECM and ECMs")
    p.add_argument("--scenario", required=True, help="1-4 or a scenario JSON file")
    p.add_argument("--output")
    p.add_argument("--replicates", type=int)
    p.add_argument("--size", type=int, action="append")
    p.add_argument("--starts", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("density", help="mixture and component densities on a grid")
    p.add_argument("--input", required=True, help="model or fit-result JSON")
    p.add_argument("--output")
    p.add_argument("--grid", help="MIN,MAX,N")
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("stats", help="descriptive statistics and Jarque-Bera test")
    p.add_argument("--input", required=True)
    p.add_argument("--output")
    p.add_argument("--from-prices", action="store_true")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("select", help="AIC/BIC comparison of GND and normal mixtures")
    fit_flags(p, starts_default=5, algorithm=False)
    p.set_defaults(func=cmd_select)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"gndmix: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"gndmix: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FitError as exc:
        print(f"gndmix: fit failed: {exc}", file=sys.stderr)
        return EXIT_FIT
    except ValueError as exc:
        print(f"gndmix: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
