"""Command line front end.

Exit codes: 0 success, 2 unparsable input, 3 mismatched alphabets or
spaces, 4 missing parameter, 5 runtime failure. ``DETLIM_SEED`` in the
environment overrides ``--seed`` and any seed in a config file.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import replace
from typing import Any

import numpy as np

from . import __version__
from .bounds import GanSpec, KINDS, REGIMES, TESTS, check_inequalities, log_bound
from .distributions import MetricAlphabet, Pmf, load_json, make_rng, make_space, random_pmf
from .divergence import divergence_report
from .epidemic import Graph, gen_ba, gen_er, outbreak_sweep, structural_threshold
from .errors import AlphabetMismatch, DetlimError, InvalidSpec, MissingParameter, SpaceMismatch
from .hyptest import TestConfig, bayes_test, fit_exponent, np_test, predicted_log_rate

EXIT_OK, EXIT_PARSE, EXIT_MISMATCH, EXIT_MISSING, EXIT_RUNTIME = 0, 2, 3, 4, 5


class ParseError(Exception):
    pass


def _fail(code: int, message: str) -> int:
    print(f"detlim: error: {message}", file=sys.stderr)
    return code


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ParseError(f"expected comma-separated numbers, got {text!r}") from exc


def _int_list(text: str) -> list[int]:
    values = _float_list(text)
    if any(v != int(v) for v in values):
        raise ParseError(f"expected comma-separated integers, got {text!r}")
    return [int(v) for v in values]


def _seed(args, fallback: int | None = None) -> int:
    env = os.environ.get("DETLIM_SEED")
    if env is not None and env.strip():
        return int(env)
    if getattr(args, "seed", None) is not None:
        return int(args.seed)
    return 0 if fallback is None else int(fallback)


def _jsonable(x: Any) -> Any:
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return x
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.generic):
        return _jsonable(x.item())
    return x


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump_json(obj: Any) -> str:
    return json.dumps(_jsonable(obj), indent=2) + "\n"


def _csv_text(header: list[str], rows: list[list[Any]], comments: list[str] = ()) -> str:
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_jsonable(v) for v in row])
    return buf.getvalue()


def _load_pmf(path: str, what: str) -> Pmf:
    try:
        return Pmf.from_dict(load_json(path))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ParseError(f"{what} ({path}): {type(exc).__name__}: {exc}") from exc


def _pmf_field(data: dict, key: str) -> Pmf:
    if key not in data:
        raise ParseError(f"missing field {key!r}")
    try:
        return Pmf.from_dict(data[key])
    except (ValueError, KeyError, TypeError) as exc:
        raise ParseError(f"field {key!r}: {type(exc).__name__}: {exc}") from exc


def _load_config(path: str, allowed: set[str]) -> dict:
    try:
        data = load_json(path)
    except (OSError, ValueError) as exc:
        raise ParseError(f"config ({path}): {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError("config must be a JSON object")
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ParseError(f"unknown config field(s): {unknown}")
    return data


# -- divergence -------------------------------------------------------------------

def cmd_divergence(args) -> int:
    p = _load_pmf(args.p_file, "p")
    q = _load_pmf(args.q_file, "q")
    space: MetricAlphabet | None = None
    if args.space:
        try:
            space = MetricAlphabet.from_dict(load_json(args.space))
        except (OSError, ValueError, KeyError, TypeError) as exc:
            if isinstance(exc, SpaceMismatch):
                raise
            raise ParseError(f"space ({args.space}): {exc}") from exc
    report = divergence_report(p, q, space)
    out = report.to_dict()
    out["inequalities"] = check_inequalities(p, q, space).to_dict()
    out["version"] = __version__
    _emit(args, _dump_json(out))
    return EXIT_OK


# -- table ------------------------------------------------------------------------

def cmd_table(args) -> int:
    kinds = list(KINDS) if args.l_kind == "all" else [args.l_kind]
    regimes = [args.regime] if args.regime else list(REGIMES)
    tests = [args.test] if args.test else list(TESTS)
    opts = _float_list(args.opt)
    ns = _int_list(args.n)
    if not opts or not ns:
        raise ParseError("--opt and --n need at least one value")
    rows = []
    for kind in kinds:
        for regime in regimes:
            for test in tests:
                if (kind == "kl" and regime == "general" and test == "bayes"
                        and args.pg_star is None and args.test is None):
                    print("detlim: note: skipping general-regime KL Bayes rows (no --pg-star)",
                          file=sys.stderr)
                    continue
                for opt in sorted(opts):
                    for n in sorted(ns):
                        spec = GanSpec(
                            kind, opt,
                            p_g_star=args.pg_star if kind == "kl" else None,
                            diam=args.diam if kind == "wasserstein" else None,
                        )
                        rows.append([kind, regime, test, opt, n, log_bound(spec, n, regime, test)])
    header = ["l_kind", "regime", "test", "opt", "n", "log_bound"]
    if args.format == "json":
        _emit(args, _dump_json({"version": __version__,
                                "rows": [dict(zip(header, r)) for r in rows]}))
    else:
        _emit(args, _csv_text(header, rows))
    return EXIT_OK


# -- hyptest ----------------------------------------------------------------------

_HYPTEST_FIELDS = {"p_legit", "p_fake", "n", "n_grid", "alpha", "priors", "trials",
                   "seed", "tests", "method"}


def _hyptest_setup(args) -> tuple[TestConfig, list[int], list[str], dict]:
    data = _load_config(args.config, _HYPTEST_FIELDS)
    p = _pmf_field(data, "p_legit")
    q = _pmf_field(data, "p_fake")
    try:
        n_grid = [int(x) for x in data.get("n_grid", [])]
        if not n_grid and "n" in data:
            n_grid = [int(data["n"])]
        if args.n:
            n_grid = _int_list(args.n)
        if not n_grid:
            raise ParseError("config needs 'n' or 'n_grid' (or pass --n)")
        priors = tuple(float(x) for x in data.get("priors", (0.5, 0.5)))
        if args.priors:
            priors = tuple(_float_list(args.priors))
        if len(priors) != 2:
            raise ParseError("priors must have two entries")
        tests = list(data.get("tests", ["np", "bayes"]))
        if args.test:
            tests = [args.test]
        bad = [t for t in tests if t not in TESTS]
        if bad:
            raise ParseError(f"field 'tests': unknown test(s) {bad}")
        config = TestConfig(
            p, q, n_grid[0],
            alpha=float(args.alpha if args.alpha is not None else data.get("alpha", 0.05)),
            priors=priors,
            trials=int(args.trials if args.trials is not None else data.get("trials", 10_000)),
            seed=_seed(args, data.get("seed", 0)),
            method=str(data.get("method", "auto")),
        )
    except AlphabetMismatch:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ParseError(f"config: {type(exc).__name__}: {exc}") from exc
    echo = config.to_dict()
    echo["n_grid"] = n_grid
    echo["tests"] = tests
    return config, n_grid, tests, echo


def cmd_hyptest(args) -> int:
    config, n_grid, tests, echo = _hyptest_setup(args)
    runners = {"np": np_test, "bayes": bayes_test}
    rows, results = [], []
    for test in tests:
        for n in n_grid:
            est = runners[test](replace(config, n=n))
            rate = est.rate
            expo = -math.log(rate) / n if rate > 0 else math.inf
            pred = predicted_log_rate(config.p_legit, config.p_fake, n, test)
            rows.append([n, test, rate, est.wilson_halfwidth, pred, expo])
            entry = est.to_dict()
            entry.update(n=n, rate=rate, predicted_log_bound=pred, exponent=expo)
            results.append(entry)
    fits = {}
    if len(n_grid) >= 4:
        for test in tests:
            rates = [r[2] for r in rows if r[1] == test]
            fits[test] = fit_exponent(n_grid, rates)._asdict()
    if args.format == "csv":
        comments = [f"detlim {__version__} hyptest", "config " + json.dumps(_jsonable(echo))]
        text = _csv_text(["n", "test", "rate", "halfwidth", "predicted_log_bound", "exponent"],
                         rows, comments)
    else:
        text = _dump_json({"command": "hyptest", "version": __version__, "config": echo,
                           "results": results, "fits": fits})
    _emit(args, text)
    return EXIT_OK


# -- epidemic ---------------------------------------------------------------------

_EPIDEMIC_FIELDS = {"graph", "beta_grid", "gamma", "runs_per_point", "seed", "max_steps",
                    "lambda_c_method"}


def _build_graph(spec: dict, seed: int) -> Graph:
    kind = spec.get("kind")
    if kind == "er":
        return gen_er(int(spec["nodes"]), float(spec["edge_prob"]), seed)
    if kind == "ba":
        return gen_ba(int(spec["nodes"]), int(spec["attach_m"]), seed)
    if kind == "file":
        with open(spec["path"]) as fh:
            return Graph.from_edgelist(fh.read(), spec.get("nodes"))
    raise ParseError(f"field 'graph.kind': expected er, ba or file, got {kind!r}")


def cmd_epidemic(args) -> int:
    data = _load_config(args.config, _EPIDEMIC_FIELDS) if args.config else {}
    try:
        graph_spec = dict(data.get("graph", {}))
        if args.graph:
            graph_spec["kind"] = args.graph
        for key in ("nodes", "edge_prob", "attach_m", "path"):
            value = getattr(args, key.replace("-", "_"), None)
            if value is not None:
                graph_spec[key] = value
        if "kind" not in graph_spec:
            raise MissingParameter("no graph given (config 'graph' or --graph)")
        beta_grid = [float(b) for b in data.get("beta_grid", [])]
        if args.beta:
            beta_grid = _float_list(args.beta)
        if not beta_grid:
            raise MissingParameter("no transmission probabilities (config 'beta_grid' or --beta)")
        gamma = float(args.gamma if args.gamma is not None else data.get("gamma", 1.0))
        runs = int(args.runs if args.runs is not None else data.get("runs_per_point", 100))
        max_steps = int(data.get("max_steps", 10_000))
        method = args.lambda_c_method or data.get("lambda_c_method", "hmf")
        if method not in ("hmf", "spectral"):
            raise ParseError(f"field 'lambda_c_method': expected hmf or spectral, got {method!r}")
        seed = _seed(args, data.get("seed", 0))
    except MissingParameter:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ParseError(f"config: {type(exc).__name__}: {exc}") from exc
    try:
        g = _build_graph(graph_spec, seed)
    except KeyError as exc:
        raise MissingParameter(f"graph parameter {exc} missing") from exc
    except OSError as exc:
        raise ParseError(f"graph file: {exc}") from exc
    lambda_c = structural_threshold(g, method)
    curve = outbreak_sweep(g, sorted(beta_grid), gamma, runs, seed, max_steps)
    echo = {"graph": graph_spec, "beta_grid": sorted(beta_grid), "gamma": gamma,
            "runs_per_point": runs, "seed": seed, "max_steps": max_steps,
            "lambda_c_method": method}
    if args.format == "json":
        text = _dump_json({
            "command": "epidemic", "version": __version__, "config": echo,
            "lambda_c": lambda_c, "lambda_c_method": method,
            "curve": [{"lambda": c.rate, "beta": c.beta, "mean_fraction": c.mean_fraction,
                       "stderr": c.stderr, "runs": c.runs} for c in curve],
        })
    else:
        comments = [f"detlim {__version__} epidemic",
                    "config " + json.dumps(_jsonable(echo)),
                    f"lambda_c {lambda_c!r} method {method}"]
        text = _csv_text(["lambda", "mean_fraction", "stderr", "runs"],
                         [[c.rate, c.mean_fraction, c.stderr, c.runs] for c in curve], comments)
    _emit(args, text)
    return EXIT_OK


# -- inequalities -----------------------------------------------------------------

def cmd_inequalities(args) -> int:
    seed = _seed(args)
    rng = make_rng(seed)
    names = ["pinsker", "reverse_pinsker", "js_tv", "wasserstein_tv", "chernoff_tv"]
    worst = {name: math.inf for name in names}
    evaluated = {name: 0 for name in names}
    for _ in range(args.pairs):
        k = int(rng.integers(2, args.max_k + 1))
        p, q = random_pmf(rng, k), random_pmf(rng, k)
        space = make_space(np.sort(rng.uniform(-5, 5, size=k)))
        for check in check_inequalities(p, q, space).checks():
            worst[check.name] = min(worst[check.name], check.slack)
            evaluated[check.name] += 1
    out = {
        "version": __version__, "seed": seed, "pairs": args.pairs, "max_k": args.max_k,
        "min_slack": worst, "evaluated": evaluated,
        "all_hold": all(v >= -1e-12 for v in worst.values()),
    }
    _emit(args, _dump_json(out))
    return EXIT_OK if out["all_hold"] else EXIT_RUNTIME


# -- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="detlim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"detlim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, fmt):
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="write here instead of stdout")
        p.add_argument("--format", choices=("json", "csv"), default=fmt)

    p = sub.add_parser("divergence", help="divergences and inequality slacks for two pmfs")
    p.add_argument("p_file")
    p.add_argument("q_file")
    p.add_argument("--space", default=None, help="metric alphabet JSON for Wasserstein")
    common(p, "json")
    p.set_defaults(func=cmd_divergence)

    p = sub.add_parser("table", help="log error bounds over OPT and n grids")
    p.add_argument("--l-kind", choices=KINDS + ("all",), required=True)
    p.add_argument("--regime", choices=REGIMES, default=None)
    p.add_argument("--test", choices=TESTS, default=None)
    p.add_argument("--opt", required=True, help="comma-separated oracle errors")
    p.add_argument("--n", required=True, help="comma-separated pixel counts")
    p.add_argument("--diam", type=float, default=None)
    p.add_argument("--pg-star", type=float, default=None)
    common(p, "csv")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("hyptest", help="Monte Carlo NP / Bayes error rates")
    p.add_argument("config")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--n", default=None, help="comma-separated n values")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--priors", default=None, help="pi0,pi1")
    p.add_argument("--test", choices=TESTS, default=None)
    common(p, "json")
    p.set_defaults(func=cmd_hyptest)

    p = sub.add_parser("epidemic", help="SIR outbreak sweep on a network")
    p.add_argument("config", nargs="?", default=None)
    p.add_argument("--graph", choices=("er", "ba", "file"), default=None)
    p.add_argument("--nodes", type=int, default=None)
    p.add_argument("--edge-prob", dest="edge_prob", type=float, default=None)
    p.add_argument("--attach-m", dest="attach_m", type=int, default=None)
    p.add_argument("--path", default=None, help="edge list for --graph file")
    p.add_argument("--beta", default=None, help="comma-separated transmission probabilities")
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--lambda-c-method", dest="lambda_c_method", choices=("hmf", "spectral"),
                   default=None)
    common(p, "csv")
    p.set_defaults(func=cmd_epidemic)

    p = sub.add_parser("inequalities", help="random-pair check of the four inequalities")
    p.add_argument("--pairs", type=int, default=10_000)
    p.add_argument("--max-k", dest="max_k", type=int, default=16)
    common(p, "json")
    p.set_defaults(func=cmd_inequalities)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ParseError as exc:
        return _fail(EXIT_PARSE, str(exc))
    except InvalidSpec as exc:
        return _fail(EXIT_PARSE, f"{type(exc).__name__}: {exc}")
    except (AlphabetMismatch, SpaceMismatch) as exc:
        return _fail(EXIT_MISMATCH, f"{type(exc).__name__}: {exc}")
    except MissingParameter as exc:
        return _fail(EXIT_MISSING, f"{type(exc).__name__}: {exc}")
    except DetlimError as exc:
        return _fail(EXIT_RUNTIME, f"{type(exc).__name__}: {exc}")
    except (ValueError, ArithmeticError) as exc:
        return _fail(EXIT_RUNTIME, f"{type(exc).__name__}: {exc}")


if __name__ == "__main__":
    sys.exit(main())
