"""Command line front end: ``xfpt <subcommand> ...``.

Every subcommand prints one JSON document on stdout holding its results
and a ``manifest`` (argv, input hash, seed, version, wall time).  Floats
are written with 12 significant digits; non-finite values become ``null``.

Exit codes: 0 success, 2 invalid input (JSON error on stderr), 3 numerical
failure, 64 usage error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import extreme_law, regime_threshold
from .ensembles import EnsembleSpec, convergence_sweep, generate
from .errors import ModeError, NumericalError, ValidationError
from .exact import ExactSolver
from .geodesic import geodesic_summary
from .io import file_sha256, load_graph, save_graph
from .montecarlo import SimConfig, sample_conditional_mortal, sample_extreme
from .mortal import MortalQuery, conditional_moment_asymptotic, conditional_moment_exact
from .network import Mode, validate

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL, EXIT_USAGE = 0, 2, 3, 64
SEED_ENV = "XFPT_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


# -- argument types -------------------------------------------------------


def _pos_int(text):
    """Positive integer; scientific notation such as ``1e6`` is accepted."""
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if not (v >= 1 and v.is_integer()):
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return int(text) if text.strip().lstrip("+").isdigit() else int(v)


def _pos_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}") from None
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def _nonneg_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text!r}")
    return v


def _range(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected start:stop:points, got {text!r}")
    try:
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected start:stop:points, got {text!r}") from None
    if n < 1 or not (math.isfinite(a) and math.isfinite(b)) or a < 0 or b < a:
        raise argparse.ArgumentTypeError(f"bad range {text!r}")
    return a, b, n


def _moment_list(text):
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated moment orders, got {text!r}") from None
    if not vals or any(not (math.isfinite(v) and v > 0) for v in vals):
        raise argparse.ArgumentTypeError(f"moment orders must be positive, got {text!r}")
    return vals


# -- output ---------------------------------------------------------------


def _num(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return float(f"{x:.12g}") if math.isfinite(x) else None
    if isinstance(x, dict):
        return {str(k): _num(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_num(v) for v in x]
    return x


def _fmt(x):
    return f"{float(x):.12g}"


def _emit(payload, args, t_start, stream=None):
    payload = dict(payload)
    payload["manifest"] = {
        "argv": list(args._argv),
        "input_sha256": args._sha,
        "seed": getattr(args, "_seed", None),
        "version": __version__,
        "wall_time_s": time.perf_counter() - t_start,
    }
    json.dump(_num(payload), stream or sys.stdout, indent=2, sort_keys=True, allow_nan=False)
    (stream or sys.stdout).write("\n")


def _load(args):
    net, query = load_graph(args.graph)
    args._sha = file_sha256(args.graph)
    validate(net, query).raise_if_failed()
    return net, query


def _seed(args):
    """Seed precedence: ``--seed`` flag, then ``XFPT_SEED``, then 0."""
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env not in (None, ""):
        try:
            return int(env)
        except ValueError:
            raise ValidationError(f"{SEED_ENV}={env!r} is not an integer", code="bad_seed") from None
    return 0


def _grid(spec, geometric=False):
    a, b, n = spec
    if geometric:
        if a <= 0:
            raise ValidationError("geometric grid needs a positive start", code="bad_grid")
        return np.geomspace(a, b, n)
    return np.linspace(a, b, n)


def _check_order(N, k):
    if k > N:
        raise UsageError(f"xfpt: error: --k ({k}) must not exceed --N ({N})")


# -- subcommands ----------------------------------------------------------


def cmd_analyze(args, t0):
    net, query = _load(args)
    s = geodesic_summary(net, query, enumerate_cap=args.paths)
    out = s.to_dict()
    if args.paths is not None:
        out["paths"] = [{"nodes": list(p.nodes), "weight": p.weight, "t0_sum": p.t0_sum} for p in s.paths]
    _emit(out, args, t0)


def cmd_theory(args, t0):
    net, query = _load(args)
    _check_order(args.N, args.k)
    s = geodesic_summary(net, query)
    law = extreme_law(s, args.N, args.k)
    thr = regime_threshold(s, net) if net.mode is Mode.MARKOV else None
    _emit({
        "A": s.A, "d": s.d, "r": s.r, "t_min": s.t_min, "N": args.N, "k": args.k,
        "scale": law.scale, "mean": law.first_order_mean, "variance": law.variance,
        "moments": {_fmt(m): law.moment(m) for m in args.moments},
        "regime_threshold": thr,
        "asymptotic": True,
    }, args, t0)


def cmd_exact(args, t0):
    net, query = _load(args)
    _check_order(args.N, args.k)
    solver = ExactSolver(net, query, eps=min(1e-12, args.eps * 1e-2))
    if args.curve is not None:
        t = _grid(args.curve)
        S = np.asarray(solver.survival(t))
        cdf = np.asarray(solver.extreme_cdf(args.N, args.k, t))
        pdf = np.asarray(solver.extreme_pdf(args.N, args.k, t))
        lines = ["t,S,cdf_TkN,pdf_TkN"]
        lines += [",".join(_fmt(x) for x in row) for row in zip(t, S, cdf, pdf)]
        text = "\n".join(lines) + "\n"
        if args.out:
            Path(args.out).write_text(text, encoding="utf-8")
            _emit({"N": args.N, "k": args.k, "csv": str(args.out), "rows": len(t)}, args, t0)
        else:
            sys.stdout.write(text)
            _emit({"N": args.N, "k": args.k, "rows": len(t)}, args, t0, stream=sys.stderr)
        return
    m = args.moment
    value = solver.moment(args.N, args.k, m, eps=args.eps)
    _emit({"N": args.N, "k": args.k, "m": m, "value": value, "asymptotic": False}, args, t0)


def cmd_simulate(args, t0):
    net, query = _load(args)
    _check_order(args.N, args.k)
    args._seed = _seed(args)
    cfg = SimConfig(seed=args._seed, workers=args.workers, N=args.N, replicates=args.replicates,
                    time_cap=args.time_cap, early_abort=not args.no_early_abort)
    if args.gamma is not None:
        est = sample_conditional_mortal(net, query, args.gamma, args.moment, cfg)
        out = {"quantity": "conditional_moment", "gamma": args.gamma, "m": args.moment}
    else:
        est = sample_extreme(net, query, args.N, args.k, cfg)
        out = {"quantity": "extreme_order_statistic", "N": args.N, "k": args.k}
        if args.moment != 1.0:
            with np.errstate(over="ignore"):
                mom = type(est).from_samples(est.samples, est.samples ** args.moment)
            out["moment"] = {"m": args.moment, **mom.to_dict()}
    out.update({"replicates": args.replicates, "workers": args.workers,
                "estimate": est.to_dict(), "stats": est.stats})
    if args.ecdf_out:
        if args.ecdf_grid is None:
            raise UsageError("xfpt simulate: error: --ecdf-out requires --ecdf-grid")
        t = _grid(args.ecdf_grid)
        F = est.ecdf(t)
        lines = ["t,ecdf"] + [f"{_fmt(a)},{_fmt(b)}" for a, b in zip(t, F)]
        Path(args.ecdf_out).write_text("\n".join(lines) + "\n", encoding="utf-8")
        out["ecdf_csv"] = str(args.ecdf_out)
    _emit(out, args, t0)


def cmd_mortal(args, t0):
    net, query = _load(args)
    s = geodesic_summary(net, query)
    mq = MortalQuery(args.gamma, args.moment)
    route = args.route or ("exact" if net.mode is Mode.MARKOV else "asymptotic")
    out = {"route": route, "gamma": args.gamma, "m": args.moment, "t_min": s.t_min, "d": s.d}
    if route == "exact":
        out["value"] = conditional_moment_exact(net, query, mq, eps=args.eps)
    elif route == "asymptotic":
        out["value"] = conditional_moment_asymptotic(s, mq)
    else:
        args._seed = _seed(args)
        cfg = SimConfig(seed=args._seed, workers=args.workers, N=args.N, replicates=args.replicates)
        est = sample_conditional_mortal(net, query, args.gamma, args.moment, cfg)
        out["value"] = est.mean
        out["stderr"] = est.stderr
        out["accepted"] = est.count
    _emit(out, args, t0)


def cmd_ensemble(args, t0):
    args._seed = _seed(args)
    spec = EnsembleSpec(args.V, args.distance, args._seed)
    net, query = generate(spec)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    graph_path = out_dir / "graph.json"
    save_graph(graph_path, net, query)
    args._sha = file_sha256(graph_path)
    Ns = sorted({int(round(x)) for x in _grid(args.Ngrid, geometric=True)})
    sweep = convergence_sweep(net, Ns, k=args.k, query=query, workers=args.workers)
    sweep.write_table_csv(out_dir / "convergence.csv")
    sweep.write_density_csv(out_dir / "density.csv")
    s = geodesic_summary(net, query)
    _emit({
        "V": args.V, "distance": s.d, "seed": args._seed, "edges": net.edge_count,
        "source": int(query.support[0]), "target": int(query.targets[0]), "A": s.A,
        "table": [{"N": int(r[0]), "exact": r[1], "theory": r[2], "ratio": r[3]} for r in sweep.table],
        "files": {"graph": str(graph_path), "convergence": str(out_dir / "convergence.csv"),
                  "density": str(out_dir / "density.csv")},
    }, args, t0)


# -- parser ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="xfpt", description="Extreme first passage time statistics on finite networks.")
    p.add_argument("--version", action="version", version=f"xfpt {__version__}")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    def graph_arg(sp):
        sp.add_argument("graph", help="graph file (JSON)")

    sp = sub.add_parser("analyze", help="geodesic summary (t_min, d, lambda, r, A)",
                        description="Geodesic summary of the optimal paths from rho to the targets.")
    graph_arg(sp)
    sp.add_argument("--paths", type=_nonneg_int, metavar="CAP",
                    help="also list up to CAP optimal paths")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("theory", help="large-N asymptotic law of T_{k,N}",
                        description="Asymptotic (large N) law of the k-th fastest passage time.")
    graph_arg(sp)
    sp.add_argument("--N", type=_pos_int, required=True, help="number of searchers")
    sp.add_argument("--k", type=_pos_int, default=1, help="order statistic (default 1, the fastest)")
    sp.add_argument("--moments", type=_moment_list, default=[1.0, 2.0], metavar="M1,M2,...",
                    help="moment orders of T_{k,N} - t_min (default 1,2)")
    sp.set_defaults(func=cmd_theory)

    sp = sub.add_parser("exact", help="exact finite-N law (Markov networks)",
                        description="Exact law or moment of T_{k,N} for Markov networks. With --curve "
                                    "a CSV with columns t,S,cdf_TkN,pdf_TkN is written.")
    graph_arg(sp)
    sp.add_argument("--N", type=_pos_int, required=True, help="number of searchers")
    sp.add_argument("--k", type=_pos_int, default=1, help="order statistic (default 1)")
    sp.add_argument("--moment", type=_pos_float, default=1.0, metavar="M",
                    help="moment order of T_{k,N} (default 1)")
    sp.add_argument("--curve", type=_range, metavar="T0:T1:STEPS",
                    help="evaluate the law on a linear time grid instead of a moment")
    sp.add_argument("--out", metavar="FILE", help="write the curve CSV here (default stdout)")
    sp.add_argument("--eps", type=_pos_float, default=1e-10, help="relative tolerance (default 1e-10)")
    sp.set_defaults(func=cmd_exact)

    sp = sub.add_parser("simulate", help="Monte Carlo estimate of T_{k,N}",
                        description="Monte Carlo samples of T_{k,N}, or of the conditional moment "
                                    "of mortal searchers when --gamma is given.")
    graph_arg(sp)
    sp.add_argument("--N", type=_pos_int, required=True, help="searchers per replicate")
    sp.add_argument("--k", type=_pos_int, default=1, help="order statistic (default 1)")
    sp.add_argument("--replicates", type=_pos_int, default=1000, help="independent replicates (default 1000)")
    sp.add_argument("--seed", type=int, help=f"random seed (default: ${SEED_ENV}, else 0)")
    sp.add_argument("--workers", type=_pos_int, default=1, help="worker threads (default 1)")
    sp.add_argument("--time-cap", type=_pos_float, metavar="T",
                    help="censor walkers still searching at time T")
    sp.add_argument("--no-early-abort", action="store_true",
                    help="run every walker to completion (same result, slower)")
    sp.add_argument("--gamma", type=_pos_float, help="inactivation rate; switches to mortal searchers")
    sp.add_argument("--moment", type=_pos_float, default=1.0, metavar="M", help="moment order (default 1)")
    sp.add_argument("--ecdf-out", metavar="FILE", help="write the empirical CDF as CSV (t,ecdf)")
    sp.add_argument("--ecdf-grid", type=_range, metavar="T0:T1:STEPS", help="time grid for --ecdf-out")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("mortal", help="conditional moment E[tau^m | tau < sigma]",
                        description="Conditional passage-time moment of a searcher inactivated at "
                                    "rate gamma.")
    graph_arg(sp)
    sp.add_argument("--gamma", type=_pos_float, required=True, help="inactivation rate")
    sp.add_argument("--moment", type=_pos_float, default=1.0, metavar="M", help="moment order (default 1)")
    route = sp.add_mutually_exclusive_group()
    route.add_argument("--exact", dest="route", action="store_const", const="exact",
                       help="quadrature of the exact CDF (Markov only; default for Markov)")
    route.add_argument("--asymptotic", dest="route", action="store_const", const="asymptotic",
                       help="fast-inactivation limit (default for general mode)")
    route.add_argument("--mc", dest="route", action="store_const", const="mc", help="Monte Carlo")
    sp.add_argument("--N", type=_pos_int, default=100000, help="walkers per replicate for --mc (default 100000)")
    sp.add_argument("--replicates", type=_pos_int, default=10, help="replicates for --mc (default 10)")
    sp.add_argument("--seed", type=int, help=f"random seed for --mc (default: ${SEED_ENV}, else 0)")
    sp.add_argument("--workers", type=_pos_int, default=1, help="worker threads for --mc (default 1)")
    sp.add_argument("--eps", type=_pos_float, default=1e-10, help="relative tolerance for --exact (default 1e-10)")
    sp.set_defaults(func=cmd_mortal)

    sp = sub.add_parser("ensemble", help="random instance plus convergence data",
                        description="Generate a random network and write graph.json, convergence.csv "
                                    "(N,exact,theory,ratio) and density.csv (z,density_N,...,"
                                    "weibull_density).")
    sp.add_argument("--V", type=_pos_int, required=True, help="node count (edges = 5V)")
    sp.add_argument("--distance", type=_pos_int, required=True, help="source-target jump distance")
    sp.add_argument("--seed", type=int, help=f"random seed (default: ${SEED_ENV}, else 0)")
    sp.add_argument("--Ngrid", type=_range, default=(100.0, 1e6, 5), metavar="A:B:POINTS",
                    help="geometric grid of N from A to B (default 100:1e6:5)")
    sp.add_argument("--k", type=_pos_int, default=1, help="order statistic (default 1)")
    sp.add_argument("--workers", type=_pos_int, default=1, help="threads over N values (default 1)")
    sp.add_argument("--out", required=True, metavar="DIR", help="output directory")
    sp.set_defaults(func=cmd_ensemble)
    return p


def _error(code, message, extra=None):
    doc = {"error": code, "message": message}
    if extra:
        doc.update(extra)
    json.dump(_num(doc), sys.stderr, sort_keys=True)
    sys.stderr.write("\n")


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    t0 = time.perf_counter()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args._argv = ["xfpt", *argv]
        args._sha = None
        args._seed = None
        args.func(args, t0)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except ModeError as exc:
        _error(exc.code, str(exc))
        return EXIT_INVALID
    except ValidationError as exc:
        extra = {"violations": exc.report.to_dict().get("violations")} if exc.report is not None else None
        _error(exc.code, str(exc), extra)
        return EXIT_INVALID
    except NumericalError as exc:
        _error(exc.code, str(exc))
        return EXIT_NUMERICAL
    except FileNotFoundError as exc:
        _error("file_not_found", str(exc))
        return EXIT_INVALID
    except ValueError as exc:
        _error("invalid", str(exc))
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
