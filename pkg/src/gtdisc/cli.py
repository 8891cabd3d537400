"""Command-line front end: ``gtdisc <command> [flags]``.

Every command prints (or writes to ``--out``) a report carrying the tool
version, the full parameter set, the seeds and the wall-clock time. Exit
codes: 0 success, 1 invalid input, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .certificates import (
    CertificateError,
    CircleMeasure,
    FourierTarget,
    Side,
    SolverParams,
    certified_lower_bound,
    default_grid,
    fourier_residual,
    read_measure_binary,
    synthesize_measure,
    verify_certificate,
    write_measure_binary,
)
from .discrepancy import disc_alternating, disc_exact_boolean, spectral_upper_bound
from .distributions import (
    EntryDistribution,
    EtaSpec,
    eta_pmf,
    eta_sample_many,
    eta_threshold,
    eta_witness_factors,
    eta_witness_value,
    mu_star,
    random_distribution,
    uniform_distribution,
)
from .matrices import (
    SpectralNormError,
    gt_hankel,
    gt_toeplitz,
    hilbert,
    hilbert_l1_by_diagonals,
    l1_norm,
    spectral_norm_symmetric,
)
from .optimal_lp import LPNumericalError, optimal_distribution, sandwich_table, table_csv

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2
DEFAULT_TABLE_N = ",".join(str(2**k) for k in range(1, 14))
# bounded synthesis budget for the table; the norm only needs to be small,
# not minimal, for the lower bound to hold
TABLE_SOLVER = {"step": 10.0, "max_iters": 3000}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the validation code; required flags may come from ``--config``."""

    def add_argument(self, *args, required_after_config=False, **kwargs):
        action = super().add_argument(*args, **kwargs)
        if required_after_config:
            self.__dict__.setdefault("_late_required", []).append(action)
        return action

    def check_required(self, args):
        missing = [a.option_strings[0] for a in self.__dict__.get("_late_required", [])
                   if getattr(args, a.dest) is None]
        if missing:
            self.error(f"the following arguments are required: {', '.join(missing)}")

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INVALID)


def _int_list(text):
    try:
        values = [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _matrix(n, orientation):
    return gt_hankel(n) if orientation == "hankel" else gt_toeplitz(n)


def _load_mu(spec, n, seed):
    """Distribution by name (mu-star, uniform, random, eta) or JSON file path."""
    if spec == "mu-star":
        return mu_star(n)
    if spec == "uniform":
        return uniform_distribution(n)
    if spec == "random":
        return random_distribution(n, seed)
    if spec == "eta":
        return eta_pmf(EtaSpec.for_size(n, embed=True))
    if os.path.exists(spec):
        with open(spec, encoding="utf-8") as fh:
            mu = EntryDistribution.from_json(fh.read())
        if mu.n != n:
            raise ValueError(f"distribution in {spec} has n={mu.n}, expected {n}")
        return mu
    raise ValueError(f"unknown distribution {spec!r}")


def _load_measure(path):
    with open(path, "rb") as fh:
        head = fh.read(5)
        fh.seek(0)
        if head == b"CMES1":
            return read_measure_binary(fh)
        return CircleMeasure.from_dict(json.loads(fh.read().decode("utf-8")))


def _solver(args):
    return SolverParams(max_iters=args.max_iters, step=args.step, tol=args.tol)


def _matrix_rows(a):
    return [{"row": j + 1, "values": " ".join(repr(float(v)) for v in r)} for j, r in enumerate(a)]


# command handlers return (result dict, optional list of CSV rows)

def cmd_gen_matrix(args):
    if args.orientation == "hilbert":
        M = hilbert(args.n)
        entries = M.entries
    else:
        M = _matrix(args.n, args.orientation)
        entries = M.entries
    result = {"n": args.n, "orientation": args.orientation, "entries": entries.tolist()}
    return result, _matrix_rows(entries)


def cmd_mu_star(args):
    mu = mu_star(args.n)
    result = {"n": args.n, "l1_norm": l1_norm(hilbert(args.n)), "weights": mu.weights.tolist(),
              "meta": mu.meta}
    return result, _matrix_rows(mu.weights)


def cmd_eta(args):
    spec = EtaSpec(args.m)
    pr_heavy, pr_bit = eta_witness_factors(spec)
    value = eta_witness_value(spec)
    result = {
        "m": args.m,
        "n": spec.n,
        "threshold": eta_threshold(args.m),
        "witness_value": value,
        "witness_value_sqrt_m": value * math.sqrt(args.m),
        "pr_heavy": pr_heavy,
        "pr_bit_given_heavy": None if math.isnan(pr_bit) else pr_bit,
    }
    rows = None
    if args.samples:
        j, k = eta_sample_many(spec, args.samples, args.seed)
        result["samples"] = {"j": j.tolist(), "k": k.tolist()}
        rows = [{"j": int(a), "k": int(b)} for a, b in zip(j, k)]
    if args.pmf:
        w = eta_pmf(spec).weights
        result["pmf"] = w.tolist()
        rows = _matrix_rows(w)
    return result, rows


def cmd_disc_exact(args):
    G = _matrix(args.n, args.orientation)
    mu = _load_mu(args.mu, args.n, args.seed)
    pair = disc_exact_boolean(G, mu, threads=args.threads)
    return {"n": args.n, "mu": mu.meta, **pair.to_dict()}, None


def cmd_disc_alt(args):
    G = _matrix(args.n, args.orientation)
    mu = _load_mu(args.mu, args.n, args.seed)
    pair = disc_alternating(G, mu, restarts=args.restarts, max_iters=args.max_iters, seed=args.seed)
    return {"n": args.n, "mu": mu.meta, **pair.to_dict()}, None


def cmd_spectral(args):
    sigma = spectral_norm_symmetric(hilbert(args.n), tol=args.tol, seed=args.seed)
    result = {"n": args.n, "sigma_max": sigma, "pi_gap": math.pi - sigma}
    if args.n >= 2:
        loose, tight = spectral_upper_bound(args.n, args.tol)
        result.update(upper_loose=loose, upper_tight=tight)
    return result, None


def cmd_l1norm(args):
    direct = l1_norm(hilbert(args.n))
    by_diag = hilbert_l1_by_diagonals(args.n)
    return {"n": args.n, "l1_norm": direct, "l1_norm_by_diagonals": by_diag,
            "relative_difference": abs(direct - by_diag) / direct}, None


def cmd_measure_synth(args):
    T = args.T or default_grid(args.n)
    measure = synthesize_measure(FourierTarget(args.n, Side(args.side)), T, _solver(args))
    if args.binary:
        with open(args.binary, "wb") as fh:
            write_measure_binary(measure, fh)
    result = measure.to_dict()
    result.update(residual=fourier_residual(measure), lower_bound=certified_lower_bound(measure),
                  norm_bound=math.log(max(args.n, 1)) / math.pi + 2)
    return result, None


def cmd_certify(args):
    mu = _load_mu(args.mu, args.n, args.seed)
    if args.measure:
        measure = _load_measure(args.measure)
    else:
        T = args.T or default_grid(args.n)
        measure = synthesize_measure(FourierTarget(args.n), T, _solver(args))
    cert = verify_certificate(mu, measure, T_scan=args.T_scan)
    result = cert.to_dict()
    if not args.include_measure:
        result.pop("measure")
        result["measure_norm"] = measure.norm
    return result, None


def cmd_lp_opt(args):
    G = _matrix(args.n, args.orientation)
    res = optimal_distribution(G, eps=args.eps, threads=args.threads)
    d = res.to_dict()
    d["cuts"] = [{"x": c.x.astype(int).tolist(), "y": c.y.astype(int).tolist(),
                  "iteration": c.iteration} for c in res.cuts]
    return {"n": args.n, "orientation": args.orientation, **d}, None


def cmd_table(args):
    solver = SolverParams(max_iters=args.max_iters, step=args.step, tol=args.tol)
    rows, report = sandwich_table(args.n, T=args.T, solver=solver, lp_max_n=args.lp_max_n,
                                  lp_eps=args.eps)
    return report, rows


def _add_common(p):
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--format", choices=["csv", "json"], default=None,
                   help="output format (default: from --out suffix, else json)")
    p.add_argument("--config", help="JSON file of flag defaults; explicit flags win")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
    p.add_argument("--seed", type=int, default=0, help="random seed")


def _add_solver(p, step=1.0, max_iters=None):
    p.add_argument("--T", type=int, default=None, help="grid size (default 8n+1)")
    p.add_argument("--step", type=float, default=step, help="soft-threshold step")
    p.add_argument("--max-iters", type=int, default=max_iters,
                   help="iteration budget (default 50*T)")
    p.add_argument("--tol", type=float, default=1e-10, help="relative stall tolerance")


def build_parser():
    parser = _Parser(prog="gtdisc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"gtdisc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, handler, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.set_defaults(handler=handler)
        _add_common(p)
        return p

    p = add("gen-matrix", cmd_gen_matrix, "greater-than or shifted Hilbert matrix")
    p.add_argument("--n", type=int, default=None, required_after_config=True)
    p.add_argument("--orientation", choices=["hankel", "toeplitz", "hilbert"], default="hankel")

    p = add("mu-star", cmd_mu_star, "Hilbert-weighted distribution")
    p.add_argument("--n", type=int, default=None, required_after_config=True)

    p = add("eta", cmd_eta, "bit-sampling distribution and its witness value")
    p.add_argument("--m", type=int, default=None, required_after_config=True)
    p.add_argument("--samples", type=int, default=0, help="number of draws to emit")
    p.add_argument("--pmf", action="store_true", help="emit the dense table (m <= 12)")

    for name, handler, text in (
        ("disc-exact", cmd_disc_exact, "exact boolean discrepancy"),
        ("disc-alt", cmd_disc_alt, "complex discrepancy by alternating ascent"),
    ):
        p = add(name, handler, text)
        p.add_argument("--n", type=int, default=None, required_after_config=True)
        p.add_argument("--mu", default="mu-star",
                       help="mu-star, uniform, random, eta, or a distribution JSON file")
        p.add_argument("--orientation", choices=["hankel", "toeplitz"], default="hankel")
        if name == "disc-alt":
            p.add_argument("--restarts", type=int, default=8)
            p.add_argument("--max-iters", type=int, default=1000)

    p = add("spectral", cmd_spectral, "largest singular value of the shifted Hilbert matrix")
    p.add_argument("--n", type=int, default=None, required_after_config=True)
    p.add_argument("--tol", type=float, default=1e-10)

    p = add("l1norm", cmd_l1norm, "entrywise L1 norm of the shifted Hilbert matrix")
    p.add_argument("--n", type=int, default=None, required_after_config=True)

    p = add("measure-synth", cmd_measure_synth, "minimum-norm half-line Fourier measure")
    p.add_argument("--n", type=int, default=None, required_after_config=True)
    p.add_argument("--side", choices=[s.value for s in Side], default=Side.NONNEGATIVE.value)
    p.add_argument("--binary", help="also write the measure in the binary format")
    _add_solver(p)

    p = add("certify", cmd_certify, "verify a discrepancy lower-bound certificate")
    p.add_argument("--n", type=int, default=None, required_after_config=True)
    p.add_argument("--mu", default="mu-star")
    p.add_argument("--measure", help="measure file (JSON or binary); synthesised if absent")
    p.add_argument("--T-scan", type=int, default=None, help="extra character-scan grid")
    p.add_argument("--include-measure", action="store_true")
    _add_solver(p)

    p = add("lp-opt", cmd_lp_opt, "exact boolean minimax by column generation")
    p.add_argument("--n", type=int, default=None, required_after_config=True)
    p.add_argument("--eps", type=float, default=1e-6)
    p.add_argument("--orientation", choices=["hankel", "toeplitz"], default="hankel")

    p = add("table", cmd_table, "lower/upper bound table")
    p.add_argument("--n", type=_int_list, default=_int_list(DEFAULT_TABLE_N))
    p.add_argument("--lp-max-n", type=int, default=14)
    p.add_argument("--eps", type=float, default=1e-6)
    _add_solver(p, step=TABLE_SOLVER["step"], max_iters=TABLE_SOLVER["max_iters"])
    return parser


def _parse(parser, argv):
    args = parser.parse_args(argv)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    if args.config is None:
        sub.check_required(args)
        return args
    try:
        with open(args.config, encoding="utf-8") as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}") from exc
    if not isinstance(config, dict):
        raise UsageError("config must be a JSON object")
    known = {k for k in vars(args) if k not in ("handler", "command", "config")}
    unknown = sorted(set(k.replace("-", "_") for k in config) - known)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    # config fills defaults; re-parsing lets explicit flags override it
    sub.set_defaults(**{k.replace("-", "_"): v for k, v in config.items()})
    try:
        args = parser.parse_args(argv)
        sub.check_required(args)
        return args
    finally:
        sub.set_defaults(**{a.dest: a.default for a in sub._actions if a.dest in known})


def _csv_text(meta, rows, result):
    buf = io.StringIO()
    buf.write("# " + json.dumps(meta, sort_keys=True) + "\n")
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    else:
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["key", "value"])
        for k in sorted(result):
            v = result[k]
            writer.writerow([k, repr(v) if isinstance(v, float) else json.dumps(v, sort_keys=True)])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = _parse(parser, argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"gtdisc: error: {exc}", file=sys.stderr)
        return EXIT_INVALID

    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("handler", "out", "format")}
    started = time.time()
    try:
        result, rows = args.handler(args)
    except (SpectralNormError, LPNumericalError, CertificateError, FloatingPointError) as exc:
        print(f"gtdisc: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError, KeyError) as exc:
        print(f"gtdisc: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except RuntimeError as exc:
        print(f"gtdisc: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    wall = time.time() - started

    fmt = args.format or ("csv" if args.out and args.out.endswith(".csv") else "json")
    meta = {"tool": "gtdisc", "version": __version__, "command": args.command,
            "parameters": params, "seeds": {"seed": args.seed}, "wall_clock_seconds": wall}
    if args.command == "table":
        result["wall_clock_seconds"] = wall
        result["parameters"]["seeds"]["cli_seed"] = args.seed
        text = table_csv(rows, result) if fmt == "csv" else json.dumps(
            result, indent=2, sort_keys=True, default=_jsonable)
    elif fmt == "csv":
        text = _csv_text(meta, rows, result)
    else:
        text = json.dumps({**meta, "result": result}, indent=2, sort_keys=True, default=_jsonable)
    if not text.endswith("\n"):
        text += "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
