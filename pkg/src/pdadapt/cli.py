"""Command-line experiment runner.

``pdadapt run`` builds a problem from a LibSVM file or a synthetic design,
runs one solver and writes a per-pass CSV trace. ``pdadapt summarize``
tabulates final gaps and passes-to-tolerance over trace files.

Exit codes: 0 success, 2 configuration or input error, 3 solver failure.
"""

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

from . import batch_pd, spdc
from .baselines import BaselineConfig, run_baseline
from .data_io import load_libsvm, normalize_rows, synth_gaussian, to_problem
from .errors import ConfigError, DomainError, ParseError, PdAdaptError
from .losses import get_loss
from .regularizers import L2, ElasticNet
from .trace import read_csv, write_csv

ALGOS = (
    "bpd", "ada-bpd", "opt-bpd", "df-bpd",
    "spdc", "ada-spdc", "df-spdc", "adf-spdc",
    "svrg", "saga", "katyusha", "primal-ag",
)
OUTPUT_ENV = "PDADAPT_OUTPUT_DIR"
EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3


def resolve_lambda(expr, n):
    """Evaluate ``expr`` such as ``"1/n"``, ``"1e-2/n"`` or ``"0.5"`` exactly.

    Products and quotients of decimal literals and the symbol ``n`` are
    computed as rationals and converted to float once at the end.
    """
    text = str(expr).replace(" ", "")
    if not text:
        raise ConfigError("empty lambda expression")
    value = None
    op = "*"
    token = ""
    for ch in text + "\0":
        if ch in "*/\0":
            if not token:
                raise ConfigError(f"malformed lambda expression {expr!r}")
            if token == "n":
                f = Fraction(n)
            else:
                try:
                    f = Fraction(token)
                except ValueError:
                    raise ConfigError(f"malformed lambda expression {expr!r}") from None
            if value is None:
                value = f
            elif op == "*":
                value *= f
            else:
                if f == 0:
                    raise ConfigError(f"division by zero in {expr!r}")
                value /= f
            op, token = ch, ""
        else:
            token += ch
    if value < 0:
        raise ConfigError(f"lambda must be nonnegative, got {expr!r}")
    return float(value)


def parse_synth(spec):
    """``"n=200,d=100,q=2"`` into keyword arguments for ``synth_gaussian``."""
    out = {}
    for part in spec.split(","):
        key, sep, val = part.partition("=")
        key = key.strip()
        if not sep or key not in ("n", "d", "q", "noise"):
            raise ConfigError(f"bad synthetic spec item {part!r}")
        try:
            out[key] = int(val) if key in ("n", "d") else float(val)
        except ValueError:
            raise ConfigError(f"bad value in synthetic spec item {part!r}") from None
    missing = {"n", "d", "q"} - set(out)
    if missing:
        raise ConfigError(f"synthetic spec lacks {', '.join(sorted(missing))}")
    return out


def parse_period(text):
    if text.lower() in ("inf", "none", "0"):
        return None
    try:
        T = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid adaptation period {text!r}") from None
    if T < 1:
        raise argparse.ArgumentTypeError("adaptation period must be >= 1 or 'inf'")
    return T


def build_parser():
    p = argparse.ArgumentParser(prog="pdadapt", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one solver and write a CSV trace")
    r.add_argument("--algo", required=True, choices=ALGOS)
    src = r.add_mutually_exclusive_group(required=True)
    src.add_argument("--synth", metavar="n=..,d=..,q=..", help="synthetic Gaussian design")
    src.add_argument("--data", metavar="FILE", help="LibSVM file, optionally gzip-compressed")
    r.add_argument("--loss", choices=("squared", "logistic"), default="squared")
    r.add_argument("--loss-delta", type=float, default=None,
                   help="local strong convexity supplied for the logistic loss")
    r.add_argument("--reg", choices=("l2", "elastic-net"), default="l2")
    r.add_argument("--lambda", dest="lam", default="1/n", help="L2 weight, e.g. 1e-2/n")
    r.add_argument("--lambda1", default="0", help="elastic-net l1 weight")
    r.add_argument("--lambda2", default=None, help="elastic-net l2 weight (default: --lambda)")
    r.add_argument("--passes", type=int, default=100)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--adapt-period", type=parse_period, default=10)
    r.add_argument("--c-lo", type=float, default=0.95)
    r.add_argument("--c-hi", type=float, default=1.5)
    r.add_argument("--heuristic", choices=("simple", "robust"), default="robust")
    r.add_argument("--mu0", type=float, default=None, help="initial mu estimate (adaptive)")
    r.add_argument("--delta", type=float, default=None,
                   help="initial estimate of delta*mu^2 (robust adaptive)")
    r.add_argument("--mu-hat", type=float, default=0.0, help="fixed mu estimate (non-adaptive)")
    r.add_argument("--eval-every", type=int, default=1)
    r.add_argument("--no-normalize", action="store_true", help="skip global row normalization")
    r.add_argument("--out", default=None,
                   help=f"output CSV ('-' for stdout); default under ${OUTPUT_ENV} or cwd")
    r.add_argument("--repeat", type=int, default=1, help="run k consecutive seeds concurrently")
    r.add_argument("--no-timing", action="store_true", help="leave elapsed_s empty")

    s = sub.add_parser("summarize", help="tabulate trace files")
    s.add_argument("traces", nargs="+")
    s.add_argument("--tol", type=float, default=1e-6, help="gap tolerance for passes-to-tol")
    s.add_argument("--json", action="store_true", help="machine-readable output")
    return p


def build_problem(args, seed):
    loss = get_loss(args.loss, args.loss_delta)
    if args.synth:
        kw = parse_synth(args.synth)
        task = "classification" if args.loss == "logistic" else "regression"
        ds = synth_gaussian(kw["n"], kw["d"], kw["q"], seed=seed, task=task,
                            noise=kw.get("noise", 0.01))
    else:
        ds = load_libsvm(args.data)
    if not args.no_normalize:
        ds = normalize_rows(ds)
    n = ds.n
    if args.reg == "l2":
        reg = L2(resolve_lambda(args.lam, n))
    else:
        lam2 = args.lambda2 if args.lambda2 is not None else args.lam
        reg = ElasticNet(resolve_lambda(args.lambda1, n), resolve_lambda(lam2, n))
    return to_problem(ds, loss, reg)


def solve(args, prob, seed):
    a, P = args.algo, args.passes
    common = dict(passes=P, eval_every=args.eval_every)
    if a == "bpd":
        return batch_pd.bpd(prob, mu_hat=args.mu_hat, **common)
    if a == "opt-bpd":
        return batch_pd.opt_bpd(prob, **common)
    if a == "df-bpd":
        return batch_pd.df_bpd(prob, mu_hat=args.mu_hat, **common)
    if a == "ada-bpd":
        return batch_pd.ada_bpd(prob, mu0=args.mu0, T=args.adapt_period, heuristic=args.heuristic,
                                c_lo=args.c_lo, c_hi=args.c_hi, Delta0=args.delta, **common)
    if a == "spdc":
        return spdc.spdc(prob, mu_hat=args.mu_hat, seed=seed, **common)
    if a == "df-spdc":
        return spdc.df_spdc(prob, mu_hat=args.mu_hat, seed=seed, **common)
    if a in ("ada-spdc", "adf-spdc"):
        if args.heuristic != "robust":
            raise ConfigError("randomized solvers adapt with the robust heuristic only")
        return spdc.ada_spdc(prob, mu0=args.mu0, T=args.adapt_period, dual_free=a == "adf-spdc",
                             seed=seed, c_lo=args.c_lo, c_hi=args.c_hi, Delta0=args.delta,
                             **common)
    return run_baseline(prob, BaselineConfig(a), P, seed=seed, eval_every=args.eval_every)


def output_path(args, seed, multi):
    if args.out == "-":
        return None
    if args.out:
        path = Path(args.out)
        if multi:
            path = path.with_name(f"{path.stem}_seed{seed}{path.suffix or '.csv'}")
        return path
    base = Path(os.environ.get(OUTPUT_ENV) or ".")
    return base / f"{args.algo}_seed{seed}.csv"


def _one(args, seed, multi):
    prob = build_problem(args, seed)
    trace = solve(args, prob, seed)
    path = output_path(args, seed, multi)
    if path is None:
        write_csv(trace, sys.stdout, timing=not args.no_timing)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            write_csv(trace, fh, timing=not args.no_timing)
    return path, trace


_CONFIG_ERRORS = (ConfigError, ParseError, DomainError, OSError, ValueError)


def cmd_run(args):
    if args.repeat < 1:
        raise ConfigError("--repeat must be >= 1")
    if args.eval_every < 1:
        raise ConfigError("--eval-every must be >= 1")
    if args.repeat > 1 and args.out == "-":
        raise ConfigError("--repeat writes one file per seed; stdout output is not allowed")
    seeds = [args.seed + k for k in range(args.repeat)]
    multi = len(seeds) > 1
    if multi:
        with ThreadPoolExecutor(max_workers=min(len(seeds), os.cpu_count() or 1)) as ex:
            results = list(ex.map(lambda s: _one(args, s, True), seeds))
    else:
        results = [_one(args, seeds[0], False)]
    for path, trace in results:
        final = trace.final
        gap = "n/a" if final.gap is None else f"{final.gap:.3e}"
        where = path if path is not None else "stdout"
        print(f"{trace.algo}: {final.pass_} passes, primal {final.primal:.10g}, gap {gap} -> {where}",
              file=sys.stderr)
    return EXIT_OK


def summarize_rows(paths, tol):
    rows = []
    for path in paths:
        with open(path, newline="") as fh:
            tr = read_csv(fh, algo=Path(path).stem)
        final = tr.final
        to_tol = None
        for p in tr.points:
            if p.gap is not None and p.gap <= tol:
                to_tol = p.pass_
                break
        rows.append({
            "trace": str(path),
            "algo": tr.algo,
            "passes": final.pass_,
            "final_primal": final.primal,
            "final_gap": final.gap,
            "passes_to_tol": to_tol,
        })
    # traces with a gap first, ascending; primal-only traces after, by primal value
    rows.sort(key=lambda r: (r["final_gap"] is None,
                             r["final_gap"] if r["final_gap"] is not None else r["final_primal"]))
    return rows


def format_table(rows, tol):
    head = ["algo", "passes", "final_primal", "final_gap", f"passes_to_{tol:g}"]
    body = []
    for r in rows:
        body.append([
            r["algo"],
            str(r["passes"]),
            f"{r['final_primal']:.10g}",
            "-" if r["final_gap"] is None else f"{r['final_gap']:.3e}",
            "-" if r["passes_to_tol"] is None else str(r["passes_to_tol"]),
        ])
    widths = [max(len(x) for x in col) for col in zip(head, *body)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(head, widths))]
    lines += ["  ".join(c.ljust(w) for c, w in zip(row, widths)) for row in body]
    return "\n".join(lines)


def cmd_summarize(args):
    rows = summarize_rows(args.traces, args.tol)
    if args.json:
        clean = [{k: (None if isinstance(v, float) and not math.isfinite(v) else v)
                  for k, v in r.items()} for r in rows]
        print(json.dumps({"tol": args.tol, "rows": clean}, indent=2))
    else:
        print(format_table(rows, args.tol))
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    cmd = cmd_run if args.command == "run" else cmd_summarize
    try:
        return cmd(args)
    except _CONFIG_ERRORS as exc:
        print(f"pdadapt: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PdAdaptError, ArithmeticError, RuntimeError) as exc:
        print(f"pdadapt: solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
