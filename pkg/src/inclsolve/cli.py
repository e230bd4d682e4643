"""
Command line entry point ``inclsolve``.

Subcommands: ``run``, ``list-problems``, ``list-presets`` and
``verify --preset``.  Exit status follows
:data:`inclsolve.harness.EXIT_CODES`.
"""

import argparse
import sys

from inclsolve.errors import InclsolveError
from inclsolve.harness import (EXIT_CERTIFICATE, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE,
                               ExperimentConfig, describe_certificate, emit_csv, emit_plotdata,
                               exit_code_for, exit_status, list_presets, run_experiment,
                               verify_preset)
from inclsolve.instrumentation import THEOREMS
from inclsolve.solvers import METHODS
from inclsolve.zoo import list_problems


def _eta(text):
    if text == "auto":
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'auto', got {text!r}") from None


def build_parser():
    p = argparse.ArgumentParser(prog="inclsolve",
                                description="Certified first-order solvers for 0 in Fx + Tx.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one experiment")
    r.add_argument("--config", help="JSON file with ExperimentConfig fields")
    r.add_argument("--problem", dest="problem_id")
    r.add_argument("--method", choices=METHODS)
    r.add_argument("--eta", type=_eta)
    r.add_argument("--beta", type=float)
    r.add_argument("--omega", type=float)
    r.add_argument("--gamma", type=float)
    r.add_argument("--rho", type=float)
    r.add_argument("--iters", dest="iterations", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--theorem", choices=THEOREMS)
    r.add_argument("--check", dest="check_theorems", action="store_true", default=None,
                   help="exit with status 1 on the first failed certificate")
    r.add_argument("--override-window", dest="override_window", action="store_true",
                   default=None, help="accept a step size outside the theorem window")
    r.add_argument("--out", dest="output_path", help="CSV output path")
    r.add_argument("--plotdata", help="also write long-format plot data here")

    sub.add_parser("list-problems", help="list registered problems")
    sub.add_parser("list-presets", help="list theorem presets")

    v = sub.add_parser("verify", help="run the checks of one theorem preset")
    v.add_argument("--preset", required=True)
    v.add_argument("--iters", dest="iterations", type=int,
                   help="override the preset iteration counts")
    return p


_FIELDS = ("problem_id", "method", "eta", "beta", "omega", "gamma", "rho", "iterations",
           "seed", "theorem", "check_theorems", "override_window", "output_path")


def config_from_args(args):
    """Merge ``--config`` with the flags; flags take precedence."""
    base = {}
    if args.config:
        base = ExperimentConfig.from_json(args.config).to_dict()
    for name in _FIELDS:
        val = getattr(args, name)
        if val is not None:
            base[name] = val
    missing = [n for n in ("problem_id", "method") if n not in base]
    if missing:
        flags = ", ".join("--" + ("problem" if n == "problem_id" else n) for n in missing)
        raise argparse.ArgumentTypeError(f"missing {flags} (flag or config file)")
    return ExperimentConfig.from_dict(base)


def _cmd_run(args, out):
    cfg = config_from_args(args)
    trace = run_experiment(cfg)
    if cfg.output_path:
        emit_csv(trace, cfg.output_path)
    if args.plotdata:
        emit_plotdata([trace], args.plotdata)
    last = trace.rows[-1]
    m = trace.meta
    print(f"{m['run_id']}  theorem={m['theorem']}  eta={m['eta']!r}", file=out)
    print(f"k={last['k']}  res_norm={last['res_norm']!r}  best_res={last['best_res']!r}",
          file=out)
    if not m["applicable"]:
        print(f"certificates not applicable: {m['reason']}", file=out)
    fail = trace.failure
    if fail is not None:
        print(f"first failed certificate: {describe_certificate(fail)}", file=out)
    return exit_status(trace, cfg.check_theorems)


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "list-problems":
            for pid, desc in list_problems():
                print(f"{pid:28s} {desc}", file=out)
            return EXIT_OK
        if args.command == "list-presets":
            for name, desc in list_presets():
                print(f"{name:16s} {desc}", file=out)
            return EXIT_OK
        if args.command == "verify":
            ok, lines, _ = verify_preset(args.preset, iterations=args.iterations)
            for line in lines:
                print(line, file=out)
            return EXIT_OK if ok else EXIT_CERTIFICATE
        return _cmd_run(args, out)
    except argparse.ArgumentTypeError as exc:
        print(f"inclsolve: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InclsolveError, OSError) as exc:
        code = exit_code_for(exc)
        print(f"inclsolve: error: {exc}", file=sys.stderr)
        return code
    except FloatingPointError as exc:
        print(f"inclsolve: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
