"""Command-line front end.

Subcommands: pack, verify, bound, simulate, fit, decode, experiment.
Exit codes: 0 success, 2 invalid arguments, 3 construction/verification
failure, 4 I/O error.  LRLOGIT_THREADS caps parallelism (0 = auto).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from ._util import dumps_17g, read_json, write_json
from .bounds import (
    BoundInputs,
    FanoInputs,
    VARIANT_APPENDIX,
    VARIANT_THEOREM,
    bound_constants,
    fano_lower_bound,
    minimax_lower_bound,
    packing_log_cardinality,
)
from .errors import LrlogitError
from .estimators import (
    FitOptions,
    FitResult,
    fit_full,
    fit_lowrank,
    min_distance_decode,
)
from .experiment import ExperimentConfig, run_experiment
from .model import (
    cmi_upper_bound,
    load_dataset_binary,
    load_dataset_json,
    sample_dataset,
    save_dataset_binary,
    save_dataset_json,
)
from .packing import (
    DEFAULT_KAPPA,
    assemble_packing,
    auto_epsilon,
    load_packing,
    save_packing,
    verify_packing,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONSTRUCTION = 3
EXIT_IO = 4


def _emit(doc, out=None):
    text = dumps_17g(doc)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _error_json(kind, message):
    sys.stdout.write(dumps_17g({"error": {"type": kind, "message": message}}))


def _add_common(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lrlogit",
        description="Packing sets, risk floors and estimators for matrix logistic regression",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pack", help="construct and certify a packing set")
    _add_common(p)
    p.add_argument("--m1", type=int, required=True)
    p.add_argument("--m2", type=int, required=True)
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--d", type=float, required=True)
    p.add_argument("--epsilon", default="auto",
                   help='scale, or "auto" for the geometric midpoint')
    p.add_argument("--kappa", type=float, default=DEFAULT_KAPPA)
    p.add_argument("--max-attempts", type=int, default=64)
    p.add_argument("--num-cores", type=int, default=2)
    p.add_argument("--num-left-factors", type=int, default=None)
    p.add_argument("--num-right-factors", type=int, default=None)
    p.add_argument("--report", default="report.json")
    p.set_defaults(out="packing.json", func=cmd_pack)

    p = sub.add_parser("verify", help="re-certify a packing file")
    p.add_argument("packing")
    p.add_argument("--kappa", type=float, default=None,
                   help="override the stored certification constant")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bound", help="evaluate the closed-form risk floor")
    p.add_argument("--m1", type=int, required=True)
    p.add_argument("--m2", type=int, required=True)
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--d", type=float, default=10.0,
                   help="radius used for the divergence side of the sandwich")
    p.add_argument("--epsilon", default="auto")
    p.add_argument("--variant", choices=[VARIANT_THEOREM, VARIANT_APPENDIX],
                   default=VARIANT_THEOREM)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("simulate", help="draw a dataset from a packing element")
    _add_common(p)
    p.add_argument("--packing", required=True)
    p.add_argument("--index", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--format", choices=["json", "bin"], default="json")
    p.set_defaults(out="data.json", func=cmd_simulate)

    p = sub.add_parser("fit", help="fit a coefficient matrix to a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--method", choices=["full", "lowrank"], default="full")
    p.add_argument("--rank", type=int, default=None)
    p.add_argument("--max-iters", type=int, default=300)
    p.add_argument("--tol-grad", type=float, default=1e-4)
    p.add_argument("--step-rule", choices=["fixed", "backtracking"],
                   default="backtracking")
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--init", choices=["zero", "gaussian", "oracle"], default="zero")
    p.add_argument("--init-scale", type=float, default=1.0)
    p.add_argument("--init-seed", type=int, default=0)
    p.add_argument("--packing", default=None,
                   help="required for --init oracle: start at the true element")
    p.add_argument("--index", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("decode", help="nearest packing element to an estimate")
    p.add_argument("--estimate", required=True, help="FitResult JSON")
    p.add_argument("--packing", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("experiment", help="risk-vs-n sweep with the floor")
    p.add_argument("--config", default=None, help="ExperimentConfig JSON")
    p.add_argument("--no-resume", action="store_true")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_experiment)

    return parser


def _parse_epsilon(raw, d, rank):
    if raw == "auto":
        return auto_epsilon(d, rank)
    return float(raw)


def cmd_pack(args):
    epsilon = _parse_epsilon(args.epsilon, args.d, args.rank)
    packing, report = assemble_packing(
        args.m1, args.m2, args.rank, args.d,
        epsilon=epsilon,
        seed=args.seed,
        max_attempts=args.max_attempts,
        num_cores=args.num_cores,
        num_left_factors=args.num_left_factors,
        num_right_factors=args.num_right_factors,
        kappa=args.kappa,
    )
    save_packing(args.out, packing)
    write_json(args.report, report.to_dict())
    sys.stdout.write(dumps_17g({
        "packing": args.out,
        "report": args.report,
        "L": len(packing),
        "epsilon": packing.epsilon,
        "min_pairwise_sq": packing.min_pairwise_sq,
        "max_pairwise_sq": packing.max_pairwise_sq,
        "passed": report.passed,
    }))
    return EXIT_OK if report.passed else EXIT_CONSTRUCTION


def cmd_verify(args):
    packing = load_packing(args.packing)
    report = verify_packing(packing, args.kappa)
    doc = report.to_dict()
    # stored extrema must match the recomputation
    stored_ok = (
        abs(packing.min_pairwise_sq - report.min_pairwise_sq)
        <= 1e-12 * max(1.0, abs(report.min_pairwise_sq))
        and abs(packing.max_pairwise_sq - report.max_pairwise_sq)
        <= 1e-12 * max(1.0, abs(report.max_pairwise_sq))
    )
    doc["stored_extrema_match"] = stored_ok
    if not stored_ok:
        doc["failures"] = list(doc["failures"]) + [
            f"stored min/max ({packing.min_pairwise_sq:.17g}, "
            f"{packing.max_pairwise_sq:.17g}) disagree with recomputed "
            f"({report.min_pairwise_sq:.17g}, {report.max_pairwise_sq:.17g})"
        ]
        doc["passed"] = False
    _emit(doc, args.out)
    return EXIT_OK if doc["passed"] else EXIT_CONSTRUCTION


def cmd_bound(args):
    inputs = BoundInputs(args.m1, args.m2, args.rank, args.n, args.sigma,
                         variant=args.variant)
    bound = minimax_lower_bound(inputs)
    cards = packing_log_cardinality(args.m1, args.m2, args.rank)
    log2_l = (cards.log2_theorem if args.variant == VARIANT_THEOREM
              else cards.log2_appendix)
    epsilon = _parse_epsilon(args.epsilon, args.d, args.rank)
    u1 = fano_lower_bound(FanoInputs(L=2**max(log2_l, 1), p_err=1 / np.sqrt(2)))
    u2_nats = cmi_upper_bound(epsilon, args.rank, args.n, args.sigma)
    c1, c2, c3 = bound_constants()
    _emit({
        "bound": bound.value,
        "vacuous": bound.vacuous,
        "log2_L": log2_l,
        "u1_bits": u1,
        "u2_bits": u2_nats * np.log2(np.e),
        "epsilon": epsilon,
        "constants": {"c1": c1, "c2": c2, "c3": c3},
    }, args.out)
    return EXIT_OK


def cmd_simulate(args):
    packing = load_packing(args.packing)
    if not (0 <= args.index < len(packing)):
        raise ValueError(f"index {args.index} outside [0, {len(packing)})")
    truth = packing.elements[args.index].dense()
    ds = sample_dataset(truth, args.n, args.sigma, args.seed,
                        truth_index=args.index)
    if args.format == "json":
        save_dataset_json(args.out, ds)
    else:
        save_dataset_binary(args.out, ds)
    sys.stdout.write(dumps_17g({
        "data": args.out, "n": ds.n, "format": args.format,
        "truth_index": args.index,
    }))
    return EXIT_OK


def _load_dataset_any(path):
    if path.endswith(".bin"):
        return load_dataset_binary(path)
    return load_dataset_json(path)


def cmd_fit(args):
    ds = _load_dataset_any(args.data)
    b0 = None
    init = args.init
    if init == "oracle":
        if args.packing is None or args.index is None:
            raise ValueError("--init oracle needs --packing and --index")
        b0 = load_packing(args.packing).elements[args.index].dense()
        init = "zero"
    opts = FitOptions(max_iters=args.max_iters, tol_grad=args.tol_grad,
                      step_rule=args.step_rule, eta=args.eta, init=init,
                      init_scale=args.init_scale, init_seed=args.init_seed)
    if args.method == "lowrank":
        if args.rank is None:
            raise ValueError("--method lowrank needs --rank")
        result = fit_lowrank(ds, args.rank, opts, B0=b0)
    else:
        result = fit_full(ds, opts, B0=b0)
    _emit(result.to_dict(), args.out)
    return EXIT_OK


def cmd_decode(args):
    doc = read_json(args.estimate)
    result = FitResult.from_dict(doc)
    packing = load_packing(args.packing)
    index = min_distance_decode(result.B_hat, packing)
    dist = float(np.sum((result.B_hat - packing.elements[index].dense()) ** 2))
    _emit({"index": index, "distance_sq": dist}, args.out)
    return EXIT_OK


def cmd_experiment(args):
    config = (ExperimentConfig.from_json_file(args.config)
              if args.config else ExperimentConfig())
    progress = None if args.quiet else (
        lambda n: sys.stderr.write(f"completed n={n}\n"))
    result = run_experiment(config, resume=not args.no_resume, progress=progress)
    sys.stdout.write(dumps_17g({
        "csv": config.out_csv,
        "summary": config.out_summary,
        "rows": len(result.rows),
    }))
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses 2 for usage errors already
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    try:
        return args.func(args)
    except LrlogitError as exc:
        _error_json(type(exc).__name__, str(exc))
        return EXIT_CONSTRUCTION
    except (OSError, json.JSONDecodeError) as exc:
        _error_json(type(exc).__name__, str(exc))
        return EXIT_IO
    except ValueError as exc:
        _error_json("ValueError", str(exc))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
