"""Command-line entry point: ``medsketch {freq,inner,median-check,oracle}``."""

from __future__ import annotations

import argparse
import sys

from . import datasets, experiments, oracle
from .hashing import SignFamily, log2_exact
from .simulate import FULLY_RANDOM, MULTIPLY_SHIFT, NUMBA, NUMPY


def parse_int_list(text: str) -> list[int]:
    try:
        values = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def parse_s_grid(text: str) -> list[int]:
    """``MIN..MAX`` (every power of two in between), ``S`` or ``S1,S2,...``."""
    if ".." in text:
        lo, _, hi = text.partition("..")
        try:
            lo_b, hi_b = log2_exact(int(lo)), log2_exact(int(hi))
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
        if lo_b > hi_b:
            raise argparse.ArgumentTypeError(f"empty range {text!r}")
        return [1 << b for b in range(lo_b, hi_b + 1)]
    grid = parse_int_list(text)
    for s in grid:
        try:
            log2_exact(s)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    return grid


def parse_u64(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def _dataset_arg(text: str) -> datasets.DatasetSpec:
    try:
        return datasets.parse_dataset(text)
    except datasets.DatasetError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_experiment_args(p: argparse.ArgumentParser, pair: bool) -> None:
    p.add_argument("--dataset", required=True, type=_dataset_arg,
                   help="zipf:N:ALPHA | onehot:D:I | disjoint:NNZ | counts:PATH | transactions:PATH")
    if pair:
        p.add_argument("--dataset-w", type=_dataset_arg, help="second vector when --dataset is a single vector")
    p.add_argument("--t", type=parse_int_list, default=[1, 2], help="comma-separated t values")
    p.add_argument("--s-grid", type=parse_s_grid, default=[1024], help="MIN..MAX powers of two, or a list")
    p.add_argument("--trials", type=int, help="sketch rebuilds (default by protocol)")
    p.add_argument("--queries", type=int, help="queries per sketch (default by protocol)")
    p.add_argument("--protocol", choices=("auto", "standard", "small"), default="auto",
                   help="standard: 1000 sketches x 100 queries; small: 10^6 x 1; auto: small below 5000 items")
    p.add_argument("--order", type=int, choices=experiments.ORDERS, default=2)
    if not pair:
        p.add_argument("--query-mode", choices=datasets.QUERY_MODES,
                       help="support, all of [d], or off (indices of [d] outside the support)")
    p.add_argument("--seed", type=parse_u64, default=0)
    p.add_argument("--sign-family", choices=[f.value for f in SignFamily], default="pairwise")
    p.add_argument("--hash-model", choices=(MULTIPLY_SHIFT, FULLY_RANDOM), default=MULTIPLY_SHIFT)
    p.add_argument("--backend", choices=(NUMBA, NUMPY), default=NUMBA)
    p.add_argument("--no-normalize", action="store_true", help="keep raw counts from files")
    p.add_argument("--out", help="CSV path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="medsketch", description="CountSketch median-estimator experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    _add_experiment_args(sub.add_parser("freq", help="point-query error moments"), pair=False)
    _add_experiment_args(sub.add_parser("inner", help="inner-product error moments"), pair=True)

    mc = sub.add_parser("median-check", help="moments of the median of 2t-1 i.i.d. draws")
    mc.add_argument("--dist", required=True, help="tightness:K | uniform:X1,X2,... | pmf:X1=P1,...")
    mc.add_argument("--t", type=int, default=2)
    mc.add_argument("--q", type=int, default=1)
    mc.add_argument("--trials", type=int, default=10**5)
    mc.add_argument("--seed", type=parse_u64, default=0)

    orc = sub.add_parser("oracle", help="exact error distribution under fully random hashing")
    orc.add_argument("--dataset", required=True, type=_dataset_arg)
    orc.add_argument("--dataset-w", type=_dataset_arg)
    orc.add_argument("--mode", choices=("point", "inner"), default="point")
    orc.add_argument("--query", type=int, default=0, help="queried index for --mode point")
    orc.add_argument("--s", type=int, required=True)
    orc.add_argument("--t", type=int, default=1)
    orc.add_argument("--no-normalize", action="store_true")
    orc.add_argument("--out", help="write value,prob rows here (default: stdout)")
    return parser


def _with_normalize(spec, args):
    if spec is not None and args.no_normalize and spec.is_file:
        return datasets.DatasetSpec(spec.kind, path=spec.path, normalize=False)
    return spec


def _experiment_config(args, pair: bool) -> experiments.ExperimentConfig:
    spec = _with_normalize(args.dataset, args)
    trials, queries = args.trials, args.queries
    if trials is None or queries is None:
        if args.protocol == "standard":
            d_trials, d_queries = experiments.STANDARD_TRIALS, experiments.STANDARD_QUERIES
        elif args.protocol == "small":
            d_trials, d_queries = experiments.SMALL_TRIALS, experiments.SMALL_QUERIES
        else:
            d_trials, d_queries = experiments.protocol_for(datasets.load(spec).items)
        trials = d_trials if trials is None else trials
        queries = d_queries if queries is None else queries
    return experiments.ExperimentConfig(
        dataset=spec, t_values=args.t, s_grid=args.s_grid, trials=trials, queries_per_trial=queries,
        order=args.order, query_mode=None if pair else args.query_mode, seed=args.seed,
        sign_family=args.sign_family, hash_model=args.hash_model, backend=args.backend,
        dataset_w=_with_normalize(getattr(args, "dataset_w", None), args), out_path=args.out,
    )


def _write(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _summary(report: experiments.MomentReport) -> str:
    lines = [f"{'t':>3} {'s':>7} {'moment':>14} {'stderr':>11} {'moment*s':>12} {'moment*s^2':>12}"]
    for r in report.sorted_rows():
        lines.append(f"{r.t:>3} {r.s:>7} {r.moment:>14.6e} {r.stderr:>11.3e} "
                     f"{r.moment_x_s:>12.5g} {r.moment_x_s2:>12.5g}")
    return "\n".join(lines) + "\n"


def cmd_experiment(args, pair: bool) -> int:
    cfg = _experiment_config(args, pair)
    report = experiments.run_inner_experiment(cfg) if pair else experiments.run_freq_experiment(cfg)
    _write(experiments.csv_text(report), args.out)
    if args.out:
        sys.stdout.write(_summary(report))
    return 0


def cmd_median_check(args) -> int:
    dist = experiments.parse_dist(args.dist)
    if args.t < 1 or args.q < 1 or args.trials < 2:
        raise ValueError("t and q must be >= 1 and trials >= 2")
    report = experiments.run_median_moment_check(dist, args.t, args.q, args.trials, args.seed)
    print("\n".join(report.lines()))
    return 0


def cmd_oracle(args) -> int:
    log2_exact(args.s)
    data = datasets.load(_with_normalize(args.dataset, args))
    if args.mode == "point":
        dist = oracle.median_point_error_dist(data.vector, args.query, args.s, args.t)
    else:
        if len(data.vectors) == 2:
            v, w = data.vectors
        elif args.dataset_w is not None:
            v, w = data.vector, datasets.load(_with_normalize(args.dataset_w, args)).vector
        else:
            raise ValueError("inner mode needs a vector pair")
        dist = oracle.median_inner_error_dist(v, w, args.s, args.t)
    rows = ["value,prob"] + [f"{x!r},{p!r}" for x, p in dist]
    _write("\n".join(rows) + "\n", args.out)
    if args.out:
        print(f"atoms {len(dist)}  mean {dist.mean():.6e}  "
              f"E|err| {dist.moment(1):.6e}  E err^2 {dist.moment(2):.6e}  E err^4 {dist.moment(4):.6e}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "freq":
            return cmd_experiment(args, pair=False)
        if args.command == "inner":
            return cmd_experiment(args, pair=True)
        if args.command == "median-check":
            return cmd_median_check(args)
        return cmd_oracle(args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"medsketch: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
