"""Command-line interface: ``ebfreq <command> [options]``.

Exit status is 0 on success, 1 on a data or file error (reported on stderr as
a single ``error[<category>]: <detail>`` line) and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from . import io
from .data import DataError
from .estimate import estimate_arrays
from .evaluate import (
    DEFAULT_BINS,
    bias_variance_profile,
    format_profile,
    format_report,
    mse_vs_truth,
    mse_vs_validation,
)
from .fit import DEFAULT_MIN_BIN, DEFAULT_N_BASIS, fit
from .simulate import MODES, SimConfig, draw_truth, sample_counts, sample_validation, split_dataset

log = logging.getLogger("ebfreq")


def _cmd_fit(args):
    data = io.read_dataset(args.input)
    kwargs = {}
    if args.model == "windowed":
        kwargs = {"min_bin": args.min_bin, "delta": args.delta}
    elif args.model == "spline":
        kwargs = {"n_basis": args.n_basis, "symmetric": not args.asymmetric}
    result = fit(data, args.model, **kwargs)
    meta = result.metadata()
    meta["input"] = str(args.input)
    io.save_model(result.model, args.output_model, meta)
    status = "converged" if result.converged else "NOT converged"
    print(f"{args.model}: {len(data)} markers, nu = {result.model.affinity():.4g}, "
          f"-log L = {result.neg_log_lik:.10g} ({status})")
    return 0


def _cmd_estimate(args):
    model = io.load_model(args.model_file)
    data = io.read_dataset(args.input)
    io.write_estimates(estimate_arrays(model, data), args.output)
    print(f"wrote {len(data)} estimates to {args.output}")
    return 0


def _cmd_evaluate(args):
    tables = [io.read_estimates(p) for p in args.estimates]
    columns = [c for c in ("q_eb", "q_mle", "q_pooled") if not all(v != v for v in tables[0][c])]
    profiles = {}
    if args.truth:
        truth = io.read_truth(args.truth)
        reports = [mse_vs_truth(tables[0], truth, c, args.bins) for c in columns]
        if len(tables) > 1:
            profiles = {c: bias_variance_profile(tables, truth, args.bins, c, args.decomposition) for c in columns}
    else:
        validation = io.read_dataset(args.validation)
        reports = [mse_vs_validation(tables[0], validation, c, args.bins) for c in columns]
    print(format_report(reports))
    for c, prof in profiles.items():
        print(f"\n{c} bias/variance profile ({len(tables)} replicates, {args.decomposition} decomposition, "
              "population variance)")
        print(format_profile(prof))
    if args.output:
        io.write_report(reports, args.output, profiles)
    return 0


def _cmd_simulate(args):
    config = io.load_simconfig(args.config) if args.config else SimConfig()
    overrides = {k: v for k, v in (("seed", args.seed), ("mode", args.mode), ("n_markers", args.n_markers),
                                   ("n_x", args.n_x), ("n_y", args.n_y)) if v is not None}
    if overrides:
        config = replace(config, **overrides)
    truth = draw_truth(config)
    data = sample_counts(truth, config.n_x, config.n_y, config.seed, args.replicate)
    io.write_dataset(data, args.output)
    if args.truth_out:
        io.write_truth(truth, args.truth_out)
    if args.validation_out:
        io.write_dataset(sample_validation(truth, args.n_val, config.seed, args.replicate), args.validation_out)
    if args.config_out:
        io.save_simconfig(config, args.config_out)
    print(f"simulated {config.n_markers} markers ({config.mode}, seed {config.seed}) to {args.output}")
    return 0


def _cmd_split(args):
    data = io.read_dataset(args.input)
    part_a, part_b = split_dataset(data, args.fraction, args.seed)
    if args.strip_boosters:
        part_a, part_b = part_a.select_boosters([]), part_b.select_boosters([])
    io.write_dataset(part_a, args.out_a)
    io.write_dataset(part_b, args.out_b)
    print(f"split {len(data)} markers into {args.out_a} and {args.out_b}")
    return 0


def _cmd_orient(args):
    data = io.read_raw(args.input_raw)
    io.write_dataset(data, args.output)
    print(f"oriented {len(data)} markers to {args.output}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ebfreq", description="Empirical Bayes allele frequency estimation.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a prior model to a counts table")
    p.add_argument("--model", choices=("windowed", "eb1", "eb2", "spline"), default="eb1")
    p.add_argument("--n-basis", type=int, default=DEFAULT_N_BASIS, help="spline basis size (default %(default)s)")
    p.add_argument("--asymmetric", action="store_true", help="fit separate spline coefficients for a and b")
    p.add_argument("--min-bin", type=int, default=DEFAULT_MIN_BIN, help="smallest windowed bin (default %(default)s)")
    p.add_argument("--delta", type=float, default=0.0, help="windowed half-width; 0 keys bins by exact frequency")
    p.add_argument("--input", required=True)
    p.add_argument("--output-model", required=True)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("estimate", help="posterior-mean estimates under a fitted model")
    p.add_argument("--model-file", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("evaluate", help="score estimate tables against truth or validation counts")
    p.add_argument("--estimates", required=True, nargs="+",
                   help="estimate table(s); several replicates over one truth add a bias/variance profile")
    gold = p.add_mutually_exclusive_group(required=True)
    gold.add_argument("--truth", help="simulation truth file")
    gold.add_argument("--validation", help="held-out counts table (target columns only are used)")
    p.add_argument("--bins", type=int, default=DEFAULT_BINS)
    p.add_argument("--decomposition", choices=("marker", "bin"), default="marker")
    p.add_argument("--output", help="plot-ready report table")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("simulate", help="simulate a counts table with known truth")
    p.add_argument("--config", help="simulation config (JSON); defaults to the built-in setup")
    p.add_argument("--seed", type=int)
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--n-markers", type=int)
    p.add_argument("--n-x", type=int, nargs="+")
    p.add_argument("--n-y", type=int)
    p.add_argument("--replicate", type=int, default=0, help="count replicate over the same truth")
    p.add_argument("--output", required=True)
    p.add_argument("--truth-out")
    p.add_argument("--validation-out", help="also write an independent validation sample")
    p.add_argument("--n-val", type=int, default=24)
    p.add_argument("--config-out", help="write the effective config")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("split", help="split target alleles into two disjoint samples")
    p.add_argument("--input", required=True)
    p.add_argument("--fraction", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-a", required=True)
    p.add_argument("--out-b", required=True)
    p.add_argument("--strip-boosters", action="store_true", help="drop booster columns from both parts")
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("orient", help="convert a raw allele table to a counts table")
    p.add_argument("--input-raw", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_orient)
    return parser


def _category(exc):
    if isinstance(exc, io.FormatError):
        return "format"
    if isinstance(exc, DataError):
        return "data"
    if isinstance(exc, OSError):
        return "io"
    return "invalid"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (DataError, OSError, ValueError, KeyError) as exc:
        detail = str(exc).replace("\n", " ")
        if isinstance(exc, OSError) and exc.filename:
            detail = f"{exc.strerror}: {exc.filename}"
        print(f"error[{_category(exc)}]: {detail}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
