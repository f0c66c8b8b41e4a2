"""Command-line entry point: ``extreme-cic estimate | simulate | fit-tail``.

Exit codes: 0 success, 1 usage / input / output errors, 2 when ``estimate``
could not produce a result for at least one quantile level.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

from . import __version__
from .data import EstimationError, QuadData
from .ecic import (
    AutoConfig,
    FixedRule,
    GuillouHallRule,
    estimate_auto,
    estimate_classic,
    estimate_left_tail,
    estimate_right_tail,
    fit_ecic,
)
from .io import SCHEMA_VERSION, InputError, RunConfig, dumps, error_record, parse_csv, parse_q_grid
from .montecarlo import SimDesign, run_bias_experiment, run_coverage_experiment
from .tails import TailTransform

EXIT_OK, EXIT_ERROR, EXIT_PARTIAL = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _grid(text):
    try:
        return parse_q_grid(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _auto_config(cfg: RunConfig) -> AutoConfig:
    rule = FixedRule(cfg.k_power, cfg.k_scale) if cfg.k_rule == "fixed" else GuillouHallRule()
    return AutoConfig(
        extreme_low=cfg.extreme_low,
        extreme_high=cfg.extreme_high,
        d_floor=cfg.d_floor,
        k_rule=rule,
        se_method=cfg.se_method,
        transform=cfg.transform,
        bootstrap_reps=cfg.bootstrap_reps,
        seed=cfg.seed,
    )


def estimate_one(data: QuadData, q: float, cfg: RunConfig):
    auto = _auto_config(cfg)
    if cfg.method == "auto":
        return estimate_auto(data, q, auto)
    if cfg.method == "cic":
        return estimate_classic(data, q, auto)
    tail = cfg.tail if cfg.tail != "auto" else ("right" if q >= 0.5 else "left")
    if tail == "right":
        return estimate_right_tail(data, q, auto.k_rule, cfg.d_floor)
    return estimate_left_tail(data, q, cfg.transform, auto.k_rule, cfg.d_floor)


def run_estimate(data: QuadData, cfg: RunConfig) -> tuple[list[dict], bool]:
    """One record per level; the flag is False if any level failed."""
    records, ok = [], True
    for q in cfg.q_list:
        try:
            records.append(estimate_one(data, q, cfg).to_dict())
        except EstimationError as exc:
            records.append(error_record(q, exc))
            ok = False
    return records, ok


def _estimate_csv(records) -> str:
    buf = io.StringIO()
    cols = ["q", "tau_hat", "se", "ci_low", "ci_high", "method", "tail", "error"]
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for rec in records:
        writer.writerow(
            [repr(rec[c]) if isinstance(rec.get(c), float) else rec.get(c, "") for c in cols]
        )
    return buf.getvalue()


def _write(text: str, output: str | None) -> None:
    if output in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(output).write_text(text)


def _load(path: str) -> QuadData:
    if path == "-":
        return parse_csv(sys.stdin)
    return parse_csv(path)


def cmd_estimate(args) -> int:
    try:
        cfg = RunConfig(
            q_list=tuple(args.q),
            method=args.method,
            tail=args.tail,
            transform=TailTransform(args.transform),
            k_rule=args.k_rule,
            k_power=args.k_power,
            k_scale=args.k_scale,
            d_floor=args.d_floor,
            extreme_low=args.extreme_low,
            extreme_high=args.extreme_high,
            se_method=args.se_method,
            bootstrap_reps=args.bootstrap_reps,
            seed=args.seed,
        )
        data = _load(args.input)
    except (OSError, InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    records, ok = run_estimate(data, cfg)
    if args.format == "csv":
        text = _estimate_csv(records)
    else:
        text = dumps({"schema": SCHEMA_VERSION, "cell_sizes": data.sizes, "results": records})
    try:
        _write(text, args.output)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK if ok else EXIT_PARTIAL


def cmd_simulate(args) -> int:
    try:
        design = SimDesign(args.pi_g, args.pi_t, args.pi_a, args.pi_b, args.dof, args.n, args.seed)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    runner = run_coverage_experiment if args.experiment == "coverage" else run_bias_experiment
    try:
        out_dir = Path(args.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        result = runner(design, args.q, args.reps, args.method, workers=args.workers)
        stem = f"{args.experiment}_{args.method}_n{args.n}_seed{args.seed}"
        (out_dir / f"{stem}.json").write_text(result.to_json() + "\n")
        (out_dir / f"{stem}.csv").write_text(result.to_csv())
    except (OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    stats = result.stats
    for i, q in enumerate(result.q_grid):
        line = (
            f"q={q:.4f} mean={stats['mean_estimate'][i]:.4f} bias={stats['bias'][i]:+.4f} "
            f"iqr=[{stats['iqr_low'][i]:.4f}, {stats['iqr_high'][i]:.4f}]"
        )
        if "coverage_rate" in stats:
            line += f" coverage={stats['coverage_rate'][i]:.3f} mean_se={stats['mean_se'][i]:.4f}"
        print(line)
    return EXIT_OK


def cmd_fit_tail(args) -> int:
    try:
        data = _load(args.input).map(TailTransform(args.transform).forward)
        rule = FixedRule(args.k_power, args.k_scale) if args.k_rule == "fixed" else GuillouHallRule()
        efit = fit_ecic(data, rule)
    except (OSError, InputError, ValueError) as exc:
        # EstimationError is a ValueError
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    payload = {
        "schema": SCHEMA_VERSION,
        "transform": args.transform,
        "fits": {
            lab: {"k": f.k, "threshold": f.threshold, "alpha_hat": f.alpha_hat, "n": f.n}
            for lab, f in efit.fits().items()
        },
        "k_fallback": list(efit.fallback),
    }
    _write(dumps(payload), args.output)
    return EXIT_OK


def _add_k_rule(p):
    p.add_argument("--k-rule", choices=["guillou_hall", "fixed"], default="guillou_hall")
    p.add_argument("--k-power", type=float, default=0.5)
    p.add_argument("--k-scale", type=float, default=2.0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="extreme-cic", description="Changes-in-changes at extreme quantiles.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    est = sub.add_parser("estimate", help="quantile treatment effects from a y,g,t CSV")
    est.add_argument("--input", required=True, help="CSV path, or - for stdin")
    est.add_argument("--q", type=_grid, default=[0.5], help="levels: a,b,c or start:stop:step")
    est.add_argument("--method", choices=["auto", "cic", "ecic"], default="auto")
    est.add_argument("--tail", choices=["auto", "right", "left"], default="auto")
    est.add_argument("--transform", choices=["negate", "reciprocal"], default="negate")
    _add_k_rule(est)
    est.add_argument("--d-floor", type=float, default=10.0)
    est.add_argument("--extreme-low", type=float, default=0.05)
    est.add_argument("--extreme-high", type=float, default=0.95)
    est.add_argument("--se-method", choices=["analytic_kernel", "bootstrap"], default="analytic_kernel")
    est.add_argument("--bootstrap-reps", type=int, default=500)
    est.add_argument("--seed", type=int, default=0)
    est.add_argument("--format", choices=["json", "csv"], default="json")
    est.add_argument("--output", default=None, help="file to write (default stdout)")
    est.set_defaults(func=cmd_estimate)

    sim = sub.add_parser("simulate", help="Monte Carlo bias / coverage experiment")
    sim.add_argument("--n", type=int, default=5000)
    sim.add_argument("--reps", type=_positive_int, default=1000)
    sim.add_argument("--method", choices=["ecic", "cic", "auto"], default="ecic")
    sim.add_argument("--q", type=_grid, default=parse_q_grid("0.90:0.995:0.005"))
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--pi-g", type=float, default=0.1)
    sim.add_argument("--pi-t", type=float, default=0.5)
    sim.add_argument("--pi-a", type=float, default=1.0)
    sim.add_argument("--pi-b", type=float, default=2.0)
    sim.add_argument("--dof", type=float, default=10.0)
    sim.add_argument("--experiment", choices=["coverage", "bias"], default="coverage")
    sim.add_argument("--workers", type=_positive_int, default=1)
    sim.add_argument("--output-dir", default="results")
    sim.set_defaults(func=cmd_simulate)

    fit = sub.add_parser("fit-tail", help="dump the per-cell Hill fits")
    fit.add_argument("--input", required=True)
    fit.add_argument("--transform", choices=["identity", "negate", "reciprocal"], default="identity")
    _add_k_rule(fit)
    fit.add_argument("--output", default=None)
    fit.set_defaults(func=cmd_fit_tail)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
