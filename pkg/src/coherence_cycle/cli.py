"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 comparison thresholds not met,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import harness
from .channels import (
    EXPERIMENTAL_LAMBDA,
    ChannelError,
    chi_of_unitary,
    depolarized_cnot,
    generalized_cnot,
    process_fidelity,
)
from .protocol import CycleInput, MeasurementBasis, run_cycle
from .qmat import StateError
from .reference import load_table
from .tomography import TomographyConfig, qpt

EXIT_OK, EXIT_USAGE, EXIT_THRESHOLD, EXIT_NUMERICAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _grid(text: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"invalid grid {text!r}") from exc


def _gate_arg(args) -> str:
    if getattr(args, "chi", None) and args.lam is not None:
        raise UsageError("--chi and --lambda are mutually exclusive")
    if getattr(args, "chi", None):
        return args.chi
    if args.lam is not None:
        return f"lambda={args.lam}"
    return "ideal"


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = _Parser(prog="coherence-cycle", description="Coherence/discord inter-conversion simulator.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)
    subs = {}

    def gate_flags(p):
        p.add_argument("--lambda", dest="lam", type=float, default=None, help="depolarized CNOT weight")
        p.add_argument("--chi", default=None, help="chi-matrix JSON file used as the conversion gate")
        p.add_argument("--tp-tol", type=float, default=1e-6, help="trace-preservation tolerance for chi gates")
        p.add_argument("--basis", choices=["pauli_y", "fourier"], default="pauli_y")

    p = subs["sweep"] = sub.add_parser("sweep", help="run a parameter sweep and write CSV")
    p.add_argument("--config", help="JSON file of flag defaults")
    p.add_argument("--mode", choices=["pure", "mixed"], default="pure")
    p.add_argument("--grid", type=_grid, default=None, help="comma-separated theta (deg) or |a| values")
    p.add_argument("--table", choices=["S1", "S2"], default=None, help="take the grid from a reference table")
    gate_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shots", type=int, default=None, help="estimate quantities by simulated tomography")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=False, default=None)

    p = subs["report"] = sub.add_parser("report", help="compare a sweep CSV with a reference table")
    p.add_argument("--config", help="JSON file of flag defaults")
    p.add_argument("--sim", required=False, default=None, help="sweep CSV")
    p.add_argument("--table", choices=["S1", "S2"], default="S1")
    p.add_argument("--out", default=None, help="comparison CSV")
    p.add_argument("--max-rms-discord", type=float, default=harness.DEFAULT_MAX_RMS_DISCORD)
    p.add_argument("--max-rms-cfinal", type=float, default=harness.DEFAULT_MAX_RMS_CFINAL)
    p.add_argument("--require-band", action="store_true", help="also fail when a row leaves the experiment/ideal band")

    p = subs["plot"] = sub.add_parser("plot", help="render a sweep CSV as SVG")
    p.add_argument("--config", help="JSON file of flag defaults")
    p.add_argument("--csv", required=False, default=None)
    p.add_argument("--out", required=False, default=None)
    p.add_argument("--xlabel", default="key")

    p = subs["qpt-demo"] = sub.add_parser("qpt-demo", help="process tomography of the depolarized CNOT")
    p.add_argument("--config", help="JSON file of flag defaults")
    p.add_argument("--lambda", dest="lam", type=float, default=EXPERIMENTAL_LAMBDA)
    p.add_argument("--shots", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--analytic", action="store_true", help="use expected counts instead of sampling")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None, help="write the estimated chi matrix as JSON")

    p = subs["cycle"] = sub.add_parser("cycle", help="run one cycle and print the report as JSON")
    p.add_argument("--config", help="JSON file of flag defaults")
    p.add_argument("--mode", choices=["pure", "mixed"], default="pure")
    p.add_argument("--theta", type=float, default=22.5)
    p.add_argument("--a", type=complex, default=1.0, help="off-diagonal element, e.g. 0.6 or 0.3+0.4j")
    gate_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="also write the JSON to this path")
    return parser, subs


def parse_args(argv=None) -> argparse.Namespace:
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            parser.exit(EXIT_USAGE, f"coherence-cycle: error: cannot read config: {exc}\n")
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        if "lambda" in cfg:
            cfg["lam"] = cfg.pop("lambda")
        if isinstance(cfg.get("grid"), str):
            cfg["grid"] = _grid(cfg["grid"])
        subs[args.command].set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


def cmd_sweep(args) -> int:
    if args.out is None:
        raise UsageError("sweep requires --out")
    if args.grid is None and args.table is None:
        raise UsageError("sweep requires --grid or --table")
    spec = harness.SweepSpec(
        mode=args.mode,
        grid=list(args.grid or []),
        gate=_gate_arg(args),
        basis=args.basis,
        seed=args.seed,
        out=args.out,
        table=args.table,
        shots=args.shots,
        workers=args.workers,
        tp_tol=args.tp_tol,
    )
    rows = harness.sweep(spec)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def cmd_report(args) -> int:
    if args.sim is None:
        raise UsageError("report requires --sim")
    cmp = harness.report(
        harness.read_csv_rows(args.sim),
        load_table(args.table),
        max_rms_discord=args.max_rms_discord,
        max_rms_c_final=args.max_rms_cfinal,
        require_band=args.require_band,
    )
    text = cmp.to_csv()
    if args.out:
        harness.write_text(args.out, text)
    sys.stdout.write(text)
    status = "PASS" if cmp.passed else "FAIL"
    print(f"{status}: rms_discord={harness.fmt(cmp.rms_discord, 4)} (max {args.max_rms_discord}), "
          f"rms_c_final={harness.fmt(cmp.rms_c_final, 4)} (max {args.max_rms_cfinal}), "
          f"band_violations={cmp.band_violations}")
    return EXIT_OK if cmp.passed else EXIT_THRESHOLD


def cmd_plot(args) -> int:
    if args.csv is None or args.out is None:
        raise UsageError("plot requires --csv and --out")
    harness.plot(args.csv, args.out, x_label=args.xlabel)
    return EXIT_OK


def cmd_qpt_demo(args) -> int:
    if not 0.0 <= args.lam <= 1.0:
        raise UsageError("--lambda must lie in [0, 1]")
    gate = depolarized_cnot(args.lam)
    config = TomographyConfig(shots_per_setting=args.shots, seed=args.seed)
    est = qpt(gate, config, analytic=args.analytic, workers=args.workers)
    ideal = chi_of_unitary(generalized_cnot(2))
    out = {
        "lambda": float(f"{args.lam:.12g}"),
        "shots_per_setting": args.shots,
        "seed": args.seed,
        "model_fidelity": float(f"{process_fidelity(gate, ideal):.12g}"),
        "estimated_fidelity": float(f"{process_fidelity(est, ideal):.12g}"),
        "tp_deviation": float(f"{est.tp_deviation():.12g}"),
    }
    if args.out:
        harness.write_text(args.out, est.to_json() + "\n")
    print(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_cycle(args) -> int:
    try:
        inp = CycleInput.pure(args.theta) if args.mode == "pure" else CycleInput.mixed(args.a)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    gate = harness.resolve_gate(_gate_arg(args))
    rep = run_cycle(inp, gate, MeasurementBasis.by_name(args.basis), tp_tol=args.tp_tol)
    text = rep.to_json() + "\n"
    if args.out:
        harness.write_text(args.out, text)
    sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {
    "sweep": cmd_sweep,
    "report": cmd_report,
    "plot": cmd_plot,
    "qpt-demo": cmd_qpt_demo,
    "cycle": cmd_cycle,
}


def main(argv=None) -> int:
    args = parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, harness.HarnessError) as exc:
        print(f"coherence-cycle: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (StateError, ChannelError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"coherence-cycle: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
