"""Command-line interface.

Every subcommand reads a source specification (``mi-bound`` excepted) and
writes a JSON result document to ``--out`` or stdout. Exit codes: 0 success,
1 usage error, 2 malformed specification, 3 budget or guard failure.
"""

from __future__ import annotations

import argparse
import math
import sys
import warnings
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .capacity import (SearchConfig, degraded_capacity_report, lower_bound_curve,
                       mi_continuity_bound, quantize_family, source_channels,
                       auxiliary_lower_bound, multi_letter_value, converse_identity_check)
from .errors import BudgetError, DomainError, GuardError, SpecError
from .protocol import SWEEP_AXES, ProtocolConfig, run_protocol, security_over_draws, sweep
from .source import check_degraded
from .specfile import load_spec, result_document, write_csv
from .typicality import TypicalityParams

EXIT_OK, EXIT_USAGE, EXIT_SPEC, EXIT_BUDGET = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _gamma(text: str) -> float:
    if text.strip().lower() in ("inf", "infinity", "none"):
        return math.inf
    v = float(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("gamma must be positive")
    return v


def _slacks(text: str) -> TypicalityParams:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError("slacks are four comma-separated numbers") from None
    if len(vals) != 4:
        raise argparse.ArgumentTypeError("slacks are four comma-separated numbers")
    try:
        return TypicalityParams(*vals)
    except DomainError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _search(args) -> SearchConfig:
    return SearchConfig(grid=args.grid, max_candidates=args.max_candidates,
                        restarts=args.restarts)


def _aux_doc(aux) -> dict | None:
    return None if aux is None else aux.to_dict()


def _rate_doc(rep) -> dict:
    return {"value": rep.value, "raw_value": rep.raw_value, "per_class": list(rep.per_class),
            "gamma": rep.gamma, "constraint_slack": list(rep.constraint_slack),
            "optimizers": [_aux_doc(a) for a in rep.optimizers],
            "method": rep.method, "flags": list(rep.flags)}


# ------------------------------------------------------------ handlers

def cmd_capacity(args, src):
    rep = degraded_capacity_report(src, check=True)
    conv = converse_identity_check(src)
    return {"capacity": rep.value, "raw_value": rep.raw_value,
            "per_class": list(rep.per_class), "within_hypothesis": rep.within_hypothesis,
            "clamped": rep.clamped, "converse_identity_holds": conv.holds,
            "converse_identity_max_error": conv.max_error}, None


def cmd_lower_bound(args, src):
    cfg = _search(args)
    if len(args.gamma) == 1:
        rep = auxiliary_lower_bound(src, args.gamma[0], args.u_size, args.v_size, cfg)
        return _rate_doc(rep), None
    reps = lower_bound_curve(src, args.gamma, args.u_size, args.v_size, cfg)
    rows = [{"gamma": g, "lower_bound": r.value} for g, r in zip(args.gamma, reps)]
    return {"curve": [_rate_doc(r) for r in reps]}, rows


def cmd_multi_letter(args, src):
    rep = multi_letter_value(src, args.n, args.u_size, args.v_size, _search(args))
    return {"n": rep.n, "per_letter": rep.value, "total": rep.total,
            "single_letter": rep.single_letter, "search": _rate_doc(rep.report)}, None


def _protocol_config(args) -> ProtocolConfig:
    return ProtocolConfig(n=args.n, delta=args.delta, typicality=args.slacks,
                          gamma=args.gamma_constraint, seed=args.seed, trials=args.trials,
                          layer=args.layer, security_mode=args.security_mode,
                          codebook_mode=args.codebook_mode, key_rate=args.key_rate,
                          states=tuple(args.states) if args.states else None,
                          plugin_samples=args.plugin_samples, workers=args.workers)


def cmd_simulate(args, src):
    cfg = _protocol_config(args)
    doc = run_protocol(src, cfg).to_dict()
    if args.draws:
        mode = "exact" if cfg.security_mode == "none" else cfg.security_mode
        ens = security_over_draws(src, cfg, args.draws, mode)
        doc["security_over_draws"] = {
            "draws": args.draws, "mean_public": ens.mean_public,
            "mean_indicator": ens.mean_indicator, "stderr_indicator": ens.stderr_indicator,
            "per_draw_indicator": [a.value for a in ens.assessments]}
    return doc, None


def cmd_check_degraded(args, src):
    rep = check_degraded(src)
    pairs = [{"class": p.class_index, "r": src.labels[p.r], "t": src.labels[p.t],
              "feasible": p.feasible, "residual": p.residual,
              "witness": None if p.witness is None else p.witness.tolist()}
             for p in rep.pairs]
    return {"degraded": rep.feasible, "pairs": pairs}, None


def cmd_quantize(args, src):
    chans = source_channels(src)
    qf = quantize_family(chans, args.l)
    out = chans[0].shape[1]
    cells = chans[0].size
    return {"l": qf.l, "net_size": len(qf.net), "net_size_cap_log2": cells * math.log2(qf.l + 1),
            "assignment": list(qf.assignment), "max_abs_error": qf.max_abs_error,
            "abs_bound": qf.bound_abs(out), "max_log_ratio": qf.max_log_ratio,
            "log_ratio_bound": qf.bound_log_ratio(out),
            "net": [w.tolist() for w in qf.net]}, None


def cmd_mi_bound(args, src):
    return {"gamma": args.gamma_param, "x_size": args.x_size, "y_size": args.y_size,
            "bound": mi_continuity_bound(args.gamma_param, args.x_size, args.y_size)}, None


def cmd_sweep(args, src):
    values = [float(v) if args.axis in ("gamma", "rate") else int(v)
              for v in args.values.split(",")]
    if args.axis == "gamma":
        values = [_gamma(str(v)) for v in values]
    rows = sweep(src, _protocol_config(args), args.axis, values,
                 u_size=args.u_size, v_size=args.v_size)
    return {"axis": args.axis, "rows": rows}, rows


# ------------------------------------------------------------ parser

def _add_search(p):
    p.add_argument("--u-size", type=int, default=1)
    p.add_argument("--v-size", type=int, default=None)
    p.add_argument("--grid", type=int, default=32, help="simplex grid denominator")
    p.add_argument("--max-candidates", type=int, default=200_000)
    p.add_argument("--restarts", type=int, default=4)


def _add_protocol(p):
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--layer", choices=("a", "ab"), default="a")
    p.add_argument("--security-mode", choices=("exact", "plugin", "none"), default="exact")
    p.add_argument("--codebook-mode", choices=("explicit", "ensemble", "auto"), default="auto")
    p.add_argument("--key-rate", type=float, default=None)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--slacks", type=_slacks, default=None, metavar="XI,ZETA,SIGMA,VARTHETA")
    p.add_argument("--gamma-constraint", type=_gamma, default=math.inf)
    p.add_argument("--states", type=int, nargs="+", default=None)
    p.add_argument("--plugin-samples", type=int, default=10 ** 6)
    p.add_argument("--workers", type=int, default=1)


COMMANDS = {
    "capacity": cmd_capacity, "lower-bound": cmd_lower_bound,
    "multi-letter": cmd_multi_letter, "simulate": cmd_simulate,
    "check-degraded": cmd_check_degraded, "quantize": cmd_quantize,
    "mi-bound": cmd_mi_bound, "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="compound-sk",
                     description="Secret-key rates and protocol simulation for compound sources.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def cmd(name, help_, spec=True):
        p = sub.add_parser(name, help=help_)
        if spec:
            p.add_argument("spec", help="source specification (JSON)")
        p.add_argument("--out", help="result document path (default: stdout)")
        p.add_argument("--csv", help="also write tabular rows as CSV")
        p.add_argument("--stamp", action="store_true", help="add a timestamp to the metadata")
        return p

    cmd("capacity", "degraded-case capacity")
    p = cmd("lower-bound", "auxiliary-variable lower bound")
    p.add_argument("--gamma", type=_gamma, nargs="+", default=[math.inf])
    _add_search(p)
    p = cmd("multi-letter", "finite-n multi-letter value")
    p.add_argument("--n", type=int, required=True)
    _add_search(p)
    p = cmd("simulate", "run the key-agreement protocol")
    _add_protocol(p)
    p.add_argument("--draws", type=int, default=0,
                   help="also average exact security over this many codebook draws")
    cmd("check-degraded", "test the degradedness hypothesis")
    p = cmd("quantize", "lattice net of the source channels")
    p.add_argument("--l", type=int, required=True)
    p = cmd("mi-bound", "mutual-information continuity bound", spec=False)
    p.add_argument("--gamma-param", type=float, required=True)
    p.add_argument("--x-size", type=int, required=True)
    p.add_argument("--y-size", type=int, required=True)
    p = cmd("sweep", "repeat runs over one parameter")
    p.add_argument("--axis", choices=SWEEP_AXES, required=True)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--figure", help="render the table to an image file")
    _add_protocol(p)
    _add_search(p)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        src = load_spec(args.spec) if hasattr(args, "spec") else None
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            result, rows = COMMANDS[args.command](args, src)
        if caught:
            result = dict(result)
            result["warnings"] = sorted({str(w.message) for w in caught})
        stamp = datetime.now(timezone.utc).isoformat() if args.stamp else None
        text = result_document(args.command, result, __version__, stamp)
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
        if args.csv and rows is not None:
            write_csv(rows, args.csv)
        if getattr(args, "figure", None) and rows:
            from .plotting import plot_sweep
            plot_sweep(rows, args.axis, args.figure)
    except SpecError as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except (BudgetError, GuardError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
