"""seqident command line.

Exit codes: 0 success; 1 verification failed (verify); 2 bad input or
config; 3 identification failed numerically (identify).
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import sys
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .assumptions import StepKind
from .engine import run_sequential
from .errors import ConfigError, IdentificationError, SeqIdentError
from .io import fmt, read_counts, read_full, read_observed, sha256, write_full
from .kernels import BACKEND
from .plan import load_plan, plan_to_dict, validate_plan
from .sensitivity import (
    DEFAULT_DRAWS,
    DirichletPrior,
    load_suite,
    plot_records,
    run_suite,
    sample_posterior,
    summarize,
)
from .tables import ZeroCellPolicy
from .verify import DEFAULT_TOLERANCE, check_nps

log = logging.getLogger("seqident")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

_GLOBAL_DEFAULTS = {"tolerance": DEFAULT_TOLERANCE, "zero_cell_policy": None, "seed": 0,
                    "draws": DEFAULT_DRAWS, "out": None, "verbose": False}


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


class Manifest:
    """Everything needed to rerun a command; written as manifest.json."""

    def __init__(self, command: str, args: argparse.Namespace):
        self.data: dict[str, Any] = {
            "tool": "seqident",
            "version": __version__,
            "backend": BACKEND,
            "command": command,
            "argv": sys.argv[1:],
            "started": _now(),
            "inputs": {},
            "settings": {k: getattr(args, k) for k in ("tolerance", "zero_cell_policy", "seed", "draws")},
            "outputs": {},
        }

    def input(self, role: str, path) -> None:
        self.data["inputs"][role] = {"path": str(path), "sha256": sha256(path)}

    def output(self, path: Path) -> None:
        self.data["outputs"][path.name] = sha256(path)

    def write(self, out: Path) -> None:
        self.data["finished"] = _now()
        (out / "manifest.json").write_text(json.dumps(self.data, indent=2) + "\n")


def _outdir(args, default: str) -> Path:
    out = Path(args.out or default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _study_text(space, study: np.ndarray) -> str:
    names = [space.variable_name(j) for j in range(space.p)]
    lines = ["# study marginal: " + " ".join(names) + " probability"]
    for idx in np.ndindex(study.shape):
        lines.append(",".join(str(i + 1) for i in idx) + " " + fmt(study[idx]))
    return "\n".join(lines) + "\n"


def _factor_json(f) -> dict[str, Any]:
    return {
        "stage": f.stage,
        "factored": [j + 1 for j in f.factored],
        "carried": [j + 1 for j in f.carried],
        "identified": [j + 1 for j in f.identified],
        "indicator_axes": [j + 1 for j in f.indicators],
        "shape": list(f.probs.shape),
        # repr of a float is the shortest lossless form
        "probs": f.probs.ravel().tolist(),
    }


def _conventions(plan, result) -> list[str]:
    notes = []
    for k, (block, step) in enumerate(zip(plan.blocks, plan.steps), start=1):
        if step.kind is StepKind.CONDITIONAL_MAR and len(block) > 1:
            notes.append(f"step {k}: multi-variable ConditionalMAR completed by the MAR fixed point")
    if any(result.zero_contexts):
        notes.append("zero-mass contexts filled with a uniform conditional (carries no probability)")
    if any(result.filled_cells):
        notes.append("zero denominators filled uniformly under the uniform zero-cell policy")
    return notes


def cmd_identify(args) -> int:
    observed = read_observed(args.table)
    plan = load_plan(args.plan)
    result = run_sequential(observed, plan, policy=args.zero_cell_policy)
    report = check_nps(result.final, observed, args.tolerance)

    out = _outdir(args, "seqident-identify")
    manifest = Manifest("identify", args)
    manifest.input("table", args.table)
    manifest.input("plan", args.plan)
    write_full(result.final, out / "full.txt", comment=f"full-data distribution, plan {plan.name or args.plan}")
    manifest.output(out / "full.txt")
    files = {
        "study.txt": _study_text(observed.space, result.study),
        "stage_factors.json": json.dumps([_factor_json(f) for f in result.stage_factors]) + "\n",
        "nps_report.json": json.dumps(report.to_dict(), indent=2) + "\n",
        "plan.json": json.dumps(plan_to_dict(plan), indent=2) + "\n",
    }
    for name, text in files.items():
        (out / name).write_text(text)
        manifest.output(out / name)
    manifest.data["diagnostics"] = {
        "zero_contexts": result.zero_contexts, "filled_cells": result.filled_cells,
        "em_iterations": result.em_iterations, "em_residual": result.em_residual,
        "conventions": _conventions(plan, result),
    }
    manifest.write(out)

    sys.stdout.write(files["study.txt"])
    print(f"NPS max abs error {fmt(report.max_abs_error)} (tolerance {fmt(report.tolerance)}): "
          f"{'pass' if report.passed else 'FAIL'}")
    print(f"wrote {out}")
    if not report.passed:
        print("error: identified table does not reproduce the observed table", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_verify(args) -> int:
    full = read_full(args.full)
    observed = read_observed(args.observed)
    report = check_nps(full, observed, args.tolerance)
    pat, vals = report.worst_cell
    print(f"max abs error {fmt(report.max_abs_error)} at pattern {pat} cell ({','.join(map(str, vals))})")
    for p, e in report.per_pattern.items():
        print(f"  pattern {p}: {fmt(e)}")
    print(f"tolerance {fmt(report.tolerance)}: {'pass' if report.passed else 'FAIL'}")
    if args.out:
        out = _outdir(args, "")
        manifest = Manifest("verify", args)
        manifest.input("full", args.full)
        manifest.input("observed", args.observed)
        (out / "nps_report.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n")
        manifest.output(out / "nps_report.json")
        manifest.write(out)
    return EXIT_OK if report.passed else EXIT_FAIL


def _summary_text(summary: dict[str, Any]) -> str:
    lines = [f"draws: {summary['n_draws']}  seed: {summary['seed']}"]
    for m, s in summary["mechanisms"].items():
        chk = s["nps_spot_checks"]
        lines.append(f"{m}: failed draws {s['n_failed']}, NPS spot checks {chk['n']} "
                     f"({'pass' if chk['all_passed'] else 'FAIL'}, max error {fmt(chk['max_abs_error'])})")
        for e, st in s["estimands"].items():
            if st["n_valid"] == 0:
                lines.append(f"  {e}: no valid draws")
                continue
            lines.append(f"  {e}: mean {fmt(st['mean'])} sd {fmt(st['sd'])} "
                         f"[{fmt(st['q2.5'])}, {fmt(st['q50'])}, {fmt(st['q97.5'])}]")
    for m, why in summary["unavailable"].items():
        lines.append(f"{m}: unavailable ({why})")
    return "\n".join(lines) + "\n"


def cmd_sensitivity(args) -> int:
    counts = read_counts(args.counts)
    config = load_suite(args.suite, counts.space)
    prior = DirichletPrior.symmetric(counts.space, config.prior_alpha)
    draws = sample_posterior(counts, prior, args.draws, args.seed)
    sd = run_suite(draws, config.suite, config.estimands, policy=args.zero_cell_policy, seed=args.seed,
                   provenance={"counts": str(args.counts), "suite": str(args.suite),
                               "prior_alpha": float(prior.concentration.flat[0])})
    summary = summarize(sd)
    summary["prior_alpha"] = float(prior.concentration.flat[0])

    out = _outdir(args, "seqident-sensitivity")
    manifest = Manifest("sensitivity", args)
    manifest.input("counts", args.counts)
    manifest.input("suite", args.suite)
    text = _summary_text(summary)
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    (out / "summary.txt").write_text(text)
    (out / "draws.csv").write_text(plot_records(sd))
    for name in ("summary.json", "summary.txt", "draws.csv"):
        manifest.output(out / name)
    manifest.write(out)
    sys.stdout.write(text)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_validate_plan(args) -> int:
    plan = load_plan(args.plan)
    space = read_observed(args.table).space if args.table else None
    report = validate_plan(plan, space)
    if report.ok:
        names = " | ".join(",".join(str(j + 1) for j in b) for b in plan.blocks)
        print(f"plan ok: {plan.K} blocks ({names})")
        return EXIT_OK
    for v in report.violations:
        print(f"invalid plan: {v}", file=sys.stderr)
    return EXIT_CONFIG


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    # SUPPRESS lets the flags go before or after the subcommand
    common.add_argument("--tolerance", type=float, default=argparse.SUPPRESS,
                        help=f"NPS tolerance (default {DEFAULT_TOLERANCE:g})")
    common.add_argument("--zero-cell-policy", choices=[p.value for p in ZeroCellPolicy], default=argparse.SUPPRESS,
                        help="override the plan's zero-cell policy")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="RNG seed (default 0)")
    common.add_argument("--draws", type=int, default=argparse.SUPPRESS,
                        help=f"posterior draws (default {DEFAULT_DRAWS})")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="seqident", parents=[common],
                                     description="Sequential identification for categorical missing data.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("identify", parents=[common], help="identify a full-data table from an observed table")
    p.add_argument("table")
    p.add_argument("plan")
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("verify", parents=[common], help="check that a full table reproduces an observed table")
    p.add_argument("full")
    p.add_argument("observed")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sensitivity", parents=[common], help="posterior sensitivity analysis over a mechanism suite")
    p.add_argument("counts")
    p.add_argument("suite")
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("validate-plan", parents=[common], help="check a plan file")
    p.add_argument("plan")
    p.add_argument("--table", help="observed table whose space the plan must match")
    p.set_defaults(func=cmd_validate_plan)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for k, v in _GLOBAL_DEFAULTS.items():
        if not hasattr(args, k):
            setattr(args, k, v)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.draws < 1:
        print("error: --draws must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IdentificationError as exc:
        print(f"identification failed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except SeqIdentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
