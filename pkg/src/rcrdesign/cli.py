"""Command-line front end.

    rcrdesign evaluate|optimize|verify|simulate --config FILE [--out FILE]
              [--format text|records|csv] [--seed N] [--threads K]

Exit codes: 0 ok, 2 invalid or singular input, 3 no interior solution,
4 optimality violated (or optimizer not converged), 5 simulation deviation
exceeded.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
import time
from typing import Optional

import numpy as np

from rcrdesign.config import ConfigError, ProblemConfig, ResultRecord, load
from rcrdesign.criteria import CriterionSpec, d_optimality_check, evaluate_context
from rcrdesign.design_opt import (
    InfeasibleSupportError,
    LineModelProblem,
    NoInteriorSolution,
    dg_equivalence_probe,
    optimize_weights,
    solve_g_weight,
)
from rcrdesign.model import DesignError, info_matrix
from rcrdesign.prediction import simulate_mse

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NO_INTERIOR = 3
EXIT_VIOLATED = 4
EXIT_SIM_DEVIATION = 5

THREADS_ENV = "RCRDESIGN_THREADS"

log = logging.getLogger("rcrdesign")


class CommandFailed(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _design_rows(design) -> list[dict]:
    rows = []
    for j, (x, w) in enumerate(design.pairs()):
        row = {"x": x, "weight": w}
        if design.counts is not None:
            row["count"] = int(design.counts[j])
        rows.append(row)
    return rows


def _criterion_row(spec: CriterionSpec, cv) -> dict:
    row = {"criterion": spec.label, "value": cv.value}
    if cv.attaining_x is not None:
        row["attaining_x"] = cv.attaining_x
    if cv.parts is not None:
        row["fixed_part"], row["bayes_part"] = cv.parts
    return row


def _require_design(cfg: ProblemConfig, command: str):
    if cfg.design is None:
        raise ConfigError(f"{command} needs a design block")
    return cfg.design.build()


def _closed_form_line(cfg: ProblemConfig, model) -> bool:
    if not (cfg.model.diagonal_list and model.basis.is_line):
        return False
    lo, hi = model.region.lo, model.region.hi
    return lo == 0.0 or lo == -hi


def cmd_evaluate(cfg: ProblemConfig) -> ResultRecord:
    model = cfg.model.build()
    design = _require_design(cfg, "evaluate")
    if not cfg.criteria:
        raise ConfigError("evaluate needs a criterion block")
    ctx = info_matrix(model, design)
    rec = ResultRecord("evaluate", cfg.digest(), path="eigenvalue")
    rec.design = _design_rows(design)
    for c in cfg.criteria:
        spec = c.build()
        rec.criteria.append(_criterion_row(spec, evaluate_context(spec, ctx, model)))
    return rec


def cmd_optimize(cfg: ProblemConfig) -> ResultRecord:
    model = cfg.model.build()
    if len(cfg.criteria) != 1:
        raise ConfigError("optimize needs exactly one criterion")
    spec = cfg.criteria[0].build()
    rec = ResultRecord("optimize", cfg.digest())
    if spec.kind == "G" and _closed_form_line(cfg, model):
        rec.path = "closed-form"
        prob = LineModelProblem.from_model(model)
        sol = solve_g_weight(prob)
        design = prob.design(sol.weight)
        ctx = info_matrix(model, design)
        check = d_optimality_check(ctx, model.n, model.basis, model.region, spec.grid_points)
        rec.criteria.append({"criterion": spec.label, "value": sol.value})
        rec.certificates = {
            "equalization_residual": sol.residual,
            "equalization_gap": sol.equalization_gap,
            "d_max_violation": check.max_violation,
            "d_equality_gap": check.equality_gap_at_support,
            "converged": True,
        }
    else:
        rec.path = "numeric"
        support = cfg.design.points if cfg.design is not None else [model.region.lo, model.region.hi]
        run = cfg.run
        report = optimize_weights(
            model,
            support,
            spec,
            tol=run.stop_tol,
            max_iter=run.max_iter,
            resolution=run.resolution,
            refine_tol=run.refine_tol,
        )
        design = report.design
        rec.criteria.append({"criterion": spec.label, "value": report.criterion_value})
        rec.certificates = {"iterations": report.iterations, "converged": report.converged}
        if report.grid_resolution is not None:
            rec.certificates["grid_resolution"] = report.grid_resolution
            rec.certificates["optimality_gap"] = report.optimality_gap
        if report.support_restricted:
            rec.messages.append("support replaced by the region ends for the straight-line G-criterion")
        if report.check is not None:
            rec.certificates["d_max_violation"] = report.check.max_violation
            rec.certificates["d_equality_gap"] = report.check.equality_gap_at_support
            rec.certificates["d_candidate_violation"] = report.candidate_violation
        if not report.converged:
            rec.status, rec.exit_code = "not-converged", EXIT_VIOLATED
    rec.design = _design_rows(design)
    return rec


def cmd_verify(cfg: ProblemConfig) -> ResultRecord:
    model = cfg.model.build()
    design = _require_design(cfg, "verify")
    grid = cfg.criteria[0].grid_points if cfg.criteria else 1001
    ctx = info_matrix(model, design)
    check = d_optimality_check(ctx, model.n, model.basis, model.region, grid)
    tol = cfg.run.tol
    rec = ResultRecord("verify", cfg.digest(), path="d-optimality")
    rec.design = _design_rows(design)
    for row, value in zip(rec.design, check.support_values):
        row["sensitivity"] = value
        row["gap"] = value - check.bound
    rec.certificates = {
        "bound": check.bound,
        "max_violation": check.max_violation,
        "attaining_x": check.attaining_x,
        "equality_gap_at_support": check.equality_gap_at_support,
        "tol": tol,
        "certified": check.certified(tol),
    }
    if _closed_form_line(cfg, model):
        try:
            probe = dg_equivalence_probe(model, grid, tol)
        except NoInteriorSolution as exc:
            rec.messages.append(f"D-G probe: {exc}")
        else:
            rec.certificates["g_optimal_weight"] = probe.weight
            rec.certificates["g_optimal_max_violation"] = probe.max_violation
            rec.certificates["dg_equivalence_certified"] = probe.certified
    if not check.certified(tol):
        rec.status, rec.exit_code = "violated", EXIT_VIOLATED
    return rec


def cmd_simulate(cfg: ProblemConfig, threads: int = 1) -> ResultRecord:
    model = cfg.model.build()
    if cfg.design is None or cfg.design.replications is None:
        raise ConfigError("simulate needs a design block with integer replications")
    design = cfg.design.build()
    seed = 0 if cfg.run.seed is None else cfg.run.seed
    mc = simulate_mse(model, design, cfg.run.replicates, seed, threads=threads)
    rec = ResultRecord("simulate", cfg.digest(), path="monte-carlo")
    rec.design = _design_rows(design)
    rec.certificates = {
        "seed": seed,
        "replicates": mc.replicates,
        "max_abs_dev": mc.max_abs_dev,
        "max_se_units": mc.max_se_units,
        "se_threshold": cfg.run.se_threshold,
    }
    rec.matrices = {
        "empirical": mc.empirical.tolist(),
        "theoretical": mc.theoretical.tolist(),
        "standard_errors": mc.standard_errors.tolist(),
    }
    if mc.max_se_units > cfg.run.se_threshold:
        rec.status, rec.exit_code = "deviation-exceeded", EXIT_SIM_DEVIATION
    return rec


COMMANDS = {"evaluate": cmd_evaluate, "optimize": cmd_optimize, "verify": cmd_verify, "simulate": cmd_simulate}


def format_text(rec: ResultRecord) -> str:
    lines = [f"{rec.command}: {rec.status} (exit {rec.exit_code}), path={rec.path}"]
    for c in rec.criteria:
        extra = ""
        if "attaining_x" in c:
            extra += f"  at x={c['attaining_x']:.10g}"
        if "fixed_part" in c:
            extra += f"  fixed={c['fixed_part']:.10g} bayes={c['bayes_part']:.10g}"
        lines.append(f"  {c['criterion']:<14} {c['value']:.12g}{extra}")
    if rec.design:
        lines.append("  design:")
        for row in rec.design:
            tail = "".join(f"  {k}={v:.10g}" for k, v in row.items() if k not in ("x", "weight"))
            lines.append(f"    x={row['x']:<12.8g} w={row['weight']:.10g}{tail}")
    for k, v in rec.certificates.items():
        lines.append(f"  {k}: {v:.6e}" if isinstance(v, float) else f"  {k}: {v}")
    for name, data in rec.matrices.items():
        lines.append(f"  {name}:")
        lines += ["    " + " ".join(f"{x: .6f}" for x in row) for row in data]
    lines += [f"  note: {t}" for t in rec.messages]
    if rec.timing is not None:
        lines.append(f"  time: {rec.timing:.3f}s")
    return "\n".join(lines) + "\n"


def format_csv(rec: ResultRecord) -> str:
    keys = []
    for row in rec.design:
        keys += [k for k in row if k not in keys]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=keys or ["x", "weight"], lineterminator="\n")
    writer.writeheader()
    writer.writerows(rec.design)
    return buf.getvalue()


def resolve_threads(cfg: ProblemConfig, flag: Optional[int]) -> int:
    """Config beats the ``--threads`` flag, which beats the environment."""
    if cfg.run.threads is not None:
        return max(1, cfg.run.threads)
    if flag is not None:
        return max(1, flag)
    env = os.environ.get(THREADS_ENV)
    return max(1, int(env)) if env else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rcrdesign", description=__doc__.split("\n\n")[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="problem description (YAML)")
    parser.add_argument("--out", help="write output here instead of stdout")
    parser.add_argument("--format", choices=("text", "records", "csv"), default="text")
    parser.add_argument("--seed", type=int, help="override run.seed")
    parser.add_argument("--threads", type=int, help="worker threads (run.threads wins)")
    parser.add_argument("--timing", action="store_true", help="include wall-clock time in records output")
    return parser


def run(argv=None) -> tuple[int, str]:
    """Run a command and return ``(exit code, rendered output)``."""
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        cfg = load(args.config)
        if args.seed is not None:
            cfg.run.seed = args.seed
        if args.command == "simulate":
            rec = cmd_simulate(cfg, resolve_threads(cfg, args.threads))
        else:
            rec = COMMANDS[args.command](cfg)
    except NoInteriorSolution as exc:
        rec = ResultRecord(args.command, "", status="no-interior-solution", exit_code=EXIT_NO_INTERIOR)
        rec.messages.append(str(exc))
    except (DesignError, InfeasibleSupportError, OSError, np.linalg.LinAlgError) as exc:
        rec = ResultRecord(args.command, "", status="invalid", exit_code=EXIT_INVALID)
        rec.messages.append(str(exc))
    rec.timing = time.perf_counter() - start
    if rec.exit_code and rec.messages:
        print(f"rcrdesign {args.command}: {rec.messages[-1]}", file=sys.stderr)
    if args.format == "records":
        text = rec.to_jsonl(include_timing=args.timing)
    elif args.format == "csv":
        text = format_csv(rec)
    else:
        text = format_text(rec)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return rec.exit_code, text


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(message)s")
    code, _ = run(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
