"""Experiment driver: sweep levels ``d`` and tolerances ``eps`` over a domain.

Usage::

    qttfem run plan.yaml [--d 3 4 5] [--eps 1e-6 1e-8] [--oracle auto|force|off]
                         [--out results.csv] [--seed 0]

A plan file is YAML::

    config: triangle          # bundled name or path (relative to the plan)
    d_values: [3, 4, 5, 6]
    eps_values: [1.0e-8]
    rhs: 1.0                  # number or {poly: [[px, py, c], ...]}
    solver: {tol: null, max_sweeps: 30}   # tol null -> use eps
    output: results.csv
    seed: 0
    plot_data: null           # directory for x/y plot files, optional
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .assembly import Source
from .domain import DomainConfig, load_config
from .errors import ConfigError, QTTError
from .pipeline import assemble_problem
from .solve import dense_solve, energy, richardson, split_blocks, tt_solve
from .tt import tt_to_dense

log = logging.getLogger("qttfem")

CSV_FIELDS = [
    "d",
    "eps",
    "energy",
    "energy_err",
    "erank_B",
    "erank_g",
    "erank_u",
    "residual",
    "sweeps",
    "oracle_dev",
    "wall_ms",
]

#: largest system (rows) checked against the dense oracle in ``auto`` mode
ORACLE_AUTO_ROWS = 4096
_ORACLE_FORCE_ROWS = 3 * 4**6


@dataclass
class ExperimentPlan:
    config_path: str
    d_values: list[int] = field(default_factory=list)
    eps_values: list[float] = field(default_factory=lambda: [1e-8])
    rhs: Source = field(default_factory=Source.constant)
    solver_tol: float | None = None
    max_sweeps: int = 30
    output: str | None = None
    seed: int = 0
    plot_data: str | None = None

    def __post_init__(self):
        self.d_values = sorted(int(d) for d in self.d_values)
        if any(d < 1 for d in self.d_values):
            raise ConfigError("d values must be >= 1")
        self.eps_values = [float(e) for e in self.eps_values]
        if any(not e > 0 for e in self.eps_values):
            raise ConfigError("eps values must be positive")
        if self.solver_tol is not None and not self.solver_tol > 0:
            raise ConfigError("solver tol must be positive")


def load_plan(path) -> ExperimentPlan:
    p = Path(path)
    try:
        data = yaml.safe_load(p.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read plan {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse plan {path}: {exc}") from exc
    if not isinstance(data, dict) or "config" not in data:
        raise ConfigError("plan needs a 'config' entry")
    cfg = str(data["config"])
    local = p.parent / cfg
    if local.exists():
        cfg = str(local)
    solver = data.get("solver") or {}
    out = data.get("output")
    if out is not None and not Path(out).is_absolute():
        out = str(p.parent / out)
    plot = data.get("plot_data")
    if plot is not None and not Path(plot).is_absolute():
        plot = str(p.parent / plot)
    try:
        return ExperimentPlan(
            config_path=cfg,
            d_values=data.get("d_values") or [],
            eps_values=data.get("eps_values") or [1e-8],
            rhs=Source.parse(data.get("rhs")),
            solver_tol=solver.get("tol"),
            max_sweeps=int(solver.get("max_sweeps", 30)),
            output=out,
            seed=int(data.get("seed", 0)),
            plot_data=plot,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid plan {path}: {exc}") from exc


def run_cell(config: DomainConfig, d: int, eps: float, plan: ExperimentPlan, oracle: str) -> dict:
    """Assemble, solve and measure one ``(d, eps)`` cell."""
    start = time.perf_counter()
    prob = assemble_problem(config, d, eps, plan.rhs)
    tol = plan.solver_tol if plan.solver_tol is not None else eps
    rep = tt_solve(prob.B, prob.g, tol, max_sweeps=plan.max_sweeps, seed=plan.seed)
    e = energy(split_blocks(rep.u, config.q), [s.A for s in prob.systems])
    rows = prob.B.shape[0]
    dev = math.nan
    limit = {"auto": ORACLE_AUTO_ROWS, "force": _ORACLE_FORCE_ROWS, "off": -1}[oracle]
    if rows <= limit:
        b = tt_to_dense(prob.B, max_entries=rows * rows)
        ud = dense_solve(b, tt_to_dense(prob.g), guard=_ORACLE_FORCE_ROWS)
        dev = float(np.linalg.norm(tt_to_dense(rep.u) - ud) / np.linalg.norm(ud))
    return {
        "d": d,
        "eps": eps,
        "energy": e,
        "energy_err": math.nan,
        "erank_B": rep.eranks["B"],
        "erank_g": rep.eranks["g"],
        "erank_u": rep.eranks["u"],
        "residual": rep.residual,
        "sweeps": rep.sweeps,
        "oracle_dev": dev,
        "wall_ms": (time.perf_counter() - start) * 1e3,
        "ok": True,
    }


def _failed(d, eps, start):
    row = {k: math.nan for k in CSV_FIELDS}
    row.update(d=d, eps=eps, sweeps=-1, wall_ms=(time.perf_counter() - start) * 1e3, ok=False)
    return row


def run_plan(plan: ExperimentPlan, oracle: str = "auto") -> list[dict]:
    """Rows in plan order (``eps`` outer, ``d`` inner); failed cells get NaN rows."""
    if oracle not in ("auto", "force", "off"):
        raise ConfigError(f"oracle mode must be auto, force or off, got {oracle!r}")
    config = load_config(plan.config_path)
    rows = []
    for eps in plan.eps_values:
        group = []
        for d in plan.d_values:
            start = time.perf_counter()
            try:
                row = run_cell(config, d, eps, plan, oracle)
                log.info("d=%d eps=%g energy=%.12g residual=%.2e", d, eps, row["energy"], row["residual"])
            except (QTTError, ArithmeticError, np.linalg.LinAlgError, MemoryError) as exc:
                log.error("cell d=%d eps=%g failed: %s", d, eps, exc)
                row = _failed(d, eps, start)
            group.append(row)
        good = [r for r in group if r["ok"]]
        if len(good) >= 2:
            e_star = richardson([r["energy"] for r in good]).e_star
            for r in good:
                r["energy_err"] = abs(r["energy"] - e_star)
        rows.extend(group)
    return rows


def _fmt(key, value):
    if key in ("d", "sweeps"):
        return str(int(value))
    if key == "wall_ms":
        return f"{value:.1f}"
    return repr(float(value))


def write_csv(rows, stream):
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in rows:
        w.writerow([_fmt(k, r[k]) for k in CSV_FIELDS])


def write_plot_data(rows, directory, q: int):
    """x/y files for energy error and erank against vertex count and against eps."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    good = [r for r in rows if r["ok"]]

    def dump(name, pairs):
        with open(out / name, "w") as fh:
            fh.write("x y\n")
            for x, y in pairs:
                fh.write(f"{x:.17g} {y:.17g}\n")

    for eps in sorted({r["eps"] for r in good}):
        sel = [r for r in good if r["eps"] == eps]
        tag = f"{eps:.0e}"
        dump(f"energy_err_vs_vertices_eps{tag}.dat", [(q * 4 ** r["d"], r["energy_err"]) for r in sel])
        dump(f"erank_vs_vertices_eps{tag}.dat", [(q * 4 ** r["d"], r["erank_B"]) for r in sel])
    for d in sorted({r["d"] for r in good}):
        sel = [r for r in good if r["d"] == d]
        dump(f"erank_vs_eps_d{d}.dat", [(r["eps"], r["erank_B"]) for r in sel])


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qttfem", description="QTT finite element experiments")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment plan")
    run.add_argument("plan", help="plan file (YAML)")
    run.add_argument("--d", type=int, nargs="+", help="override the plan's d values")
    run.add_argument("--eps", type=float, nargs="+", help="override the plan's eps values")
    run.add_argument("--oracle", choices=("auto", "force", "off"), default="auto")
    run.add_argument("--out", help="CSV output path ('-' for stdout)")
    run.add_argument("--seed", type=int, help="override the plan's seed")
    run.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        plan = load_plan(args.plan)
        changes = {}
        if args.d is not None:
            changes["d_values"] = args.d
        if args.eps is not None:
            changes["eps_values"] = args.eps
        if args.seed is not None:
            changes["seed"] = args.seed
        if args.out is not None:
            changes["output"] = args.out
        plan = replace(plan, **changes)
        rows = run_plan(plan, oracle=args.oracle)
        q = load_config(plan.config_path).q
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    if plan.output in (None, "-"):
        write_csv(rows, sys.stdout)
    else:
        Path(plan.output).parent.mkdir(parents=True, exist_ok=True)
        with open(plan.output, "w", newline="") as fh:
            write_csv(rows, fh)
    if plan.plot_data:
        write_plot_data(rows, plan.plot_data, q)
    return 0 if all(r["ok"] for r in rows) else 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
