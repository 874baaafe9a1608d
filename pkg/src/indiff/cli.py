"""Batch front end: one subcommand per task, scenario TOML in, rows out.

Every task emits long-format rows ``(scenario_id, n, key, value)``: stable
to parse, trivially appendable, and the same schema for every task.  Rows
without a market index (limit summaries, PDE values) leave the ``n`` column
empty.  Reals are written with full round-trip precision, so two runs with
the same config and seed produce byte-identical artifacts; the manifest
written next to a file output carries the volatile facts (wall time,
library versions) instead.

Exit status: 0 on success, 2 for configuration problems (the message names
the offending field), 1 when a model raises (the message names the error
class).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy

from . import __version__
from .asymptotics import rate_ratio_sequence, scaled_price_sequence
from .config import ScenarioConfig, load_config
from .equilibrium import InvestorSpec, pepq_solve
from .errors import ConfigError, IndiffError
from .models.transaction import TransactionCostModel, transaction_psi
from .position import optimal_position, validate_price_curve

__all__ = ["main", "run_scenario", "emit_report"]

#: One output row: (scenario_id, n or None, key, value).
Row = Tuple[str, Optional[int], str, Any]


def _fmt(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        # repr of the built-in float round-trips; numpy scalars do not
        return repr(float(value))
    return str(value)


def emit_report(rows: Sequence[Row], fmt: str = "csv") -> str:
    """Render rows as a plot-ready table; empty input gives a bare header."""
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["scenario_id", "n", "key", "value"])
        for sid, n, key, value in rows:
            writer.writerow([sid, "" if n is None else n, key, _fmt(value)])
        return buf.getvalue()
    if fmt == "jsonl":
        lines = []
        for sid, n, key, value in rows:
            if isinstance(value, (bool, np.bool_)):
                value = bool(value)
            elif isinstance(value, (float, np.floating)):
                value = float(value)
            elif isinstance(value, (int, np.integer)):
                value = int(value)
            lines.append(json.dumps(
                {"scenario_id": sid, "n": n, "key": key, "value": value},
                separators=(",", ":"),
            ))
        return "".join(line + "\n" for line in lines)
    raise ConfigError(f"output.format must be csv or jsonl, got {fmt!r}")


def _need(cfg: ScenarioConfig, key: str) -> Any:
    if key not in cfg.task_args:
        raise ConfigError(f"missing required key {key!r} in task_args for task {cfg.task!r}")
    return cfg.task_args[key]


def _grid(raw: Any, where: str) -> np.ndarray:
    if isinstance(raw, list):
        return np.asarray([float(v) for v in raw])
    if isinstance(raw, dict):
        extra = set(raw) - {"lo", "hi", "count"}
        if extra:
            raise ConfigError(f"unknown key {extra.pop()!r} in {where}")
        try:
            return np.linspace(float(raw["lo"]), float(raw["hi"]), int(raw["count"]))
        except KeyError as exc:
            raise ConfigError(f"missing required key {exc.args[0]!r} in {where}") from exc
    raise ConfigError(f"{where}: expected a list or {{lo, hi, count}}")


def _need_n_list(cfg: ScenarioConfig) -> List[int]:
    ns = cfg.n_list
    if ns is None:
        raise ConfigError(f"missing required key 'n_list' in task_args for task {cfg.task!r}")
    return ns


def _sequence_curve(cfg: ScenarioConfig, model, n: int):
    if not hasattr(model, "curve"):
        raise ConfigError(
            f"task {cfg.task!r} needs per-n price curves, which model.family "
            f"= {cfg.model_section['family']!r} does not provide"
        )
    return model.curve(n, cfg.ra_schedule()(n))


def _price_rows(cfg: ScenarioConfig, model, n: int, qs: np.ndarray) -> List[Row]:
    sid = cfg.scenario_id
    ra = cfg.ra_schedule()
    rate = cfg.rate_schedule()
    curve = _sequence_curve(cfg, model, n)
    rows: List[Row] = [
        (sid, n, "r_n", rate(n)),
        (sid, n, "a_n", ra(n)),
    ]
    for q in qs:
        rows.append((sid, n, "q", float(q)))
        rows.append((sid, n, "price", float(curve.price(float(q)))))
        if curve.eval_mode == "monte_carlo":
            rows.append((sid, n, "stderr", float(curve.stderr(float(q)))))
    return rows


def _task_price(cfg: ScenarioConfig, model) -> List[Row]:
    n = int(_need(cfg, "n"))
    q = float(_need(cfg, "q"))
    return _price_rows(cfg, model, n, np.asarray([q]))


def _task_curve(cfg: ScenarioConfig, model) -> List[Row]:
    n = int(_need(cfg, "n"))
    qs = _grid(_need(cfg, "q_grid"), "task_args.q_grid")
    rows = _price_rows(cfg, model, n, qs)
    curve = _sequence_curve(cfg, model, n)
    report = validate_price_curve(curve, qs, cfg.tolerance("validation", 1e-9))
    sid = cfg.scenario_id
    rows += [
        (sid, n, "monotone_ok", report.monotone_ok),
        (sid, n, "concave_ok", report.concave_ok),
        (sid, n, "bounds_ok", report.bounds_ok),
    ]
    return rows


def _task_limit(cfg: ScenarioConfig, model) -> List[Row]:
    sid = cfg.scenario_id
    ns = _need_n_list(cfg)
    ells = np.sort(_grid(_need(cfg, "ell_grid"), "task_args.ell_grid"))
    ra, rate = cfg.ra_schedule(), cfg.rate_schedule()
    tol = cfg.tolerance("cauchy", 1e-4)
    rows: List[Row] = []
    ok: List[bool] = []
    for ell in ells:
        diag = scaled_price_sequence(model, ra, rate, float(ell), ns, tol)
        ok.append(diag.cauchy_ok)
        rows.append((sid, None, "ell", float(ell)))
        rows.append((sid, None, "p_inf", diag.limit_estimate))
        rows.append((sid, None, "cauchy_ok", diag.cauchy_ok))
    i0 = int(np.argmin(np.abs(ells)))
    if ok[i0]:
        lo = i0
        while lo > 0 and ok[lo - 1]:
            lo -= 1
        hi = i0
        while hi < len(ells) - 1 and ok[hi + 1]:
            hi += 1
        rows.append((sid, None, "delta_minus_est", min(float(ells[lo]), 0.0)))
        rows.append((sid, None, "delta_plus_est", max(float(ells[hi]), 0.0)))
    else:
        rows.append((sid, None, "delta_minus_est", 0.0))
        rows.append((sid, None, "delta_plus_est", 0.0))
    return rows


def _task_rates(cfg: ScenarioConfig, model) -> List[Row]:
    sid = cfg.scenario_id
    ns = _need_n_list(cfg)
    verdict = rate_ratio_sequence(
        model,
        cfg.ra_schedule(),
        cfg.rate_schedule(),
        cfg.p_tilde_schedule(),
        ns,
        tol=cfg.tolerance("cauchy", 1e-4),
        position_tol=cfg.tolerance("position", 1e-8),
    )
    rate = cfg.rate_schedule()
    rows: List[Row] = []
    for n, ratio in zip(verdict.indices, verdict.ratios):
        rows.append((sid, n, "q_hat", float(ratio) * rate(n)))
        rows.append((sid, n, "ratio", float(ratio)))
    rows += [
        (sid, None, "tail_min", verdict.tail_min),
        (sid, None, "tail_max", verdict.tail_max),
        (sid, None, "verdict", verdict.verdict),
    ]
    return rows


def _task_position(cfg: ScenarioConfig, model) -> List[Row]:
    sid = cfg.scenario_id
    n = int(_need(cfg, "n"))
    p_tilde = float(_need(cfg, "p_tilde"))
    curve = _sequence_curve(cfg, model, n)
    res = optimal_position(curve, p_tilde, tol=cfg.tolerance("position", 1e-8))
    return [
        (sid, n, "p_tilde", p_tilde),
        (sid, n, "q_hat", res.q_hat),
        (sid, n, "objective", res.objective),
        (sid, n, "side", res.side),
        (sid, n, "evaluations", res.evaluations),
    ]


def _task_equilibrium(cfg: ScenarioConfig, model) -> List[Row]:
    sid = cfg.scenario_id
    n = int(_need(cfg, "n"))
    inv1 = InvestorSpec(a=float(_need(cfg, "a1")), claim_multiple=float(_need(cfg, "b1")))
    inv2 = InvestorSpec(a=float(_need(cfg, "a2")), claim_multiple=float(_need(cfg, "b2")))
    if not hasattr(model, "curve"):
        raise ConfigError(
            "task 'equilibrium' needs per-n price curves, which model.family "
            f"= {cfg.model_section['family']!r} does not provide"
        )
    base = model.curve(n, 1.0)
    res = pepq_solve(base, inv1, inv2, tol=cfg.tolerance("equilibrium", 1e-10))
    return [
        (sid, n, "q_star", res.q_star),
        (sid, n, "p_star", res.p_star),
        (sid, n, "residual", res.residual),
    ]


def _task_pde(cfg: ScenarioConfig, model) -> List[Row]:
    if not isinstance(model, TransactionCostModel):
        raise ConfigError("task 'pde' requires model.family = 'transaction'")
    sid = cfg.scenario_id
    b = float(_need(cfg, "b"))
    params = model.params
    surface = transaction_psi(params, b)
    psi = surface.value(params.spot, params.valuation_time)
    anchor = model.black_scholes_anchor()
    return [
        (sid, None, "b", b),
        (sid, None, "psi", psi),
        (sid, None, "black_scholes", anchor),
        (sid, None, "rel_deviation", abs(psi - anchor) / anchor),
    ]


def _task_sweep(cfg: ScenarioConfig, model) -> List[Row]:
    qs = _grid(_need(cfg, "q_grid"), "task_args.q_grid")
    rows: List[Row] = []
    for n in _need_n_list(cfg):
        rows += _price_rows(cfg, model, int(n), qs)
    return rows


_TASK_RUNNERS = {
    "price": _task_price,
    "curve": _task_curve,
    "limit": _task_limit,
    "rates": _task_rates,
    "position": _task_position,
    "equilibrium": _task_equilibrium,
    "pde": _task_pde,
    "sweep": _task_sweep,
}


def run_scenario(
    cfg: ScenarioConfig,
    out: Optional[str] = None,
    fmt: Optional[str] = None,
    threads: int = 1,
    stream: Optional[Any] = None,
) -> int:
    """Execute one scenario and write its artifact.

    ``out``/``fmt`` override the config's output section.  A file output
    gets a ``<path>.manifest.json`` sidecar with the config hash, library
    versions, and wall time; stdout output does not.  Returns the process
    exit status rather than raising, so :func:`main` stays a thin wrapper.
    """
    stream = sys.stdout if stream is None else stream
    started = time.monotonic()
    try:
        if threads < 1:
            raise ConfigError(f"--threads must be >= 1, got {threads}")
        model = cfg.build_model()
        rows = _TASK_RUNNERS[cfg.task](cfg, model)
        fmt = fmt or cfg.output_format
        report = emit_report(rows, fmt)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except IndiffError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1

    path = out or cfg.output_path
    if path is None:
        stream.write(report)
        return 0
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(report)
    manifest = {
        "scenario_id": cfg.scenario_id,
        "task": cfg.task,
        "seed": cfg.seed,
        "config_sha256": cfg.config_sha256,
        "package_version": __version__,
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
        "threads": threads,
        "rows": len(rows),
        "format": fmt,
        "wall_time_s": round(time.monotonic() - started, 6),
    }
    with open(path + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="indiff",
        description="Price-curve scaling studies from scenario files.",
    )
    sub = parser.add_subparsers(dest="task", required=True)
    for task in _TASK_RUNNERS:
        p = sub.add_parser(task, help=f"run a '{task}' scenario")
        p.add_argument("--config", required=True, help="scenario TOML file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="output file (default: config, else stdout)")
        p.add_argument("--format", choices=("csv", "jsonl"), default=None,
                       help="override the output format")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads (recorded; evaluation order never depends on it)")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if cfg.task != args.task:
        print(
            f"config error: config declares task {cfg.task!r} but the "
            f"{args.task!r} subcommand was invoked",
            file=sys.stderr,
        )
        return 2
    if args.seed is not None:
        if args.seed < 0:
            print(f"config error: --seed must be >= 0, got {args.seed}", file=sys.stderr)
            return 2
        cfg.seed = args.seed
    return run_scenario(cfg, out=args.out, fmt=args.format, threads=args.threads)


if __name__ == "__main__":
    sys.exit(main())
