"""Batch experiments: convergence traces and accuracy/timing tables.

Every trial draws its instance and starting point from the seed sequence
``[seed, trial]`` (tables add the swept value), so trials are independent
and may run in parallel without changing any output.
"""
import csv
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from . import geom_stiefel as gs
from . import optimize as opt
from . import problems as pr
from .coords import projection_to_stiefel, random_point, stiefel_to_projection
from .errors import GraffError, OracleInfeasible

PROBLEMS = ("quadratic", "mean")
ALGORITHMS = ("sd", "cg", "newton", "sd-proj", "newton-proj")
TRACE_COLUMNS = ("iter", "f", "gradnorm", "step_t", "dist_moved", "dist_to_solution", "elapsed_s")
TABLE_COLUMNS = ("axis_value", "mean_accuracy", "mean_elapsed_s", "trials")
MAX_REGENERATIONS = 16

_SOLVERS = {"sd": opt.sd_stiefel, "cg": opt.cg_stiefel, "newton": opt.newton_stiefel,
            "sd-proj": opt.sd_projection, "newton-proj": opt.newton_projection}


class UsageError(ValueError):
    """Invalid experiment configuration (exit code 2)."""


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str = "quadratic"
    algorithm: str = "sd"
    n: int = 6
    k: int = 3
    m: int = 2
    trials: int = 1
    seed: int = 0
    grad_tol: float = 1e-8
    step_tol: float = 1e-12
    max_iter: int = 500
    out: str = "graffopt-out"
    axis: str = None
    values: tuple = ()
    timing: bool = True

    def validate(self):
        if self.problem not in PROBLEMS:
            raise UsageError(f"unknown problem {self.problem!r}")
        if self.algorithm not in ALGORITHMS:
            raise UsageError(f"unknown algorithm {self.algorithm!r}")
        if self.trials < 1:
            raise UsageError("trials must be >= 1")
        if not 0 <= self.k < self.n:
            raise UsageError("need 0 <= k < n")
        if self.problem == "mean" and self.m < 2:
            raise UsageError("the mean problem needs m >= 2")
        if min(self.grad_tol, self.step_tol) <= 0 or self.max_iter < 1:
            raise UsageError("stopping criteria must be positive")
        return self

    @property
    def stop(self):
        return opt.StopCriteria(self.grad_tol, self.step_tol, self.max_iter)

    @property
    def projection(self):
        return self.algorithm.endswith("-proj")


@dataclass
class TrialResult:
    trial: int
    termination: str
    iterations: int
    final_f: float
    final_gradnorm: float
    dist_to_solution: float
    corrections: int
    fallback_steps: int
    regenerations: int
    elapsed_s: float
    error: str = None
    records: list = field(default_factory=list, repr=False)


def _setup(cfg, seed_seq):
    """Instance, oracle, starting point and reference solution for one trial."""
    coords = "projection" if cfg.projection else "stiefel"
    regenerations = 0
    if cfg.problem == "quadratic":
        for attempt in range(MAX_REGENERATIONS):
            inst = pr.quad_random(cfg.n, cfg.k, [*seed_seq, attempt])
            try:
                ref = pr.quad_solution(inst).minimizer
                break
            except OracleInfeasible:
                regenerations += 1
        else:
            raise OracleInfeasible("no feasible instance within the regeneration budget")
        oracle = pr.quad_oracle(inst, coords)
        Y0 = random_point(cfg.n, cfg.k, np.random.default_rng([*seed_seq, 10**6]))
    else:
        inst = pr.mean_random(cfg.n, cfg.k, cfg.m, list(seed_seq))
        oracle = pr.mean_oracle(inst, coords)
        Y0 = inst.points[0]
        ref = pr.geodesic_midpoint(*inst.points[:2]) if cfg.m == 2 else None
    start = stiefel_to_projection(Y0.Y) if cfg.projection else Y0
    return oracle, start, ref, regenerations


def _final_distance(point, ref):
    if ref is None:
        return float("nan")
    Y = point if not hasattr(point, "P") else projection_to_stiefel(point)
    return gs.distance(Y, ref)[0]


def run_trial(cfg, trial, seed_seq=None):
    seed_seq = (cfg.seed, trial) if seed_seq is None else tuple(seed_seq)
    t0 = time.perf_counter()
    try:
        oracle, start, ref, regen = _setup(cfg, seed_seq)
        report = _SOLVERS[cfg.algorithm](oracle, start, cfg.stop, reference=ref)
    except GraffError as exc:
        return TrialResult(trial, opt.Termination.FAILED.value, 0, float("nan"), float("nan"),
                           float("nan"), 0, 0, 0,
                           time.perf_counter() - t0 if cfg.timing else 0.0,
                           error=f"{type(exc).__name__}: {exc}")
    elapsed = time.perf_counter() - t0 if cfg.timing else 0.0
    last = report.records[-1]
    records = report.records if cfg.timing else [replace(r, elapsed_s=0.0) for r in report.records]
    return TrialResult(trial, report.termination.value, report.iterations, last.f,
                       last.gradnorm, _final_distance(report.point, ref), report.corrections,
                       report.fallback_steps, regen, elapsed,
                       error=report.message or None, records=records)


def _threads():
    try:
        return max(1, int(os.environ.get("GRAFFOPT_THREADS", "1")))
    except ValueError:
        return 1


def _map_trials(fn, n):
    workers = min(_threads(), n)
    if workers == 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n)))


def _fmt(x):
    if x is None:
        return ""
    return repr(float(x))


def write_trace(path, records):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for r in records:
            w.writerow([r.iter, _fmt(r.f), _fmt(r.gradnorm), _fmt(r.step_t), _fmt(r.dist_moved),
                        _fmt(r.dist_to_solution), _fmt(r.elapsed_s)])


def _jsonable(x):
    if isinstance(x, float) and not np.isfinite(x):
        return None
    return x


def _trial_summary(r):
    d = {k: _jsonable(v) for k, v in asdict(r).items() if k != "records"}
    return d


def _config_echo(cfg):
    d = asdict(cfg)
    d["values"] = list(cfg.values)
    return d


def run_single(cfg):
    """Run ``cfg.trials`` seeded trials and write traces plus ``summary.json``.

    Trial ``i`` writes ``trace.csv`` (i = 0) or ``trace-<i>.csv``.

    Returns
    -------
    summary : dict
    exit_code : int
        0 on success, 1 if any trial failed.
    """
    cfg.validate()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    results = _map_trials(lambda i: run_trial(cfg, i), cfg.trials)
    for r in results:
        write_trace(out / ("trace.csv" if r.trial == 0 else f"trace-{r.trial}.csv"), r.records)
    failures = sum(r.termination == opt.Termination.FAILED.value for r in results)
    acc = [r.dist_to_solution for r in results if np.isfinite(r.dist_to_solution)]
    summary = {
        "version": __version__,
        "command": "run",
        "status": "failed" if failures else "ok",
        "config": _config_echo(cfg),
        "totals": {
            "trials": len(results),
            "failures": failures,
            "iterations": int(sum(r.iterations for r in results)),
            "corrections": int(sum(r.corrections for r in results)),
            "mean_accuracy": float(np.mean(acc)) if acc else None,
            "elapsed_s": float(sum(r.elapsed_s for r in results)),
        },
        "trials": [_trial_summary(r) for r in results],
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary, 1 if failures else 0


def run_table(cfg):
    """Sweep ``cfg.axis`` (``"k"`` or ``"n"``) over ``cfg.values``.

    Writes ``table.csv`` and ``table.json``; each cell averages the final
    distance to the known solution and the elapsed time over the trials.
    """
    cfg.validate()
    if cfg.axis not in ("k", "n"):
        raise UsageError("table axis must be 'k' or 'n'")
    values = [int(v) for v in cfg.values]
    if not values:
        raise UsageError("empty sweep")
    cells_cfg = []
    for v in values:
        c = replace(cfg, **{cfg.axis: v})
        try:
            c.validate()
        except UsageError as exc:
            raise UsageError(f"sweep value {v}: {exc}") from None
        cells_cfg.append(c)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    cells = []
    failures = 0
    for v, c in zip(values, cells_cfg):
        results = _map_trials(lambda i, c=c, v=v: run_trial(c, i, (c.seed, v, i)), c.trials)
        acc = [r.dist_to_solution for r in results if np.isfinite(r.dist_to_solution)]
        failures += sum(r.termination == opt.Termination.FAILED.value for r in results)
        cells.append({
            "axis_value": v,
            "mean_accuracy": float(np.mean(acc)) if acc else None,
            "mean_elapsed_s": float(np.mean([r.elapsed_s for r in results])),
            "trials": len(results),
            "regenerations": int(sum(r.regenerations for r in results)),
            "failures": int(sum(r.termination == opt.Termination.FAILED.value for r in results)),
        })
    with open(out / "table.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TABLE_COLUMNS)
        for cell in cells:
            w.writerow([cell["axis_value"], _fmt(cell["mean_accuracy"]),
                        _fmt(cell["mean_elapsed_s"]), cell["trials"]])
    table = {"version": __version__, "command": "table", "axis": cfg.axis,
             "status": "failed" if failures else "ok",
             "config": _config_echo(cfg), "cells": cells}
    (out / "table.json").write_text(json.dumps(table, indent=2, sort_keys=True) + "\n")
    return table, 1 if failures else 0
