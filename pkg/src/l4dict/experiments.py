"""Batch harness for the synthetic studies: convergence traces, phase
transition grids, order sweeps, and the step-size iteration table.

Every experiment is deterministic: trial t of a run with base seed s draws
its data from seed ``s ^ t`` (grids globalize the index as
``cell_index * trials + trial``), results are assembled in index order, and
CSV renderings are byte-stable.  Trials are independent, so the harness can
fan out over a process pool (``jobs > 1``) without changing any output.
"""

from __future__ import annotations

import concurrent.futures
import json
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError, L4DictError
from .linalg import nearest_signed_permutation
from .matrixio import format_float
from .model import ModelParams, gen_haar_orthogonal, make_rng, synthesize, trial_seed
from .solver import SolveConfig, msp_dl, msp_orth, pga_run

# Success threshold on the normalized recovery error |1 - ||A D||_4^4 / n|;
# converged runs land near 0.3%, so 1% separates success cleanly.
SUCCESS_ERROR = 0.01

# Sentinel iteration count when a run never crossed its objective threshold.
ITERS_SENTINEL = -1


def render_csv(header: list[str], rows: list[tuple]) -> str:
    """RFC-4180 style CSV with a header row; floats at full precision."""
    out = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if v is None:
                cells.append("")
            elif isinstance(v, float):
                cells.append("inf" if math.isinf(v) else format_float(v))
            else:
                cells.append(str(v))
        out.append(",".join(cells))
    return "\n".join(out) + "\n"


def write_csv(path, header: list[str], rows: list[tuple]) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(render_csv(header, rows))


def write_manifest(path, manifest: dict) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _map_indexed(fn, args_list, jobs: int):
    """Apply ``fn`` over ``args_list`` preserving order; fan out when jobs > 1."""
    if jobs <= 1 or len(args_list) <= 1:
        return [fn(a) for a in args_list]
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, args_list))


def default_jobs() -> int:
    return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# Convergence traces
# ---------------------------------------------------------------------------


@dataclass
class ConvergenceResult:
    """Per-trial traces flattened to (trial, iter, g_norm, fhat_norm) rows."""

    rows: list[tuple] = field(default_factory=list)
    trial_errors: dict[int, str] = field(default_factory=dict)

    HEADER = ["trial", "iter", "g_norm", "fhat_norm"]

    def csv(self) -> str:
        return render_csv(self.HEADER, self.rows)


def _convergence_trial(task) -> tuple[int, list[tuple], str | None]:
    params_tuple, cfg, mode, trial = task
    n, p, theta, base_seed = params_tuple
    seed = trial_seed(base_seed, trial)
    rng = make_rng(seed)
    rows: list[tuple] = []
    try:
        if mode == "orth":
            a0 = gen_haar_orthogonal(n, rng)
            trace = msp_orth(a0, np.eye(n), cfg)
            for t, g in enumerate(trace.objective_g):
                rows.append((trial, t, g, None))
        else:
            bundle = synthesize(ModelParams(n=n, p=p, theta=theta, seed=seed), rng)
            a0 = gen_haar_orthogonal(n, rng)
            trace = msp_dl(a0, bundle.observations, theta, cfg, d_true=bundle.dictionary)
            for t, (g, fh) in enumerate(zip(trace.objective_g, trace.objective_fhat)):
                rows.append((trial, t, g, fh))
    except L4DictError as exc:
        return trial, [], str(exc)
    return trial, rows, None


def run_convergence(
    params: ModelParams,
    cfg: SolveConfig,
    trials: int,
    mode: str = "dl",
    jobs: int = 1,
) -> ConvergenceResult:
    """Run ``trials`` independent solves and record normalized objectives.

    ``mode="dl"`` synthesizes a dataset per trial and solves from the data;
    ``mode="orth"`` runs the data-free group ascent (p and theta unused).
    Solver errors are recorded per trial, never raised.
    """
    if mode not in ("dl", "orth"):
        raise InvalidParameterError(f"mode must be 'dl' or 'orth', got {mode!r}")
    if trials < 1:
        raise InvalidParameterError(f"trials must be >= 1, got {trials}")
    tasks = [
        ((params.n, params.p, params.theta, params.seed), cfg, mode, t) for t in range(trials)
    ]
    result = ConvergenceResult()
    for trial, rows, err in _map_indexed(_convergence_trial, tasks, jobs):
        if err is not None:
            result.trial_errors[trial] = err
        result.rows.extend(rows)
    return result


# ---------------------------------------------------------------------------
# Phase transition grid
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """A 2-D grid over model parameters with per-cell repeated trials.

    ``axis1`` and ``axis2`` are ``(name, values)`` pairs; together with
    ``fixed`` they must cover exactly the model fields n, p and theta.
    """

    axis1: tuple[str, tuple]
    axis2: tuple[str, tuple]
    fixed: dict
    trials: int
    cfg: SolveConfig
    base_seed: int

    def __post_init__(self):
        names = {self.axis1[0], self.axis2[0], *self.fixed.keys()}
        if names != {"n", "p", "theta"}:
            raise InvalidParameterError(f"axes plus fixed must cover n, p, theta; got {sorted(names)}")
        if len(self.axis1[1]) == 0 or len(self.axis2[1]) == 0:
            raise InvalidParameterError("axes must be nonempty")
        if self.trials < 1:
            raise InvalidParameterError(f"trials must be >= 1, got {self.trials}")

    def cell_params(self, v1, v2, seed: int) -> ModelParams:
        kv = dict(self.fixed)
        kv[self.axis1[0]] = v1
        kv[self.axis2[0]] = v2
        return ModelParams(n=int(kv["n"]), p=int(kv["p"]), theta=float(kv["theta"]), seed=seed)


@dataclass
class GridResult:
    """Per-cell averaged recovery error, success rate and diagnostics."""

    rows: list[tuple] = field(default_factory=list)  # (axis1, axis2, mean_error, success_rate)
    bound_gaps: list[float] = field(default_factory=list)  # per cell, see below
    wall_time: float = 0.0
    header: list[str] = field(default_factory=lambda: ["axis1", "axis2", "mean_error", "success_rate"])

    def csv(self) -> str:
        return render_csv(self.header, self.rows)


def _phase_cell(task) -> tuple[float, float, float]:
    spec_fixed, axis_names, v1, v2, trials, cfg, base_seed, cell_index = task
    errors = []
    # Max over trials of dist^2/n - C(theta) * (1 - g): the constant
    # C = 4 / (3 theta (1 - theta)) dominates the distance certificate on
    # every successful run, so this gap stays <= 0 up to roundoff.
    bound_gap = -math.inf
    for t in range(trials):
        seed = trial_seed(base_seed, cell_index * trials + t)
        kv = dict(spec_fixed)
        kv[axis_names[0]] = v1
        kv[axis_names[1]] = v2
        params = ModelParams(n=int(kv["n"]), p=int(kv["p"]), theta=float(kv["theta"]), seed=seed)
        try:
            rng = make_rng(seed)
            bundle = synthesize(params, rng)
            a0 = gen_haar_orthogonal(params.n, rng)
            trace = msp_dl(a0, bundle.observations, params.theta, cfg, d_true=bundle.dictionary)
            g = trace.objective_g[-1]
            errors.append(abs(1.0 - g))
            _, dist = nearest_signed_permutation(trace.final @ bundle.dictionary)
            c_theta = 4.0 / (3.0 * params.theta * (1.0 - params.theta))
            bound_gap = max(bound_gap, dist - c_theta * (1.0 - g))
        except L4DictError:
            errors.append(1.0)
    mean_error = float(np.mean(errors))
    success_rate = float(np.mean([e < SUCCESS_ERROR for e in errors]))
    return mean_error, success_rate, bound_gap


def run_phase_transition(spec: GridSpec, jobs: int = 1) -> GridResult:
    """Average recovery error over a seeded grid of model parameters."""
    t0 = time.perf_counter()
    tasks = []
    cell_index = 0
    for v1 in spec.axis1[1]:
        for v2 in spec.axis2[1]:
            tasks.append(
                (
                    spec.fixed,
                    (spec.axis1[0], spec.axis2[0]),
                    v1,
                    v2,
                    spec.trials,
                    spec.cfg,
                    spec.base_seed,
                    cell_index,
                )
            )
            cell_index += 1
    outcomes = _map_indexed(_phase_cell, tasks, jobs)
    result = GridResult(header=[spec.axis1[0], spec.axis2[0], "mean_error", "success_rate"])
    for task, (mean_error, success_rate, gap) in zip(tasks, outcomes):
        result.rows.append((task[2], task[3], mean_error, success_rate))
        result.bound_gaps.append(gap)
    result.wall_time = time.perf_counter() - t0
    return result


# ---------------------------------------------------------------------------
# Order (2k) sweep
# ---------------------------------------------------------------------------


@dataclass
class SweepResult:
    error_rows: list[tuple] = field(default_factory=list)  # (order_2k, p, mean_error)
    det_iter_rows: list[tuple] = field(default_factory=list)  # (order_2k, iters)

    ERROR_HEADER = ["order_2k", "p", "mean_error"]
    DET_HEADER = ["order_2k", "iters"]

    def error_csv(self) -> str:
        return render_csv(self.ERROR_HEADER, self.error_rows)

    def det_csv(self) -> str:
        return render_csv(self.DET_HEADER, self.det_iter_rows)


def _sweep_cell(task) -> float:
    n, theta, p, order_2k, trials, base_seed, cell_index, max_iters, stop_tol = task
    cfg = SolveConfig(order_2k=order_2k, max_iters=max_iters, stop_tol=stop_tol)
    errors = []
    for t in range(trials):
        seed = trial_seed(base_seed, cell_index * trials + t)
        try:
            rng = make_rng(seed)
            bundle = synthesize(ModelParams(n=n, p=p, theta=theta, seed=seed), rng)
            a0 = gen_haar_orthogonal(n, rng)
            trace = msp_dl(a0, bundle.observations, theta, cfg, d_true=bundle.dictionary)
            errors.append(abs(1.0 - trace.objective_g[-1]))
        except L4DictError:
            errors.append(1.0)
    return float(np.mean(errors))


def run_2k_sweep(
    n: int,
    theta: float,
    p_grid,
    k_grid,
    trials: int,
    base_seed: int = 0,
    max_iters: int = 60,
    stop_tol: float = 1e-10,
    jobs: int = 1,
) -> SweepResult:
    """Recovery error across stretching orders and sample counts, plus
    deterministic iteration counts per order from one shared start."""
    k_grid = [int(k) for k in k_grid]
    p_grid = [int(p) for p in p_grid]
    for order in k_grid:
        if order % 2 or order < 4:
            raise InvalidParameterError(f"orders must be even and >= 4, got {order}")
    tasks = []
    cell_index = 0
    for order in k_grid:
        for p in p_grid:
            tasks.append((n, theta, p, order, trials, base_seed, cell_index, max_iters, stop_tol))
            cell_index += 1
    means = _map_indexed(_sweep_cell, tasks, jobs)
    result = SweepResult()
    for task, mean_error in zip(tasks, means):
        result.error_rows.append((task[3], task[2], mean_error))

    # Deterministic part: same start for every order, count iterations until
    # the displacement rule fires.
    a0 = gen_haar_orthogonal(n, make_rng(trial_seed(base_seed, 10_007)))
    for order in k_grid:
        cfg = SolveConfig(order_2k=order, max_iters=max_iters, stop_tol=stop_tol)
        trace = msp_orth(a0, np.eye(n), cfg)
        result.det_iter_rows.append((order, trace.iters_used if trace.converged else ITERS_SENTINEL))
    return result


# ---------------------------------------------------------------------------
# Step-size iteration table
# ---------------------------------------------------------------------------


@dataclass
class PgaTableResult:
    rows: list[tuple] = field(default_factory=list)  # (n, alpha, iters)

    HEADER = ["n", "alpha", "iters"]

    def csv(self) -> str:
        return render_csv(self.HEADER, self.rows)


def run_pga_table(
    n_grid,
    alpha_grid,
    tol: float = 1e-6,
    base_seed: int = 0,
    max_iters: int = 200,
) -> PgaTableResult:
    """Iterations for projected gradient ascent to reach ``g >= 1 - tol``.

    One shared Haar start per dimension n (seeded ``base_seed ^ n``) is used
    across all step sizes.  The count is the first iteration whose recorded
    objective crosses the threshold; runs that never cross are reported with
    the sentinel value.
    """
    result = PgaTableResult()
    for n in n_grid:
        a0 = gen_haar_orthogonal(int(n), make_rng(trial_seed(base_seed, int(n))))
        for alpha in alpha_grid:
            cfg = SolveConfig(step_alpha=float(alpha), max_iters=max_iters, stop_tol=1e-12)
            trace = pga_run(a0, cfg)
            iters = ITERS_SENTINEL
            for t, g in enumerate(trace.objective_g):
                if g >= 1.0 - tol:
                    iters = t
                    break
            result.rows.append((int(n), float(alpha), iters))
    return result


__all__ = [
    "ConvergenceResult",
    "GridResult",
    "GridSpec",
    "ITERS_SENTINEL",
    "PgaTableResult",
    "SUCCESS_ERROR",
    "SweepResult",
    "default_jobs",
    "render_csv",
    "run_2k_sweep",
    "run_convergence",
    "run_pga_table",
    "run_phase_transition",
    "write_csv",
    "write_manifest",
]
