"""Fixed-point solvers that maximize the elementwise 2k-th power objective
over the orthogonal group.

The basic move is "stretch and project": raise the current estimate (matched
against the dictionary or the data) to an odd elementwise power, which
amplifies dominant entries and suppresses small ones, then polar-project back
onto the orthogonal group.  With the fourth-power objective the update reads

    A <- P[(A @ D)^(3) @ D.T]          (known-dictionary form)
    A <- P[(A @ Y)^(3) @ Y.T]          (data form)

where the stretched matrix is the objective gradient up to the constant 4,
dropped because the polar projection is scale invariant.  The same updates
run with any even order 2k >= 4 via the (2k-1)-th power.  Projected gradient
ascent with a finite step ``alpha`` is also provided; as ``alpha`` grows it
converges to the fixed-point update, which corresponds to an infinite step.

Iterations stop when the normalized step displacement
``||A_new - A||_F / sqrt(n)`` drops below ``stop_tol``.  Ground-truth distance
is never used for stopping; when a true dictionary is supplied it only
enriches the recorded trace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, InvalidParameterError
from .linalg import as_matrix, l2k_norm, project_orthogonal, require_orthogonal

# Solver inputs may be supplied at reduced precision (e.g. matrices
# transcribed at four decimals); the first projection restores full
# working orthogonality, so entry validation is deliberately loose.
INPUT_ORTHO_TOL = 1e-3


@dataclass(frozen=True)
class SolveConfig:
    """Knobs shared by all solver runs.

    ``step_alpha`` is the gradient-ascent step size; ``math.inf`` (the
    default) selects the fixed-point update.  ``bias_beta`` subtracts
    ``(bias_beta / 4) * A`` from the stretched matrix on the data path, which
    cancels the identity-aligned part of the expected gradient; it is only
    meaningful with an infinite step.
    """

    order_2k: int = 4
    step_alpha: float = math.inf
    max_iters: int = 200
    stop_tol: float = 1e-10
    bias_beta: float = 0.0

    def __post_init__(self):
        if int(self.order_2k) != self.order_2k or self.order_2k < 4 or self.order_2k % 2:
            raise InvalidParameterError(f"order_2k must be even and >= 4, got {self.order_2k}")
        if not (self.step_alpha > 0):
            raise InvalidParameterError(f"step_alpha must be positive or inf, got {self.step_alpha}")
        if self.max_iters < 1:
            raise InvalidParameterError(f"max_iters must be >= 1, got {self.max_iters}")
        if not (self.stop_tol > 0):
            raise InvalidParameterError(f"stop_tol must be positive, got {self.stop_tol}")
        if self.bias_beta < 0:
            raise InvalidParameterError(f"bias_beta must be >= 0, got {self.bias_beta}")
        if self.bias_beta > 0 and math.isfinite(self.step_alpha):
            raise InvalidParameterError("bias_beta requires an infinite step size")


@dataclass
class SolveTrace:
    """Per-iteration record of a solver run.

    ``objective_g[t]`` is ``||A_t @ D||_4^4 / n`` (recorded when the true
    dictionary is known; always lies in [1/n, 1] and equals 1 exactly at a
    signed permutation).  ``objective_fhat[t]`` is
    ``||A_t @ Y||_4^4 / (3 n p theta)`` on the data path when theta is known.
    ``step_displacement[t]`` is ``||A_{t+1} - A_t||_F / sqrt(n)``.
    """

    final: np.ndarray
    iterates: list[np.ndarray] = field(repr=False, default_factory=list)
    objective_g: list[float] | None = None
    objective_fhat: list[float] | None = None
    step_displacement: list[float] = field(default_factory=list)
    iters_used: int = 0
    converged: bool = False


def msp_step_orth(a, d, order_2k: int = 4) -> np.ndarray:
    """One stretch-and-project step against a known dictionary ``d``."""
    a = as_matrix(a)
    d = as_matrix(d)
    n = a.shape[0]
    if a.shape != (n, n) or d.shape != (n, n):
        raise DimensionMismatchError(f"need square matrices of equal size, got {a.shape} and {d.shape}")
    stretched = (a @ d) ** (order_2k - 1)
    return project_orthogonal(stretched @ d.T)


def _dl_update(a, y, matched, order_2k: int, bias_beta: float) -> np.ndarray:
    # matched = a @ y, passed in so the solve loop can reuse it for the
    # recorded data objective instead of forming the product twice
    stretched = matched ** (order_2k - 1) @ y.T
    if bias_beta > 0:
        stretched = stretched - (bias_beta / 4.0) * a
    return project_orthogonal(stretched)


def msp_step_dl(a, y, order_2k: int = 4, bias_beta: float = 0.0) -> np.ndarray:
    """One stretch-and-project step against observed data ``y`` (n-by-p).

    ``bias_beta`` subtracts ``(bias_beta / 4) * a`` before projecting, scaled
    consistently with the dropped gradient constant 4.
    """
    a = as_matrix(a)
    y = as_matrix(y)
    n = a.shape[0]
    if a.shape != (n, n):
        raise DimensionMismatchError(f"estimate must be square, got {a.shape}")
    if y.shape[0] != n:
        raise DimensionMismatchError(f"data has {y.shape[0]} rows, estimate is {n}x{n}")
    if bias_beta < 0:
        raise InvalidParameterError(f"bias_beta must be >= 0, got {bias_beta}")
    return _dl_update(a, y, a @ y, order_2k, bias_beta)


def pga_step(a, alpha: float, order_2k: int = 4) -> np.ndarray:
    """One projected gradient ascent step on the group objective (d = I).

    Finite ``alpha`` projects ``A + 4 * alpha * A^(2k-1)``; ``alpha = inf``
    projects ``A^(2k-1)`` alone, the fixed-point update.
    """
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"estimate must be square, got {a.shape}")
    if not (alpha > 0):
        raise InvalidParameterError(f"alpha must be positive or inf, got {alpha}")
    stretched = a ** (order_2k - 1)
    if math.isfinite(alpha):
        stretched = a + 4.0 * alpha * stretched
    return project_orthogonal(stretched)


def _norm_objective(w) -> float:
    # ||W||_4^4 / n: the [1/n, 1]-normalized closeness to a signed permutation.
    # Recorded with the fourth power even for higher-order runs so traces of
    # different orders share one recovery metric (1 exactly at recovery).
    return l2k_norm(w, 4) / w.shape[0]


def _iterate(a0, step, cfg: SolveConfig, g_of=None, fhat_of=None) -> SolveTrace:
    a = require_orthogonal(a0, tol=INPUT_ORTHO_TOL)
    n = a.shape[0]
    sqrt_n = math.sqrt(n)
    trace = SolveTrace(final=a, iterates=[a])
    if g_of is not None:
        trace.objective_g = [g_of(a)]
    if fhat_of is not None:
        trace.objective_fhat = [fhat_of(a)]
    for _ in range(cfg.max_iters):
        a_next = step(a)
        disp = float(np.linalg.norm(a_next - a)) / sqrt_n
        a = a_next
        trace.iterates.append(a)
        trace.step_displacement.append(disp)
        trace.iters_used += 1
        if g_of is not None:
            trace.objective_g.append(g_of(a))
        if fhat_of is not None:
            trace.objective_fhat.append(fhat_of(a))
        if disp < cfg.stop_tol:
            trace.converged = True
            break
    trace.final = a
    return trace


def _require_infinite_step(cfg: SolveConfig, which: str) -> None:
    if math.isfinite(cfg.step_alpha):
        raise InvalidParameterError(
            f"{which} is the infinite-step update; for finite step sizes use pga_run"
        )


def msp_orth(a0, d, cfg: SolveConfig = SolveConfig()) -> SolveTrace:
    """Iterate :func:`msp_step_orth` from ``a0`` until the displacement
    stopping rule fires or ``cfg.max_iters`` is exhausted (reported through
    ``trace.converged``, not as an error).

    The trace records ``||A_t @ d||_4^4 / n`` at every iteration.
    """
    _require_infinite_step(cfg, "msp_orth")
    d = require_orthogonal(d, tol=INPUT_ORTHO_TOL)
    return _iterate(
        a0,
        lambda a: msp_step_orth(a, d, cfg.order_2k),
        cfg,
        g_of=lambda a: _norm_objective(a @ d),
    )


def msp_dl(a0, y, theta: float | None, cfg: SolveConfig = SolveConfig(), d_true=None) -> SolveTrace:
    """Data-driven solve: iterate :func:`msp_step_dl` on observations ``y``.

    ``theta`` is only needed to normalize the recorded data objective
    ``||A Y||_4^4 / (3 n p theta)``; pass ``None`` when it is unknown and the
    trace simply omits that series.  ``d_true``, when given, additionally
    records the ground-truth objective per iteration (never used for
    stopping).
    """
    _require_infinite_step(cfg, "msp_dl")
    y = as_matrix(y)
    n, p = y.shape
    if theta is not None:
        if not (0.0 < theta < 1.0):
            raise InvalidParameterError(f"theta must lie in (0, 1), got {theta}")
        if cfg.bias_beta > 12.0 * p * theta**2:
            raise InvalidParameterError(
                f"bias_beta={cfg.bias_beta} exceeds 12*p*theta^2={12.0 * p * theta ** 2}"
            )
    if d_true is not None:
        d_true = require_orthogonal(d_true, tol=INPUT_ORTHO_TOL)

    a = require_orthogonal(a0, tol=INPUT_ORTHO_TOL)
    if a.shape[0] != n:
        raise DimensionMismatchError(f"data has {n} rows, estimate is {a.shape[0]}x{a.shape[0]}")
    sqrt_n = math.sqrt(n)
    denom = 3.0 * n * p * theta if theta is not None else None
    trace = SolveTrace(final=a, iterates=[a])
    if d_true is not None:
        trace.objective_g = [_norm_objective(a @ d_true)]
    matched = a @ y
    if denom is not None:
        trace.objective_fhat = [float(np.sum(matched**4)) / denom]
    for _ in range(cfg.max_iters):
        a_next = _dl_update(a, y, matched, cfg.order_2k, cfg.bias_beta)
        disp = float(np.linalg.norm(a_next - a)) / sqrt_n
        a = a_next
        matched = a @ y
        trace.iterates.append(a)
        trace.step_displacement.append(disp)
        trace.iters_used += 1
        if d_true is not None:
            trace.objective_g.append(_norm_objective(a @ d_true))
        if denom is not None:
            trace.objective_fhat.append(float(np.sum(matched**4)) / denom)
        if disp < cfg.stop_tol:
            trace.converged = True
            break
    trace.final = a
    return trace


def pga_run(a0, cfg: SolveConfig = SolveConfig()) -> SolveTrace:
    """Projected gradient ascent on the group objective (d = I) with step
    ``cfg.step_alpha``; with the default infinite step this produces exactly
    the same trace as ``msp_orth(a0, I)``."""
    return _iterate(
        a0,
        lambda a: pga_step(a, cfg.step_alpha, cfg.order_2k),
        cfg,
        g_of=lambda a: _norm_objective(a),
    )
