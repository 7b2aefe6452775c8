"""Backtracking line search with a cubic decrease condition, plus its caps."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .operators import Array, Objective, ProblemConstants
from .steps import SolverConfig, StepKind


class LineSearchStallError(RuntimeError):
    """Backtracking exceeded max_ls_steps; on problems with honestly
    declared constants this must never fire, so it signals misdeclared
    constants or numerical breakdown."""

    def __init__(self, message: str, context: dict):
        super().__init__(message)
        self.context = context


@dataclass
class LineSearchResult:
    """Accepted step of the backtracking search.

    ``alpha`` equals theta**j bit-for-bit because it is produced by
    repeated multiplication, never by a power call.
    """

    alpha: float
    j: int
    decrease: float
    probes: int
    f_new: float


def backtrack(
    obj: Objective,
    x: Array,
    f_x: float,
    d: Array,
    cfg: SolverConfig,
    kind: str | None = None,
) -> LineSearchResult:
    """Find the smallest j >= 0 whose step theta**j gives cubic decrease.

    The acceptance test is the strict inequality
    f(x + alpha d) < f(x) - (eta/6) alpha^3 ||d||^3; exact equality
    rejects. ``f_x`` is passed in, never recomputed, so each call consumes
    exactly j + 1 objective evaluations.
    """
    d = np.asarray(d, dtype=float)
    dnorm = float(np.linalg.norm(d))
    if dnorm == 0.0:
        raise ValueError("backtrack requires a nonzero direction")
    base = (cfg.eta / 6.0) * dnorm**3
    alpha = 1.0
    for j in range(cfg.max_ls_steps + 1):
        f_trial = obj.value(x + alpha * d)
        if f_trial < f_x - base * alpha**3:
            return LineSearchResult(
                alpha=alpha, j=j, decrease=f_x - f_trial, probes=j + 1, f_new=f_trial
            )
        alpha *= cfg.theta
    raise LineSearchStallError(
        f"line-search stall: no acceptable step within {cfg.max_ls_steps} backtracks",
        context={
            "x": np.asarray(x, dtype=float).tolist(),
            "f_x": float(f_x),
            "d_norm": dnorm,
            "kind": kind,
            "theta": cfg.theta,
            "eta": cfg.eta,
        },
    )


def _pospart(v: float) -> float:
    return max(v, 0.0)


def _log_base_theta(z: float, theta: float) -> float:
    return math.log(z) / math.log(theta)


def ls_cap_exponent(kind: str, constants: ProblemConstants, cfg: SolverConfig) -> float:
    """Real-valued backtracking exponent bound for a direction kind.

    Evaluates the positive-part log expressions symbol for symbol; the
    accepted count always satisfies j <= exponent + 1.
    """
    th, eta = cfg.theta, cfg.eta
    L_H, U_g = constants.L_H, constants.U_g
    eps_g, eps_H, zeta = cfg.eps_g, cfg.eps_H, cfg.zeta
    if kind in StepKind.CUBIC_CURVATURE:
        return _pospart(_log_base_theta(3.0 / (L_H + eta), th))
    if kind == StepKind.NORMALIZED_GRADIENT:
        arg = min(5.0 / 3.0, math.sqrt(1.0 / (L_H + eta))) * min(
            math.sqrt(eps_g) / eps_H, 1.0
        )
        return _pospart(_log_base_theta(arg, th))
    if kind == StepKind.NEWTON:
        arg = math.sqrt(3.0 / (L_H + eta)) * eps_H / math.sqrt(U_g)
        return _pospart(_log_base_theta(arg, th))
    if kind == StepKind.REGULARIZED_NEWTON:
        arg = 6.0 / (L_H + eta) * eps_H**2 / U_g
        return _pospart(_log_base_theta(arg, th))
    if kind in (StepKind.INEXACT_NEWTON, StepKind.INEXACT_REGULARIZED_NEWTON):
        arg = (
            3.0
            / (L_H + eta)
            * (1.0 - zeta)
            * eps_H**2
            / (U_g * math.sqrt(1.0 + zeta**2 / 4.0))
        )
        return _pospart(0.5 * _log_base_theta(arg, th))
    raise ValueError(f"unknown direction kind {kind!r}")


def theoretical_ls_cap(constants: ProblemConstants, cfg: SolverConfig, kind: str) -> int:
    """Integer backtracking cap for a direction kind.

    The exponent bound is real-valued; the integer cap is its ceiling
    plus one, the tightest integer dominating j <= exponent + 1.
    """
    return math.ceil(ls_cap_exponent(kind, constants, cfg)) + 1


def max_ls_cap(constants: ProblemConstants, cfg: SolverConfig, inexact: bool) -> int:
    """Largest cap over the direction kinds a loop can produce."""
    if inexact:
        kinds = (
            StepKind.SCALED_NEG_CURV_GRADIENT,
            StepKind.NORMALIZED_GRADIENT,
            StepKind.INEXACT_NEWTON,
        )
    else:
        kinds = (
            StepKind.SCALED_NEG_CURV_GRADIENT,
            StepKind.NORMALIZED_GRADIENT,
            StepKind.NEWTON,
            StepKind.REGULARIZED_NEWTON,
        )
    return max(theoretical_ls_cap(constants, cfg, k) for k in kinds)
