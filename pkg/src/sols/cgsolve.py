"""Linear solvers for Newton-type systems: dense exact solves and capped CG."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

Array = np.ndarray

CURVATURE_TOL = 1e-14  # p'Ap <= tol * ||p||^2 counts as nonpositive curvature


class CgCapError(RuntimeError):
    """CG hit its iteration cap without meeting the stopping criterion."""


@dataclass
class CgOutcome:
    """Result of a capped conjugate-gradient solve of A d = -g.

    On ``converged`` the residual satisfies the two-sided criterion
    ||A d + g|| <= (zeta/2) min(||g||, m ||d||). On ``nonpositive_curvature``
    the violating search direction and its curvature are exposed so the
    caller can recover a descent direction from them.
    """

    d: Array
    iters: int
    final_residual_norm: float
    status: str  # "converged", "cap_reached", or "nonpositive_curvature"
    p: Array | None = None
    p_curvature: float | None = None
    residual_history: list[Array] = field(default_factory=list)
    d_norm_history: list[float] = field(default_factory=list)


def solve_exact(H: Array, g: Array, shift: float = 0.0) -> Array:
    """Solve (H + shift I) d = -g by dense Cholesky factorization.

    The branch conditions of the callers guarantee positive definiteness
    (smallest eigenvalue above eps_H in both the plain and the shifted
    case); a factorization failure therefore signals a violated branch
    condition and is raised as-is.
    """
    H = np.asarray(H, dtype=float)
    A = H if shift == 0.0 else H + shift * np.eye(H.shape[0])
    c, low = scipy.linalg.cho_factor(A)
    return scipy.linalg.cho_solve((c, low), -np.asarray(g, dtype=float))


def cg_iteration_cap(n: int, m: float, M: float, zeta: float) -> int:
    """A-priori CG budget from the condition-number bound kappa = M/m."""
    if m <= 0.0:
        raise ValueError("m must be positive")
    if zeta <= 0.0:
        # An exact solve is demanded; plain CG delivers it in n steps.
        return n
    kappa = max(M / m, 1.0)
    cap = 0.5 * math.sqrt(kappa) * math.log(4.0 * kappa**1.5 / zeta)
    return min(n, max(1, math.ceil(cap)))


def cg_capped(
    apply_A,
    g: Array,
    m: float,
    M: float,
    zeta: float,
    n: int,
    collect_trace: bool = False,
) -> CgOutcome:
    """Conjugate gradient for A d = -g with a two-sided stop and a hard cap.

    The caller certifies m I <= A <= M I. After every iteration (never at
    the zero initial iterate, where the m||d|| side is vacuous) the
    residual test ||A d + g|| <= (zeta/2) min(||g||, m ||d||) is applied.
    The curvature of every search direction is checked; nonpositive
    curvature aborts the solve and surfaces the direction.
    """
    g = np.asarray(g, dtype=float)
    gnorm = float(np.linalg.norm(g))
    if gnorm == 0.0:
        raise ValueError("cg_capped requires a nonzero right-hand side")

    cap = cg_iteration_cap(n, m, M, zeta)
    d = np.zeros_like(g)
    r = g.copy()  # residual of A d + g at d = 0
    p = -r
    rr = float(r @ r)
    outcome = CgOutcome(d=d, iters=0, final_residual_norm=gnorm, status="cap_reached")

    for q in range(1, cap + 1):
        Ap = np.asarray(apply_A(p), dtype=float)
        pAp = float(p @ Ap)
        if pAp <= CURVATURE_TOL * float(p @ p):
            outcome.status = "nonpositive_curvature"
            outcome.p = p
            outcome.p_curvature = pAp
            outcome.iters = q
            return outcome
        alpha = rr / pAp
        d = d + alpha * p
        r = r + alpha * Ap
        rnorm = float(np.linalg.norm(r))
        if collect_trace:
            outcome.residual_history.append(r.copy())
            outcome.d_norm_history.append(float(np.linalg.norm(d)))
        outcome.d = d
        outcome.iters = q
        outcome.final_residual_norm = rnorm
        if rnorm <= 0.5 * zeta * min(gnorm, m * float(np.linalg.norm(d))):
            outcome.status = "converged"
            return outcome
        rr_new = float(r @ r)
        p = -r + (rr_new / rr) * p
        rr = rr_new

    return outcome


def residual_orthogonality_probe(residuals: list[Array]) -> float:
    """Max normalized pairwise inner product of recorded CG residuals.

    Exact CG produces mutually orthogonal residuals; this probe quantifies
    how far a recorded trace drifts from that. Residuals at the roundoff
    floor (a terminal residual on an exactly solved system is pure noise)
    carry no directional information and are excluded. Traces with fewer
    than two informative residuals are vacuously orthogonal.
    """
    norms = [float(np.linalg.norm(r)) for r in residuals]
    floor = 1e-12 * max(norms, default=0.0)
    live = [r for r, n in zip(residuals, norms) if n > floor]
    if len(live) < 2:
        return 0.0
    worst = 0.0
    for i in range(len(live)):
        for j in range(i + 1, len(live)):
            ni = float(np.linalg.norm(live[i]))
            nj = float(np.linalg.norm(live[j]))
            worst = max(worst, abs(float(live[i] @ live[j])) / (ni * nj))
    return worst
