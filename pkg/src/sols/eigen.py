"""Minimum-eigenpair computation: exact dense path and randomized Lanczos."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

Array = np.ndarray


@dataclass
class EigEstimate:
    """A minimum-eigenvalue estimate with its unit direction.

    ``lam`` is the exact smallest eigenvalue on the dense path, and the
    Rayleigh quotient v'Hv of the returned unit vector on the Lanczos path
    (an upper bound on the true minimum in either case). ``iters`` counts
    Lanczos matrix-vector products, summed across restarts.
    """

    lam: float
    v_unit: Array
    iters: int
    converged_by: str  # "exact", "lanczos_cap", or "full_n"
    ritz_values: list[float] | None = None


def min_eigenpair_exact(H: Array) -> EigEstimate:
    """Smallest eigenpair of a dense symmetric matrix via full eigendecomposition."""
    H = np.asarray(H, dtype=float)
    scale = float(np.max(np.abs(H))) if H.size else 0.0
    asym = float(np.max(np.abs(H - H.T))) if H.size else 0.0
    if asym > 1e-10 * max(scale, 1.0):
        raise ValueError(f"matrix is not symmetric: max asymmetry {asym:.3e}")
    w, V = np.linalg.eigh(H)
    v = V[:, 0]
    v = v / np.linalg.norm(v)
    return EigEstimate(lam=float(w[0]), v_unit=v, iters=0, converged_by="exact")


def lanczos_iteration_cap(n: int, M: float, eps: float, delta: float) -> int:
    """Iteration budget for the randomized estimator.

    ``delta = 0`` demands the probability-one regime and forces a full
    n-dimensional Krylov space. Fractional budgets round up.
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    if not 0.0 <= delta < 1.0:
        raise ValueError("delta must lie in [0, 1)")
    if delta == 0.0:
        return n
    cap = math.log(n / delta**2) / (2.0 * math.sqrt(2.0)) * math.sqrt(M / eps)
    return min(n, max(1, math.ceil(cap)))


def _ritz_max(alphas: list[float], betas: list[float]) -> tuple[float, Array]:
    """Largest eigenpair of the tridiagonal matrix built from the recurrence."""
    k = len(alphas)
    T = np.diag(alphas)
    if k > 1:
        off = np.asarray(betas[: k - 1])
        T += np.diag(off, 1) + np.diag(off, -1)
    w, Y = np.linalg.eigh(T)
    return float(w[-1]), Y[:, -1]


def lanczos_min_eig(
    hv,
    n: int,
    M: float,
    eps: float,
    delta: float,
    rng: np.random.Generator,
    track_ritz: bool = False,
) -> EigEstimate:
    """Estimate the smallest eigenvalue of H through products v -> H v.

    Runs the Lanczos iteration on the shifted operator v -> M v - H v (so
    that the target becomes the largest eigenvalue of a positive
    semidefinite matrix) from a start vector drawn uniformly on the unit
    sphere. The caller guarantees ``M >= ||H||``. The returned ``lam`` is
    the Rayleigh quotient of the returned unit vector, which satisfies
    lam <= lambda_min(H) + eps with probability at least 1 - delta within
    the iteration budget.

    The basis is fully reorthogonalized (budgets are small at this scale).
    A breakdown means the Krylov space became exactly invariant; we restart
    from a fresh random vector at most 3 times, sharing the remaining
    budget so the total product count never exceeds the cap, and keep the
    best estimate seen.
    """
    budget = lanczos_iteration_cap(n, M, eps, delta)
    breakdown_tol = 1e-13 * max(1.0, 2.0 * abs(M))

    best_lam = math.inf
    best_v: Array | None = None
    total_iters = 0
    restarts = 0
    ritz_history: list[float] = []

    while total_iters < budget and restarts <= 3:
        V: list[Array] = []
        HV: list[Array] = []
        alphas: list[float] = []
        betas: list[float] = []
        sweep_ritz: list[float] = []

        v = rng.standard_normal(n)
        nv = np.linalg.norm(v)
        while nv == 0.0:
            v = rng.standard_normal(n)
            nv = np.linalg.norm(v)
        v = v / nv

        broke = False
        while total_iters < budget:
            hv_v = np.asarray(hv(v), dtype=float)
            w = M * v - hv_v
            alpha = float(v @ w)
            V.append(v)
            HV.append(hv_v)
            alphas.append(alpha)
            total_iters += 1

            w = w - alpha * v
            if len(V) > 1:
                w = w - betas[-1] * V[-2]
            # Full reorthogonalization against the stored basis.
            Vmat = np.column_stack(V)
            w = w - Vmat @ (Vmat.T @ w)

            if track_ritz:
                theta, _ = _ritz_max(alphas, betas)
                sweep_ritz.append(theta)

            beta = float(np.linalg.norm(w))
            if beta <= breakdown_tol:
                broke = True
                break
            betas.append(beta)
            v = w / beta

        theta, y = _ritz_max(alphas, betas)
        Vmat = np.column_stack(V)
        HVmat = np.column_stack(HV)
        v_ritz = Vmat @ y
        nv = float(np.linalg.norm(v_ritz))
        if nv > 0.0:
            lam = float(v_ritz @ (HVmat @ y)) / (nv * nv)
            if lam < best_lam:
                best_lam = lam
                best_v = v_ritz / nv
                ritz_history = sweep_ritz

        if not broke:
            break
        restarts += 1

    assert best_v is not None
    return EigEstimate(
        lam=best_lam,
        v_unit=best_v,
        iters=total_iters,
        converged_by="full_n" if total_iters >= n else "lanczos_cap",
        ritz_values=ritz_history if track_ritz else None,
    )
