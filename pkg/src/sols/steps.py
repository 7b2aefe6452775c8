"""Direction selection for the exact and inexact solver loops."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .cgsolve import CgCapError, cg_capped, solve_exact
from .eigen import EigEstimate, lanczos_min_eig, min_eigenpair_exact
from .operators import Array, Objective, rayleigh_quotient


class StepKind:
    """Names of the possible search directions."""

    SCALED_NEG_CURV_GRADIENT = "scaled_neg_curv_gradient"
    NORMALIZED_GRADIENT = "normalized_gradient"
    NEGATIVE_CURVATURE = "negative_curvature"
    NEWTON = "newton"
    REGULARIZED_NEWTON = "regularized_newton"
    INEXACT_NEWTON = "inexact_newton"
    INEXACT_REGULARIZED_NEWTON = "inexact_regularized_newton"

    ALL = (
        SCALED_NEG_CURV_GRADIENT,
        NORMALIZED_GRADIENT,
        NEGATIVE_CURVATURE,
        NEWTON,
        REGULARIZED_NEWTON,
        INEXACT_NEWTON,
        INEXACT_REGULARIZED_NEWTON,
    )

    # Kinds whose scaling makes d'Hd = -||d||^3 hold by construction.
    CUBIC_CURVATURE = (SCALED_NEG_CURV_GRADIENT, NEGATIVE_CURVATURE)
    NEWTON_LIKE = (NEWTON, REGULARIZED_NEWTON, INEXACT_NEWTON, INEXACT_REGULARIZED_NEWTON)


class IndefiniteSystemError(RuntimeError):
    """indefinite-system encountered: CG found nonpositive curvature that
    cannot be converted into a usable descent direction."""


class ConfigError(ValueError):
    """Solver configuration violates a range constraint."""


@dataclass
class Direction:
    """A selected search direction with its diagnostic scalars."""

    kind: str
    d: Array
    R: float | None = None
    lam: float | None = None
    residual_norm: float | None = None
    lanczos_iters: int | None = None
    cg_iters: int | None = None
    cg_fallback: bool = False


@dataclass
class Terminate:
    """Marker returned when the second-order branch certifies the iterate."""

    lam: float
    R: float | None = None
    lanczos_iters: int | None = None


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and algorithm parameters shared by both solver loops.

    ``zeta``, ``delta``, and ``U_H`` only matter for the inexact loop;
    ``U_H`` overrides the problem-declared Hessian-norm bound when set.
    """

    eps_g: float = 1e-4
    eps_H: float = 1e-2
    theta: float = 0.5
    eta: float = 1.0
    zeta: float = 0.5
    delta: float = 1e-6
    U_H: float | None = None
    max_iters: int = 10_000
    max_ls_steps: int = 200
    rng_seed: int = 0

    def validate(self) -> None:
        if not 0.0 < self.eps_g < 1.0:
            raise ConfigError(f"eps_g must lie in (0, 1), got {self.eps_g}")
        if not 0.0 < self.eps_H < 1.0:
            raise ConfigError(f"eps_H must lie in (0, 1), got {self.eps_H}")
        if not 0.0 < self.theta < 1.0:
            raise ConfigError(f"theta must lie in (0, 1), got {self.theta}")
        if not self.eta > 0.0:
            raise ConfigError(f"eta must be positive, got {self.eta}")
        if not 0.0 <= self.zeta < 1.0:
            raise ConfigError(f"zeta must lie in [0, 1), got {self.zeta}")
        if not 0.0 <= self.delta < 1.0:
            raise ConfigError(f"delta must lie in [0, 1), got {self.delta}")
        if self.U_H is not None and not self.U_H > 0.0:
            raise ConfigError(f"U_H must be positive, got {self.U_H}")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be a positive integer")
        if self.max_ls_steps < 1:
            raise ConfigError("max_ls_steps must be a positive integer")

    def with_updates(self, **kwargs) -> SolverConfig:
        return replace(self, **kwargs)


def scale_eigvector(v_unit: Array, lam: float, g: Array) -> Array:
    """Scale a unit curvature direction to norm [-lam]_+ with nonpositive slope.

    The sign is flipped only when the slope along ``g`` is strictly
    positive; an exactly orthogonal direction keeps the estimator's
    orientation. Nonnegative curvature scales to the zero vector.
    """
    if lam >= 0.0:
        return np.zeros_like(v_unit)
    w = (-lam) * v_unit
    if float(w @ g) > 0.0:
        w = -w
    return w


def _first_order_direction(
    obj: Objective, x: Array, g: Array, gnorm: float, cfg: SolverConfig
) -> tuple[Direction | None, float | None]:
    """Step 1 of both loops: returns a gradient-based direction or defers.

    A zero gradient defers straight to the second-order branch without
    spending the Hessian-vector product for the curvature ratio.
    """
    if gnorm == 0.0:
        return None, None
    R = rayleigh_quotient(obj, x, g)
    if R < -cfg.eps_H:
        return Direction(StepKind.SCALED_NEG_CURV_GRADIENT, (R / gnorm) * g, R=R), R
    if -cfg.eps_H <= R <= cfg.eps_H and gnorm > cfg.eps_g:
        return Direction(StepKind.NORMALIZED_GRADIENT, -g / np.sqrt(gnorm), R=R), R
    return None, R


def select_direction_exact(
    obj: Objective,
    x: Array,
    g: Array,
    cfg: SolverConfig,
    eig=None,
    newton=None,
) -> Direction | Terminate:
    """Choose the search direction of the exact loop, or certify the iterate.

    ``eig(H)`` and ``newton(H, g, shift)`` default to the dense
    eigendecomposition and Cholesky solvers; they are injectable so tests
    can steer the second-order branch.
    """
    g = np.asarray(g, dtype=float)
    gnorm = float(np.linalg.norm(g))
    direction, R = _first_order_direction(obj, x, g, gnorm, cfg)
    if direction is not None:
        return direction

    if eig is None:
        eig = min_eigenpair_exact
    if newton is None:
        newton = solve_exact
    H = obj.dense_hessian(x)
    est = eig(H)
    lam = est.lam
    if gnorm <= cfg.eps_g and lam >= -cfg.eps_H:
        return Terminate(lam=lam, R=R)
    if lam < -cfg.eps_H:
        d = scale_eigvector(est.v_unit, lam, g)
        return Direction(StepKind.NEGATIVE_CURVATURE, d, R=R, lam=lam)
    if lam > cfg.eps_H:
        d = newton(H, g, 0.0)
        return Direction(StepKind.NEWTON, d, R=R, lam=lam)
    d = newton(H, g, 2.0 * cfg.eps_H)
    return Direction(StepKind.REGULARIZED_NEWTON, d, R=R, lam=lam)


def _neg_curvature_from_cg(
    p: Array, p_curvature: float, shift: float, g: Array
) -> tuple[Array, float]:
    """Convert a nonpositive-curvature CG direction into an eigen-style step.

    The curvature of the unshifted Hessian along p is recovered from the
    already-computed product, so the fallback costs no extra evaluations.
    """
    pn2 = float(p @ p)
    R_p = (p_curvature - shift * pn2) / pn2
    if R_p >= 0.0:
        raise IndefiniteSystemError(
            "indefinite-system encountered: CG curvature direction has "
            f"nonnegative Hessian curvature {R_p:.3e}"
        )
    d = scale_eigvector(p / np.sqrt(pn2), R_p, g)
    return d, R_p


def select_direction_inexact(
    obj: Objective,
    x: Array,
    g: Array,
    cfg: SolverConfig,
    rng: np.random.Generator,
    U_H: float,
    lanczos=None,
    cg=None,
) -> Direction | Terminate:
    """Choose the search direction of the inexact loop, or certify the iterate.

    The eigenvalue estimate targets accuracy eps_H/2 with shift U_H + 2;
    CG solves run with curvature floor m = eps_H. If CG uncovers
    nonpositive curvature (a low-probability estimator failure), the
    violating direction is rescaled into a negative-curvature step so the
    cubic decrease law still applies; the event is flagged for the run
    report's probability accounting.
    """
    g = np.asarray(g, dtype=float)
    gnorm = float(np.linalg.norm(g))
    direction, R = _first_order_direction(obj, x, g, gnorm, cfg)
    if direction is not None:
        return direction

    if lanczos is None:
        lanczos = lanczos_min_eig
    if cg is None:
        cg = cg_capped

    def hv(v: Array) -> Array:
        return obj.hessian_vector(x, v)

    M_shift = U_H + 2.0
    est: EigEstimate = lanczos(hv, obj.dim, M_shift, cfg.eps_H / 2.0, cfg.delta, rng)
    lam_i = est.lam
    if gnorm <= cfg.eps_g and lam_i >= -0.5 * cfg.eps_H:
        return Terminate(lam=lam_i, R=R, lanczos_iters=est.iters)
    if lam_i < -0.5 * cfg.eps_H:
        d = scale_eigvector(est.v_unit, lam_i, g)
        return Direction(
            StepKind.NEGATIVE_CURVATURE, d, R=R, lam=lam_i, lanczos_iters=est.iters
        )

    if lam_i > 1.5 * cfg.eps_H:
        kind, shift, M_cg = StepKind.INEXACT_NEWTON, 0.0, U_H
    else:
        kind, shift, M_cg = (
            StepKind.INEXACT_REGULARIZED_NEWTON,
            2.0 * cfg.eps_H,
            U_H + 2.0 * cfg.eps_H,
        )

    def apply_A(v: Array) -> Array:
        hvv = obj.hessian_vector(x, v)
        return hvv if shift == 0.0 else hvv + shift * v

    outcome = cg(apply_A, g, cfg.eps_H, M_cg, cfg.zeta, obj.dim)
    if outcome.status == "nonpositive_curvature":
        d, R_p = _neg_curvature_from_cg(outcome.p, outcome.p_curvature, shift, g)
        return Direction(
            StepKind.NEGATIVE_CURVATURE,
            d,
            R=R,
            lam=R_p,
            lanczos_iters=est.iters,
            cg_iters=outcome.iters,
            cg_fallback=True,
        )
    if outcome.status == "cap_reached":
        raise CgCapError(
            f"CG reached its cap ({outcome.iters} iterations) with residual "
            f"{outcome.final_residual_norm:.3e}; certified spectrum bounds "
            "appear to be violated"
        )
    return Direction(
        kind,
        outcome.d,
        R=R,
        lam=lam_i,
        residual_norm=outcome.final_residual_norm,
        lanczos_iters=est.iters,
        cg_iters=outcome.iters,
    )
