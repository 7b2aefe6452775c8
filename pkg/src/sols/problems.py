"""Synthetic problems with analytically certified smoothness constants.

Every problem declares (L_g, L_H, U_g, U_H, f_low) valid on the level set
of its canonical start point. The declarations come from closed-form
bounds over a coordinate box enclosing the level set, inflated by a safety
margin, and are re-checked by sampling at construction. Overestimates are
safe throughout: backtracking caps grow with the constants, and decrease
floors shrink, so both stay valid.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .eigen import min_eigenpair_exact
from .operators import Array, Objective, ProblemConstants
from .steps import SolverConfig, StepKind

MARGIN = 1.1


class ConstantsError(RuntimeError):
    """Declared constants failed the sampling verifier."""


@dataclass(frozen=True)
class KnownMinimizer:
    x: tuple[float, ...]
    f: float
    lam_min: float


@dataclass(frozen=True)
class SuiteProblem:
    """An objective family member with certified constants and coverage intent.

    ``branch_coverage`` names the step kinds the problem is designed to
    trigger under ``coverage_config``; traces are inspected against it.
    Objectives carry per-instance counters, so each run must call
    ``make_objective`` for a fresh instance.
    """

    name: str
    dim: int
    x0: tuple[float, ...]
    constants: ProblemConstants
    known_minimizers: tuple[KnownMinimizer, ...]
    branch_coverage: frozenset
    coverage_config: SolverConfig
    _factory: object

    def make_objective(self) -> Objective:
        return self._factory()

    def start_point(self) -> Array:
        return np.asarray(self.x0, dtype=float)

    def f0(self) -> float:
        obj = self.make_objective()
        return obj.value(self.start_point())

    def mu(self) -> float:
        """Half of min(1, smallest Hessian eigenvalue at the first minimizer)."""
        lam = self.known_minimizers[0].lam_min
        return 0.5 * min(1.0, lam)


def _separable_quartic_constants(
    d: Array, beta: Array, c0: float, x0: Array
) -> tuple[ProblemConstants, float]:
    """Closed-form level-set constants for f = sum d_i x_i^2/2 + beta_i x_i^4/4 + c0."""
    if np.any((beta == 0.0) & (d <= 0.0)):
        raise ValueError("coordinates with beta = 0 need d > 0 to stay bounded")
    if np.any(beta < 0.0):
        raise ValueError("beta must be nonnegative")
    f0 = float(0.5 * d @ x0**2 + 0.25 * beta @ x0**4 + c0)
    m = np.where((d < 0.0) & (beta > 0.0), -(d**2) / np.where(beta > 0, 4.0 * beta, 1.0), 0.0)
    f_low = c0 + float(m.sum())
    # Per-coordinate bound on x_i^2 over the level set: the other
    # coordinates contribute at least their own minima.
    c_i = np.maximum((f0 - c0) - (m.sum() - m), 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.where(
            beta > 0.0,
            (-d + np.sqrt(d**2 + 4.0 * beta * c_i)) / np.where(beta > 0, beta, 1.0),
            2.0 * c_i / np.where(beta > 0, 1.0, d),
        )
    u = np.maximum(u, x0**2)  # the start point itself lies in the set
    B = np.sqrt(u)
    U_H = float(np.max(np.maximum(np.abs(d), np.abs(d + 3.0 * beta * u))))
    L_H = 6.0 * float(np.max(beta * B))
    U_g = float(np.sqrt(np.sum((np.abs(d) * B + beta * B**3) ** 2)))
    if U_H <= 0.0 or U_g <= 0.0:
        raise ValueError("degenerate problem: zero curvature and gradient bounds")
    pc = ProblemConstants(
        L_g=MARGIN * U_H,
        L_H=MARGIN * L_H,
        U_g=MARGIN * U_g,
        U_H=MARGIN * U_H,
        f_low=f_low,
    )
    return pc, f0


def separable_quartic(
    name: str,
    d,
    beta,
    c0: float,
    x0,
    branch_coverage,
    coverage_config: SolverConfig,
) -> SuiteProblem:
    """Family f(x) = sum_i (d_i x_i^2 / 2 + beta_i x_i^4 / 4) + c0.

    Covers convex quadratics (beta = 0), bounded indefinite saddles
    (d_i < 0 with a confining quartic), and the separable double-well with
    its saddle at the origin.
    """
    d = np.asarray(d, dtype=float)
    beta = np.asarray(beta, dtype=float) * np.ones_like(d)
    x0 = np.asarray(x0, dtype=float)
    n = d.size
    pc, _ = _separable_quartic_constants(d, beta, c0, x0)

    def value(x: Array) -> float:
        return float(0.5 * d @ x**2 + 0.25 * beta @ x**4 + c0)

    def gradient(x: Array) -> Array:
        return d * x + beta * x**3

    def hessian_vector(x: Array, v: Array) -> Array:
        return (d + 3.0 * beta * x**2) * v

    def dense_hessian(x: Array) -> Array:
        return np.diag(d + 3.0 * beta * x**2)

    def factory() -> Objective:
        return Objective(
            n, value, gradient, hessian_vector, dense_hessian, constants=pc, name=name
        )

    x_star = np.where((d < 0.0) & (beta > 0.0), np.sqrt(np.maximum(-d, 0.0) / np.where(beta > 0, beta, 1.0)), 0.0)
    lam_star = float(np.min(d + 3.0 * beta * x_star**2))
    minimizer = KnownMinimizer(
        x=tuple(float(v) for v in x_star), f=pc.f_low, lam_min=lam_star
    )
    problem = SuiteProblem(
        name=name,
        dim=n,
        x0=tuple(float(v) for v in x0),
        constants=pc,
        known_minimizers=(minimizer,),
        branch_coverage=frozenset(branch_coverage),
        coverage_config=coverage_config,
        _factory=factory,
    )
    verify_constants(problem)
    return problem


def _rosenbrock_constants(n: int, a: float, x0: Array) -> ProblemConstants:
    """Box-certified level-set constants for the chained Rosenbrock function.

    On the level set every additive term is bounded by f(x0), which pins
    each coordinate into an interval; gradient and Hessian bounds follow
    from interval arithmetic, and the Hessian Lipschitz constant from the
    Frobenius norm of the third-derivative tensor over the box.
    """
    f0 = _rosenbrock_value(x0, a)
    s_b = math.sqrt(f0)
    r_b = math.sqrt(f0 / a)
    B = np.empty(n)
    B[: n - 1] = max(abs(1.0 - s_b), abs(1.0 + s_b))
    lo, hi = 1.0 - s_b, 1.0 + s_b
    sq_hi = max(lo * lo, hi * hi)
    sq_lo = 0.0 if lo <= 0.0 <= hi else min(lo * lo, hi * hi)
    B[n - 1] = max(abs(sq_lo - r_b), abs(sq_hi + r_b))

    g_bound = np.zeros(n)
    g_bound[: n - 1] += 4.0 * a * B[: n - 1] * r_b + 2.0 * s_b
    g_bound[1:] += 2.0 * a * r_b
    U_g = float(np.sqrt(np.sum(g_bound**2)))

    diag_bound = np.zeros(n)
    diag_bound[: n - 1] += 12.0 * a * B[: n - 1] ** 2 + 4.0 * a * B[1:] + 2.0
    diag_bound[1:] += 2.0 * a
    rowsum = diag_bound.copy()
    rowsum[: n - 1] += 4.0 * a * B[: n - 1]
    rowsum[1:] += 4.0 * a * B[: n - 1]
    U_H = float(np.max(rowsum))

    L_H = math.sqrt(float(np.sum((24.0 * a * B[: n - 1]) ** 2 + 3.0 * (4.0 * a) ** 2)))
    return ProblemConstants(
        L_g=MARGIN * U_H, L_H=MARGIN * L_H, U_g=MARGIN * U_g, U_H=MARGIN * U_H, f_low=0.0
    )


def _rosenbrock_value(x: Array, a: float) -> float:
    r = x[1:] - x[:-1] ** 2
    return float(a * np.sum(r**2) + np.sum((1.0 - x[:-1]) ** 2))


def _rosenbrock_gradient(x: Array, a: float) -> Array:
    g = np.zeros_like(x)
    r = x[1:] - x[:-1] ** 2
    g[:-1] = -4.0 * a * x[:-1] * r - 2.0 * (1.0 - x[:-1])
    g[1:] += 2.0 * a * r
    return g


def _rosenbrock_hessian(x: Array, a: float) -> Array:
    n = x.size
    H = np.zeros((n, n))
    for i in range(n - 1):
        H[i, i] += 12.0 * a * x[i] ** 2 - 4.0 * a * x[i + 1] + 2.0
        H[i, i + 1] += -4.0 * a * x[i]
        H[i + 1, i] += -4.0 * a * x[i]
        H[i + 1, i + 1] += 2.0 * a
    return H


def rosenbrock(
    name: str,
    n: int,
    x0,
    branch_coverage,
    coverage_config: SolverConfig,
    a: float = 100.0,
) -> SuiteProblem:
    """Chained Rosenbrock valley in n dimensions with factor ``a``."""
    x0 = np.asarray(x0, dtype=float)
    pc = _rosenbrock_constants(n, a, x0)

    def value(x: Array) -> float:
        return _rosenbrock_value(x, a)

    def gradient(x: Array) -> Array:
        return _rosenbrock_gradient(x, a)

    def dense_hessian(x: Array) -> Array:
        return _rosenbrock_hessian(x, a)

    def hessian_vector(x: Array, v: Array) -> Array:
        return _rosenbrock_hessian(x, a) @ v

    def factory() -> Objective:
        return Objective(
            n, value, gradient, hessian_vector, dense_hessian, constants=pc, name=name
        )

    ones = np.ones(n)
    lam_star = min_eigenpair_exact(_rosenbrock_hessian(ones, a)).lam
    problem = SuiteProblem(
        name=name,
        dim=n,
        x0=tuple(float(v) for v in x0),
        constants=pc,
        known_minimizers=(KnownMinimizer(x=tuple(ones), f=0.0, lam_min=lam_star),),
        branch_coverage=frozenset(branch_coverage),
        coverage_config=coverage_config,
        _factory=factory,
    )
    verify_constants(problem)
    return problem


def verify_constants(
    problem: SuiteProblem, n_points: int = 40, seed: int = 20240 , walk_scale: float = 0.15
) -> None:
    """Check the declared constants by sampling inside the level set.

    Points are generated by a random walk from the start point that only
    accepts moves staying in the level set, plus blends toward the known
    minimizer, so the check works in any dimension. Violations raise; the
    declared margins mean an honest declaration always passes.
    """
    obj = problem.make_objective()
    x0 = problem.start_point()
    f0 = obj.value(x0)
    pc = problem.constants
    rng = np.random.Generator(np.random.Philox(seed))

    points = [x0]
    x = x0.copy()
    scale = walk_scale * (1.0 + float(np.max(np.abs(x0))))
    for _ in range(4 * n_points):
        y = x + scale * rng.standard_normal(problem.dim)
        if obj.value(y) <= f0:
            points.append(y)
            x = y
        if len(points) >= n_points:
            break
    x_star = np.asarray(problem.known_minimizers[0].x)
    for t in (0.25, 0.5, 0.75, 1.0):
        y = x_star + t * (x0 - x_star)
        if obj.value(y) <= f0:
            points.append(y)

    hessians = [obj.dense_hessian(p) for p in points]
    for p, H in zip(points, hessians):
        f_p = obj.value(p)
        if f_p < pc.f_low - 1e-12:
            raise ConstantsError(f"{problem.name}: sampled f below declared f_low")
        gn = float(np.linalg.norm(obj.gradient(p)))
        if gn > pc.U_g:
            raise ConstantsError(
                f"{problem.name}: sampled gradient norm {gn:.6g} exceeds U_g {pc.U_g:.6g}"
            )
        hn = float(np.linalg.norm(H, 2))
        if hn > pc.U_H:
            raise ConstantsError(
                f"{problem.name}: sampled Hessian norm {hn:.6g} exceeds U_H {pc.U_H:.6g}"
            )
    for i in range(len(points) - 1):
        dx = float(np.linalg.norm(points[i + 1] - points[i]))
        if dx == 0.0:
            continue
        dh = float(np.linalg.norm(hessians[i + 1] - hessians[i], 2))
        if dh > pc.L_H * dx:
            raise ConstantsError(
                f"{problem.name}: sampled Hessian variation {dh / dx:.6g} exceeds "
                f"L_H {pc.L_H:.6g}"
            )


@functools.lru_cache(maxsize=1)
def _build_suite() -> tuple[SuiteProblem, ...]:
    cfg = SolverConfig  # shorthand for the per-problem coverage configs
    problems = (
        separable_quartic(
            "quad-convex-2d",
            d=[1.0, 2.0],
            beta=0.0,
            c0=0.0,
            x0=[1.0, 1.0],
            branch_coverage=[StepKind.NEWTON],
            coverage_config=cfg(eps_g=1e-6, eps_H=0.5),
        ),
        separable_quartic(
            "quad-convex-10d",
            d=np.logspace(0.0, 2.0, 10),
            beta=0.0,
            c0=0.0,
            x0=np.full(10, 0.8),
            branch_coverage=[StepKind.NEWTON],
            coverage_config=cfg(eps_g=1e-6, eps_H=0.5),
        ),
        separable_quartic(
            "quartic-saddle-2d",
            d=[-1.0, -1.0],
            beta=1.0,
            c0=0.5,
            x0=[0.0, 0.0],
            branch_coverage=[StepKind.NEGATIVE_CURVATURE],
            coverage_config=cfg(eps_g=1e-5, eps_H=0.1),
        ),
        separable_quartic(
            "quartic-offset-2d",
            d=[-1.0, -1.0],
            beta=1.0,
            c0=0.5,
            x0=[0.5, 0.4],
            branch_coverage=[StepKind.SCALED_NEG_CURV_GRADIENT, StepKind.NEWTON],
            coverage_config=cfg(eps_g=1e-5, eps_H=0.1),
        ),
        separable_quartic(
            "quartic-saddle-50d",
            d=np.full(50, -1.0),
            beta=1.0,
            c0=12.5,
            x0=np.zeros(50),
            branch_coverage=[StepKind.NEGATIVE_CURVATURE],
            coverage_config=cfg(eps_g=1e-4, eps_H=1e-2),
        ),
        separable_quartic(
            "quartic-convex-4d",
            d=np.ones(4),
            beta=1.0,
            c0=0.0,
            x0=np.full(4, 1.5),
            branch_coverage=[StepKind.NEWTON],
            coverage_config=cfg(eps_g=1e-3, eps_H=0.5),
        ),
        separable_quartic(
            "reg-newton-2d",
            d=[1.0, -0.05],
            beta=[0.0, 0.05],
            c0=0.0125,
            x0=[1.0, 0.9],
            branch_coverage=[StepKind.REGULARIZED_NEWTON],
            coverage_config=cfg(eps_g=1e-4, eps_H=0.5),
        ),
        separable_quartic(
            "flat-1d",
            d=[0.05],
            beta=0.0,
            c0=0.0,
            x0=[10.0],
            branch_coverage=[StepKind.NORMALIZED_GRADIENT],
            coverage_config=cfg(eps_g=1e-3, eps_H=0.1),
        ),
        rosenbrock(
            "rosenbrock-2d",
            n=2,
            x0=[-1.2, 1.0],
            branch_coverage=[StepKind.NEWTON],
            coverage_config=cfg(eps_g=1e-5, eps_H=1e-3),
        ),
        rosenbrock(
            "rosenbrock-10d",
            n=10,
            x0=[-1.2 if i % 2 == 0 else 1.0 for i in range(10)],
            branch_coverage=[StepKind.NEWTON],
            coverage_config=cfg(eps_g=1e-5, eps_H=1e-2),
        ),
    )
    return problems


def suite() -> list[SuiteProblem]:
    """The built-in problem set; constants are verified once at construction."""
    return list(_build_suite())


def problem_names() -> list[str]:
    return [p.name for p in suite()]


def get_problem(name: str) -> SuiteProblem:
    for p in suite():
        if p.name == name:
            return p
    raise KeyError(f"unknown problem {name!r}")
