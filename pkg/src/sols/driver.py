"""The solver loops: exact, exact with local phase, and inexact."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bounds import ComplexityEnvelope, iteration_envelope
from .cgsolve import CgCapError, solve_exact
from .eigen import min_eigenpair_exact
from .linesearch import LineSearchStallError, backtrack, max_ls_cap
from .operators import Array, EvalCounters, Objective
from .steps import (
    ConfigError,
    Direction,
    SolverConfig,
    StepKind,
    Terminate,
    select_direction_exact,
    select_direction_inexact,
)

SCHEMA_VERSION = 1

TRACE_COLUMNS = (
    "k",
    "phase",
    "step_kind",
    "f",
    "g_norm",
    "x_norm",
    "R",
    "lam",
    "d_norm",
    "j",
    "alpha",
    "decrease",
    "g_next_norm",
    "lanczos_iters",
    "cg_iters",
    "cg_fallback",
    "n_f",
    "n_grad",
    "n_hv",
)


@dataclass
class IterationRecord:
    """One accepted step of a run, with cumulative evaluation counts."""

    k: int
    phase: str  # "main" or "local"
    step_kind: str
    f: float
    g_norm: float
    x_norm: float
    R: float | None
    lam: float | None
    d_norm: float
    j: int
    alpha: float
    decrease: float
    g_next_norm: float
    lanczos_iters: int | None
    cg_iters: int | None
    cg_fallback: bool
    n_f: int
    n_grad: int
    n_hv: int

    def to_row(self) -> list[str]:
        out = []
        for name in TRACE_COLUMNS:
            v = getattr(self, name)
            if v is None:
                out.append("")
            elif isinstance(v, bool):
                out.append("1" if v else "0")
            elif isinstance(v, float):
                out.append(repr(v))
            else:
                out.append(str(v))
        return out


@dataclass
class Certificate:
    """The first iterate pair certified approximately second-order critical.

    ``lam`` is the eigenvalue estimate at ``point``; ``g_norm_min`` is the
    smaller gradient norm of the certified pair. ``steps`` and the counter
    snapshot freeze the cost at first satisfaction, which is what the
    complexity envelopes bound.
    """

    point: Array
    g_norm_min: float
    lam: float
    steps: int
    counters: EvalCounters


@dataclass
class RunReport:
    """Summary of one solver run."""

    status: str  # "converged", "max_iters", "ls_stall", or "cg_cap"
    algo: str
    x_final: Array
    f_final: float
    g_norm_final: float
    lambda_final: float | None
    iterations: int
    reentries: int
    fallback_count: int
    counters: EvalCounters
    certificate: Certificate | None
    envelope: ComplexityEnvelope | None
    final_point_second_order_ok: bool | None = None
    error: str | None = None

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def envelope_checks(self) -> dict:
        """Observed-versus-bound numbers for the run, empty without constants."""
        if self.envelope is None or self.certificate is None:
            return {}
        env = self.envelope
        cert = self.certificate
        if self.algo == "inexact":
            return {
                "observed_iterations": cert.steps,
                "iteration_bound": env.K_hat,
                "iterations_ok": cert.steps <= env.K_hat,
                "observed_ops": cert.counters.grad_plus_hv,
                "ops_bound": env.ops_bound,
                "ops_ok": cert.counters.grad_plus_hv <= env.ops_bound,
            }
        return {
            "observed_iterations": cert.steps,
            "iteration_bound": env.K_iter,
            "iterations_ok": cert.steps <= env.K_iter,
            "observed_f_evals": cert.counters.n_f,
            "f_eval_bound": env.K_eval,
            "f_evals_ok": cert.counters.n_f <= env.K_eval,
        }

    def all_envelope_checks_pass(self) -> bool:
        checks = self.envelope_checks()
        return all(v for k, v in checks.items() if k.endswith("_ok"))


@dataclass
class LocalPhaseResult:
    outcome: str  # "reenter", "converged", or "max_iters"
    x: Array
    f: float
    g: Array
    steps: int
    records: list[IterationRecord] = field(default_factory=list)


def check_termination(
    g_norm: float,
    g_next_norm: float | None,
    lambda_estimate: float,
    cfg: SolverConfig,
    mode: str = "exact",
) -> bool:
    """Approximate second-order criticality at the current iterate pair.

    Exact mode accepts eigenvalue estimates down to -eps_H; the inexact
    mode tightens the eigenvalue threshold to -eps_H/2 so that the
    estimator's eps_H/2 slack still certifies -eps_H. Both inequalities
    are closed.
    """
    if mode not in ("exact", "inexact"):
        raise ValueError(f"unknown mode {mode!r}")
    gmin = g_norm if g_next_norm is None else min(g_norm, g_next_norm)
    floor = -cfg.eps_H if mode == "exact" else -0.5 * cfg.eps_H
    return gmin <= cfg.eps_g and lambda_estimate >= floor


def local_phase_floor(cfg: SolverConfig) -> float:
    # The local loop as stated never stops; a finite artifact needs a hard
    # gradient floor far below eps_g so complexity accounting is unaffected.
    return max(1e-14, cfg.eps_g * 1e-6)


def _require_finite(f_x: float, where: str) -> None:
    if not np.isfinite(f_x):
        raise ValueError(f"objective is not finite at {where}")


def _check_ls_budget(obj: Objective, cfg: SolverConfig, inexact: bool) -> None:
    if obj.constants is None:
        return
    need = max_ls_cap(obj.constants, cfg, inexact=inexact)
    if cfg.max_ls_steps < need:
        raise ConfigError(
            f"max_ls_steps={cfg.max_ls_steps} is below the backtracking cap "
            f"{need} implied by the declared constants"
        )


def _make_record(
    k: int,
    phase: str,
    sel: Direction,
    x: Array,
    f_x: float,
    g_norm: float,
    res,
    g_next_norm: float,
    counters: EvalCounters,
) -> IterationRecord:
    return IterationRecord(
        k=k,
        phase=phase,
        step_kind=sel.kind,
        f=float(f_x),
        g_norm=float(g_norm),
        x_norm=float(np.linalg.norm(x)),
        R=None if sel.R is None else float(sel.R),
        lam=None if sel.lam is None else float(sel.lam),
        d_norm=float(np.linalg.norm(sel.d)),
        j=res.j,
        alpha=float(res.alpha),
        decrease=float(res.decrease),
        g_next_norm=float(g_next_norm),
        lanczos_iters=sel.lanczos_iters,
        cg_iters=sel.cg_iters,
        cg_fallback=sel.cg_fallback,
        n_f=counters.n_f,
        n_grad=counters.n_grad,
        n_hv=counters.n_hv,
    )


def run_local_phase(
    obj: Objective,
    x: Array,
    g: Array,
    f_x: float,
    cfg: SolverConfig,
    max_steps: int,
    k_start: int = 0,
    trace_sink=None,
) -> LocalPhaseResult:
    """Newton-dominant loop entered from a certified iterate.

    Hands control back to the main loop as soon as the gradient grows past
    eps_g or significant negative curvature reappears; otherwise takes
    (regularized) Newton steps until the gradient falls below the hard
    floor. The eigenvalue interval (-eps_H, 0] selects the regularized
    system; any strictly positive eigenvalue selects the plain one.
    """
    records: list[IterationRecord] = []
    floor = local_phase_floor(cfg)
    steps = 0
    k = k_start
    while True:
        g_norm = float(np.linalg.norm(g))
        if g_norm <= floor:
            return LocalPhaseResult("converged", x, f_x, g, steps, records)
        if g_norm > cfg.eps_g:
            return LocalPhaseResult("reenter", x, f_x, g, steps, records)
        if steps >= max_steps:
            return LocalPhaseResult("max_iters", x, f_x, g, steps, records)
        H = obj.dense_hessian(x)
        est = min_eigenpair_exact(H)
        if est.lam < -cfg.eps_H:
            return LocalPhaseResult("reenter", x, f_x, g, steps, records)
        if -cfg.eps_H < est.lam <= 0.0:
            sel = Direction(
                StepKind.REGULARIZED_NEWTON, solve_exact(H, g, 2.0 * cfg.eps_H), lam=est.lam
            )
        else:
            sel = Direction(StepKind.NEWTON, solve_exact(H, g, 0.0), lam=est.lam)
        res = backtrack(obj, x, f_x, sel.d, cfg, kind=sel.kind)
        x_next = x + res.alpha * sel.d
        g_next = obj.gradient(x_next)
        steps += 1
        rec = _make_record(
            k, "local", sel, x, f_x, g_norm, res, float(np.linalg.norm(g_next)),
            obj.counters,
        )
        records.append(rec)
        if trace_sink is not None:
            trace_sink(rec)
        k += 1
        x, f_x, g = x_next, res.f_new, g_next


def _run_loop(
    obj: Objective,
    x0: Array,
    cfg: SolverConfig,
    algo: str,
    select,
    mode: str,
    local_phase: bool,
    strict_second_order: bool,
    trace_sink,
) -> tuple[RunReport, list[IterationRecord]]:
    cfg.validate()
    _check_ls_budget(obj, cfg, inexact=(mode == "inexact"))
    x = np.asarray(x0, dtype=float)
    f_x = obj.value(x)
    _require_finite(f_x, "the start point")
    f0 = f_x
    g = obj.gradient(x)

    records: list[IterationRecord] = []
    steps_taken = 0
    reentries = 0
    fallback_count = 0
    cert: Certificate | None = None
    status = "max_iters"
    final_lam: float | None = None
    error_msg: str | None = None
    k = 0
    newton_kinds = (
        (StepKind.NEWTON, StepKind.REGULARIZED_NEWTON)
        if mode == "exact"
        else (StepKind.INEXACT_NEWTON, StepKind.INEXACT_REGULARIZED_NEWTON)
    )

    def certify(point: Array, g_norm_min: float, lam: float) -> None:
        nonlocal cert
        if cert is None:
            cert = Certificate(
                point=point.copy(),
                g_norm_min=float(g_norm_min),
                lam=float(lam),
                steps=steps_taken,
                counters=obj.counters.snapshot(),
            )

    try:
        while True:
            if steps_taken >= cfg.max_iters:
                status = "max_iters"
                break
            sel = select(x, g)
            if isinstance(sel, Terminate):
                final_lam = sel.lam
                certify(x, np.linalg.norm(g), sel.lam)
                if local_phase:
                    lp = run_local_phase(
                        obj, x, g, f_x, cfg, cfg.max_iters - steps_taken, k, trace_sink
                    )
                    records.extend(lp.records)
                    k += lp.steps
                    steps_taken += lp.steps
                    x, f_x, g = lp.x, lp.f, lp.g
                    if lp.outcome == "reenter":
                        reentries += 1
                        continue
                    status = "converged" if lp.outcome == "converged" else "max_iters"
                    break
                status = "converged"
                break

            if sel.cg_fallback:
                fallback_count += 1
            g_norm = float(np.linalg.norm(g))
            res = backtrack(obj, x, f_x, sel.d, cfg, kind=sel.kind)
            x_next = x + res.alpha * sel.d
            g_next = obj.gradient(x_next)
            g_next_norm = float(np.linalg.norm(g_next))
            steps_taken += 1
            rec = _make_record(
                k, "main", sel, x, f_x, g_norm, res, g_next_norm, obj.counters
            )
            records.append(rec)
            if trace_sink is not None:
                trace_sink(rec)
            k += 1

            post_ls_stop = (
                not strict_second_order
                and sel.kind in newton_kinds
                and check_termination(g_next_norm, None, sel.lam, cfg, mode)
            )
            x_prev, g_norm_prev = x, g_norm
            x, f_x, g = x_next, res.f_new, g_next
            if post_ls_stop:
                final_lam = sel.lam
                certify(x_prev, min(g_norm_prev, g_next_norm), sel.lam)
                if local_phase:
                    lp = run_local_phase(
                        obj, x, g, f_x, cfg, cfg.max_iters - steps_taken, k, trace_sink
                    )
                    records.extend(lp.records)
                    k += lp.steps
                    steps_taken += lp.steps
                    x, f_x, g = lp.x, lp.f, lp.g
                    if lp.outcome == "reenter":
                        reentries += 1
                        continue
                    status = "converged" if lp.outcome == "converged" else "max_iters"
                    break
                status = "converged"
                break
    except LineSearchStallError as exc:
        status = "ls_stall"
        error_msg = str(exc)
    except CgCapError as exc:
        status = "cg_cap"
        error_msg = str(exc)

    envelope = None
    if obj.constants is not None:
        envelope = iteration_envelope(obj.constants, cfg, f0, obj.dim)

    second_order_ok = None
    if status == "converged" and mode == "exact" and obj.has_dense_hessian:
        # One extra eigenvalue check classifies whether the final point
        # itself satisfies the pointwise second-order condition.
        est = min_eigenpair_exact(obj.dense_hessian(x))
        second_order_ok = bool(
            est.lam >= -cfg.eps_H and float(np.linalg.norm(g)) <= cfg.eps_g
        )

    report = RunReport(
        status=status,
        algo=algo,
        x_final=x,
        f_final=float(f_x),
        g_norm_final=float(np.linalg.norm(g)),
        lambda_final=final_lam,
        iterations=steps_taken,
        reentries=reentries,
        fallback_count=fallback_count,
        counters=obj.counters.snapshot(),
        certificate=cert,
        envelope=envelope,
        final_point_second_order_ok=second_order_ok,
        error=error_msg,
    )
    return report, records


def run_exact(
    obj: Objective,
    x0: Array,
    cfg: SolverConfig,
    local_phase: bool = False,
    strict_second_order: bool = False,
    trace_sink=None,
    eig=None,
    newton=None,
) -> tuple[RunReport, list[IterationRecord]]:
    """Minimize with exact eigenpair and linear-system computations.

    Terminates at the first certified iterate pair: either the
    second-order branch certifies the current iterate directly, or a
    (regularized) Newton step lands the next gradient below eps_g while
    the current Hessian is certified. With ``local_phase`` the run
    continues in the quadratically convergent Newton loop instead of
    stopping. ``strict_second_order`` disables the post-line-search stop
    so termination always happens at a pointwise certified iterate.
    """

    def select(x, g):
        return select_direction_exact(obj, x, g, cfg, eig=eig, newton=newton)

    algo = "exact-local" if local_phase else "exact"
    return _run_loop(
        obj, x0, cfg, algo, select, "exact", local_phase, strict_second_order, trace_sink
    )


def run_inexact(
    obj: Objective,
    x0: Array,
    cfg: SolverConfig,
    strict_second_order: bool = False,
    trace_sink=None,
    lanczos=None,
    cg=None,
) -> tuple[RunReport, list[IterationRecord]]:
    """Minimize matrix-free, with randomized eigenvalue estimates and CG solves.

    Needs only Hessian-vector products. The Hessian-norm bound comes from
    the config when set, else from the problem constants. There is no
    local phase on this path.
    """
    U_H = cfg.U_H
    if U_H is None:
        if obj.constants is None:
            raise ConfigError(
                "the inexact loop needs a Hessian-norm bound: set cfg.U_H or "
                "declare problem constants"
            )
        U_H = obj.constants.U_H
    rng = np.random.Generator(np.random.Philox(cfg.rng_seed))

    def select(x, g):
        return select_direction_inexact(
            obj, x, g, cfg, rng, U_H, lanczos=lanczos, cg=cg
        )

    return _run_loop(
        obj, x0, cfg, "inexact", select, "inexact", False, strict_second_order, trace_sink
    )
