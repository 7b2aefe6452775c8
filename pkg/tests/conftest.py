"""Shared fixtures: the run corpus and law-checking helpers."""

from __future__ import annotations

import math
from dataclasses import dataclass

import pytest

from sols import (
    DecreaseConstants,
    SolverConfig,
    StepKind,
    decrease_constants,
    run_exact,
    run_inexact,
    suite,
)

# Three solver configurations spanning loose and tight tolerances, distinct
# backtracking ratios, and distinct decrease weights. Every suite problem
# converges under each of them in both modes.
LAW_CONFIGS = (
    SolverConfig(eps_g=1e-4, eps_H=0.05, theta=0.5, eta=1.0, zeta=0.5, delta=1e-6),
    SolverConfig(
        eps_g=1e-5, eps_H=0.0031622776601683794, theta=0.7, eta=0.2, zeta=0.2, delta=1e-6
    ),
    SolverConfig(eps_g=1e-3, eps_H=0.3, theta=0.4, eta=2.0, zeta=0.8, delta=1e-6),
)


@dataclass(frozen=True)
class CorpusRun:
    problem: object
    cfg: SolverConfig
    mode: str
    report: object
    records: tuple


@pytest.fixture(scope="session")
def law_corpus() -> list[CorpusRun]:
    """Every suite problem under every law config, exact and inexact."""
    runs = []
    for problem in suite():
        for cfg in LAW_CONFIGS:
            for mode in ("exact", "inexact"):
                obj = problem.make_objective()
                if mode == "exact":
                    report, records = run_exact(obj, problem.start_point(), cfg)
                else:
                    report, records = run_inexact(obj, problem.start_point(), cfg)
                runs.append(CorpusRun(problem, cfg, mode, report, tuple(records)))
    return runs


def decrease_floor(row, dc: DecreaseConstants, cfg: SolverConfig) -> float:
    """The per-step guaranteed decrease for a trace row's direction kind."""
    kind = row.step_kind
    if kind in StepKind.CUBIC_CURVATURE:
        return dc.c_e * row.d_norm**3
    if kind == StepKind.NORMALIZED_GRADIENT:
        return dc.c_g * min(cfg.eps_g**3 * cfg.eps_H**-3, cfg.eps_g**1.5)
    if kind == StepKind.NEWTON:
        return dc.c_n * min(row.g_next_norm**1.5, cfg.eps_H**3)
    if kind == StepKind.REGULARIZED_NEWTON:
        return dc.c_r * min(row.g_next_norm**3 * cfg.eps_H**-3, cfg.eps_H**3)
    if kind == StepKind.INEXACT_NEWTON:
        return dc.c_in * min(row.g_next_norm**3 * cfg.eps_H**-3, cfg.eps_H**3)
    if kind == StepKind.INEXACT_REGULARIZED_NEWTON:
        return dc.c_ir * min(row.g_next_norm**3 * cfg.eps_H**-3, cfg.eps_H**3)
    raise ValueError(f"unknown step kind {kind!r}")


def constants_for(run: CorpusRun) -> DecreaseConstants:
    return decrease_constants(
        run.cfg.theta, run.cfg.eta, run.problem.constants.L_H, run.cfg.zeta
    )


def wilson_upper_zero(n: int, z: float = 3.0) -> float:
    """Wilson-interval upper bound on a proportion when zero events are seen."""
    return z * z / (n + z * z)


def wilson_slack(p: float, n: int, z: float = 3.0) -> float:
    return z * math.sqrt(p * (1.0 - p) / n) + z * z / (2.0 * n)
