"""Command-line harness: run solvers over seed grids and check envelopes."""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import json
import os
import sys
from dataclasses import fields
from pathlib import Path

from .driver import TRACE_COLUMNS, RunReport, run_exact, run_inexact
from .problems import get_problem, suite
from .steps import ConfigError, SolverConfig

DEFAULT_OUT_ENV = "SOLS_OUT_DIR"

_CONFIG_FIELD_TYPES = {f.name: f.type for f in fields(SolverConfig)}


def _parse_config_file(path: str) -> dict:
    """Flat key = value lines mirroring the SolverConfig field names."""
    values: dict = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_FIELD_TYPES:
            raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
        if key in ("max_iters", "max_ls_steps", "rng_seed"):
            values[key] = int(value)
        else:
            values[key] = float(value)
    return values


def _build_config(args: argparse.Namespace) -> SolverConfig:
    values: dict = {}
    if args.config:
        values.update(_parse_config_file(args.config))
    flag_map = {
        "eps_g": args.eps_g,
        "eps_H": args.eps_H,
        "theta": args.theta,
        "eta": args.eta,
        "zeta": args.zeta,
        "delta": args.delta,
        "U_H": args.U_H,
        "max_iters": args.max_iters,
        "max_ls_steps": args.max_ls_steps,
    }
    for key, val in flag_map.items():
        if val is not None:
            values[key] = val
    cfg = SolverConfig(**values)
    cfg.validate()
    return cfg


def _report_run_dict(report: RunReport, seed: int, trace_file: str) -> dict:
    cert = report.certificate
    env = report.envelope
    return {
        "seed": seed,
        "status": report.status,
        "iterations": report.iterations,
        "reentries": report.reentries,
        "fallback_count": report.fallback_count,
        "f_final": float(report.f_final),
        "g_norm_final": float(report.g_norm_final),
        "lambda_final": None if report.lambda_final is None else float(report.lambda_final),
        "x_final": [float(v) for v in report.x_final],
        "counters": {
            "n_f": report.counters.n_f,
            "n_grad": report.counters.n_grad,
            "n_hv": report.counters.n_hv,
        },
        "certificate": None
        if cert is None
        else {
            "g_norm_min": float(cert.g_norm_min),
            "lambda": float(cert.lam),
            "steps": cert.steps,
            "n_f": cert.counters.n_f,
            "n_grad": cert.counters.n_grad,
            "n_hv": cert.counters.n_hv,
            "point": [float(v) for v in cert.point],
        },
        "envelope": None
        if env is None
        else {
            "K_iter": env.K_iter,
            "K_eval": env.K_eval,
            "K_hat": env.K_hat,
            "ops_bound": env.ops_bound,
            "success_prob": env.success_prob,
            "max_term": env.max_term,
            "eval_log_term": env.eval_log_term,
            "eval_log_term_negative": env.eval_log_term_negative,
        },
        "envelope_checks": report.envelope_checks(),
        "final_point_second_order_ok": report.final_point_second_order_ok,
        "error": report.error,
        "trace_file": trace_file,
    }


def _run_one(
    problem_name: str, algo: str, cfg: SolverConfig, seed: int, strict: bool, out_dir: str
) -> dict:
    problem = get_problem(problem_name)
    obj = problem.make_objective()
    run_cfg = cfg.with_updates(rng_seed=seed)
    x0 = problem.start_point()
    if algo == "exact":
        report, records = run_exact(obj, x0, run_cfg, strict_second_order=strict)
    elif algo == "exact-local":
        report, records = run_exact(
            obj, x0, run_cfg, local_phase=True, strict_second_order=strict
        )
    elif algo == "inexact":
        report, records = run_inexact(obj, x0, run_cfg, strict_second_order=strict)
    else:
        raise ValueError(f"unknown algorithm {algo!r}")

    trace_name = f"{problem_name}_{algo}_seed{seed}_trace.csv"
    with open(Path(out_dir) / trace_name, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for rec in records:
            writer.writerow(rec.to_row())
    return _report_run_dict(report, seed, trace_name)


def cmd_run(args: argparse.Namespace) -> int:
    try:
        problem = get_problem(args.problem)
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return 2
    try:
        cfg = _build_config(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return 2

    seeds = args.seed
    out_dir = args.out or os.environ.get(DEFAULT_OUT_ENV, "sols-out")
    Path(out_dir).mkdir(parents=True, exist_ok=True)

    try:
        if args.jobs > 1 and len(seeds) > 1:
            with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
                futures = [
                    pool.submit(
                        _run_one, problem.name, args.algo, cfg, seed, args.strict_second_order, out_dir
                    )
                    for seed in seeds
                ]
                runs = [f.result() for f in futures]
        else:
            runs = [
                _run_one(problem.name, args.algo, cfg, seed, args.strict_second_order, out_dir)
                for seed in seeds
            ]
    except RuntimeError as exc:
        print(f"error: solver failure: {exc}", file=sys.stderr)
        return 3

    all_converged = all(r["status"] == "converged" for r in runs)
    all_envelopes = all(
        all(v for k, v in r["envelope_checks"].items() if k.endswith("_ok"))
        for r in runs
    )
    hard_errors = [r for r in runs if r["status"] in ("ls_stall", "cg_cap")]
    report = {
        "schema_version": 1,
        "problem": problem.name,
        "algo": args.algo,
        "strict_second_order": args.strict_second_order,
        "config": {f.name: getattr(cfg, f.name) for f in fields(SolverConfig)},
        "runs": runs,
        "all_converged": all_converged,
        "all_envelope_checks_passed": all_envelopes,
    }
    report_path = Path(out_dir) / f"{problem.name}_{args.algo}_report.json"
    report_path.write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")

    for r in runs:
        print(
            f"{problem.name} {args.algo} seed={r['seed']}: {r['status']} "
            f"iterations={r['iterations']} f={r['f_final']:.6g} "
            f"g_norm={r['g_norm_final']:.3e}"
        )
    print(f"report: {report_path}")
    if hard_errors:
        for r in hard_errors:
            print(f"error: seed {r['seed']}: {r['error']}", file=sys.stderr)
        return 3
    return 0 if (all_converged and all_envelopes) else 1


def _format_table(rows: list[list[str]], header: list[str]) -> str:
    widths = [len(h) for h in header]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(header)),
        "  ".join("-" * w for w in widths),
    ]
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
    return "\n".join(lines)


def cmd_envelope(args: argparse.Namespace) -> int:
    in_dir = Path(args.in_dir)
    report_files = sorted(in_dir.glob("*_report.json")) if in_dir.is_dir() else []
    if not report_files:
        print(f"error: no report files found in {args.in_dir!r}", file=sys.stderr)
        return 2

    rows = []
    for path in report_files:
        data = json.loads(path.read_text())
        for run in data["runs"]:
            checks = run["envelope_checks"]
            if not checks:
                rows.append(
                    [data["problem"], data["algo"], str(run["seed"]), run["status"]]
                    + ["-"] * 5
                )
                continue
            iter_bound = checks["iteration_bound"]
            ratio = checks["observed_iterations"] / iter_bound if iter_bound else 0.0
            if data["algo"] == "inexact":
                cost_obs, cost_bound = checks["observed_ops"], checks["ops_bound"]
                cost_label = "ops"
            else:
                cost_obs, cost_bound = checks["observed_f_evals"], checks["f_eval_bound"]
                cost_label = "f-evals"
            cost_ratio = cost_obs / cost_bound if cost_bound else 0.0
            ok = all(v for k, v in checks.items() if k.endswith("_ok"))
            rows.append(
                [
                    data["problem"],
                    data["algo"],
                    str(run["seed"]),
                    run["status"],
                    f"{checks['observed_iterations']}/{iter_bound:.3g}",
                    f"{ratio:.2e}",
                    f"{cost_obs}/{cost_bound:.3g} {cost_label}",
                    f"{cost_ratio:.2e}",
                    "ok" if ok else "VIOLATED",
                ]
            )
    header = [
        "problem",
        "algo",
        "seed",
        "status",
        "iters/bound",
        "ratio",
        "cost/bound",
        "ratio",
        "envelope",
    ]
    print(_format_table(rows, header))

    scaling_rows = []
    for path in report_files:
        data = json.loads(path.read_text())
        cfg = data["config"]
        env = next((r["envelope"] for r in data["runs"] if r["envelope"]), None)
        if env is None:
            continue
        scaling_rows.append(
            [
                data["problem"],
                data["algo"],
                f"{cfg['eps_g']:.3g}",
                f"{cfg['eps_H']:.3g}",
                f"{env['max_term']:.6g}",
                f"{env['K_iter']:.6g}",
                f"{env['K_hat']:.6g}",
            ]
        )
    if scaling_rows:
        print()
        print(
            _format_table(
                scaling_rows,
                ["problem", "algo", "eps_g", "eps_H", "max_term", "K_iter", "K_hat"],
            )
        )
    return 0


def cmd_list_problems(_args: argparse.Namespace) -> int:
    rows = [
        [p.name, str(p.dim), ", ".join(sorted(p.branch_coverage))]
        for p in suite()
    ]
    print(_format_table(rows, ["problem", "dim", "designed branch coverage"]))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sols",
        description="Second-order line-search solvers with decrease-law and "
        "complexity-envelope reporting.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a solver over a seed grid")
    run.add_argument("--problem", required=True, help="suite problem id")
    run.add_argument(
        "--algo", choices=("exact", "exact-local", "inexact"), default="exact"
    )
    run.add_argument("--eps-g", dest="eps_g", type=float, default=None)
    run.add_argument("--eps-H", dest="eps_H", type=float, default=None)
    run.add_argument("--theta", type=float, default=None)
    run.add_argument("--eta", type=float, default=None)
    run.add_argument("--zeta", type=float, default=None)
    run.add_argument("--delta", type=float, default=None)
    run.add_argument("--U-H", dest="U_H", type=float, default=None)
    run.add_argument("--max-iters", dest="max_iters", type=int, default=None)
    run.add_argument("--max-ls-steps", dest="max_ls_steps", type=int, default=None)
    run.add_argument(
        "--seed",
        type=lambda s: [int(v) for v in s.split(",") if v != ""],
        default=[0],
        help="comma-separated seed list",
    )
    run.add_argument("--strict-second-order", action="store_true")
    run.add_argument("--config", default=None, help="flat key=value config file")
    run.add_argument("--out", default=None, help=f"output dir (default ${DEFAULT_OUT_ENV})")
    run.add_argument("--jobs", type=int, default=1)
    run.set_defaults(func=cmd_run)

    env = sub.add_parser("envelope", help="summarize reports against their bounds")
    env.add_argument("--in", dest="in_dir", required=True)
    env.set_defaults(func=cmd_envelope)

    lp = sub.add_parser("list-problems", help="list suite problems")
    lp.set_defaults(func=cmd_list_problems)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
