"""Command-line harness: simulate, predict, compare, sweep.

Outputs are machine-readable CSV or JSON with versioned schemas and no
timestamps, so identical invocations with identical seeds produce
byte-identical files.  CSV files start with a ``# key=value`` comment
block echoing the effective configuration; JSON documents carry the
same echo under ``"config"``.  Numbers are written with 17 significant
digits ('.' decimal separator, no locale dependence), which round-trips
every double exactly.

Flag values take precedence over a ``--config`` JSON file, which takes
precedence over built-in defaults.

Exit codes: 0 success, 1 invariant/agreement failure, 2 usage or
validation error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from .analytic import (
    CLOSED_FORM,
    NUMERIC_SCAN,
    ClosedFormSolution,
    MeasurementPlan,
    optimal_time,
    optimal_time_approx,
    optimal_time_numeric,
    reconstruct,
    solve,
    solve_summary,
    success_probability_analytic,
)
from .core import (
    AmplitudeState,
    SearchConfig,
    SummaryStats,
    run,
    success_probability,
    summary_stats,
)
from .distributions import KINDS, RNG_ALGORITHM, DistributionSpec, generate, ingest
from .errors import GroverSimError, ValidationError

SERIES_SCHEMA = "groversim-series-v1"
COMPARE_SCHEMA = "groversim-compare-v1"
PLAN_SCHEMA = "groversim-plan-v1"
SWEEP_SCHEMA = "groversim-sweep-v1"

SERIES_HEADER = "t,kbar_re,kbar_im,lbar_re,lbar_im,p,norm"
COMPARE_HEADER = "t,p_iter,p_analytic,amp_dev,p_dev"
PREDICT_HEADER = "j,t_real,t_step,predicted_success,method"
SWEEP_HEADER = "n,r,dist,seed,method,t_exact,t_step,t_approx,t_scan,p_scan,p_max,status,error"

DEFAULT_TOL = 1e-10


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _cpair(z: complex) -> list[float]:
    return [z.real, z.imag]


def _parse_int_list(text: str, flag: str) -> list[int]:
    try:
        return [int(part) for part in str(text).split(",") if part != ""]
    except ValueError as exc:
        raise ValidationError(f"{flag} expects a comma-separated integer list") from exc


def _parse_complex(text: Any, flag: str) -> complex:
    if isinstance(text, (int, float, complex)):
        return complex(text)
    try:
        return complex(str(text).replace(" ", ""))
    except ValueError as exc:
        raise ValidationError(
            f"{flag} expects a real or complex number such as 0.5 or 0.5+0.1j"
        ) from exc


def _parse_seed_list(text: Any) -> list[int]:
    """Either a comma list ('0,1,5') or an inclusive-exclusive range ('0:8')."""
    text = str(text)
    if ":" in text:
        start_s, stop_s = text.split(":", 1)
        try:
            start, stop = int(start_s), int(stop_s)
        except ValueError as exc:
            raise ValidationError("--seeds range must look like start:stop") from exc
        if stop <= start:
            raise ValidationError("--seeds range must be non-empty")
        return list(range(start, stop))
    return _parse_int_list(text, "--seeds")


# -- configuration resolution -------------------------------------------------


def _load_file_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed config file: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValidationError("config file must hold a JSON object")
    return doc


class _Resolver:
    """flags > config file > defaults, with the effective values recorded."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.file_config = _load_file_config(getattr(args, "config", None))

    def get(self, key: str, default: Any = None) -> Any:
        value = getattr(self.args, key, None)
        if value is not None:
            return value
        if key in self.file_config:
            return self.file_config[key]
        return default

    def flag(self, key: str) -> bool:
        return bool(getattr(self.args, key, False) or self.file_config.get(key, False))


# -- problem setup --------------------------------------------------------------


def _resolve_marked(n: int, marked_text: Optional[str], r: Optional[int]) -> tuple[int, ...]:
    if marked_text is not None:
        marked = tuple(_parse_int_list(marked_text, "--marked"))
        if r is not None and len(marked) != int(r):
            raise ValidationError(
                f"--r {r} disagrees with --marked (got {len(marked)} indices)"
            )
        return marked
    if r is None:
        raise ValidationError("either --marked or --r is required")
    return tuple(range(int(r)))


@dataclass
class _Problem:
    state: AmplitudeState
    echo: dict[str, Any]
    seed: int


def _build_problem(res: _Resolver) -> _Problem:
    seed = int(res.get("seed", 0))
    allow_large_r = res.flag("allow_large_r")
    state_path = res.get("state")
    if state_path is not None:
        if res.get("dist") is not None:
            raise ValidationError("--state and --dist are mutually exclusive")
        state = ingest(
            state_path,
            renormalize=res.flag("renormalize"),
            allow_large_r=allow_large_r,
        )
        echo = {
            "n": state.config.n,
            "r": state.config.r,
            "marked": list(state.config.marked),
            "state": str(state_path),
            "seed": seed,
            "renormalize": res.flag("renormalize"),
            "allow_large_r": allow_large_r,
        }
        return _Problem(state, echo, seed)

    n = res.get("n")
    if n is None:
        raise ValidationError("--n is required unless --state is given")
    n = int(n)
    marked = _resolve_marked(n, res.get("marked"), res.get("r"))
    dist = res.get("dist")
    if dist is None:
        raise ValidationError("--dist is required unless --state is given")
    config = SearchConfig(n, marked, allow_large_r=allow_large_r)
    spec = DistributionSpec(
        kind=str(dist),
        config=config,
        seed=seed,
        delta_index=res.get("delta_index"),
        gaussian_center=res.get("gaussian_center"),
        gaussian_spread=res.get("gaussian_spread"),
    )
    state = generate(spec)
    echo = {
        "n": n,
        "r": config.r,
        "marked": list(config.marked),
        "dist": str(dist),
        "seed": seed,
        "rng": RNG_ALGORITHM,
        "allow_large_r": allow_large_r,
    }
    for key in ("delta_index", "gaussian_center", "gaussian_spread"):
        if res.get(key) is not None:
            echo[key] = res.get(key)
    return _Problem(state, echo, seed)


def _plan_for(sol: ClosedFormSolution, j: int = 0) -> MeasurementPlan:
    if sol.real_ratio:
        return optimal_time(sol, j)
    return optimal_time_numeric(sol)


def _plan_dict(plan: MeasurementPlan) -> dict[str, Any]:
    return {
        "j": plan.j,
        "t_real": plan.t_real,
        "t_step": plan.t_step,
        "predicted_success": plan.predicted_success,
        "method": plan.method,
    }


# -- output ----------------------------------------------------------------------


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _comment_block(schema: str, echo: dict[str, Any]) -> list[str]:
    lines = [f"# {schema}"]
    for key in sorted(echo):
        lines.append(f"# {key}={echo[key]}")
    return lines


def _json_text(doc: dict) -> str:
    return json.dumps(doc, indent=2) + "\n"


@dataclass
class RunRecord:
    """One simulation/comparison result: config echo, per-step series,
    measurement plan, and (for compare) engine-agreement metrics."""

    schema: str
    command: str
    config: dict[str, Any]
    series: list[dict[str, Any]]
    plan: Optional[dict[str, Any]] = None
    agreement: Optional[dict[str, Any]] = None
    sampled_index: Optional[int] = None

    def to_doc(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "schema": self.schema,
            "command": self.command,
            "config": self.config,
            "series": self.series,
            "plan": self.plan,
        }
        if self.agreement is not None:
            doc["agreement"] = self.agreement
        if self.sampled_index is not None:
            doc["sampled_index"] = self.sampled_index
        return doc


# -- simulate ----------------------------------------------------------------------


def _series_row(t: int, state: AmplitudeState) -> dict[str, Any]:
    stats = summary_stats(state)
    return {
        "t": t,
        "kbar": _cpair(stats.kbar),
        "lbar": _cpair(stats.lbar),
        "p": success_probability(state),
        "norm": state.norm(),
    }


def _collect_series(
    state: AmplitudeState, steps: int
) -> tuple[list[dict[str, Any]], AmplitudeState]:
    series = [_series_row(0, state)]
    current = state
    for t in range(1, steps + 1):
        current = run(current, 1)
        series.append(_series_row(t, current))
    return series, current


def cmd_simulate(args: argparse.Namespace) -> int:
    res = _Resolver(args)
    problem = _build_problem(res)
    steps = res.get("steps")
    if steps is None:
        raise ValidationError("--steps is required")
    steps = int(steps)
    if steps < 0:
        raise ValidationError("--steps must be non-negative")

    series, final = _collect_series(problem.state, steps)
    sol = solve(problem.state)
    plan = _plan_for(sol)

    echo = dict(problem.echo)
    echo["steps"] = steps
    record = RunRecord(
        schema=SERIES_SCHEMA,
        command="simulate",
        config=echo,
        series=series,
        plan=_plan_dict(plan),
    )
    if res.flag("sample"):
        rng = np.random.default_rng(problem.seed)
        probs = np.abs(final.amplitudes) ** 2
        probs /= probs.sum()
        record.sampled_index = int(rng.choice(final.config.n, p=probs))

    fmt = str(res.get("format", "csv"))
    if fmt == "json":
        _emit(_json_text(record.to_doc()), res.get("out"))
    else:
        lines = _comment_block(SERIES_SCHEMA, echo)
        for key, value in sorted(record.plan.items()):
            lines.append(f"# plan_{key}={value}")
        if record.sampled_index is not None:
            lines.append(f"# sampled_index={record.sampled_index}")
        lines.append(SERIES_HEADER)
        for row in series:
            lines.append(
                ",".join(
                    [
                        str(row["t"]),
                        _fmt(row["kbar"][0]),
                        _fmt(row["kbar"][1]),
                        _fmt(row["lbar"][0]),
                        _fmt(row["lbar"][1]),
                        _fmt(row["p"]),
                        _fmt(row["norm"]),
                    ]
                )
            )
        _emit("\n".join(lines) + "\n", res.get("out"))
    return 0


# -- predict -------------------------------------------------------------------------


def _solution_summary(sol: ClosedFormSolution) -> dict[str, Any]:
    return {
        "n": sol.n,
        "r": sol.r,
        "omega": sol.omega,
        "phi": sol.phi,
        "alpha": _cpair(sol.alpha) if sol.alpha is not None else None,
        "beta": _cpair(sol.beta) if sol.beta is not None else None,
        "p_max": sol.p_max,
        "kbar0": _cpair(sol.kbar0),
        "lbar0": _cpair(sol.lbar0),
        "sigma_l_sq": sol.sigma_l_sq,
    }


def cmd_predict(args: argparse.Namespace) -> int:
    res = _Resolver(args)
    scalar_keys = ("kbar0", "lbar0", "sigma_l_sq")
    scalar_given = any(res.get(k) is not None for k in scalar_keys)

    if scalar_given:
        if res.get("state") is not None or res.get("dist") is not None:
            raise ValidationError(
                "scalar inputs (--kbar0/--lbar0/--sigma-l-sq) exclude --state/--dist"
            )
        missing = [k for k in scalar_keys if res.get(k) is None]
        if missing or res.get("n") is None or res.get("r") is None:
            raise ValidationError(
                "scalar mode needs --kbar0, --lbar0, --sigma-l-sq, --n and --r"
            )
        kbar0 = _parse_complex(res.get("kbar0"), "--kbar0")
        lbar0 = _parse_complex(res.get("lbar0"), "--lbar0")
        sigma_l_sq = float(res.get("sigma_l_sq"))
        n, r = int(res.get("n")), int(res.get("r"))
        sol = solve_summary(n, r, SummaryStats(kbar0, lbar0, 0.0, sigma_l_sq))
        echo = {
            "n": n,
            "r": r,
            "kbar0": str(res.get("kbar0")),
            "lbar0": str(res.get("lbar0")),
            "sigma_l_sq": sigma_l_sq,
            "mode": "scalar",
        }
    else:
        problem = _build_problem(res)
        sol = solve(problem.state)
        echo = dict(problem.echo)
        echo["mode"] = "state"

    if sol.real_ratio:
        js = _parse_int_list(res.get("j", "0"), "--j")
        if any(j < 0 for j in js):
            raise ValidationError("--j entries must be non-negative")
        plans = [optimal_time(sol, j) for j in js]
        method = CLOSED_FORM
    else:
        plans = [optimal_time_numeric(sol)]
        method = NUMERIC_SCAN

    doc = {
        "schema": PLAN_SCHEMA,
        "command": "predict",
        "config": echo,
        "solution": _solution_summary(sol),
        "method": method,
        "plans": [_plan_dict(p) for p in plans],
    }

    fmt = str(res.get("format", "csv"))
    if fmt == "json":
        _emit(_json_text(doc), res.get("out"))
    else:
        block = dict(echo)
        summary = _solution_summary(sol)
        for key in ("omega", "p_max", "sigma_l_sq"):
            block[key] = _fmt(summary[key])
        block["phi"] = "" if sol.phi is None else _fmt(sol.phi)
        for name in ("alpha", "beta", "kbar0", "lbar0"):
            pair = summary[name]
            block[f"{name}_re"] = "" if pair is None else _fmt(pair[0])
            block[f"{name}_im"] = "" if pair is None else _fmt(pair[1])
        block["method"] = method
        lines = _comment_block(PLAN_SCHEMA, block)
        lines.append(PREDICT_HEADER)
        for plan in plans:
            lines.append(
                ",".join(
                    [
                        str(plan.j),
                        _fmt(plan.t_real),
                        str(plan.t_step),
                        _fmt(plan.predicted_success),
                        plan.method,
                    ]
                )
            )
        _emit("\n".join(lines) + "\n", res.get("out"))
    return 0


# -- compare --------------------------------------------------------------------------


def cmd_compare(args: argparse.Namespace) -> int:
    res = _Resolver(args)
    problem = _build_problem(res)
    steps = res.get("steps")
    if steps is None:
        raise ValidationError("--steps is required")
    steps = int(steps)
    tol = float(res.get("tol", DEFAULT_TOL))

    sol = solve(problem.state)
    current = problem.state
    rows = []
    max_amp_dev = 0.0
    max_p_dev = 0.0
    for t in range(steps + 1):
        if t > 0:
            current = run(current, 1)
        rebuilt = reconstruct(sol, t)
        amp_dev = float(np.max(np.abs(rebuilt.amplitudes - current.amplitudes)))
        p_iter = success_probability(current)
        p_analytic = success_probability_analytic(sol, t)
        p_dev = abs(p_iter - p_analytic)
        max_amp_dev = max(max_amp_dev, amp_dev)
        max_p_dev = max(max_p_dev, p_dev)
        rows.append(
            {"t": t, "p_iter": p_iter, "p_analytic": p_analytic,
             "amp_dev": amp_dev, "p_dev": p_dev}
        )

    within = max_amp_dev <= tol and max_p_dev <= tol
    agreement = {
        "max_amplitude_deviation": max_amp_dev,
        "max_probability_deviation": max_p_dev,
        "tol": tol,
        "within_tol": within,
    }
    echo = dict(problem.echo)
    echo["steps"] = steps
    echo["tol"] = tol
    record = RunRecord(
        schema=COMPARE_SCHEMA,
        command="compare",
        config=echo,
        series=rows,
        plan=_plan_dict(_plan_for(sol)),
        agreement=agreement,
    )

    fmt = str(res.get("format", "csv"))
    if fmt == "json":
        _emit(_json_text(record.to_doc()), res.get("out"))
    else:
        lines = _comment_block(COMPARE_SCHEMA, echo)
        for key, value in sorted(agreement.items()):
            value = _fmt(value) if isinstance(value, float) else value
            lines.append(f"# {key}={value}")
        lines.append(COMPARE_HEADER)
        for row in rows:
            lines.append(
                ",".join(
                    [
                        str(row["t"]),
                        _fmt(row["p_iter"]),
                        _fmt(row["p_analytic"]),
                        _fmt(row["amp_dev"]),
                        _fmt(row["p_dev"]),
                    ]
                )
            )
        _emit("\n".join(lines) + "\n", res.get("out"))

    if not within:
        print(
            f"engine disagreement: max amplitude deviation {max_amp_dev:.3e}, "
            f"max probability deviation {max_p_dev:.3e}, tol {tol:g}",
            file=sys.stderr,
        )
        return 1
    return 0


# -- sweep -----------------------------------------------------------------------------


def _sweep_cell(n: int, r: int, dist: str, seed: int, allow_large_r: bool) -> dict[str, Any]:
    row: dict[str, Any] = {
        "n": n, "r": r, "dist": dist, "seed": seed,
        "method": "", "t_exact": "", "t_step": "", "t_approx": "",
        "t_scan": "", "p_scan": "", "p_max": "",
        "status": "ok", "error": "",
    }
    try:
        config = SearchConfig(n, tuple(range(r)), allow_large_r=allow_large_r)
        state = generate(DistributionSpec(kind=dist, config=config, seed=seed))
        sol = solve(state)
        row["p_max"] = sol.p_max
        if sol.real_ratio:
            row["method"] = CLOSED_FORM
            plan = optimal_time(sol, 0)
            row["t_exact"] = plan.t_real
            row["t_step"] = plan.t_step
            if sol.lbar0 != 0:
                row["t_approx"] = optimal_time_approx(sol)
        else:
            row["method"] = NUMERIC_SCAN
        scan = optimal_time_numeric(sol)
        row["t_scan"] = scan.t_step
        row["p_scan"] = scan.predicted_success
    except GroverSimError as exc:
        row["status"] = "error"
        row["error"] = str(exc).replace(",", ";").replace("\n", " ")
    return row


def cmd_sweep(args: argparse.Namespace) -> int:
    res = _Resolver(args)
    if res.get("n") is None or res.get("r") is None:
        raise ValidationError("--n and --r grids are required")
    ns = _parse_int_list(res.get("n"), "--n")
    rs = _parse_int_list(res.get("r"), "--r")
    dists = [d for d in str(res.get("dist", "uniform")).split(",") if d]
    for dist in dists:
        if dist not in KINDS:
            raise ValidationError(f"unknown distribution kind {dist!r}")
    seeds = _parse_seed_list(res.get("seeds", "0"))
    allow_large_r = res.flag("allow_large_r")
    jobs = int(res.get("jobs", 1))

    cells = [
        (n, r, dist, seed)
        for n in ns
        for r in rs
        for dist in dists
        for seed in seeds
    ]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(
                pool.map(lambda c: _sweep_cell(*c, allow_large_r), cells)
            )
    else:
        rows = [_sweep_cell(*cell, allow_large_r) for cell in cells]

    echo = {
        "n": ",".join(map(str, ns)),
        "r": ",".join(map(str, rs)),
        "dist": ",".join(dists),
        "seeds": ",".join(map(str, seeds)),
        "rng": RNG_ALGORITHM,
        "allow_large_r": allow_large_r,
    }
    failed = sum(1 for row in rows if row["status"] != "ok")

    fmt = str(res.get("format", "csv"))
    if fmt == "json":
        doc = {
            "schema": SWEEP_SCHEMA,
            "command": "sweep",
            "config": echo,
            "rows": rows,
            "failed_rows": failed,
        }
        _emit(_json_text(doc), res.get("out"))
    else:
        lines = _comment_block(SWEEP_SCHEMA, echo)
        lines.append(f"# failed_rows={failed}")
        lines.append(SWEEP_HEADER)
        for row in rows:
            cells_out = []
            for key in SWEEP_HEADER.split(","):
                value = row[key]
                cells_out.append(_fmt(value) if isinstance(value, float) else str(value))
            lines.append(",".join(cells_out))
        _emit("\n".join(lines) + "\n", res.get("out"))

    if failed:
        print(f"{failed} sweep row(s) failed", file=sys.stderr)
        return 1
    return 0


# -- parser ----------------------------------------------------------------------------


def _add_common_flags(p: argparse.ArgumentParser, with_dist: bool = True) -> None:
    p.add_argument("--config", help="JSON file with default flag values")
    p.add_argument("--n", type=int, help="database size")
    p.add_argument("--r", type=int, help="marked count (marked set defaults to 0..r-1)")
    p.add_argument("--marked", help="comma-separated marked indices")
    if with_dist:
        p.add_argument("--dist", choices=KINDS, help="initial distribution kind")
        p.add_argument("--delta-index", type=int, dest="delta_index")
        p.add_argument("--gaussian-center", type=float, dest="gaussian_center")
        p.add_argument("--gaussian-spread", type=float, dest="gaussian_spread")
        p.add_argument("--state", help="path to a state JSON file")
        p.add_argument("--renormalize", action="store_true",
                       help="rescale an ingested state to unit norm")
    p.add_argument("--seed", type=int, help="RNG seed (default 0)")
    p.add_argument("--allow-large-r", action="store_true", dest="allow_large_r",
                   help="admit r up to n-1 instead of n/2")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), help="output format (default csv)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="groversim",
        description="Grover-search simulator for arbitrary initial amplitude "
        "distributions: exact iteration, closed-form prediction, planning.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_sim = sub.add_parser("simulate", help="run the iterative engine, emit a series")
    _add_common_flags(p_sim)
    p_sim.add_argument("--steps", type=int, help="number of search steps")
    p_sim.add_argument("--sample", action="store_true",
                       help="draw one measurement outcome from the final state")
    p_sim.set_defaults(func=cmd_simulate)

    p_pre = sub.add_parser("predict", help="closed-form solution and measurement plan")
    _add_common_flags(p_pre)
    p_pre.add_argument("--j", help="comma-separated branch indices (default 0)")
    p_pre.add_argument("--kbar0", help="initial marked average (scalar mode)")
    p_pre.add_argument("--lbar0", help="initial unmarked average (scalar mode)")
    p_pre.add_argument("--sigma-l-sq", type=float, dest="sigma_l_sq",
                       help="initial unmarked variance (scalar mode)")
    p_pre.set_defaults(func=cmd_predict)

    p_cmp = sub.add_parser("compare", help="cross-validate the two engines")
    _add_common_flags(p_cmp)
    p_cmp.add_argument("--steps", type=int, help="number of search steps")
    p_cmp.add_argument("--tol", type=float, help="agreement tolerance (default 1e-10)")
    p_cmp.set_defaults(func=cmd_compare)

    p_swp = sub.add_parser("sweep", help="planning quantities over a parameter grid")
    p_swp.add_argument("--config", help="JSON file with default flag values")
    p_swp.add_argument("--n", help="comma-separated database sizes")
    p_swp.add_argument("--r", help="comma-separated marked counts")
    p_swp.add_argument("--dist", help="comma-separated distribution kinds")
    p_swp.add_argument("--seeds", help="comma list or start:stop range (default 0)")
    p_swp.add_argument("--jobs", type=int, help="parallel workers (default 1)")
    p_swp.add_argument("--allow-large-r", action="store_true", dest="allow_large_r")
    p_swp.add_argument("--out", help="output path (default: stdout)")
    p_swp.add_argument("--format", choices=("csv", "json"))
    p_swp.set_defaults(func=cmd_sweep)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return int(args.func(args))
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except GroverSimError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
