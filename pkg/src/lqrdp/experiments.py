"""Experiment execution and text serialization behind the command line.

Everything here returns file contents as strings so runs can be compared
byte for byte without touching the filesystem.  Numbers are written with
``format(x, ".17g")`` (round-trip exact), ``,`` as delimiter and ``\\n``
line endings.
"""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .bounds import (
    DEFAULT_EPS_GRID,
    CertificationReport,
    ReportSection,
    certify,
    closed_loop_matrix,
    lyapunov_weight,
    benchmark_starts,
    random_case,
    rate_classifier,
    thm5_thm6_certify,
    make_section,
)
from .config import ExperimentConfig
from .dp import (
    IterationTrace,
    OptimalSolution,
    run_pi,
    run_qpi,
    run_qvi,
    run_two_phase,
    run_vi,
    solve_optimal,
)
from .errors import ConvergenceError, DomainError, InvalidPlantError
from .linalg import lambda_min, spectral_norm, symmetrize
from .model import Plant, example_plant, is_stabilizing

__all__ = [
    "TRACE_COLUMNS",
    "REPORT_COLUMNS",
    "BENCH_PSTAR",
    "BENCH_FSTAR",
    "ReproCheck",
    "RunOutcome",
    "fmt",
    "to_csv",
    "trace_rows",
    "report_rows",
    "solution_text",
    "ratio_median",
    "drop_indices",
    "run_experiment",
    "run_benchmark",
]

TRACE_COLUMNS = ("k", "err2", "errW", "pos_part", "neg_part", "thm1_margin", "lower_margin", "step_norm")
REPORT_COLUMNS = ("instance", "section", "eps", "k", "margin", "lhs", "rhs", "passed")

# Printed benchmark values.
BENCH_PSTAR = np.array([[2604.8, 2877.2, 1643.4],
                        [2877.2, 3178.1, 1815.3],
                        [1643.4, 1815.3, 2036.9]])
BENCH_FSTAR = np.array([[-0.8068, -0.8912]])
BENCH_RHO = 0.7006
BENCH_LAMBDA_MIN = 0.0005
BENCH_LAMBDA_MAX = 6992.8


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    if x == 0.0:
        x = 0.0  # no negative zero
    return format(x, ".17g")


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def trace_rows(trace: IterationTrace, plant: Plant, optimal: OptimalSolution,
               zero_trace: IterationTrace | None = None) -> list[tuple]:
    """One row per record with the columns of :data:`TRACE_COLUMNS`.

    ``thm1_margin`` is ``lambda_min(U_k - E_k)`` for the upper bound
    ``U_k = (G^T)^k E_0 G^k``, ``G = sqrt(gamma) A(F*)``; it is filled for
    Q-value and Q-policy traces only.  ``lower_margin`` is
    ``lambda_min(E_k - (T^k(0) - P*))`` for Q-value traces (needs
    ``zero_trace``) and ``lambda_min(E_k)`` for Q-policy traces.
    """
    nan = math.nan
    q_trace = trace.algorithm in ("qvi", "qpi")
    ref = optimal.Pstar if trace[0].P.shape == optimal.Pstar.shape else optimal.Xstar
    rows = []
    if q_trace:
        G = closed_loop_matrix(plant, optimal.Fstar)
        U = symmetrize(trace[0].P - ref)
    for k, r in enumerate(trace):
        thm1 = lower = nan
        if q_trace:
            E = symmetrize(r.P - ref)
            thm1 = lambda_min(U - E)
            U = symmetrize(G.T @ U @ G)
            if trace.algorithm == "qpi":
                lower = lambda_min(E)
            elif zero_trace is not None and k < len(zero_trace):
                lower = lambda_min(E - (zero_trace[k].P - ref))
        rows.append((k, r.err2, r.errW, r.pos, r.neg, thm1, lower, r.step))
    return rows


def report_rows(instance: str, eps, report: CertificationReport | list[ReportSection]) -> list[tuple]:
    sections = report.sections.values() if isinstance(report, CertificationReport) else report
    rows = []
    for sec in sections:
        if not sec.applicable:
            rows.append((instance, sec.name, eps, -1, math.nan, math.nan, math.nan, True))
            continue
        for rec in sec.records:
            rows.append((instance, sec.name, eps, rec.k, rec.margin, rec.lhs, rec.rhs, rec.passed))
    return rows


def _matrix_lines(name, M) -> list[str]:
    M = np.atleast_2d(M)
    return [f"{name} {M.shape[0]} {M.shape[1]}"] + [" ".join(fmt(v) for v in row) for row in M]


def solution_text(optimal: OptimalSolution) -> str:
    w = np.linalg.eigvalsh(optimal.Pstar)
    lines = []
    lines += _matrix_lines("Pstar", optimal.Pstar)
    lines += _matrix_lines("Fstar", optimal.Fstar)
    lines += _matrix_lines("Xstar", optimal.Xstar)
    lines.append(f"rho {fmt(optimal.radius)}")
    lines.append(f"lambda_min {fmt(w[0])}")
    lines.append(f"lambda_max {fmt(w[-1])}")
    lines.append(f"are_residual {fmt(optimal.are_residual)}")
    lines.append(f"bellman_residual {fmt(optimal.bellman_residual)}")
    lines.append(f"iterations {optimal.iterations}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Runs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReproCheck:
    name: str
    value: float
    target: float
    tol: float
    passed: bool


@dataclass
class RunOutcome:
    files: dict[str, str] = field(default_factory=dict)
    status: str = "ok"  # ok | diverged | reproduction-failed
    message: str = ""
    checks: list[ReproCheck] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)


def _eps_grid(cfg_eps, rho):
    """Values with ``rho + eps < 1``; the smallest one if none qualifies.

    The fallback keeps the eps-free certificates (upper bound, sandwich,
    Gelfand-index bound, lower bound) running; weighted sections then report
    themselves not applicable.
    """
    ok = [e for e in cfg_eps if rho + e < 1.0]
    return ok or [min(cfg_eps)]


def _q_init(cfg: ExperimentConfig, plant: Plant, optimal: OptimalSolution):
    M = cfg.init_matrix()
    if M is not None:
        return M
    name = cfg.init or "zero"
    if name == "zero":
        return np.zeros_like(optimal.Pstar)
    P0 = benchmark_starts(optimal)[name]
    if name == "indefinite_ones" and plant.m > 1:
        raise DomainError("indefinite_ones has a singular input block when m > 1")
    return P0


def _gain_init(cfg: ExperimentConfig, plant: Plant, optimal: OptimalSolution):
    M = cfg.init_matrix()
    if M is not None:
        return M
    name = cfg.init or "optimal_perturbed"
    if name == "zero":
        return np.zeros_like(optimal.Fstar)
    if name == "optimal":
        return optimal.Fstar.copy()
    return _perturbed_gain(plant, optimal, cfg.seed, cfg.perturbation)


def _perturbed_gain(plant, optimal, seed, scale):
    """``F* + scale * N(0, 1)``, halving ``scale`` until the gain stabilizes."""
    delta = np.random.default_rng(seed).standard_normal(optimal.Fstar.shape)
    while not is_stabilizing(plant, optimal.Fstar + scale * delta):
        scale *= 0.5
    return optimal.Fstar + scale * delta


def _certify_rows(plant, P0, optimal, eps_list, trace=None, F0=None, tol=1e-10, max_iters=10_000, instance="main"):
    rows = []
    failed = []
    for e in eps_list:
        rep = certify(plant, P0, F0=F0, optimal=optimal, eps=e, trace=trace, tol=tol, max_iters=max_iters)
        rows += report_rows(instance, e, rep)
        failed += [f"{instance}:{n}@{e}" for n, s in rep.sections.items() if not s.passed]
    return rows, failed


def _weight(plant, optimal, eps_list):
    if optimal.radius + eps_list[-1] >= 1.0:
        return None
    return lyapunov_weight(closed_loop_matrix(plant, optimal.Fstar), eps_list[-1]).P_eps


def _solve(plant) -> OptimalSolution:
    try:
        return solve_optimal(plant)
    except ConvergenceError as exc:
        raise InvalidPlantError(f"no stabilizing Riccati solution ({exc})") from exc


def run_experiment(cfg: ExperimentConfig) -> RunOutcome:
    """Execute one configuration and return the files it produces.

    Raises the package exceptions on infeasible input; the caller maps them
    to exit codes.
    """
    if cfg.algorithm == "paper_example":
        return run_benchmark(cfg)
    plant = cfg.build_plant()
    optimal = _solve(plant)
    out = RunOutcome()
    out.files["solution.txt"] = solution_text(optimal)
    eps = _eps_grid(cfg.eps, optimal.radius)
    W = _weight(plant, optimal, eps)
    alg = cfg.algorithm
    report: list[tuple] = []
    trace = None

    if alg == "solve":
        tol = 1e-9 * (1.0 + np.linalg.norm(optimal.Pstar))
        checks = [(0, tol - optimal.are_residual, optimal.are_residual, tol),
                  (0, tol - optimal.bellman_residual, optimal.bellman_residual, tol),
                  (0, 1.0 - optimal.radius, optimal.radius, 1.0)]
        for name, c in zip(("are_residual", "bellman_residual", "closed_loop_radius"), checks):
            report += report_rows("main", math.nan, [make_section(name, 0.0, [c])])
    elif alg in ("qvi", "certify"):
        P0 = _q_init(cfg, plant, optimal)
        trace = run_qvi(plant, P0, cfg.max_iters, cfg.tol, optimal, W)
        zero = run_qvi(plant, np.zeros_like(P0), max(len(trace) - 1, 1), -1.0, optimal)
        out.files["trace.csv"] = to_csv(TRACE_COLUMNS, trace_rows(trace, plant, optimal, zero))
        F0 = _perturbed_gain(plant, optimal, cfg.seed, cfg.perturbation) if alg == "certify" else None
        if trace.status != "diverged":
            rows, failed = _certify_rows(plant, P0, optimal, eps, trace=trace, F0=F0,
                                         tol=cfg.tol, max_iters=cfg.max_iters)
            report += rows
            out.notes += failed
        if alg == "certify":
            for i in range(cfg.random_instances):
                case = random_case(cfg.seed * 100_003 + i)
                ceps = _eps_grid(cfg.eps, case.optimal.radius)
                starts = benchmark_starts(case.optimal)
                for sname in ("lambda_max_scaled_identity", "lambda_min_scaled_identity"):
                    rows, failed = _certify_rows(
                        case.plant, starts[sname], case.optimal, ceps,
                        F0=case.F0 if sname == "lambda_max_scaled_identity" else None,
                        tol=cfg.tol, max_iters=cfg.max_iters, instance=f"random{i}:{sname}")
                    report += rows
                    out.notes += failed
    elif alg == "qpi":
        F0 = _gain_init(cfg, plant, optimal)
        trace = run_qpi(plant, F0, cfg.max_iters, cfg.tol, optimal, W)
        out.files["trace.csv"] = to_csv(TRACE_COLUMNS, trace_rows(trace, plant, optimal))
        for e in eps:
            weight = lyapunov_weight(closed_loop_matrix(plant, optimal.Fstar), e)
            report += report_rows("main", e, thm5_thm6_certify(trace, optimal, plant, weight))
    elif alg == "two_phase":
        F0 = _gain_init(cfg, plant, optimal)
        trace = run_two_phase(plant, F0, cfg.max_iters, cfg.tol, optimal, W)
        out.files["trace.csv"] = to_csv(TRACE_COLUMNS, trace_rows(trace, plant, optimal))
        s = trace.meta["switch_index"]
        entry = lambda_min(trace[s].P - optimal.Pstar)
        rate = rate_classifier(trace.metric("err2")[s:])
        target = optimal.radius ** 2 + 0.05
        report += report_rows("main", math.nan, [
            make_section("two_phase_entry", 0.0, [(s, entry, 0.0, entry)]),
            make_section("two_phase_rate", 0.0, [(s, target - rate.tail_median, rate.tail_median, target)]),
        ])
    elif alg in ("vi", "pi"):
        if alg == "vi":
            M = cfg.init_matrix()
            X0 = np.zeros_like(optimal.Xstar) if M is None else M
            trace = run_vi(plant, X0, cfg.max_iters, cfg.tol, optimal)
        else:
            trace = run_pi(plant, _gain_init(cfg, plant, optimal), cfg.max_iters, cfg.tol, optimal)
        out.files["trace.csv"] = to_csv(TRACE_COLUMNS, trace_rows(trace, plant, optimal))
        # PI decreases monotonically; VI from zero stays below X*
        recs = []
        for k in range(len(trace) - 1):
            if alg == "pi":
                recs.append((k + 1, lambda_min(trace[k].P - trace[k + 1].P), 0.0, 0.0))
            else:
                recs.append((k + 1, lambda_min(optimal.Xstar - trace[k + 1].P), 0.0, 0.0))
        tol = 1e-7 * (1.0 + spectral_norm(optimal.Xstar))
        name = "monotone_decrease" if alg == "pi" else "below_optimum"
        if alg == "pi" or not np.any(trace[0].P):
            report += report_rows("main", math.nan, [make_section(name, tol, recs)])
    out.files["report.csv"] = to_csv(REPORT_COLUMNS, report)
    if trace is not None and trace.status == "diverged":
        out.status = "diverged"
        out.message = f"{trace.algorithm} diverged after {len(trace) - 1} iterations"
    elif trace is not None and trace.status == "max-iters":
        out.notes.append(f"{trace.algorithm} stopped at max_iters={cfg.max_iters}")
    return out


# ---------------------------------------------------------------------------
# Benchmark reproduction
# ---------------------------------------------------------------------------

def ratio_median(err, lo: int = 5, hi: int = 30) -> float:
    """Median of ``err[k+1] / err[k]`` over ``k`` in ``[lo, hi]``."""
    err = np.asarray(err, dtype=float)
    return float(np.median(err[lo + 1:hi + 2] / err[lo:hi + 1]))


def drop_indices(pos, neg, drop: float = 1e-6) -> tuple[int | None, int | None]:
    """First indices where each part falls below ``drop`` times its initial value."""
    def first(x):
        x = np.asarray(x, dtype=float)
        hit = np.nonzero(x <= drop * x[0])[0]
        return int(hit[0]) if hit.size else None
    return first(pos), first(neg)


def _check(name, value, target, tol) -> ReproCheck:
    return ReproCheck(name, float(value), float(target), float(tol), bool(abs(value - target) <= tol))


def run_benchmark(cfg: ExperimentConfig | None = None) -> RunOutcome:
    """Reproduce the benchmark: optimum, the two scaled-identity runs and the indefinite run.

    Writes ``lambda_min_trace.csv``, ``lambda_max_trace.csv`` and
    ``indefinite_trace.csv`` plus the solution, certification report and
    a ``checks.csv`` listing every reproduction tolerance.
    """
    tol = 1e-14 if cfg is None else min(cfg.tol, 1e-14)
    max_iters = 10_000 if cfg is None else cfg.max_iters
    eps_cfg = list(DEFAULT_EPS_GRID) if cfg is None else cfg.eps
    plant = example_plant()
    t0 = time.perf_counter()
    optimal = solve_optimal(plant)
    elapsed = time.perf_counter() - t0
    out = RunOutcome()
    out.files["solution.txt"] = solution_text(optimal)
    w = np.linalg.eigvalsh(optimal.Pstar)

    checks = [_check(f"Pstar[{i}][{j}]", optimal.Pstar[i, j], BENCH_PSTAR[i, j], 0.1)
              for i in range(3) for j in range(3)]
    checks += [_check(f"Fstar[{j}]", optimal.Fstar[0, j], BENCH_FSTAR[0, j], 5e-4) for j in range(2)]
    checks.append(_check("rho", optimal.radius, BENCH_RHO, 5e-4))
    checks.append(_check("lambda_min", w[0], BENCH_LAMBDA_MIN, 1e-4))
    checks.append(_check("lambda_max", w[-1], BENCH_LAMBDA_MAX, 0.5))
    checks.append(ReproCheck("solve_seconds", elapsed, 1.0, 0.0, elapsed < 1.0))

    eps = _eps_grid(eps_cfg, optimal.radius)
    W = _weight(plant, optimal, eps)
    starts = benchmark_starts(optimal)
    runs = {"lambda_min": "lambda_min_scaled_identity",
            "lambda_max": "lambda_max_scaled_identity",
            "indefinite": "indefinite_ones"}
    traces = {}
    report = []
    for label, start in runs.items():
        tr = run_qvi(plant, starts[start], max_iters, tol, optimal, W)
        zero = run_qvi(plant, np.zeros((3, 3)), max(len(tr) - 1, 1), -1.0, optimal)
        traces[label] = tr
        out.files[f"{label}_trace.csv"] = to_csv(TRACE_COLUMNS, trace_rows(tr, plant, optimal, zero))
        rows, failed = _certify_rows(plant, starts[start], optimal, eps, trace=tr,
                                     tol=tol, max_iters=max_iters, instance=label)
        report += rows
        out.notes += failed

    red = traces["lambda_max"].metric("err2")
    med = ratio_median(red)
    checks.append(_check("lambda_max_ratio_median", med, 0.5, 0.1))
    blue = rate_classifier(traces["lambda_min"])
    checks.append(ReproCheck("lambda_min_slow_run", blue.longest_slow_run, 10, 0,
                             blue.longest_slow_run >= 10 and blue.tail_median <= 0.9))
    ind = traces["indefinite"]
    pos, neg = ind.metric("pos"), ind.metric("neg")
    ip, ineg = drop_indices(pos, neg)
    checks.append(ReproCheck("pos_before_neg", math.nan if ip is None else ip,
                             math.nan if ineg is None else ineg, 0,
                             ip is not None and ineg is not None and ip < ineg))
    pos_rate = rate_classifier(pos)
    checks.append(ReproCheck("pos_geometric", pos_rate.tail_median, 0.9, 0,
                             pos_rate.label == "geometric"))

    out.checks = checks
    out.files["report.csv"] = to_csv(REPORT_COLUMNS, report)
    out.files["checks.csv"] = to_csv(("check", "value", "target", "tol", "passed"),
                                     [(c.name, c.value, c.target, c.tol, c.passed)
                                      for c in checks if c.name != "solve_seconds"])
    bad = [c.name for c in checks if not c.passed]
    if bad:
        out.status = "reproduction-failed"
        out.message = "reproduction outside tolerance: " + ", ".join(bad)
    return out
