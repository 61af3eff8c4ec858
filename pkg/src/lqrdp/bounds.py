"""Numerical certificates for the convergence bounds of Q-VI and Q-PI.

Each ``*_certify`` function replays a solver trace against the optimum and
returns one or more :class:`ReportSection` objects holding a per-iteration
margin.  Margins are oriented so that a nonnegative value means the bound
holds: for a semidefinite claim ``L <= U`` the margin is
``lambda_min(U - L)``; for a scalar claim ``a <= b`` it is ``b - a``.  A
record passes when its margin is at least ``-tol`` with the default
``tol = 1e-7 (1 + ||P0||_2)``.

Statements quantified over "all k >= N" are only checked on the finite
window covered by the trace; each section stores that window in
``checked_range``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dp import IterationTrace, OptimalSolution, run_qpi, run_qvi, solve_optimal
from .errors import CertificationError, ConvergenceError
from .linalg import (
    lambda_max,
    lambda_min,
    spectral_norm,
    spectral_radius,
    symmetrize,
    weighted_norm,
)
from .model import Plant, augment, is_stabilizing, random_plant

__all__ = [
    "LyapunovWeight",
    "CheckRecord",
    "ReportSection",
    "make_section",
    "CertificationReport",
    "RateReport",
    "closed_loop_matrix",
    "lyapunov_weight",
    "lyapunov_conditions",
    "cone_gauge",
    "gelfand_sequence",
    "gelfand_N",
    "thm1_upper",
    "thm1_certify",
    "thm2_certify",
    "thm3_certify",
    "thm3_gauge_certify",
    "cor_spectral_certify",
    "cor_N_certify",
    "thm4_certify",
    "prop7_certify",
    "thm5_thm6_certify",
    "rate_classifier",
    "certify",
    "RandomCase",
    "random_case",
    "benchmark_starts",
    "DEFAULT_EPS_GRID",
]

DEFAULT_EPS_GRID = (0.01, 0.05, 0.1)


# ---------------------------------------------------------------------------
# Lyapunov weight
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LyapunovWeight:
    """Positive definite ``P_eps`` with ``G^T P_eps G <= (rho + eps)^2 P_eps``.

    Normalized so that ``lambda_max(P_eps) = 1``.
    """

    P_eps: np.ndarray
    eps: float
    rho: float
    truncation_k: int

    @property
    def rate(self) -> float:
        """Per-step contraction factor ``(rho + eps)^2``."""
        return (self.rho + self.eps) ** 2

    @property
    def condition(self) -> float:
        w = np.linalg.eigvalsh(self.P_eps)
        return float(w[-1] / w[0])


def lyapunov_weight(G, eps: float, term_tol: float = 1e-14, max_terms: int = 10_000) -> LyapunovWeight:
    """Sum ``sum_k (rho + eps)^{-2k} (G^T)^k G^k`` and rescale to unit top eigenvalue.

    Terms are added until one has spectral norm below ``term_tol`` times the
    running sum.

    Raises
    ------
    CertificationError
        If ``max_terms`` terms leave a non-negligible tail.
    """
    G = np.atleast_2d(np.asarray(G, dtype=float))
    if eps <= 0:
        raise ValueError("eps must be positive")
    rho = spectral_radius(G)
    Gs = G / (rho + eps)
    d = G.shape[0]
    S = np.eye(d)
    Gk = np.eye(d)
    for k in range(1, max_terms + 1):
        Gk = Gk @ Gs
        term = Gk.T @ Gk
        S += term
        if spectral_norm(term) < term_tol * spectral_norm(S):
            break
    else:
        raise CertificationError(f"Lyapunov series not settled after {max_terms} terms")
    S = symmetrize(S)
    return LyapunovWeight(S / lambda_max(S), float(eps), rho, k)


def lyapunov_conditions(weight: LyapunovWeight, G) -> tuple[float, float]:
    """Margins of the two weight conditions.

    Returns ``(lyap, top)`` where ``lyap = lambda_min((rho+eps)^2 W - G^T W G)``
    and ``top = 1 - lambda_max(W)``; both are nonnegative for a valid weight.
    """
    G = np.atleast_2d(G)
    W = weight.P_eps
    lyap = lambda_min(weight.rate * W - G.T @ W @ G)
    return lyap, 1.0 - lambda_max(W)


def cone_gauge(E, W) -> float:
    """Smallest ``c`` with ``E <= c W``, i.e. ``lambda_max(W^{-1/2} E W^{-1/2})``."""
    L = np.linalg.cholesky(W)
    Z = np.linalg.solve(L, np.linalg.solve(L, symmetrize(E)).T)
    return lambda_max(Z)


# ---------------------------------------------------------------------------
# Gelfand index
# ---------------------------------------------------------------------------

def gelfand_sequence(G, k_max: int) -> np.ndarray:
    """``||G^k||_2^{1/k}`` for ``k = 1 .. k_max`` (index 0 holds k = 1)."""
    G = np.atleast_2d(np.asarray(G, dtype=float))
    out = np.empty(k_max)
    Gk = np.eye(G.shape[0])
    log_scale = 0.0
    for k in range(1, k_max + 1):
        Gk = Gk @ G
        nrm = spectral_norm(Gk)
        if nrm == 0.0:
            out[k - 1:] = 0.0
            break
        # renormalize to avoid underflow of long products
        log_scale += math.log(nrm)
        Gk = Gk / nrm
        out[k - 1] = math.exp(log_scale / k)
    return out


def gelfand_N(G, eps: float, k_max: int = 1000) -> int:
    """Smallest ``N >= 1`` with ``||G^k||^{1/k} <= rho(G) + eps`` on ``[N, k_max]``.

    Raises
    ------
    CertificationError
        If the inequality fails at ``k_max`` itself.
    """
    seq = gelfand_sequence(G, k_max)
    bound = spectral_radius(G) + eps
    bad = np.nonzero(seq > bound * (1.0 + 1e-12))[0]
    if bad.size == 0:
        return 1
    if bad[-1] == k_max - 1:
        raise CertificationError(f"no Gelfand index within k_max={k_max}")
    return int(bad[-1]) + 2


# ---------------------------------------------------------------------------
# Report containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CheckRecord:
    k: int
    margin: float
    lhs: float
    rhs: float
    passed: bool


@dataclass
class ReportSection:
    name: str
    records: list[CheckRecord] = field(default_factory=list)
    constants: dict = field(default_factory=dict)
    checked_range: tuple[int, int] | None = None
    applicable: bool = True
    note: str = ""

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    @property
    def min_margin(self) -> float:
        return min((r.margin for r in self.records), default=math.inf)

    def failures(self) -> list[CheckRecord]:
        return [r for r in self.records if not r.passed]


@dataclass
class CertificationReport:
    sections: dict[str, ReportSection] = field(default_factory=dict)
    constants: dict = field(default_factory=dict)

    def add(self, *sections: ReportSection):
        for s in sections:
            self.sections[s.name] = s

    def __getitem__(self, name) -> ReportSection:
        return self.sections[name]

    def __contains__(self, name):
        return name in self.sections

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.sections.values())

    def summary(self) -> dict[str, bool]:
        return {name: s.passed for name, s in self.sections.items()}


def _tol(trace: IterationTrace, tol):
    if tol is not None:
        return tol
    return 1e-7 * (1.0 + spectral_norm(trace[0].P))


def make_section(name, tol, checks, **kw) -> ReportSection:
    """Build a section from ``(k, margin, lhs, rhs)`` tuples, passing at ``margin >= -tol``."""
    recs = [CheckRecord(k, float(m), float(lhs), float(rhs), bool(m >= -tol))
            for k, m, lhs, rhs in checks]
    rng = (recs[0].k, recs[-1].k) if recs else None
    sec = ReportSection(name, recs, checked_range=rng, **kw)
    sec.constants.setdefault("tol", tol)
    return sec


def closed_loop_matrix(plant: Plant, F) -> np.ndarray:
    """Discounted augmented matrix ``sqrt(gamma) A(F)``."""
    return math.sqrt(plant.gamma) * augment(plant, F)


def _upper_bounds(G, E0, count):
    """``U_k = (G^T)^k E0 G^k`` for ``k = 0 .. count-1``."""
    U = symmetrize(E0)
    for _ in range(count):
        yield U
        U = symmetrize(G.T @ U @ G)


def _errors(trace, Pstar):
    return [symmetrize(r.P - Pstar) for r in trace]


# ---------------------------------------------------------------------------
# Q-VI certificates
# ---------------------------------------------------------------------------

def thm1_upper(trace: IterationTrace, optimal: OptimalSolution, k: int, plant: Plant) -> np.ndarray:
    """Bound matrix ``gamma^k (A(F*)^T)^k (P0 - P*) A(F*)^k``."""
    if not 0 <= k < len(trace):
        raise IndexError(f"k={k} outside trace of length {len(trace)}")
    G = closed_loop_matrix(plant, optimal.Fstar)
    Gk = np.linalg.matrix_power(G, k)
    return symmetrize(Gk.T @ (trace[0].P - optimal.Pstar) @ Gk)


def thm1_certify(trace, optimal, plant, tol=None, name="thm1") -> ReportSection:
    """Upper bound ``P_k - P* <= U_k`` along the trace."""
    tol = _tol(trace, tol)
    G = closed_loop_matrix(plant, optimal.Fstar)
    errs = _errors(trace, optimal.Pstar)
    checks = [(k, lambda_min(U - E), spectral_norm(E), spectral_norm(U))
              for k, (E, U) in enumerate(zip(errs, _upper_bounds(G, errs[0], len(errs))))]
    return make_section(name, tol, checks)


def _in_cone(trace, optimal, tol):
    return lambda_min(trace[0].P - optimal.Pstar) >= -tol


def thm2_certify(trace, optimal, plant, tol=None) -> ReportSection:
    """Two-sided bound ``0 <= P_k - P* <= U_k`` for starts above ``P*``."""
    tol = _tol(trace, tol)
    if not _in_cone(trace, optimal, tol):
        return ReportSection("thm2", applicable=False, note="P0 is not above P*",
                             constants={"tol": tol})
    G = closed_loop_matrix(plant, optimal.Fstar)
    errs = _errors(trace, optimal.Pstar)
    checks = []
    for k, (E, U) in enumerate(zip(errs, _upper_bounds(G, errs[0], len(errs)))):
        checks.append((k, min(lambda_min(E), lambda_min(U - E)), spectral_norm(E), spectral_norm(U)))
    return make_section("thm2", tol, checks)


def _weight_applicable(name, trace, optimal, weight, tol):
    if weight.rho + weight.eps >= 1.0:
        return ReportSection(name, applicable=False, note="rho + eps >= 1",
                             constants={"tol": tol, "eps": weight.eps})
    if not _in_cone(trace, optimal, tol):
        return ReportSection(name, applicable=False, note="P0 is not above P*",
                             constants={"tol": tol, "eps": weight.eps})
    return None


def thm3_certify(trace, optimal, weight: LyapunovWeight, tol=None) -> tuple[ReportSection, ReportSection]:
    """Weighted-norm decay of Q-VI from a start above ``P*``.

    Returns two sections: ``"thm3"`` checks
    ``||P_k - P*||_W <= (rho + eps)^{2k} ||P0 - P*||_W`` and ``"thm3_step"``
    checks the one-step contraction ``||P_{k+1} - P*||_W <= (rho + eps)^2
    ||P_k - P*||_W``, with ``||X||_W = sqrt(lambda_max(X^T W X))``.
    """
    tol = _tol(trace, tol)
    skip = _weight_applicable("thm3", trace, optimal, weight, tol)
    if skip is not None:
        step = ReportSection("thm3_step", applicable=False, note=skip.note, constants=dict(skip.constants))
        return skip, step
    W, r = weight.P_eps, weight.rate
    norms = [weighted_norm(E, W) for E in _errors(trace, optimal.Pstar)]
    const = {"eps": weight.eps, "rho": weight.rho, "rate": r}
    total = [(k, r ** k * norms[0] - e, e, r ** k * norms[0]) for k, e in enumerate(norms)]
    step = [(k + 1, r * norms[k] - norms[k + 1], norms[k + 1], r * norms[k])
            for k in range(len(norms) - 1)]
    return (make_section("thm3", tol, total, constants=dict(const)),
            make_section("thm3_step", tol, step, constants=dict(const)))


def thm3_gauge_certify(trace, optimal, weight: LyapunovWeight, tol=None) -> ReportSection:
    """Decay of ``cone_gauge(P_k - P*, W)`` at rate ``(rho + eps)^{2k}``.

    For errors that stay positive semidefinite this gauge is monotone in the
    semidefinite order and contracts under ``E -> G^T E G`` whenever
    ``G^T W G <= (rho + eps)^2 W``.
    """
    tol = _tol(trace, tol)
    skip = _weight_applicable("thm3_gauge", trace, optimal, weight, tol)
    if skip is not None:
        return skip
    W, r = weight.P_eps, weight.rate
    g = [cone_gauge(E, W) for E in _errors(trace, optimal.Pstar)]
    checks = [(k, r ** k * g[0] - v, v, r ** k * g[0]) for k, v in enumerate(g)]
    return make_section("thm3_gauge", tol, checks, constants={"eps": weight.eps, "rate": r})


def cor_spectral_certify(trace, optimal, weight: LyapunovWeight, tol=None) -> ReportSection:
    """``||P_k - P*||_2 <= cond(W) (rho + eps)^{2k} ||P0 - P*||_2``."""
    tol = _tol(trace, tol)
    skip = _weight_applicable("cor_spectral", trace, optimal, weight, tol)
    if skip is not None:
        return skip
    r, c = weight.rate, weight.condition
    norms = [spectral_norm(E) for E in _errors(trace, optimal.Pstar)]
    checks = [(k, c * r ** k * norms[0] - e, e, c * r ** k * norms[0]) for k, e in enumerate(norms)]
    return make_section("cor_spectral", tol, checks,
                    constants={"eps": weight.eps, "rate": r, "condition": c})


def cor_N_certify(trace, optimal, plant, eps: float, N: int | None = None, tol=None) -> ReportSection:
    """``P_k - P* <= |lambda_max(P0 - P*)| (rho + eps)^{2k} I`` for ``k >= N``.

    ``N`` defaults to :func:`gelfand_N` of ``sqrt(gamma) A(F*)``.  The
    section also notes whether the looser prefactor ``||P0 - P*||_2`` would
    have been needed anywhere (``norm_prefactor_needed``).
    """
    tol = _tol(trace, tol)
    G = closed_loop_matrix(plant, optimal.Fstar)
    rho = spectral_radius(G)
    if N is None:
        N = gelfand_N(G, eps)
    errs = _errors(trace, optimal.Pstar)
    lam = abs(lambda_max(errs[0]))
    nrm = spectral_norm(errs[0])
    r = (rho + eps) ** 2
    checks = []
    needed = False
    for k in range(N, len(errs)):
        E = errs[k]
        top = lambda_max(E)
        m = lam * r ** k - top
        if m < -tol and nrm * r ** k - top >= -tol:
            needed = True
        checks.append((k, m, top, lam * r ** k))
    return make_section("cor_N", tol, checks, constants={
        "eps": eps, "N": N, "rho": rho, "prefactor": lam, "norm_prefactor_needed": needed})


def thm4_certify(trace_P, trace_zero, optimal, plant, tol=None) -> ReportSection:
    """Sandwich ``T^k(0) - P* <= T^k(P) - P* <= U_k`` on the common window.

    ``constants`` records whether both bounding sequences have decayed to
    ``1e-6`` of their initial size by the end of the window.
    """
    tol = _tol(trace_P, tol)
    if np.any(trace_zero[0].P):
        raise CertificationError("lower trace must start at zero")
    G = closed_loop_matrix(plant, optimal.Fstar)
    count = min(len(trace_P), len(trace_zero))
    errs = _errors(trace_P, optimal.Pstar)[:count]
    lows = _errors(trace_zero, optimal.Pstar)[:count]
    uppers = list(_upper_bounds(G, errs[0], count))
    checks = []
    for k in range(count):
        lower_m = lambda_min(errs[k] - lows[k])
        upper_m = lambda_min(uppers[k] - errs[k])
        checks.append((k, min(lower_m, upper_m), spectral_norm(errs[k]), spectral_norm(uppers[k])))

    def decays(seq):
        first = spectral_norm(seq[0])
        return first == 0.0 or spectral_norm(seq[-1]) <= 1e-6 * first

    return make_section("thm4", tol, checks, constants={
        "upper_vanishes": decays(uppers), "lower_vanishes": decays(lows)})


def prop7_certify(trace, optimal, plant, eps1: float, eps2: float, tol=None) -> ReportSection:
    """Eventual exponential lower bound for Q-VI.

    ``N1`` is the first index after which every closed loop
    ``sqrt(gamma) A(F_k)`` along the trace stays within ``eps1`` of
    ``sqrt(gamma) A(F*)``; ``N2`` is the Gelfand index for ``eps2``.  With
    ``M = Pi^T (P0 - P*) Pi``, ``Pi = G_0 G_1 ... G_{N1-1}`` and
    ``eta = ||M||_2``, it checks
    ``P_{N1+k} - P* >= -eta ((rho + eps2)^k + eps1)^2 I`` for ``k >= N2``.

    Raises
    ------
    CertificationError
        If the trace never settles within ``eps1`` or is too short to reach
        ``N1 + N2``.
    """
    tol = _tol(trace, tol)
    Gstar = closed_loop_matrix(plant, optimal.Fstar)
    rho = spectral_radius(Gstar)
    Gs = [closed_loop_matrix(plant, r.F) for r in trace]
    far = [i for i, G in enumerate(Gs) if spectral_norm(G - Gstar) > eps1]
    N1 = far[-1] + 1 if far else 0
    if N1 >= len(trace):
        raise CertificationError("trace too short: closed loop never within eps1 of optimum")
    N2 = gelfand_N(Gstar, eps2)
    if N1 + N2 >= len(trace):
        raise CertificationError(f"trace too short for N1={N1}, N2={N2}")
    Pi = np.eye(Gstar.shape[0])
    for G in Gs[:N1]:
        Pi = Pi @ G
    M = symmetrize(Pi.T @ (trace[0].P - optimal.Pstar) @ Pi)
    eta = spectral_norm(M)
    errs = _errors(trace, optimal.Pstar)
    checks = []
    for k in range(N2, len(trace) - N1):
        E = errs[N1 + k]
        bound = eta * ((rho + eps2) ** k + eps1) ** 2
        checks.append((N1 + k, lambda_min(E) + bound, lambda_min(E), -bound))
    return make_section("prop7", tol, checks, constants={
        "eps1": eps1, "eps2": eps2, "N1": N1, "N2": N2, "eta": eta,
        "lambda_max_M": lambda_max(M), "rho": rho})


# ---------------------------------------------------------------------------
# Q-PI certificates
# ---------------------------------------------------------------------------

def thm5_thm6_certify(qpi_trace, optimal, plant, weight: LyapunovWeight | None = None,
                      tol=None) -> list[ReportSection]:
    """Bounds for Q-policy iteration.

    Sections: ``"thm5"`` (``P_k - P* <= U_k``), ``"thm6"``
    (``0 <= P_k - P* <= U_k``) and, with a weight, ``"thm6_weighted"``
    (``||P_k - P*||_W <= (rho + eps)^{2k} ||P0 - P*||_W``).
    """
    tol = _tol(qpi_trace, tol)
    G = closed_loop_matrix(plant, optimal.Fstar)
    errs = _errors(qpi_trace, optimal.Pstar)
    upper, two_sided = [], []
    for k, (E, U) in enumerate(zip(errs, _upper_bounds(G, errs[0], len(errs)))):
        um = lambda_min(U - E)
        upper.append((k, um, spectral_norm(E), spectral_norm(U)))
        two_sided.append((k, min(um, lambda_min(E)), spectral_norm(E), spectral_norm(U)))
    out = [make_section("thm5", tol, upper), make_section("thm6", tol, two_sided)]
    if weight is not None:
        if weight.rho + weight.eps >= 1.0:
            out.append(ReportSection("thm6_weighted", applicable=False, note="rho + eps >= 1"))
        else:
            W, r = weight.P_eps, weight.rate
            norms = [weighted_norm(E, W) for E in errs]
            checks = [(k, r ** k * norms[0] - e, e, r ** k * norms[0]) for k, e in enumerate(norms)]
            out.append(make_section("thm6_weighted", tol, checks, constants={"eps": weight.eps, "rate": r}))
    return out


# ---------------------------------------------------------------------------
# Rate classification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RateReport:
    label: str
    ratios: np.ndarray
    tail_median: float
    tail_std: float
    longest_slow_run: int


def _longest_run(mask) -> int:
    best = cur = 0
    for v in mask:
        cur = cur + 1 if v else 0
        best = max(best, cur)
    return best


def rate_classifier(trace_or_errors, metric: str = "err2", floor_rel: float = 1e-8,
                    slow: float = 0.97, slow_run: int = 10) -> RateReport:
    """Classify an error sequence as ``"geometric"``, ``"sublinear"`` or ``"mixed"``.

    Only the part of the sequence above ``floor_rel * max(err)`` is used.
    "sublinear" means the first half of the ratios ``err_{k+1} / err_k``
    contains at least ``slow_run`` consecutive values above ``slow``;
    "geometric" means the last quarter has median at most 0.9 and standard
    deviation at most 0.05.
    """
    if isinstance(trace_or_errors, IterationTrace):
        err = trace_or_errors.metric(metric)
    else:
        err = np.asarray(trace_or_errors, dtype=float)
    top = float(np.max(err)) if err.size else 0.0
    if top == 0.0:
        return RateReport("geometric", np.empty(0), 0.0, 0.0, 0)
    above = err > floor_rel * top
    cut = len(err) if above.all() else int(np.argmin(above))
    seg = err[:cut]
    if seg.size < 2:
        return RateReport("geometric", np.empty(0), 0.0, 0.0, 0)
    ratios = seg[1:] / seg[:-1]
    tail = ratios[-max(len(ratios) // 4, 1):]
    med, std = float(np.median(tail)), float(np.std(tail))
    early = ratios[:max(len(ratios) // 2, 1)]
    run = _longest_run(early > slow)
    if run >= slow_run:
        label = "sublinear"
    elif med <= 0.9 and std <= 0.05:
        label = "geometric"
    else:
        label = "mixed"
    return RateReport(label, ratios, med, std, run)


# ---------------------------------------------------------------------------
# One-call driver
# ---------------------------------------------------------------------------

def certify(plant: Plant, P0, *, F0=None, optimal: OptimalSolution | None = None,
            eps: float = 0.1, eps1: float = 0.01, eps2: float | None = None,
            max_iters: int = 10_000, tol: float = 1e-12, gauge: bool = True,
            trace: IterationTrace | None = None) -> CertificationReport:
    """Run Q-VI from ``P0`` (and from zero) plus optional Q-PI and certify everything.

    Sections that need ``P0`` above ``P*`` or ``rho + eps < 1`` are kept but
    marked not applicable when their hypotheses fail.
    """
    if optimal is None:
        optimal = solve_optimal(plant)
    eps2 = eps if eps2 is None else eps2
    G = closed_loop_matrix(plant, optimal.Fstar)
    weight = lyapunov_weight(G, eps)
    if trace is None:
        trace = run_qvi(plant, P0, max_iters, tol, optimal, weight.P_eps)
    zero = run_qvi(plant, np.zeros_like(optimal.Pstar), max_iters, tol, optimal)

    rep = CertificationReport(constants={"eps": eps, "eps1": eps1, "eps2": eps2,
                                         "rho": weight.rho, "weight_terms": weight.truncation_k})
    rep.add(thm1_certify(trace, optimal, plant))
    rep.add(thm2_certify(trace, optimal, plant))
    rep.add(*thm3_certify(trace, optimal, weight))
    if gauge:
        rep.add(thm3_gauge_certify(trace, optimal, weight))
    rep.add(cor_spectral_certify(trace, optimal, weight))
    rep.add(cor_N_certify(trace, optimal, plant, eps))
    rep.add(thm4_certify(trace, zero, optimal, plant))
    try:
        # the lower bound starts at N1 + N2; tol < 0 disables the stopping rule
        need = gelfand_N(G, eps2) + 100
        long = trace if len(trace) > need else run_qvi(plant, P0, need, -1.0, optimal)
        rep.add(prop7_certify(long, optimal, plant, eps1, eps2))
    except (CertificationError, ConvergenceError) as exc:
        rep.add(ReportSection("prop7", applicable=False, note=str(exc)))
    if F0 is not None:
        qpi = run_qpi(plant, F0, max_iters, tol, optimal, weight.P_eps)
        rep.add(*thm5_thm6_certify(qpi, optimal, plant, weight))
    return rep


# ---------------------------------------------------------------------------
# Random instances
# ---------------------------------------------------------------------------

def benchmark_starts(optimal: OptimalSolution) -> dict[str, np.ndarray]:
    """The three benchmark initializations built from the spectrum of ``P*``."""
    w = np.linalg.eigvalsh(optimal.Pstar)
    d = optimal.Pstar.shape[0]
    return {
        "lambda_min_scaled_identity": w[0] * np.eye(d),
        "lambda_max_scaled_identity": w[-1] * np.eye(d),
        "indefinite_ones": 0.5 * (w[0] + w[-1]) * np.ones((d, d)),
    }


@dataclass
class RandomCase:
    seed: int
    plant: Plant
    optimal: OptimalSolution
    F0: np.ndarray


def random_case(seed: int, perturb: float = 0.1, max_tries: int = 50) -> RandomCase:
    """Seeded random plant with its optimum and a stabilizing perturbed gain.

    Plants whose Riccati recursion fails are redrawn from the same generator.
    The gain is ``F* + perturb * N(0, 1)``, halving the perturbation until it
    stabilizes.
    """
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        plant = random_plant(rng)
        try:
            optimal = solve_optimal(plant)
        except (ConvergenceError, ArithmeticError, ValueError):
            continue
        break
    else:
        raise CertificationError(f"no solvable instance for seed {seed}")
    delta = rng.standard_normal(optimal.Fstar.shape)
    scale = perturb
    while not is_stabilizing(plant, optimal.Fstar + scale * delta):
        scale *= 0.5
    return RandomCase(seed, plant, optimal, optimal.Fstar + scale * delta)
