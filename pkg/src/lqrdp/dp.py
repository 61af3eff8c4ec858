"""Dynamic-programming operators and solver loops for discounted LQR.

Q-function iterations act on symmetric ``(n+m) x (n+m)`` parameters ``P``
(the Q-function is ``[x; u]^T P [x; u]``); value-function iterations act on
``n x n`` matrices ``X``.  Every solver returns an :class:`IterationTrace`
whose records carry the error metrics against a reference optimum when one
is supplied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DomainError, StabilityError
from .linalg import (
    fixed_point_linear_solve,
    is_psd,
    spectral_norm,
    symmetrize,
    weighted_norm,
)
from .model import (
    Plant,
    augment,
    greedy_gain,
    in_p_set,
    is_stabilizing,
    lambda_matrix,
    schur_value,
)

__all__ = [
    "IterationRecord",
    "IterationTrace",
    "OptimalSolution",
    "bellman_T",
    "riccati_step",
    "riccati_gain",
    "operator_L",
    "policy_eval_Q",
    "policy_eval_value",
    "operator_H",
    "operator_D",
    "operator_D_fixed_point",
    "run_qvi",
    "run_qpi",
    "run_vi",
    "run_pi",
    "run_two_phase",
    "solve_optimal",
]

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITERS = 10_000
DIVERGENCE_NORM = 1e12


@dataclass(frozen=True)
class OptimalSolution:
    """Ground-truth optimum of a plant."""

    Xstar: np.ndarray
    Pstar: np.ndarray
    Fstar: np.ndarray
    are_residual: float
    bellman_residual: float
    radius: float
    iterations: int


@dataclass(frozen=True)
class IterationRecord:
    """One iterate of a solver.

    ``P`` is the Q-parameter (or value matrix for VI/PI) at step ``k`` and
    ``F`` the gain attached to it: the greedy gain of ``P`` for value
    iteration, the evaluated gain for policy iteration.  Metric fields are
    NaN when no reference was supplied.
    """

    k: int
    P: np.ndarray
    F: np.ndarray
    err2: float = math.nan
    errW: float = math.nan
    pos: float = math.nan
    neg: float = math.nan
    step: float = math.nan


@dataclass
class IterationTrace:
    algorithm: str
    records: list[IterationRecord]
    status: str
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, k) -> IterationRecord:
        return self.records[k]

    def __iter__(self):
        return iter(self.records)

    @property
    def final(self) -> IterationRecord:
        return self.records[-1]

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def metric(self, name: str) -> np.ndarray:
        """Column of a scalar field (``"err2"``, ``"pos"``, ...) as an array."""
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    def matrices(self) -> np.ndarray:
        return np.stack([r.P for r in self.records])

    def gains(self) -> np.ndarray:
        return np.stack([r.F for r in self.records])


class _Recorder:
    def __init__(self, reference: np.ndarray | None, weight: np.ndarray | None):
        self.reference = reference
        self.weight = weight
        self.records: list[IterationRecord] = []

    def add(self, P, F, step=math.nan):
        k = len(self.records)
        if self.reference is None:
            self.records.append(IterationRecord(k, P, F, step=step))
            return
        E = P - self.reference
        w = np.linalg.eigvalsh(symmetrize(E))
        errW = math.nan if self.weight is None else weighted_norm(E, self.weight)
        self.records.append(IterationRecord(
            k, P, F,
            err2=float(max(abs(w[0]), abs(w[-1]))),
            errW=errW,
            pos=float(max(w[-1], 0.0)),
            neg=float(max(-w[0], 0.0)),
            step=step,
        ))


def _ref(reference, attr):
    if reference is None:
        return None
    if isinstance(reference, OptimalSolution):
        return getattr(reference, attr)
    return np.asarray(reference, dtype=float)


def _stepped(P_new, P_old, tol):
    step = float(np.linalg.norm(P_new - P_old))
    return step, step <= tol * (1.0 + np.linalg.norm(P_old))


# ---------------------------------------------------------------------------
# Operators
# ---------------------------------------------------------------------------

def _is_zero(P) -> bool:
    return not np.any(P)


def _bellman(plant: Plant, P):
    P = symmetrize(P)
    n = plant.n
    if _is_zero(P):
        return lambda_matrix(plant), np.zeros((plant.m, n))
    if not in_p_set(P, n):
        raise DomainError("Bellman operator needs P PSD with P22 positive definite, or P = 0")
    F = greedy_gain(P, n)
    G = augment(plant, F)
    return symmetrize(lambda_matrix(plant) + plant.gamma * G.T @ P @ G), F


def bellman_T(plant: Plant, P) -> np.ndarray:
    """One Q-value-iteration step ``Lambda + gamma A(F_P)^T P A(F_P)``.

    ``F_P`` is the greedy gain of ``P``.  ``P = 0`` maps to ``Lambda``.

    Raises
    ------
    DomainError
        If ``P`` is nonzero and not PSD with positive definite ``P22``.
    """
    return _bellman(plant, P)[0]


def operator_L(plant: Plant, F, P) -> np.ndarray:
    """``Lambda + gamma A(F)^T P A(F)`` for a fixed gain."""
    G = augment(plant, F)
    return symmetrize(lambda_matrix(plant) + plant.gamma * G.T @ np.asarray(P) @ G)


def riccati_gain(plant: Plant, X) -> np.ndarray:
    """Greedy gain ``-(R + g B^T X B)^{-1} g B^T X A`` of a value matrix."""
    A, B, g = plant.A, plant.B, plant.gamma
    return -np.linalg.solve(plant.R + g * B.T @ X @ B, g * B.T @ X @ A)


def riccati_step(plant: Plant, X) -> np.ndarray:
    """One step of the discounted Riccati recursion."""
    X = symmetrize(X)
    if not is_psd(X):
        raise DomainError("Riccati step needs X positive semidefinite")
    A, B, g = plant.A, plant.B, plant.gamma
    S = plant.R + g * B.T @ X @ B
    K = np.linalg.solve(S, g * B.T @ X @ A)
    return symmetrize(g * A.T @ X @ A - g * A.T @ X @ B @ K + plant.Q)


def _require_stabilizing(plant, F, what="gain"):
    chk = is_stabilizing(plant, F)
    if not chk:
        raise StabilityError(f"{what} is not stabilizing (discounted radius {chk.radius:.6g})")
    return chk


def policy_eval_Q(plant: Plant, F) -> np.ndarray:
    """Q-parameter of a stabilizing gain: solves ``P = Lambda + g A(F)^T P A(F)``."""
    _require_stabilizing(plant, F)
    G = math.sqrt(plant.gamma) * augment(plant, F)
    return fixed_point_linear_solve(G, lambda_matrix(plant))


def policy_eval_value(plant: Plant, F) -> np.ndarray:
    """Value matrix of a stabilizing gain: ``X = Q + F^T R F + g Acl^T X Acl``."""
    _require_stabilizing(plant, F)
    F = np.atleast_2d(F)
    Acl = math.sqrt(plant.gamma) * (plant.A + plant.B @ F)
    return fixed_point_linear_solve(Acl, plant.Q + F.T @ plant.R @ F)


def operator_H(plant: Plant, P) -> np.ndarray:
    """Policy-iteration map: evaluate the greedy gain of ``P``.

    Raises
    ------
    StabilityError
        If the greedy gain of ``P`` is not stabilizing.
    """
    P = symmetrize(P)
    if not in_p_set(P, plant.n):
        raise DomainError("operator H needs P PSD with P22 positive definite")
    F = greedy_gain(P, plant.n)
    _require_stabilizing(plant, F, "greedy gain")
    return policy_eval_Q(plant, F)


def operator_D(plant: Plant, F, P) -> np.ndarray:
    """``Lambda + I + gamma A(F)^T P A(F)``; its fixed point dominates ``P* + I``."""
    _require_stabilizing(plant, F)
    return operator_L(plant, F, P) + np.eye(plant.n + plant.m)


def operator_D_fixed_point(plant: Plant, F) -> np.ndarray:
    _require_stabilizing(plant, F)
    G = math.sqrt(plant.gamma) * augment(plant, F)
    return fixed_point_linear_solve(G, lambda_matrix(plant) + np.eye(plant.n + plant.m))


# ---------------------------------------------------------------------------
# Solver loops
# ---------------------------------------------------------------------------

def run_qvi(plant: Plant, P0, max_iters: int = DEFAULT_MAX_ITERS, tol: float = DEFAULT_TOL,
            reference=None, weight=None) -> IterationTrace:
    """Q-value iteration ``P_{k+1} = T(P_k)``.

    Stops when the Frobenius step ``||P_{k+1} - P_k||`` drops below
    ``tol * (1 + ||P_k||)`` (status ``"converged"``), when ``max_iters``
    updates have been made (``"max-iters"``), or when ``||P_k||`` exceeds
    ``1e12`` (``"diverged"``).

    Parameters
    ----------
    plant : Plant
    P0 : array_like
        Initial parameter, either zero or PSD with positive definite
        lower-right block.
    reference : OptimalSolution or array_like, optional
        Optimum used to fill the error metrics of each record.
    weight : array_like, optional
        Positive definite weight for the ``errW`` metric.

    Raises
    ------
    DomainError
        If ``P0`` or a later iterate is outside the domain of the operator.
    """
    P = symmetrize(np.asarray(P0, dtype=float))
    d = plant.n + plant.m
    if P.shape != (d, d):
        raise DomainError(f"P0 must be {d}x{d}")
    if not (_is_zero(P) or in_p_set(P, plant.n)):
        raise DomainError("P0 must be zero or PSD with P22 positive definite")
    rec = _Recorder(_ref(reference, "Pstar"), weight)
    F = np.zeros((plant.m, plant.n)) if _is_zero(P) else greedy_gain(P, plant.n)
    rec.add(P, F)
    status = "max-iters"
    for k in range(1, max_iters + 1):
        try:
            P_new, _ = _bellman(plant, P)
        except DomainError as exc:
            raise DomainError(f"iterate {k - 1} left the operator domain: {exc}") from exc
        step, done = _stepped(P_new, P, tol)
        P = P_new
        rec.add(P, greedy_gain(P, plant.n), step)
        if not np.isfinite(step) or np.linalg.norm(P) > DIVERGENCE_NORM:
            status = "diverged"
            break
        if done:
            status = "converged"
            break
    return IterationTrace("qvi", rec.records, status)


def run_qpi(plant: Plant, F0, max_iters: int = DEFAULT_MAX_ITERS, tol: float = DEFAULT_TOL,
            reference=None, weight=None) -> IterationTrace:
    """Q-function policy iteration from a stabilizing gain ``F0``.

    Record ``k`` holds the gain ``F_k`` and its Q-parameter ``P_k``; the next
    gain is the greedy gain of ``P_k``.

    Raises
    ------
    StabilityError
        If ``F0`` (or, numerically, a later greedy gain) is not stabilizing.
    """
    F = np.atleast_2d(np.asarray(F0, dtype=float))
    _require_stabilizing(plant, F, "initial gain")
    rec = _Recorder(_ref(reference, "Pstar"), weight)
    P = policy_eval_Q(plant, F)
    rec.add(P, F)
    status = "max-iters"
    for _ in range(max_iters):
        F = greedy_gain(P, plant.n)
        P_new = policy_eval_Q(plant, F)
        step, done = _stepped(P_new, P, tol)
        P = P_new
        rec.add(P, F, step)
        if done:
            status = "converged"
            break
    return IterationTrace("qpi", rec.records, status)


def run_vi(plant: Plant, X0, max_iters: int = DEFAULT_MAX_ITERS, tol: float = DEFAULT_TOL,
           reference=None) -> IterationTrace:
    """Riccati recursion (value iteration) from a PSD ``X0``."""
    X = symmetrize(np.atleast_2d(np.asarray(X0, dtype=float)))
    if X.shape != (plant.n, plant.n):
        raise DomainError(f"X0 must be {plant.n}x{plant.n}")
    rec = _Recorder(_ref(reference, "Xstar"), None)
    rec.add(X, riccati_gain(plant, X))
    status = "max-iters"
    for _ in range(max_iters):
        X_new = riccati_step(plant, X)
        step, done = _stepped(X_new, X, tol)
        X = X_new
        rec.add(X, riccati_gain(plant, X), step)
        if not np.isfinite(step) or np.linalg.norm(X) > DIVERGENCE_NORM:
            status = "diverged"
            break
        if done:
            status = "converged"
            break
    return IterationTrace("vi", rec.records, status)


def run_pi(plant: Plant, F0, max_iters: int = DEFAULT_MAX_ITERS, tol: float = DEFAULT_TOL,
           reference=None) -> IterationTrace:
    """Value-function policy iteration (Hewer's algorithm).

    Each gain is evaluated with ``X = Q + F^T R F + g (A + B F)^T X (A + B F)``
    and improved with :func:`riccati_gain`.
    """
    F = np.atleast_2d(np.asarray(F0, dtype=float))
    _require_stabilizing(plant, F, "initial gain")
    rec = _Recorder(_ref(reference, "Xstar"), None)
    X = policy_eval_value(plant, F)
    rec.add(X, F)
    status = "max-iters"
    for _ in range(max_iters):
        F = riccati_gain(plant, X)
        X_new = policy_eval_value(plant, F)
        step, done = _stepped(X_new, X, tol)
        X = X_new
        rec.add(X, F, step)
        if done:
            status = "converged"
            break
    return IterationTrace("pi", rec.records, status)


def run_two_phase(plant: Plant, F0, max_iters: int = DEFAULT_MAX_ITERS, tol: float = DEFAULT_TOL,
                  reference=None, weight=None, switch_gap: float = 0.5) -> IterationTrace:
    """Two-phase Q-value iteration seeded by a stabilizing gain.

    Phase 1 iterates ``D(P) = Lambda + I + gamma A(F0)^T P A(F0)`` from zero
    until the iterate is within ``switch_gap`` (spectral norm) of the fixed
    point ``P~``.  Because ``P~ >= P* + I``, the iterate then dominates
    ``P*`` and phase 2, plain Q-value iteration, converges geometrically.
    ``meta["switch_index"]`` is the record index where phase 2 starts.
    """
    F0 = np.atleast_2d(np.asarray(F0, dtype=float))
    _require_stabilizing(plant, F0, "initial gain")
    P_tilde = operator_D_fixed_point(plant, F0)
    d = plant.n + plant.m

    rec = _Recorder(_ref(reference, "Pstar"), weight)
    P = np.zeros((d, d))
    rec.add(P, F0)
    switched = False
    for _ in range(max_iters):
        P_new = operator_D(plant, F0, P)
        step, _ = _stepped(P_new, P, tol)
        P = P_new
        rec.add(P, F0, step)
        if spectral_norm(P - P_tilde) <= switch_gap:
            switched = True
            break
    if not switched:
        raise ConvergenceError("phase 1 did not approach its fixed point")
    switch_index = len(rec.records) - 1

    remaining = max(max_iters - switch_index, 1)
    phase2 = run_qvi(plant, P, remaining, tol, reference, weight)
    for r in phase2.records[1:]:
        rec.records.append(IterationRecord(
            len(rec.records), r.P, r.F, r.err2, r.errW, r.pos, r.neg, r.step))
    meta = {"switch_index": switch_index, "P_tilde": P_tilde}
    return IterationTrace("two_phase", rec.records, phase2.status, meta)


# ---------------------------------------------------------------------------
# Ground truth
# ---------------------------------------------------------------------------

def _are_residual(plant, X):
    return float(np.linalg.norm(riccati_step(plant, X) - X))


def solve_optimal(plant: Plant, tol: float = 1e-12, max_iters: int = 1_000_000) -> OptimalSolution:
    """Optimal ``(X*, P*, F*)`` by Riccati recursion from zero.

    The recursion runs until its relative step is below ``tol``; a few
    policy-evaluation (Newton) steps then polish the result while they
    reduce the ARE residual.  ``P*`` is assembled as
    ``[[Q + g A^T X A, g A^T X B], [g B^T X A, R + g B^T X B]]``.

    Raises
    ------
    ConvergenceError
        If the recursion does not settle, or residuals stay above
        ``1e-9 (1 + ||P*||_F)`` (typically a stabilizability or
        detectability failure).
    StabilityError
        If the resulting gain does not stabilize the discounted system.
    """
    X = np.zeros((plant.n, plant.n))
    for it in range(1, max_iters + 1):
        X_new = riccati_step(plant, X)
        step = np.linalg.norm(X_new - X)
        X = X_new
        if not np.isfinite(step) or np.linalg.norm(X) > 1e15:
            raise ConvergenceError("Riccati recursion diverged; plant violates the standing assumptions")
        if step <= tol * (1.0 + np.linalg.norm(X)):
            break
    else:
        raise ConvergenceError(f"Riccati recursion did not converge in {max_iters} steps")

    res = _are_residual(plant, X)
    for _ in range(5):
        F = riccati_gain(plant, X)
        if not is_stabilizing(plant, F):
            break
        X_try = policy_eval_value(plant, F)
        res_try = _are_residual(plant, X_try)
        if res_try >= res:
            break
        X, res = X_try, res_try

    A, B, g = plant.A, plant.B, plant.gamma
    Pstar = symmetrize(np.block([
        [plant.Q + g * A.T @ X @ A, g * A.T @ X @ B],
        [g * B.T @ X @ A, plant.R + g * B.T @ X @ B],
    ]))
    Fstar = riccati_gain(plant, X)
    chk = is_stabilizing(plant, Fstar)
    if not chk:
        raise StabilityError(f"optimal gain is not stabilizing (radius {chk.radius:.6g})")
    G = augment(plant, Fstar)
    bellman_res = float(np.linalg.norm(Pstar - lambda_matrix(plant) - g * G.T @ Pstar @ G))
    bound = 1e-9 * (1.0 + np.linalg.norm(Pstar))
    if res > bound or bellman_res > bound:
        raise ConvergenceError(f"residuals too large (ARE {res:.3g}, Bellman {bellman_res:.3g})")
    assert np.allclose(schur_value(Pstar, plant.n), X, rtol=1e-8, atol=1e-10)
    return OptimalSolution(X, Pstar, Fstar, res, bellman_res, chk.radius, it)
