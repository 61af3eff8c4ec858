"""LQR problem data: plant, augmented dynamics, Q-parameter blocks, gains."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError, InvalidPlantError, StabilityError
from .linalg import is_psd, lambda_min, spectral_radius, symmetrize

__all__ = [
    "Plant",
    "StabilityCheck",
    "Trajectory",
    "augment",
    "lambda_matrix",
    "partition",
    "in_p_set",
    "greedy_gain",
    "schur_value",
    "is_stabilizing",
    "simulate",
    "closed_loop_cost",
    "example_plant",
    "scalar_plant",
    "random_plant",
]

# Membership slack for the set of PSD Q-parameters with P22 > 0.
P22_FLOOR = 1e-10


def _matrix(x, name) -> np.ndarray:
    a = np.atleast_2d(np.asarray(x, dtype=float))
    if a.ndim != 2:
        raise DimensionError(f"{name} must be a matrix, got ndim={a.ndim}")
    if not np.all(np.isfinite(a)):
        raise InvalidPlantError(f"{name} has non-finite entries")
    a = a.copy()
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Plant:
    """Discounted LQR instance ``x+ = A x + B u`` with stage cost weights.

    Parameters
    ----------
    A : (n, n) array_like
    B : (n, m) array_like
    Q : (n, n) array_like
        State weight, positive semidefinite.
    R : (m, m) array_like
        Input weight, positive definite.
    gamma : float
        Discount factor in ``(0, 1]``.
    """

    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    gamma: float = 1.0

    def __post_init__(self):
        A = _matrix(self.A, "A")
        B = _matrix(self.B, "B")
        Q = _matrix(self.Q, "Q")
        R = _matrix(self.R, "R")
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionError(f"A must be square, got {A.shape}")
        if B.shape[0] != n:
            raise DimensionError(f"B must have {n} rows, got {B.shape}")
        m = B.shape[1]
        if Q.shape != (n, n):
            raise DimensionError(f"Q must be {n}x{n}, got {Q.shape}")
        if R.shape != (m, m):
            raise DimensionError(f"R must be {m}x{m}, got {R.shape}")
        if not np.allclose(Q, Q.T, rtol=0, atol=1e-12 * (1 + np.abs(Q).max())):
            raise InvalidPlantError("Q must be symmetric")
        if not np.allclose(R, R.T, rtol=0, atol=1e-12 * (1 + np.abs(R).max())):
            raise InvalidPlantError("R must be symmetric")
        if not is_psd(Q):
            raise InvalidPlantError("Q must be positive semidefinite")
        if lambda_min(R) <= 0.0:
            raise InvalidPlantError("R must be positive definite")
        gamma = float(self.gamma)
        if not (0.0 < gamma <= 1.0):
            raise InvalidPlantError(f"gamma must lie in (0, 1], got {gamma}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "Q", _matrix(symmetrize(Q), "Q"))
        object.__setattr__(self, "R", _matrix(symmetrize(R), "R"))
        object.__setattr__(self, "gamma", gamma)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def __repr__(self):
        return f"Plant(n={self.n}, m={self.m}, gamma={self.gamma})"


def example_plant() -> Plant:
    """Two-state, one-input benchmark with a rank-one state weight.

    ``Q = 0.1 * ones(2, 2)``, ``R = 1000`` and ``gamma = 0.9``.  With these
    weights the optimum is ``F* = [-0.8068, -0.8912]`` and the discounted
    closed loop has spectral radius ``0.7006``.
    """
    A = [[0.4527, 0.9648], [0.9521, 0.6309]]
    B = [[0.2871], [0.5994]]
    return Plant(A, B, 0.1 * np.ones((2, 2)), [[1000.0]], 0.9)


def scalar_plant(a=1.0, b=1.0, q=1.0, r=1.0, gamma=1.0) -> Plant:
    """One-state, one-input plant; the defaults give ``X* = (1 + sqrt 5) / 2``."""
    return Plant([[a]], [[b]], [[q]], [[r]], gamma)


def random_plant(rng, n=None, m=None, gamma=None) -> Plant:
    """Random instance with ``n <= 4``, ``m <= 2`` and ``gamma`` in {0.8, 0.9, 1.0}.

    ``A`` is Gaussian rescaled to a spectral radius drawn from ``[0.5, 1.3]``
    so that open-loop unstable plants appear; ``Q = C^T C`` with a full-rank
    square ``C`` and ``R = D^T D + 0.1 I``.  Gaussian ``(A, B)`` is
    controllable with probability one.
    """
    rng = np.random.default_rng(rng)
    n = int(rng.integers(1, 5)) if n is None else n
    m = int(rng.integers(1, 3)) if m is None else m
    gamma = float(rng.choice([0.8, 0.9, 1.0])) if gamma is None else gamma
    A = rng.standard_normal((n, n))
    rad = spectral_radius(A)
    if rad > 0:
        A *= rng.uniform(0.5, 1.3) / rad
    B = rng.standard_normal((n, m))
    C = rng.standard_normal((n, n))
    D = rng.standard_normal((m, m))
    return Plant(A, B, C.T @ C, D.T @ D + 0.1 * np.eye(m), gamma)


def _gain(plant: Plant, F) -> np.ndarray:
    F = np.atleast_2d(np.asarray(F, dtype=float))
    if F.shape != (plant.m, plant.n):
        raise DimensionError(f"gain must be {plant.m}x{plant.n}, got {F.shape}")
    return F


def augment(plant: Plant, F) -> np.ndarray:
    """Augmented state-input dynamics ``[[A, B], [F A, F B]]``."""
    F = _gain(plant, F)
    A, B = plant.A, plant.B
    return np.block([[A, B], [F @ A, F @ B]])


def lambda_matrix(plant: Plant) -> np.ndarray:
    """Block-diagonal stage weight ``diag(Q, R)``."""
    n, m = plant.n, plant.m
    L = np.zeros((n + m, n + m))
    L[:n, :n] = plant.Q
    L[n:, n:] = plant.R
    return L


def partition(P, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split a Q-parameter into ``(P11, P12, P22)`` with ``P11`` of size n."""
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or not (0 < n < P.shape[0]):
        raise DimensionError(f"cannot partition {P.shape} at n={n}")
    return P[:n, :n], P[:n, n:], P[n:, n:]


def in_p_set(P, n: int) -> bool:
    """Membership in the PSD Q-parameters with positive definite ``P22``.

    Uses the slack ``lambda_min(P) >= -1e-8 (1 + lambda_max(P))`` and
    ``lambda_min(P22) >= 1e-10``.
    """
    P = symmetrize(P)
    w = np.linalg.eigvalsh(P)
    if w[0] < -1e-8 * (1.0 + max(w[-1], 0.0)):
        return False
    _, _, P22 = partition(P, n)
    return lambda_min(P22) >= P22_FLOOR


def greedy_gain(P, n: int) -> np.ndarray:
    """Minimizing gain ``-P22^{-1} P12^T`` of the quadratic Q-function ``P``."""
    _, P12, P22 = partition(P, n)
    if lambda_min(P22) <= P22_FLOOR:
        raise DomainError("P22 is singular; greedy gain undefined")
    return -np.linalg.solve(P22, P12.T)


def schur_value(P, n: int) -> np.ndarray:
    """Value-function matrix ``P11 - P12 P22^{-1} P12^T``."""
    P11, P12, P22 = partition(P, n)
    if lambda_min(P22) <= P22_FLOOR:
        raise DomainError("P22 is singular; Schur complement undefined")
    return symmetrize(P11 - P12 @ np.linalg.solve(P22, P12.T))


@dataclass(frozen=True)
class StabilityCheck:
    """Discounted closed-loop spectral radius of a gain; truthy iff < 1."""

    stable: bool
    radius: float
    augmented_radius: float

    def __bool__(self) -> bool:
        return self.stable


def is_stabilizing(plant: Plant, F) -> StabilityCheck:
    """Test ``rho(sqrt(gamma) (A + B F)) < 1``.

    The radius is also computed from the augmented matrix and reported as
    ``augmented_radius``; the two agree since ``A + B F`` and
    ``[[A, B], [F A, F B]]`` share their nonzero spectrum.
    """
    F = _gain(plant, F)
    g = math.sqrt(plant.gamma)
    rho = spectral_radius(g * (plant.A + plant.B @ F))
    rho_aug = spectral_radius(g * augment(plant, F))
    return StabilityCheck(bool(rho < 1.0), float(rho), float(rho_aug))


@dataclass(frozen=True)
class Trajectory:
    """Closed-loop run under ``u = F x`` from ``x(0) = z``."""

    states: np.ndarray  # (horizon + 1, n)
    inputs: np.ndarray  # (horizon, m)
    horizon: int
    z: np.ndarray


def simulate(plant: Plant, F, z, horizon: int) -> Trajectory:
    F = _gain(plant, F)
    z = np.asarray(z, dtype=float).reshape(plant.n)
    xs = np.empty((horizon + 1, plant.n))
    us = np.empty((horizon, plant.m))
    xs[0] = z
    for k in range(horizon):
        us[k] = F @ xs[k]
        xs[k + 1] = plant.A @ xs[k] + plant.B @ us[k]
    return Trajectory(xs, us, horizon, z)


def default_horizon(radius: float, floor: float = 1e-10) -> int:
    """Steps until ``radius**(2k)`` falls below ``floor``, with 4x slack for transients."""
    if radius <= 0.0:
        return 1
    k = math.log(floor) / (2.0 * math.log(radius))
    return int(min(4 * math.ceil(k) + 10, 1_000_000))


def closed_loop_cost(plant: Plant, F, z, horizon: int | None = None) -> float:
    """Truncated discounted cost ``sum_k gamma^k [x; F x]^T diag(Q, R) [x; F x]``.

    When ``horizon`` is omitted it is chosen from the discounted closed-loop
    radius so that the neglected tail is below about ``1e-10`` relative.
    """
    chk = is_stabilizing(plant, F)
    if not chk:
        raise StabilityError(f"gain is not stabilizing (radius {chk.radius:.6g})")
    if horizon is None:
        horizon = default_horizon(chk.radius)
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    traj = simulate(plant, F, z, horizon)
    x, u = traj.states[:-1], traj.inputs
    stage = np.einsum("ki,ij,kj->k", x, plant.Q, x) + np.einsum("ki,ij,kj->k", u, plant.R, u)
    disc = plant.gamma ** np.arange(horizon)
    return float(np.sum(disc * stage))
