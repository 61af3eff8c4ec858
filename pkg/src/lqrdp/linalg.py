"""Dense real matrix kernels.

Everything here works on small dense ``float64`` arrays (dimension rarely
above ten).  Two routes are provided for eigenvalues: LAPACK through numpy
(the default, used on hot paths) and self-contained cyclic Jacobi /
Hessenberg-QR routines (``method="jacobi"`` / ``method="qr"``) which serve
as independent cross-checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (
    ConvergenceError,
    DimensionError,
    NotPositiveDefiniteError,
    StabilityError,
)

__all__ = [
    "EigenDecomp",
    "OrderCheck",
    "symmetrize",
    "sym_eigen",
    "jacobi_eigh",
    "hessenberg",
    "qr_eigvals",
    "eigvals",
    "spectral_radius",
    "spectral_norm",
    "psd_tolerance",
    "is_psd",
    "psd_split",
    "matrix_leq",
    "weighted_norm",
    "fixed_point_linear_solve",
    "fixed_point_iterate",
]


class EigenDecomp(NamedTuple):
    """Ascending eigenvalues and the matching orthonormal eigenvectors."""

    values: np.ndarray
    vectors: np.ndarray


@dataclass(frozen=True)
class OrderCheck:
    """Outcome of a semidefinite comparison ``M1 <= M2``.

    Truthy iff the comparison holds.  ``margin`` is ``lambda_min(M2 - M1)``,
    so a negative margin measures the size of the violation.
    """

    holds: bool
    margin: float

    def __bool__(self) -> bool:
        return self.holds


def _as_square(M, name="matrix") -> np.ndarray:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")
    return M


def symmetrize(M) -> np.ndarray:
    """Return ``(M + M.T) / 2``."""
    M = np.asarray(M, dtype=float)
    return 0.5 * (M + M.T)


# ---------------------------------------------------------------------------
# Symmetric eigenproblem
# ---------------------------------------------------------------------------

def jacobi_eigh(M, tol: float = 1e-15, max_sweeps: int = 60) -> EigenDecomp:
    """Symmetric eigendecomposition by cyclic Jacobi rotations.

    Sweeps over all ``(p, q)`` pairs, annihilating ``A[p, q]`` with one
    plane rotation each, until the off-diagonal Frobenius mass drops below
    ``tol * ||M||_F``.

    Raises
    ------
    ConvergenceError
        If ``max_sweeps`` sweeps do not reach the tolerance.
    """
    A = symmetrize(_as_square(M))
    n = A.shape[0]
    V = np.eye(n)
    scale = np.linalg.norm(A)
    if n == 1 or scale == 0.0:
        return EigenDecomp(np.diag(A).copy(), V)

    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.hypot(1.0, tau))
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                J = np.array([[c, s], [-s, c]])
                idx = [p, q]
                A[:, idx] = A[:, idx] @ J
                A[idx, :] = J.T @ A[idx, :]
                A[p, q] = A[q, p] = 0.0
                V[:, idx] = V[:, idx] @ J
    else:
        raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")

    values = np.diag(A).copy()
    order = np.argsort(values, kind="stable")
    return EigenDecomp(values[order], V[:, order])


def sym_eigen(M, method: str = "lapack") -> EigenDecomp:
    """Eigendecomposition of a symmetric matrix, eigenvalues ascending.

    Parameters
    ----------
    M : array_like
        Symmetric matrix.  Only its symmetric part is used.
    method : {"lapack", "jacobi"}
        ``"lapack"`` calls ``numpy.linalg.eigh``; ``"jacobi"`` uses
        :func:`jacobi_eigh`.
    """
    M = symmetrize(_as_square(M))
    if method == "lapack":
        try:
            w, V = np.linalg.eigh(M)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
            raise ConvergenceError(str(exc)) from exc
        return EigenDecomp(w, V)
    if method == "jacobi":
        return jacobi_eigh(M)
    raise ValueError(f"unknown method {method!r}")


def _eigvalsh(M) -> np.ndarray:
    return np.linalg.eigvalsh(symmetrize(M))


def lambda_min(M) -> float:
    return float(_eigvalsh(M)[0])


def lambda_max(M) -> float:
    return float(_eigvalsh(M)[-1])


# ---------------------------------------------------------------------------
# General eigenvalues: Householder Hessenberg + shifted QR
# ---------------------------------------------------------------------------

def hessenberg(M) -> np.ndarray:
    """Upper Hessenberg form of ``M`` by Householder similarity transforms."""
    H = _as_square(M).copy()
    n = H.shape[0]
    for k in range(n - 2):
        x = H[k + 1:, k]
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        v = x.copy()
        v[0] += np.copysign(alpha, x[0])
        v /= np.linalg.norm(v)
        H[k + 1:, k:] -= 2.0 * np.outer(v, v @ H[k + 1:, k:])
        H[:, k + 1:] -= 2.0 * np.outer(H[:, k + 1:] @ v, v)
        H[k + 2:, k] = 0.0
    return H


def _givens(x: complex, y: complex) -> np.ndarray:
    r = np.hypot(abs(x), abs(y))
    if r == 0.0:
        return np.eye(2, dtype=complex)
    c, s = x / r, y / r
    return np.array([[np.conj(c), np.conj(s)], [-s, c]])


def qr_eigvals(M, max_iter: int = 200) -> np.ndarray:
    """All eigenvalues of a real square matrix via Hessenberg + shifted QR.

    Uses complex arithmetic with a Wilkinson shift from the trailing 2x2
    block, deflating whenever a subdiagonal entry becomes negligible.  An
    exceptional shift is taken every 11 iterations without deflation.

    Raises
    ------
    ConvergenceError
        If a single eigenvalue needs more than ``max_iter`` QR steps.
    """
    H = hessenberg(M).astype(complex)
    eps = np.finfo(float).eps
    hi = H.shape[0] - 1
    found = []
    its = 0
    while hi >= 0:
        lo = hi
        while lo > 0:
            if abs(H[lo, lo - 1]) <= eps * (abs(H[lo, lo]) + abs(H[lo - 1, lo - 1])):
                H[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            found.append(H[hi, hi])
            hi -= 1
            its = 0
            continue

        its += 1
        if its > max_iter:
            raise ConvergenceError("shifted QR did not converge")
        a, b = H[hi - 1, hi - 1], H[hi - 1, hi]
        c, d = H[hi, hi - 1], H[hi, hi]
        if its % 11 == 0:
            mu = d + abs(c)
        else:
            half = 0.5 * (a - d)
            disc = np.sqrt(half * half + b * c)
            mu1, mu2 = 0.5 * (a + d) + disc, 0.5 * (a + d) - disc
            mu = mu1 if abs(mu1 - d) < abs(mu2 - d) else mu2

        blk = H[lo:hi + 1, lo:hi + 1] - mu * np.eye(hi - lo + 1)
        rots = []
        for j in range(hi - lo):
            G = _givens(blk[j, j], blk[j + 1, j])
            blk[j:j + 2, j:] = G @ blk[j:j + 2, j:]
            blk[j + 1, j] = 0.0
            rots.append(G)
        for j, G in enumerate(rots):
            blk[:, j:j + 2] = blk[:, j:j + 2] @ G.conj().T
        H[lo:hi + 1, lo:hi + 1] = blk + mu * np.eye(hi - lo + 1)

    return np.array(found[::-1])


def eigvals(M, method: str = "lapack") -> np.ndarray:
    """Eigenvalues of a real square matrix (``"lapack"`` or ``"qr"``)."""
    M = _as_square(M)
    if method == "lapack":
        return np.linalg.eigvals(M)
    if method == "qr":
        return qr_eigvals(M)
    raise ValueError(f"unknown method {method!r}")


def spectral_radius(M, method: str = "lapack") -> float:
    """Largest eigenvalue modulus of a real square matrix."""
    return float(np.max(np.abs(eigvals(M, method=method))))


def spectral_norm(M) -> float:
    """Largest singular value."""
    return float(np.linalg.norm(np.atleast_2d(M), 2))


# ---------------------------------------------------------------------------
# Semidefinite cone
# ---------------------------------------------------------------------------

def psd_tolerance(M) -> float:
    """Default PSD slack ``1e-8 * (1 + max |lambda(M)|)``."""
    w = _eigvalsh(M)
    return 1e-8 * (1.0 + float(np.max(np.abs(w))))


def is_psd(M, tol: float | None = None) -> bool:
    """True iff ``lambda_min(M) >= -tol`` (default :func:`psd_tolerance`)."""
    M = _as_square(M)
    if tol is None:
        tol = psd_tolerance(M)
    return lambda_min(M) >= -tol


def psd_split(M) -> tuple[np.ndarray, np.ndarray]:
    """Split a symmetric matrix into its PSD and NSD parts.

    Returns ``(plus, minus)`` with ``plus = V max(D, 0) V^T`` and
    ``minus = V min(D, 0) V^T``, so ``plus + minus = M``.
    """
    w, V = sym_eigen(M)
    plus = symmetrize((V * np.maximum(w, 0.0)) @ V.T)
    minus = symmetrize((V * np.minimum(w, 0.0)) @ V.T)
    return plus, minus


def matrix_leq(M1, M2, tol: float = 1e-12) -> OrderCheck:
    """Check ``M1 <= M2`` in the semidefinite order."""
    M1 = _as_square(M1, "M1")
    M2 = _as_square(M2, "M2")
    if M1.shape != M2.shape:
        raise DimensionError(f"shape mismatch {M1.shape} vs {M2.shape}")
    margin = lambda_min(M2 - M1)
    return OrderCheck(bool(margin >= -tol), float(margin))


def weighted_norm(X, P) -> float:
    """``sqrt(lambda_max(X^T P X))`` for positive definite ``P``.

    With ``P = I`` this is the spectral norm.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    P = _as_square(P, "P")
    if X.shape[0] != P.shape[0]:
        raise DimensionError(f"X has {X.shape[0]} rows, P is {P.shape[0]}x{P.shape[0]}")
    if lambda_min(P) <= 0.0:
        raise NotPositiveDefiniteError("weight matrix must be positive definite")
    return float(np.sqrt(max(lambda_max(X.T @ P @ X), 0.0)))


# ---------------------------------------------------------------------------
# Stein / discrete Lyapunov fixed points  P = C + G^T P G
# ---------------------------------------------------------------------------

def _stein_operator(G: np.ndarray) -> np.ndarray:
    """Matrix of ``S -> S - G^T S G`` on upper-triangle coordinates."""
    d = G.shape[0]
    iu, ju = np.triu_indices(d)
    # K[a, b, i, j] = G[i, a] G[j, b] is the coefficient of S[i, j] in (G^T S G)[a, b]
    K = np.einsum("ia,jb->abij", G, G)
    sym = K + np.swapaxes(K, 2, 3)
    cols = np.where(iu == ju, K[:, :, iu, ju], sym[:, :, iu, ju])
    return np.eye(iu.size) - cols[iu, ju, :]


def _from_coords(s: np.ndarray, d: int) -> np.ndarray:
    S = np.zeros((d, d))
    S[np.triu_indices(d)] = s
    return S + np.triu(S, 1).T


def fixed_point_iterate(G, C, n_iter: int = 500, P0=None) -> np.ndarray:
    """Run ``P <- C + G^T P G`` for ``n_iter`` steps (default start ``C``)."""
    G = _as_square(G, "G")
    C = symmetrize(_as_square(C, "C"))
    P = C.copy() if P0 is None else symmetrize(P0)
    for _ in range(n_iter):
        P = symmetrize(C + G.T @ P @ G)
    return P


def fixed_point_linear_solve(G, C, method: str = "vectorized") -> np.ndarray:
    """Unique symmetric solution of ``P = C + G^T P G`` for Schur ``G``.

    Parameters
    ----------
    G : array_like
        Square matrix with spectral radius below one.
    C : array_like
        Symmetric right-hand side of the same size.
    method : {"vectorized", "iterate"}
        ``"vectorized"`` solves the ``d(d+1)/2`` linear system on the
        upper-triangle coordinates (plus one refinement step);
        ``"iterate"`` runs the fixed-point recursion to stagnation.

    Raises
    ------
    StabilityError
        If ``rho(G) >= 1``.
    """
    G = _as_square(G, "G")
    C = symmetrize(_as_square(C, "C"))
    if G.shape != C.shape:
        raise DimensionError(f"shape mismatch {G.shape} vs {C.shape}")
    rho = spectral_radius(G)
    if rho >= 1.0:
        raise StabilityError(f"fixed point requires rho(G) < 1, got {rho:.6g}")
    d = G.shape[0]

    if method == "vectorized":
        L = _stein_operator(G)
        iu = np.triu_indices(d)
        P = _from_coords(np.linalg.solve(L, C[iu]), d)
        resid = symmetrize(C + G.T @ P @ G - P)
        P = P + _from_coords(np.linalg.solve(L, resid[iu]), d)
        return symmetrize(P)

    if method == "iterate":
        P = C.copy()
        cap = 200_000
        for _ in range(cap):
            Pn = symmetrize(C + G.T @ P @ G)
            step = np.linalg.norm(Pn - P)
            P = Pn
            if step <= 1e-15 * (1.0 + np.linalg.norm(P)):
                return P
        raise ConvergenceError("fixed-point iteration did not stagnate")

    raise ValueError(f"unknown method {method!r}")
