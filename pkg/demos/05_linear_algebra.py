"""The linear-algebra kernel: eigen routes, PSD splits, weights and norms."""

import numpy as np

from lqrdp.bounds import gelfand_N, lyapunov_conditions, lyapunov_weight
from lqrdp.linalg import psd_split, qr_eigvals, sym_eigen, weighted_norm

rng = np.random.default_rng(0)
M = rng.standard_normal((5, 5))
S = (M + M.T) / 2

print("Jacobi vs LAPACK eigenvalues:",
      np.abs(sym_eigen(S, "jacobi").values - sym_eigen(S).values).max())
print("QR vs LAPACK spectrum:",
      np.abs(np.sort_complex(qr_eigvals(M)) - np.sort_complex(np.linalg.eigvals(M))).max())

plus, minus = psd_split(S)
print("split reconstructs:", np.allclose(plus + minus, S))

# A Lyapunov weight for a non-normal stable matrix
G = np.array([[0.6, 3.0], [0.0, 0.5]])
w = lyapunov_weight(G, 0.1)
lyap, top = lyapunov_conditions(w, G)
print(f"weight: rate {w.rate:.3f}, condition {w.condition:.1f}, margins {lyap:.2e}, {top:.2e}")
print("Gelfand index for eps=0.1:", gelfand_N(G, 0.1))

# The weighted norm sqrt(lambda_max(X^T P X)) is not monotone in the PSD order
A = np.array([[2.0, 1.0], [1.0, 1.0]])
B = np.diag([1.0, 0.0])
u = np.array([1.0, -1.5])
P = np.outer(u, u) + 1e-4 * np.eye(2)
print(f"A >= B >= 0 but ||B||_P = {weighted_norm(B, P):.3f} > ||A||_P = {weighted_norm(A, P):.3f}")
