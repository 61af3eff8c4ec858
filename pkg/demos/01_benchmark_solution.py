"""Solve the three-state benchmark plant and print the optimal Q-parameter.

Run with ``python demos/01_benchmark_solution.py``.
"""

import numpy as np

from lqrdp import example_plant, solve_optimal

np.set_printoptions(precision=4, suppress=True)

plant = example_plant()
opt = solve_optimal(plant)

print("A =\n", plant.A)
print("B =\n", plant.B)
print("gamma =", plant.gamma)
print()
print("P* =\n", opt.Pstar)
print("F* =", opt.Fstar)
print("X* =\n", opt.Xstar)
w = np.linalg.eigvalsh(opt.Pstar)
print(f"closed-loop radius {opt.radius:.6f}")
print(f"eigenvalues of P*: min {w[0]:.3g}, max {w[-1]:.2f}")
print(f"Riccati residual {opt.are_residual:.2e}, Bellman residual {opt.bellman_residual:.2e}")
