"""Policy iteration in Q-form and value form, and the two-phase scheme.

Q-PI and value PI produce the same gains step for step.  The two-phase
scheme evaluates one gain exactly (plus an identity shift) to land above
P*, then switches to Q-value iteration.
"""

import numpy as np

from lqrdp import example_plant, run_pi, run_qpi, run_two_phase, solve_optimal
from lqrdp.bounds import rate_classifier

plant = example_plant()
opt = solve_optimal(plant)
F0 = opt.Fstar + 0.1

q = run_qpi(plant, F0, 100, 1e-14, opt)
v = run_pi(plant, F0, 100, 1e-14)
print("Q-PI errors:", np.array2string(q.metric("err2"), precision=3))
gap = max(np.abs(a.F - b.F).max() for a, b in zip(q, v))
print(f"largest gain gap between Q-PI and value PI: {gap:.2e}")

tp = run_two_phase(plant, F0, 10_000, 1e-14, opt)
s = tp.meta["switch_index"]
post = rate_classifier(tp.metric("err2")[s:])
print(f"two-phase: switched at k={s}, post-switch median ratio {np.median(post.ratios):.4f}")
