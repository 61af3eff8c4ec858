"""Q-value iteration from the three benchmark starts.

Starting above P* gives a clean geometric rate close to the squared
closed-loop radius.  Starting at the smallest eigenvalue of P* crawls
first and only later speeds up.  The indefinite all-ones start loses its
positive error part after one step while the negative part lingers.
"""

import numpy as np

from lqrdp import example_plant, run_qvi, solve_optimal
from lqrdp.bounds import benchmark_starts, rate_classifier
from lqrdp.experiments import drop_indices, ratio_median

plant = example_plant()
opt = solve_optimal(plant)
starts = benchmark_starts(opt)

for name in ("lambda_max_scaled_identity", "lambda_min_scaled_identity"):
    tr = run_qvi(plant, starts[name], 10_000, 1e-14, opt)
    err = tr.metric("err2")
    rate = rate_classifier(tr)
    print(f"{name}: {len(tr) - 1} iterations, label {rate.label}")
    print(f"  median ratio on k=5..30: {ratio_median(err):.4f}  (radius^2 = {opt.radius ** 2:.4f})")
    print(f"  longest run of ratios above 0.97 early on: {rate.longest_slow_run}")
    print("  first errors:", np.array2string(err[:8], precision=3))

tr = run_qvi(plant, starts["indefinite_ones"], 10_000, 1e-14, opt)
pos, neg = tr.metric("pos"), tr.metric("neg")
ip, ineg = drop_indices(pos, neg)
print(f"indefinite start: positive part gone at k={ip}, negative part at k={ineg}")
