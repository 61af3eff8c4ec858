"""Check every convergence bound along benchmark traces.

Each report section lists per-iteration margins; a margin below the
tolerance is a violated bound.  The weighted-norm decay sections
(``thm3``, ``thm3_step``) fail on this plant while the gauge variant
(``thm3_gauge``) holds; see README for why.
"""

from lqrdp import example_plant, solve_optimal
from lqrdp.bounds import certify, benchmark_starts

plant = example_plant()
opt = solve_optimal(plant)
starts = benchmark_starts(opt)

for name in ("lambda_max_scaled_identity", "lambda_min_scaled_identity"):
    rep = certify(plant, starts[name], F0=opt.Fstar + 0.1, optimal=opt, eps=0.1)
    print(name)
    for sec_name, sec in rep.sections.items():
        if not sec.applicable:
            print(f"  {sec_name:14s} n/a   ({sec.note})")
            continue
        verdict = "ok  " if sec.passed else "FAIL"
        print(f"  {sec_name:14s} {verdict}  min margin {sec.min_margin:+.3e} over k={sec.checked_range}")
