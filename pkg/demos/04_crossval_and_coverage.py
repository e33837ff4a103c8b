"""Cross-validation metrics and coverage diagnostics at toy scale.

Each replicate treats one reference row as the observation, refits
against the rest, and records the posterior median, 95% HPD interval and
the coverage p-value (posterior mass below the truth). Prediction error
and the MD index aggregate the medians; uniform p-values indicate a
calibrated posterior.
"""

import numpy as np

from stepturn import PriorSpec, SimConfig, coverage_report, cross_validate, generate_reference_table

sim = SimConfig(dt=0.5, min_obs=300)
print("building a 3000-row reference table...")
table = generate_reference_table(PriorSpec(), 3000, sim, seed=9, workers=2)

report = cross_validate(
    table,
    methods=("rejection", "loclinear"),
    epsilons=(0.1, 0.01),
    n_rep=40,
    seed=17,
    workers=2,
)

print(f"\n{'method':>10} {'eps':>6} {'param':>7} {'pred err':>9} {'MD':>7}")
for method in report.methods:
    for epsilon in report.epsilons:
        for param in ("kappa", "lambda"):
            print(f"{method:>10} {epsilon:6.3g} {param:>7} "
                  f"{report.prediction_error(method, epsilon, param):9.3f} "
                  f"{report.md_index(method, epsilon, param):7.3f}")

coverage = coverage_report(report)
print(f"\n{'method':>10} {'eps':>6} {'param':>7} {'coverage':>9} {'mean p':>7} {'KS p':>8}")
for key in sorted(coverage.coverage):
    method, epsilon, param = key
    print(f"{method:>10} {epsilon:6.3g} {param:>7} "
          f"{coverage.coverage[key]:9.2f} "
          f"{float(np.mean(coverage.p_values[key])):7.3f} "
          f"{coverage.ks_pvalue[key]:8.3g}")

print("\nsmaller epsilon shrinks the rejection error; the local-linear")
print("correction does better still, and its p-values sit closer to")
print("uniform (KS p-value further from 0) than raw rejection's.")
