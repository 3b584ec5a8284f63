"""Run the inequality battery and poke at two checks individually.

Every structural property the solver relies on is certified numerically:
transform exactness, interaction antisymmetry, energy balance, pointwise
convexity of the fractional operator, Lr decay, and the commutator
regression envelope.  Exit status mirrors the `sqgbox verify` command.
"""

import sys

import numpy as np

from sqgbox import DomainSpec, build_basis, commutator_diagnostic, cordoba_report
from sqgbox.experiments import random_field, verify_suite

basis = build_basis(DomainSpec(J=6))
f = random_field(basis, np.random.default_rng(5), decay=1.5,
                 norm_order=0.0, norm_value=1.0)

rpt = cordoba_report(f, r=4.0, s=1.0)
print("Pointwise convexity of the fractional operator (r=4, s=1):")
print(f"  min gap {rpt.worst_violation:.3e} >= -tol {rpt.tolerance:.3e} "
      f"(projection allowance {rpt.metadata['projection_allowance']:.3e})\n")

rec = commutator_diagnostic(f, alpha=0.5)
print("Commutator size for one field:")
print(f"  |[Laplacian, u.grad] theta|_L2 = {rec.lhs:.4f}, "
      f"normalized ratio {rec.ratio:.5f}\n")

print("Full battery:")
reports = verify_suite()
for report in reports:
    print(f"  {'PASS' if report.passed else 'FAIL'}  {report.name}")
failed = sum(not r.passed for r in reports)
print(f"\n{len(reports) - failed}/{len(reports)} checks passed")
sys.exit(3 if failed else 0)
