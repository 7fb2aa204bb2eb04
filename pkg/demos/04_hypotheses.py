"""Checking the hypotheses on the worked example.

The majorant hypothesis asks for integrability of q and q*u along the
envelope.  The solvability hypothesis compares a ratio built from chi_R
with 1.  The ratio scales like lambda^(-1/10), so lambda = 1e-16 passes
and lambda = 1e-12 does not.
"""

# %%
from fracsbvp.problem import check_hypotheses, compute_chi, example_problem

for lam in (1e-16, 1e-14, 1e-12):
    rep = check_hypotheses(example_problem(lam=lam))
    print(f"lambda={lam:.0e}  ratio={rep.a2_ratio:.5f}  "
          f"(factor-1 variant {rep.a2_ratio_factor1:.5f})  passed={rep.passed}")

# %% chi_1 at lambda = 1 and the selected epsilon
unit = example_problem(lam=1.0)
print("chi_1 =", compute_chi(unit, 1.0))
rep = check_hypotheses(example_problem(lam=1e-16))
print("epsilon =", rep.epsilon)
for note in rep.notes:
    print("note:", note)
