"""
The penalty weight trade-off
============================

The compiled instance blends the objective couplings against the one-hot
penalty with a weight lam.  Small lam gives the objective full resolution
but the solver's raw outputs rarely satisfy the constraints (the run then
falls back to a random selection); large lam makes almost every readout
feasible but washes out the objective's fine structure.  Somewhere in
between the solver matches exhaustive search at a vanishing fraction of its
cost.

A small paired sweep (same channels at every weight) makes the whole story
visible in one table.
"""

from cimsel import CimParams, ExperimentPlan, MimoConfig, sweep_lambda

plan = ExperimentPlan(
    config=MimoConfig(n_t=2, n_r=2, n_states=2),
    lambdas=(0.05, 0.2, 0.4, 0.6, 0.8, 0.95),
    cim=CimParams(steps=1000, n_anneals=100),
    n_instances=40,
    master_seed=11,
)
result = sweep_lambda(plan)

summary = {(s.method, s.lam): s for s in result.summaries}
es = summary[("es", plan.lambdas[0])].e_rho
norm = summary[("nsa", plan.lambdas[0])].e_rho
rand = summary[("rs", plan.lambdas[0])].e_rho

print(f"{plan.n_instances} channel instances, {plan.cim.n_anneals} anneals each\n")
print(f"{'lam':>5}  {'E[best]':>8}  {'E[avg]':>8}  {'P_c':>6}   vs optimum")
for lam in plan.lambdas:
    best = summary[("cim_best", lam)]
    avg = summary[("cim_avg", lam)]
    bar = "#" * int(round(40 * best.e_rho / es))
    print(f"{lam:>5}  {best.e_rho:>8.4f}  {avg.e_rho:>8.4f}  {best.p_c:>6.3f}   {bar}")

print(f"\nreference expectations: exhaustive {es:.4f} | norm-based {norm:.4f} "
      f"| random {rand:.4f}")
print("low weight -> infeasible readouts -> the run collapses onto random selection;")
print("high weight -> always feasible; the sweet spot tracks the optimum.")
