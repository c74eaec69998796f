"""
Inside the solver: amplitude dynamics and the anneal readout
============================================================

The solver integrates a network of soft-spin amplitudes x_i coupled through
the instance matrix, each paired with an error variable e_i that pushes its
squared amplitude toward a common target.  Below threshold the amplitudes
hover near zero; as the time-ramped coupling takes over they bifurcate into
a +/- pattern whose signs are the candidate spin solution.

This script follows one anneal step by step, then runs a batch of anneals
and compares the best decoded assignment against exhaustive search.
"""

import numpy as np

from cimsel import (
    CimParams,
    MimoConfig,
    compile_instance,
    decode_spins,
    exhaustive_search,
    generate_channel,
    init_state,
    objective,
    run_anneal,
    solve,
    step,
    substream,
)
from cimsel.formulation import InfeasibleDecode

config = MimoConfig(n_t=2, n_r=2, n_states=2)
g = generate_channel(config, seed=99)
inst = compile_instance(g, lam=0.7)
params = CimParams()  # reference constants: 1000 steps of dt = 0.01

# ---------------------------------------------------------------------------
# one anneal under the microscope
# ---------------------------------------------------------------------------
state = init_state(inst.dim, substream(1), params.init_scale)
print("step   max|x|    min e     max e")
for k in range(1, params.steps + 1):
    state = step(state, inst, params)
    if k in (1, 10, 100, 300, 500, 1000):
        print(f"{k:>4}  {np.abs(state.x).max():8.4f}  {state.e.min():8.4f}  {state.e.max():8.4f}")

spins = np.where(state.x >= 0, 1, -1)
decoded = decode_spins(spins, config)
print(f"\nfinal readout {spins} -> "
      f"{'infeasible' if isinstance(decoded, InfeasibleDecode) else decoded}")

# ---------------------------------------------------------------------------
# a trajectory: when does the readout settle?
# ---------------------------------------------------------------------------
outcome = run_anneal(inst, params, substream(2), record_every=100)
flips = [
    int(np.sum(a != b))
    for a, b in zip(outcome.trajectory[:-1], outcome.trajectory[1:])
]
print("\nreadout sign flips between consecutive samples (every 100 steps):", flips)

# ---------------------------------------------------------------------------
# many anneals: best decode vs the exhaustive optimum
# ---------------------------------------------------------------------------
outcomes = solve(inst, CimParams(n_anneals=100), master_seed=7)
best_obj, best_sel = -np.inf, None
n_feasible = 0
for out in outcomes:
    sel = decode_spins(out.spins, config)
    if isinstance(sel, InfeasibleDecode):
        continue
    n_feasible += 1
    val = objective(g, sel)
    if val > best_obj:
        best_obj, best_sel = val, sel

es = exhaustive_search(g)
print(f"\n{n_feasible}/100 anneals decoded feasible")
print(f"best decoded assignment: tx={best_sel.tx} rx={best_sel.rx}  objective {best_obj:.4f}")
print(f"exhaustive optimum:      tx={es.assignment.tx} rx={es.assignment.rx}  "
      f"objective {es.objective:.4f}")
print(f"solver reached {best_obj / es.objective:.2%} of the optimum")
