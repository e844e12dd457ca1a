"""One design step of the detection protocol.

After a random first cycle the posterior over the 15 hypotheses is still
vague.  WPSO picks the next waveform and RIS phases to push the predicted
echoes of likely hypotheses apart; compare its objective with the random
and MIMO-only alternatives.
"""
# %%
import numpy as np

from risradar.harness import design_snapshot, make_config, scheme_design
from risradar.objective import objective_upper_bound, total_objective
from risradar.wpso import run_wpso

cfg = make_config("desk")
snap = design_snapshot(cfg, seed=3)
print("posterior after one random cycle:")
for h, p in sorted(zip(snap.state.hypotheses, snap.state.probabilities), key=lambda t: -t[1])[:5]:
    print(f"  {str(h):8s} {p:.3f}")

# %% WPSO trace
problem = snap.problem()
design, trace = run_wpso(problem, snap.design, rng=np.random.default_rng(0))
for it, val, *times in trace.rows():
    print(f"iteration {it}: objective {val:10.3f}   step times {np.round(times, 4)}")
print("stopped:", trace.reason, "| bound:", objective_upper_bound(problem.n_hypotheses, cfg.power,
                                                                 cfg.sigma2).value)

# %% The same state under the other schemes
rng = np.random.default_rng(1)
rand, _ = scheme_design("random", 2, snap.state, snap.design, cfg, snap.channel, snap.dims, rng)
print(f"random design objective:   {total_objective(problem, rand.W, rand.s_t, rand.s_r):10.3f}")
print(f"WPSO design objective:     {total_objective(problem, design.W, design.s_t, design.s_r):10.3f}")
