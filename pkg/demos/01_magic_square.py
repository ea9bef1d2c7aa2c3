# Magic square boxes: ideal strategy, classical limit and noisy devices.
# Run: python3 demos/01_magic_square.py
import numpy as np

from certdel.devices import grid_invariant_errors, ideal_joint_table, measure_early_acceptance
from certdel.experiments.calibration import game_win_probability
from certdel.games import classical_value_bruteforce

# %% The operator grid behind the quantum strategy
print("grid deviations:", grid_invariant_errors())

# %% Best deterministic strategy pair wins 8 of the 9 questions
v = classical_value_bruteforce()
print(f"classical value {v.value} ({v.optimal_pairs} optimal pairs of {v.strategy_pairs})")

# %% Joint answer table of the shared state: each (x, y) row is uniform on 8 consistent answers
table = ideal_joint_table()
print("table shape", table.shape, "nonzero entries per input", np.count_nonzero(table[0, 0]))

# %% Empirical win rates
for eps in (0.0, 0.1, 0.2):
    r = game_win_probability(eps, 20_000, master_seed=1)
    print(f"eps={eps:.1f}: win {r.win['value']:.4f} (expected {1 - eps / 2:.4f})")

# %% Bob measuring column y' early and keeping the answers passes a deletion round with prob 2/3
print("measure-early per-round acceptance:", measure_early_acceptance())
