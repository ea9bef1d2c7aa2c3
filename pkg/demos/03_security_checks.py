# Completeness bounds, sampling tails, attacks and real-vs-ideal distinguishers at small scale.
# Run: python3 demos/03_security_checks.py  (about a minute)
import numpy as np

from certdel.composable import DISTINGUISHERS, estimate_advantage, reports_to_csv
from certdel.experiments.attacks import attack_suite, random_certificate_deletion_only
from certdel.experiments.completeness import completeness_bounds, completeness_experiment
from certdel.experiments.parameters import ConstantsConfig, choose_parameters
from certdel.experiments.serfling import serfling_mc_check
from certdel.protocol import ProtocolParams

small = ProtocolParams(n=4, l=40, alpha=0.25, gamma=0.2, eps=0.05)

# %% Honest runs: the analytic bounds are loose at this size, the exact oracle is not
rep = completeness_experiment(small, 500, master_seed=1)
print("p_top", round(rep.p_top["value"], 3), "exact", round(rep.exact["p_top"], 3), "bounds", completeness_bounds(small))

# %% Sampling a test set: adversarial strings stay far below the tail bound
for gen in ("iid", "threshold-tuned"):
    r = serfling_mc_check(1000, 0.1, 0.1, gen, 20_000, master_seed=2)
    print(f"{gen:16s} event rate {r.frequency['value']:.4f}  exact {r.exact:.4f}  bound {r.bound:.2f}")

# %% Attacks on the deletion certificate
d = random_certificate_deletion_only(trials=50_000)
print("random certificates accepted:", d.acceptance["successes"], "of", d.trials, f"(oracle {d.oracle:.2e})")
for name in ("measure-early", "collude-classical"):
    a = attack_suite(small, name, 150, master_seed=4)
    print(f"{name:18s} p_top {a.p_top['value']:.3f} accepted {a.acceptance['value']:.3f}")

# %% Real protocol against ideal functionality + simulator
reps = [estimate_advantage("bob+eve", small, cls(d=0), 200, master_seed=5) for cls in DISTINGUISHERS.values()]
print(reports_to_csv(reps))

# %% How long would the protocol need to be? Very long.
p = choose_parameters(1e-3, 1e-3, 1e-3, 8, 0.001, 0.49, constants=ConstantsConfig(0.99, 0.99, 1.0, 1.0))
print(f"feasible={p.feasible} l={p.l:,} gamma={p.gamma:.5f}")
print("with default constants:", choose_parameters(1e-3, 1e-3, 1e-3, 8, 0.05, 0.25).binding, "is binding")
