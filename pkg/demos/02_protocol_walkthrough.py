# One encryption with certified deletion, end to end, then a deletion.
# Run: python3 demos/02_protocol_walkthrough.py
import numpy as np

from certdel.crypto import bits_to_str
from certdel.protocol import ProtocolParams, SabotageBob, run_protocol

params = ProtocolParams(n=4, l=40, alpha=0.25, gamma=0.2, eps=0.05)
m = np.array([1, 0, 1, 1], dtype=np.uint8)

# %% Bob keeps the ciphertext and decrypts (D = 0)
res = run_protocol(params, m, d=0, master_seed=1)
print("O =", res.outcome.O, " decrypted:", bits_to_str(res.outcome.M_tilde), " message:", bits_to_str(m))
print("test rounds:", res.outcome.match_counts["test"])
for ev in res.transcript.events[:6]:
    print(f"  {ev.time_tag:7s} {ev.sender:>5s} -> {ev.receiver:<5s} {ev.label}")
print(f"  ... {len(res.transcript.events)} events in total")

# %% Bob is asked to delete (D = 1): a valid certificate leaves him with 0^n
res = run_protocol(params, m, d=1, master_seed=1)
o = res.outcome
print("O =", o.O, " F =", o.F, " Bob's output:", bits_to_str(o.M_tilde))
print("deletion rounds:", o.match_counts["deletion"])

# %% A Bob who answers the test at random is caught before anything is sent
o = run_protocol(params, m, d=0, bob=SabotageBob(), master_seed=1).outcome
print("sabotage: O =", o.O, o.match_counts["test"])
