"""Generate one elementary link and look at what the middle station heralds.

Four memories are pumped weakly; each emission leaves an H or V photon that is
time-bin encoded and sent to a 50:50 beam splitter between the nodes. Only
patterns with one click per time bin are kept.
"""

from qrepeater.fock import fidelity
from qrepeater.link import MINUS, PLUS, LinkConfig, psi_plus, run_link_exhaustive

cfg = LinkConfig(p=0.01)
result = run_link_exhaustive(cfg)

print(f"emission probability p = {cfg.p}")
print(f"acceptance probability  = {result.acceptance_probability:.3e}  (3 p^2 = {3 * cfg.p**2:.3e})")
print(f"weight dropped by truncation = {result.truncated_weight:.2e}\n")

for outcome in result.accepted():
    print(f"{outcome.pattern.label:<24} {outcome.kind:<6} probability {outcome.probability:.3e}")

for kind, sign in ((PLUS, 1), (MINUS, -1)):
    print(f"\n{kind} patterns, stored memory mixture:")
    target = psi_plus(sign=sign)
    for w, s in result.accepted_ensemble(kind):
        tag = "entangled pair" if fidelity(s, target) > 0.999 else "error product"
        print(f"  weight {w:.4f}  {tag:<15} {s!r}")

# the exact treatment keeps error events coherent and photons indistinguishable
coherent = run_link_exhaustive(cfg.replace(error_model="coherent"))
f = coherent.accepted_ensemble(PLUS).fidelity_to(psi_plus())
print(f"\ncoherent error model: overlap with psi+ is {f:.4f} instead of 1/3")
