"""Swap two links at a station holding the inner nodes A and B.

The stored excitations are read out as photons, mixed on a four-port network
and counted by four number-resolving detectors. Coincidences D1&D2 or D3&D4
herald an L-R pair; every error component gives an odd number of photons or
never reaches those coincidences.
"""

from qrepeater.link import LinkConfig, psi_plus, run_link_exhaustive
from qrepeater.swap import link_error_states, pure, run_elementary_swap, run_higher_swap

la = run_link_exhaustive(LinkConfig(left="L", right="A")).accepted_ensemble(corrected=True)
br = run_link_exhaustive(LinkConfig(left="B", right="R")).accepted_ensemble(corrected=True)
print(f"each link: {len(la)} components, entangled weight {la.fidelity_to(psi_plus('L', 'A')):.4f}")

ideal = run_elementary_swap(pure(psi_plus("L", "A")), pure(psi_plus("B", "R")))
mixed = run_elementary_swap(la, br)
print(f"ideal inputs:  acceptance {ideal.acceptance_probability:.6f}, fidelity {ideal.fidelity:.12f}")
print(f"mixed inputs:  acceptance {mixed.acceptance_probability:.6f} = 1/{1 / mixed.acceptance_probability:.1f}, "
      f"fidelity {mixed.fidelity:.12f}")

print("\naccepted patterns for mixed inputs:")
for o in mixed.accepted():
    print(f"  {o.pattern.label:<12} probability {o.probability:.6f} fidelity {o.fidelity_to_target:.12f}")

leak = max(
    run_elementary_swap(pure(a), pure(b)).acceptance_probability
    for a in link_error_states("L", "A")
    for b in link_error_states("B", "R")
)
print(f"\nworst acceptance over the 16 error x error inputs: {leak:.1e}")

higher = run_higher_swap(pure(psi_plus("L", "A")), pure(psi_plus("B", "R")))
print(f"higher-level swap: acceptance {higher.acceptance_probability:.6f}, fidelity {higher.fidelity:.12f}")
for o in higher.accepted():
    print(f"  {o.pattern.label:<12} {o.kind:<6} probability {o.probability:.6f}")
