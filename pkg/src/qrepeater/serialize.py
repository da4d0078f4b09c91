"""JSON encoding of states, ensembles and run results.

Complex numbers are ``[re, im]`` pairs; basis labels are readable strings
such as ``"L1:s, L2:s, R1:g, R2:g | H_D1@bin1:1"``.
"""

from __future__ import annotations

from .fock import Ensemble, JointState, ModeId


def state_to_json(state: JointState) -> dict:
    terms = [
        {"label": state.basis_label(k), "amplitude": [a.real, a.imag]}
        for k, a in sorted(state.terms.items())
    ]
    return {
        "memories": list(state.memories),
        "modes": [m.label for m in state.modes],
        "terms": terms,
        "norm_tracking": state.norm_tracking,
        "max_photons": state.max_photons,
    }


def state_from_json(data: dict) -> JointState:
    modes = [ModeId.parse(x) for x in data["modes"]]
    shell = JointState(modes, data["memories"], {}, 1.0, data.get("max_photons", 4))
    terms = {}
    for t in data["terms"]:
        re_, im = t["amplitude"]
        terms[shell.parse_basis_label(t["label"])] = complex(re_, im)
    return JointState(modes, data["memories"], terms, data.get("norm_tracking", 1.0), shell.max_photons)


def ensemble_to_json(ens: Ensemble) -> list:
    return [{"weight": w, "state": state_to_json(s)} for w, s in ens]


def ensemble_from_json(data: list) -> Ensemble:
    return Ensemble(tuple((c["weight"], state_from_json(c["state"])) for c in data))


def link_result_to_json(result) -> dict:
    outcomes = []
    for pat, o in sorted(result.outcomes.items(), key=lambda kv: kv[0].label):
        outcomes.append(
            {
                "pattern": pat.label,
                "kind": o.kind,
                "accepted": o.accepted,
                "probability": o.probability,
                "ensemble": ensemble_to_json(o.ensemble) if o.accepted else None,
            }
        )
    return {
        "acceptance_probability": result.acceptance_probability,
        "truncated_weight": result.truncated_weight,
        "accepted_mixture": ensemble_to_json(result.accepted_ensemble(corrected=True)),
        "outcomes": outcomes,
    }


def swap_result_to_json(result) -> dict:
    return {
        "acceptance_probability": result.acceptance_probability,
        "outer_nodes": list(result.outer),
        "fidelity": result.fidelity,
        "accepted": [
            {
                "pattern": o.pattern.label,
                "kind": o.kind,
                "probability": o.probability,
                "fidelity_to_target": o.fidelity_to_target,
                "ensemble": ensemble_to_json(o.ensemble),
            }
            for o in result.accepted()
        ],
        "rejected_probability": sum(o.probability for o in result.outcomes if not o.accepted),
    }
