"""Entanglement swapping at a station holding the inner nodes A and B.

Retrieval turns ``A1``/``A2`` excitations into H/V photons on path ``A`` (same
for ``B``). The photons go through :func:`optics.swap_network` onto four
photon-number-resolving detectors. Nothing sits between retrieval and
detection: A and B share a location, so no channel disturbance is modelled.

Elementary swaps accept only a single photon in each of D1 and D2, or in each
of D3 and D4. Higher-level swaps, whose inputs are already error free, also
accept a double hit on one detector and apply a phase flip to the result.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

from . import optics
from .fock import (
    Ensemble,
    JointState,
    ModeId,
    apply_mode_map,
    drop_memories,
    excite_memory,
    make_vacuum,
    tensor,
    transfer_memory_to_mode,
    with_modes,
)
from .link import MINUS, PLUS, REJECTED, memory_labels, psi_plus, to_plus_form
from .noise import ClickPattern, DetectorModel, detect, loss

SWAP_DETECTORS = ("D1", "D2", "D3", "D4")
COINCIDENCES = (
    ClickPattern.of({("D1", None): 1, ("D2", None): 1}),
    ClickPattern.of({("D3", None): 1, ("D4", None): 1}),
)
DOUBLE_HITS = tuple(ClickPattern.of({(d, None): 2}) for d in SWAP_DETECTORS)


class NodeLabelError(ValueError):
    pass


def default_swap_detectors() -> dict[str, DetectorModel]:
    return {d: DetectorModel.pnr() for d in SWAP_DETECTORS}


def retrieve(state: JointState, node: str) -> JointState:
    """Map the node's stored excitations onto H/V photons on path ``node``.

    The memories return to g and are removed from the registry.
    """
    m1, m2 = memory_labels(node)
    h, v = ModeId(node, "H"), ModeId(node, "V")
    state = with_modes(state, [h, v])
    state = transfer_memory_to_mode(state, m1, h)
    state = transfer_memory_to_mode(state, m2, v)
    return drop_memories(state, [m1, m2])


def swap_rule(pattern: ClickPattern, higher: bool = False) -> str:
    if pattern in COINCIDENCES:
        return PLUS
    if higher and pattern in DOUBLE_HITS:
        return MINUS
    return REJECTED


@dataclass(frozen=True)
class SwapOutcome:
    accepted: bool
    kind: str
    pattern: ClickPattern
    ensemble: Ensemble
    probability: float
    fidelity_to_target: float


class SwapResult(NamedTuple):
    acceptance_probability: float
    outcomes: list
    outer: tuple

    def accepted(self) -> list[SwapOutcome]:
        return [o for o in self.outcomes if o.accepted]

    def accepted_ensemble(self) -> Ensemble:
        """Normalized outer-node mixture over accepted patterns, minus branch corrected."""
        comps = []
        for o in self.accepted():
            comps += [(w * o.probability, s) for w, s in o.ensemble]
        if not comps:
            return Ensemble()
        return Ensemble(tuple(comps)).normalized().merged()

    @property
    def fidelity(self) -> float:
        ens = self.accepted_ensemble()
        if ens.is_empty:
            return 0.0
        return ens.fidelity_to(psi_plus(*self.outer))

    def patterns(self) -> dict:
        return {o.pattern: o for o in self.outcomes}


def _outer_nodes(ens: Ensemble, inner: str) -> str:
    nodes = set()
    for _, s in ens:
        for m in s.memories:
            nodes.add(m[:-1])
    if inner not in nodes:
        raise NodeLabelError(f"inner node {inner!r} not among link memories {sorted(nodes)}")
    nodes.discard(inner)
    if len(nodes) != 1:
        raise NodeLabelError(f"expected one outer node besides {inner!r}, found {sorted(nodes)}")
    return nodes.pop()


def _run(
    left_link: Ensemble,
    right_link: Ensemble,
    inner: tuple[str, str],
    detectors,
    retrieval_efficiency: float,
    higher: bool,
    swap_map=None,
) -> SwapResult:
    a, b = inner
    outer = (_outer_nodes(left_link, a), _outer_nodes(right_link, b))
    if len({outer[0], outer[1], a, b}) != 4:
        raise NodeLabelError("swap inputs must involve four distinct nodes")
    detectors = default_swap_detectors() if detectors is None else detectors
    lmap = optics.swap_network(a, b) if swap_map is None else swap_map
    comps = []
    for w1, s1 in left_link:
        for w2, s2 in right_link:
            s = retrieve(retrieve(tensor(s1, s2), a), b)
            comps.append((w1 * w2, s))
    ens = Ensemble(tuple(comps))
    if retrieval_efficiency < 1:
        ens = loss(loss(ens, a, retrieval_efficiency), b, retrieval_efficiency)
    ens = ens.map(lambda s: apply_mode_map(s, lmap))
    target = psi_plus(*outer)
    outcomes = []
    total = 0.0
    for pat, cond, prob in detect(ens, detectors, SWAP_DETECTORS):
        kind = swap_rule(pat, higher)
        if kind == MINUS:
            cond = cond.map(lambda s: to_plus_form(s, outer[1]))
        accepted = kind != REJECTED
        fid = cond.fidelity_to(target) if accepted else 0.0
        outcomes.append(SwapOutcome(accepted, kind, pat, cond, prob, fid))
        if accepted:
            total += prob
    return SwapResult(total, outcomes, outer)


def run_elementary_swap(
    link_la: Ensemble,
    link_br: Ensemble,
    detectors=None,
    inner: tuple[str, str] = ("A", "B"),
    retrieval_efficiency: float = 1.0,
    swap_map=None,
) -> SwapResult:
    """First-level swap: accepts only the D1&D2 and D3&D4 single-photon coincidences."""
    return _run(link_la, link_br, inner, detectors, retrieval_efficiency, False, swap_map)


def run_higher_swap(
    link_left: Ensemble,
    link_right: Ensemble,
    detectors=None,
    inner: tuple[str, str] = ("A", "B"),
    retrieval_efficiency: float = 1.0,
    swap_map=None,
) -> SwapResult:
    """Swap of already purified links: single-detector double hits are kept too."""
    return _run(link_left, link_right, inner, detectors, retrieval_efficiency, True, swap_map)


def pure(state: JointState) -> Ensemble:
    return Ensemble(((1.0, state),))


def link_error_states(left: str, right: str) -> list[JointState]:
    """The four one-excitation-per-node products left over by bad link events."""
    l1, l2 = memory_labels(left)
    r1, r2 = memory_labels(right)
    vac = make_vacuum([], [l1, l2, r1, r2])
    return [excite_memory(excite_memory(vac, x), y) for x in (l1, l2) for y in (r1, r2)]
