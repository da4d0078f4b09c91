"""Elementary entanglement generation between two neighbouring nodes.

Each node holds two single-photon memories: ``<node>1`` emits an H photon and
``<node>2`` a V photon into the node's channel. Photons are time-bin encoded,
disturbed by a collective Jones matrix and a path phase, attenuated, and
interfered on a 50:50 beam splitter whose outputs feed threshold detectors
D1 and D2 with bin resolution.

A pattern is accepted when exactly two clicks occur, one in each time-bin:
``plus`` if they are on different detectors, ``minus`` if on the same one.

Two models of the two-excitation error events are available:

``incoherent`` (default)
    The emission is split into independent components. The correct sector
    (both excitations on one node, superposed over the two nodes) stays
    coherent. Each cross-node error event is its own component, and its two
    photons carry different tags, so they never interfere: after random
    channel disturbance their polarization states are unpredictable.
``coherent``
    The full emission superposition is propagated as one pure state.
    In this mode the noiseless error photons interfere at the beam splitter,
    and the accepted mixture depends on the channel disturbance; only the
    correct sector is disturbance-free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import optics
from .fock import (
    Ensemble,
    JointState,
    ModeId,
    apply_mode_map,
    create_photon,
    excite_memory,
    make_vacuum,
    memory_phase,
    modes_on,
)
from .noise import (
    ClickPattern,
    DetectorModel,
    JonesUnitary,
    collective_pol_unitary,
    detect,
    loss,
    path_phase,
    sample_outcome,
)

PLUS = "plus"
MINUS = "minus"
REJECTED = "rejected"

LINK_DETECTORS = ("D1", "D2")


def memory_labels(node: str) -> tuple[str, str]:
    return f"{node}1", f"{node}2"


def default_link_detectors() -> dict[str, DetectorModel]:
    return {d: DetectorModel.threshold() for d in LINK_DETECTORS}


@dataclass(frozen=True, eq=False)
class LinkConfig:
    p: float = 0.01
    noise_left: JonesUnitary = field(default_factory=JonesUnitary.identity)
    noise_right: JonesUnitary = field(default_factory=JonesUnitary.identity)
    phase_left: float = 0.0
    phase_right: float = 0.0
    transmittance: float = 1.0
    detectors: dict = field(default_factory=default_link_detectors)
    error_model: str = "incoherent"
    weighting: str = "exact"
    encoder_loss: bool = False
    left: str = "L"
    right: str = "R"

    def __post_init__(self):
        if not 0 <= self.p < 1:
            raise ValueError("emission probability p must lie in [0, 1)")
        if self.weighting == "exact" and 4 * self.p + 6 * self.p**2 > 1:
            raise ValueError("p too large for the truncated emission state (4p + 6p^2 > 1)")
        if self.weighting not in ("exact", "product"):
            raise ValueError(f"unknown weighting {self.weighting!r}")
        if self.error_model not in ("incoherent", "coherent"):
            raise ValueError(f"unknown error_model {self.error_model!r}")
        if not 0 <= self.transmittance <= 1:
            raise ValueError("transmittance must lie in [0, 1]")
        if self.left == self.right:
            raise ValueError("link nodes must differ")
        missing = set(LINK_DETECTORS) - set(self.detectors)
        if missing:
            raise ValueError(f"missing detector models: {sorted(missing)}")

    def replace(self, **kw) -> LinkConfig:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d.update(kw)
        return LinkConfig(**d)


def _amplitudes(p: float, weighting: str) -> tuple[float, float, float]:
    """(vacuum, single-excitation, two-excitation) amplitudes."""
    if weighting == "exact":
        return math.sqrt(1 - 4 * p - 6 * p * p), math.sqrt(p), p
    q = 1 - p
    return q * q, math.sqrt(p) * q**1.5, p * q


def truncated_weight(p: float) -> float:
    """Probability of three or more emissions among four independent memories."""
    return 4 * p**3 * (1 - p) + p**4


def _link_modes(left, right):
    return modes_on(left) + modes_on(right)


def _emitters(left, right):
    l1, l2 = memory_labels(left)
    r1, r2 = memory_labels(right)
    return [
        (l1, ModeId(left, "H")),
        (l2, ModeId(left, "V")),
        (r1, ModeId(right, "H")),
        (r2, ModeId(right, "V")),
    ]


def _excite(state, pairs):
    for mem, mode in pairs:
        state = create_photon(excite_memory(state, mem), mode)
    return state


def emission_state(p: float, left: str = "L", right: str = "R", weighting: str = "exact") -> JointState:
    """Four memories pumped together, kept up to two excitations.

    vacuum + sqrt(p) * (four single emissions) + p * (six emission pairs).
    With ``weighting="exact"`` those amplitudes are exact and the vacuum
    amplitude normalizes the state; ``'product'`` uses the amplitudes of four
    independent emitters, leaving the truncated weight missing.
    """
    a0, a1, a2 = _amplitudes(p, weighting)
    em = _emitters(left, right)
    mems = [m for m, _ in em]
    vac = make_vacuum(_link_modes(left, right), mems)
    state = vac.scaled(a0)
    for e in em:
        state = state + _excite(vac, [e]).scaled(a1)
    for i in range(4):
        for j in range(i + 1, 4):
            state = state + _excite(vac, [em[i], em[j]]).scaled(a2)
    return state


def emission_components(p: float, left: str = "L", right: str = "R", weighting: str = "exact") -> Ensemble:
    """The emission split into independent events (incoherent error model).

    The cross-node pairs carry tags ``x`` (left photon) and ``y`` (right photon).
    """
    a0, a1, a2 = _amplitudes(p, weighting)
    em = _emitters(left, right)
    mems = [m for m, _ in em]
    modes = _link_modes(left, right)
    vac = make_vacuum(modes, mems)
    comps = [(a0 * a0, vac)]
    comps += [(a1 * a1, _excite(vac, [e])) for e in em]
    correct = _excite(vac, em[:2]) + _excite(vac, em[2:])
    comps.append((2 * a2 * a2, correct.normalized()))
    tagged = [m.retag("x") for m in modes_on(left)] + [m.retag("y") for m in modes_on(right)]
    tvac = make_vacuum(tagged, mems)
    for i in (0, 1):
        for j in (2, 3):
            (mi, pi), (mj, pj) = em[i], em[j]
            comps.append((a2 * a2, _excite(tvac, [(mi, pi.retag("x")), (mj, pj.retag("y"))])))
    return Ensemble(tuple((w, s) for w, s in comps if w > 0))


def correct_pair_state(left: str = "L", right: str = "R") -> JointState:
    """Unnormalized correct sector: both emissions on one node, either node."""
    em = _emitters(left, right)
    vac = make_vacuum(_link_modes(left, right), [m for m, _ in em])
    return _excite(vac, em[:2]) + _excite(vac, em[2:])


def psi_plus(left: str = "L", right: str = "R", sign: int = 1) -> JointState:
    """(S_{l1} S_{l2} +/- S_{r1} S_{r2})|g>/sqrt2 on the memories only."""
    l1, l2 = memory_labels(left)
    r1, r2 = memory_labels(right)
    vac = make_vacuum([], [l1, l2, r1, r2])
    ll = excite_memory(excite_memory(vac, l1), l2)
    rr = excite_memory(excite_memory(vac, r1), r2)
    return (ll + rr.scaled(sign)).scaled(1 / math.sqrt(2))


def encode(state: JointState, config: LinkConfig) -> JointState:
    for node in (config.left, config.right):
        state = apply_mode_map(state, optics.timebin_encoder(node))
    return state


def propagate_channels(state: JointState, config: LinkConfig) -> JointState:
    """Collective Jones disturbance then path phase on each channel."""
    state = collective_pol_unitary(state, config.left, config.noise_left)
    state = collective_pol_unitary(state, config.right, config.noise_right)
    state = path_phase(state, config.left, config.phase_left)
    return path_phase(state, config.right, config.phase_right)


def middle_station(state: JointState, config: LinkConfig) -> JointState:
    # right channel is transmitted to D1, left channel to D2
    bs = optics.bs50(config.right, config.left, "D1", "D2", bins=(1, 2))
    return apply_mode_map(state, bs)


def predetection(state: JointState, config: LinkConfig) -> JointState:
    """Photonic state just before the detectors, ignoring loss."""
    return middle_station(propagate_channels(encode(state, config), config), config)


def predetection_ensemble(config: LinkConfig) -> Ensemble:
    if config.error_model == "coherent":
        src = Ensemble(((1.0, emission_state(config.p, config.left, config.right, config.weighting)),))
    else:
        src = emission_components(config.p, config.left, config.right, config.weighting)
    ens = src.map(lambda s: propagate_channels(encode(s, config), config))
    # photons leaving the Michelson encoder backwards never reach the station
    t = config.transmittance * (0.5 if config.encoder_loss else 1.0)
    for node in (config.left, config.right):
        ens = loss(ens, node, t)
    return ens.map(lambda s: middle_station(s, config))


def acceptance_rule(pattern: ClickPattern) -> str:
    """Classify a middle-station click pattern as plus, minus or rejected."""
    counts = pattern.as_dict()
    if pattern.total != 2 or len(counts) != 2 or any(n != 1 for n in counts.values()):
        return REJECTED
    (d1, b1), (d2, b2) = sorted(counts, key=lambda s: (s[1] is None, s[1] or 0, s[0]))
    if b1 != 1 or b2 != 2:
        return REJECTED
    return MINUS if d1 == d2 else PLUS


@dataclass(frozen=True)
class LinkOutcome:
    accepted: bool
    kind: str
    pattern: ClickPattern
    ensemble: Ensemble
    probability: float


class LinkResult(NamedTuple):
    acceptance_probability: float
    outcomes: dict
    truncated_weight: float
    config: LinkConfig

    def accepted(self, kind: str | None = None) -> list[LinkOutcome]:
        return [
            o for o in self.outcomes.values()
            if o.accepted and (kind is None or o.kind == kind)
        ]

    def accepted_ensemble(self, kind: str | None = None, corrected: bool = False) -> Ensemble:
        """Normalized memory mixture over the accepted patterns of ``kind``.

        With ``corrected`` the minus outcomes get the local phase flip that
        maps their correct component onto the plus form.
        """
        comps = []
        for o in self.accepted(kind):
            ens = o.ensemble
            if corrected and o.kind == MINUS:
                ens = ens.map(lambda s: to_plus_form(s, self.config.right))
            comps += [(w * o.probability, s) for w, s in ens]
        if not comps:
            return Ensemble()
        return Ensemble(tuple(comps)).normalized().merged()

    def sample(self, rng: np.random.Generator) -> LinkOutcome:
        return sample_outcome(list(self.outcomes.values()), rng)


def to_plus_form(state: JointState, node: str) -> JointState:
    """Local pi phase on one memory of ``node``: flips the sign of its double excitation."""
    return memory_phase(state, memory_labels(node)[0], math.pi)


def run_link_exhaustive(config: LinkConfig) -> LinkResult:
    """Every click pattern of one link attempt with its conditional memory mixture."""
    ens = predetection_ensemble(config)
    outcomes = {}
    total = 0.0
    for pat, cond, prob in detect(ens, config.detectors, LINK_DETECTORS):
        kind = acceptance_rule(pat)
        accepted = kind != REJECTED
        outcomes[pat] = LinkOutcome(accepted, kind, pat, cond, prob)
        if accepted:
            total += prob
    return LinkResult(total, outcomes, truncated_weight(config.p), config)


def run_link_sampled(config: LinkConfig, rng: np.random.Generator, exhaustive: LinkResult | None = None) -> LinkOutcome:
    """One attempt drawn from the exhaustive distribution."""
    res = run_link_exhaustive(config) if exhaustive is None else exhaustive
    return res.sample(rng)


def sample_acceptances(result: LinkResult, rng: np.random.Generator, size: int) -> np.ndarray:
    """Boolean array of ``size`` independent accept/reject draws."""
    outs = list(result.outcomes.values())
    probs = np.array([o.probability for o in outs])
    idx = rng.choice(len(outs), size=size, p=probs / probs.sum())
    acc = np.array([o.accepted for o in outs])
    return acc[idx]
