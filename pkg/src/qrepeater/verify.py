"""End-to-end checks of every state transformation and probability of the protocol.

Each check compares a simulated quantity with an independently written
expectation and reports ``(id, expected, computed, tolerance, passed)``.
The expected photonic polynomials are written out by hand, term by term,
and never produced by the simulator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.stats import unitary_group

from . import optics
from .fock import (
    JointState,
    ModeId,
    apply_mode_map,
    create_photon,
    excite_memory,
    fidelity,
    make_vacuum,
    restrict,
)
from .link import (
    MINUS,
    PLUS,
    LinkConfig,
    correct_pair_state,
    predetection,
    psi_plus,
    run_link_exhaustive,
)
from .noise import JonesUnitary, sample_jones
from .swap import link_error_states, pure, run_elementary_swap, run_higher_swap


@dataclass(frozen=True)
class Check:
    id: str
    expected: float
    computed: float
    tolerance: float
    passed: bool

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return (
            f"{flag}  {self.id:<34} expected={self.expected:.12g} "
            f"computed={self.computed:.12g} tol={self.tolerance:.0e}"
        )


def _close(cid, expected, computed, tol) -> Check:
    return Check(cid, float(expected), float(computed), tol, abs(computed - expected) <= tol)


def _below(cid, computed, tol) -> Check:
    return Check(cid, 0.0, float(computed), tol, computed < tol)


def _photons(state: JointState, *modes) -> JointState:
    for m in modes:
        state = create_photon(state, m)
    return state


def expected_encoder_output(path: str = "L") -> JointState:
    """H V pair after the encoder: [(H1 V1 - H2 V2) + (H1 V2 - V1 H2)] / 2."""
    h1, v1, h2, v2 = (ModeId(path, p, b) for b, p in ((1, "H"), (1, "V"), (2, "H"), (2, "V")))
    vac = make_vacuum([h1, v1, h2, v2], [])
    out = _photons(vac, h1, v1) - _photons(vac, h2, v2) + _photons(vac, h1, v2) - _photons(vac, v1, h2)
    return out.scaled(0.5)


def expected_station_output(left="L", right="R") -> JointState:
    """Bin-mixed detector state of the correct sector after the middle beam splitter."""
    d = {(det, pol, b): ModeId(det, pol, b) for det in ("D1", "D2") for pol in "HV" for b in (1, 2)}
    l1, l2, r1, r2 = f"{left}1", f"{left}2", f"{right}1", f"{right}2"
    vac = make_vacuum(list(d.values()), [l1, l2, r1, r2])
    ll = excite_memory(excite_memory(vac, l1), l2)
    rr = excite_memory(excite_memory(vac, r1), r2)
    minus, plus = ll - rr, ll + rr

    def pair(st, a, b):
        return _photons(st, d[a], d[b])

    same = (
        pair(minus, ("D1", "H", 1), ("D1", "V", 2)).scaled(-1)
        + pair(minus, ("D1", "V", 1), ("D1", "H", 2))
        + pair(minus, ("D2", "H", 1), ("D2", "V", 2))
        - pair(minus, ("D2", "V", 1), ("D2", "H", 2))
    )
    cross = (
        pair(plus, ("D1", "H", 1), ("D2", "V", 2))
        + pair(plus, ("D2", "H", 1), ("D1", "V", 2))
        - pair(plus, ("D1", "V", 1), ("D2", "H", 2))
        - pair(plus, ("D2", "V", 1), ("D1", "H", 2))
    )
    return (same + cross.scaled(1j)).scaled(1 / (2 * math.sqrt(2)))


def _bin_mixed(occ: dict) -> bool:
    bins = [m.bin for m, n in occ.items() for _ in range(n)]
    return sorted(bins) == [1, 2]


def link_checks(noise_trials: int = 50, seed: int = 7) -> list[Check]:
    out = []
    vac = make_vacuum([ModeId("L", "H"), ModeId("L", "V")], [])
    hv = _photons(vac, ModeId("L", "H"), ModeId("L", "V"))
    enc = apply_mode_map(hv, optics.timebin_encoder("L"))
    out.append(_close("encoder: H V pair output fidelity", 1, fidelity(enc, expected_encoder_output()), 1e-10))
    mixed = restrict(enc, _bin_mixed)
    psi_m = expected_encoder_output()
    psi_m = restrict(psi_m, _bin_mixed)
    out.append(_close("encoder: bin-mixed weight", 0.5, mixed.norm2(), 1e-12))
    out.append(_close("encoder: bin-mixed part is psi-", 1, fidelity(mixed, psi_m), 1e-10))

    cfg = LinkConfig(p=0.01)
    pre = predetection(correct_pair_state(), cfg)
    out.append(
        _close("station: correct-sector output", 1,
               fidelity(restrict(pre, _bin_mixed), expected_station_output()), 1e-10)
    )

    res = run_link_exhaustive(cfg)
    for kind, sign in ((PLUS, 1), (MINUS, -1)):
        ens = res.accepted_ensemble(kind)
        target = psi_plus(sign=sign)
        corr = [w for w, s in ens if fidelity(s, target) > 1 - 1e-9]
        errs = sorted(w for w, s in ens if fidelity(s, target) < 1e-9)
        out.append(_close(f"link {kind}: correct weight", 1 / 3, sum(corr), 1e-10))
        out.append(_close(f"link {kind}: error count", 4, len(errs), 0))
        for i, w in enumerate(errs):
            out.append(_close(f"link {kind}: error weight {i}", 1 / 6, w, 1e-10))
    out.append(_close("two links both correct", 1 / 9, (1 / 3) ** 2, 1e-12))

    base = res.acceptance_probability
    p2 = run_link_exhaustive(LinkConfig(p=1e-3)).acceptance_probability
    out.append(_close("link acceptance ~ p^2 exponent", 2, math.log(base / p2) / math.log(10), 1e-3))

    rng = np.random.default_rng(seed)
    worst_p, worst_f = 0.0, 0.0
    ref = res.accepted_ensemble(PLUS)
    for _ in range(noise_trials):
        phi = rng.uniform(0, 2 * math.pi)
        noisy = cfg.replace(
            noise_left=sample_jones(rng), noise_right=sample_jones(rng),
            phase_left=phi, phase_right=phi,
        )
        r = run_link_exhaustive(noisy)
        worst_p = max(worst_p, abs(r.acceptance_probability - base))
        ens = r.accepted_ensemble(PLUS)
        worst_f = max(worst_f, 1 - ens.fidelity_to(psi_plus()) * 3)
        worst_p = max(worst_p, abs(sorted(ens.weights) - np.array(sorted(ref.weights))).max())
    out.append(_below("link noise: probability/weight drift", worst_p, 1e-10))
    out.append(_below("link noise: correct-component loss", abs(worst_f), 1e-9))
    return out


def swap_checks(swap_matrix=None, noise_trials: int = 50, seed: int = 11) -> list[Check]:
    out = []
    lmap = optics.swap_network(matrix=swap_matrix, validate=False)
    fid, leak = optics.swap_network_residuals(lmap)
    out.append(_close("swap network: correct-case polynomial", 1, fid, 1e-10))
    out.append(_below("swap network: error coincidences", leak, 1e-12))

    ideal = run_elementary_swap(pure(psi_plus("L", "A")), pure(psi_plus("B", "R")), swap_map=lmap)
    out.append(_close("swap ideal: acceptance", 0.25, ideal.acceptance_probability, 1e-10))
    out.append(_close("swap ideal: fidelity", 1, ideal.fidelity, 1e-10))
    two_photon = sum(o.probability for o in ideal.outcomes if o.pattern.total == 2)
    out.append(_close("swap ideal: two-photon sector", 0.5, two_photon, 1e-10))
    out.append(_close("swap ideal: accept | two-photon", 0.5, ideal.acceptance_probability / two_photon, 1e-10))

    la = run_link_exhaustive(LinkConfig(left="L", right="A")).accepted_ensemble(corrected=True)
    br = run_link_exhaustive(LinkConfig(left="B", right="R")).accepted_ensemble(corrected=True)
    mixed = run_elementary_swap(la, br, swap_map=lmap)
    out.append(_close("swap mixtures: acceptance", 1 / 36, mixed.acceptance_probability, 1e-10))
    out.append(_close("swap mixtures: fidelity", 1, mixed.fidelity, 1e-10))

    worst = 0.0
    for ea in link_error_states("L", "A"):
        for eb in link_error_states("B", "R"):
            r = run_elementary_swap(pure(ea), pure(eb), swap_map=lmap)
            worst = max(worst, r.acceptance_probability)
    out.append(_below("swap filter: error x error accepted", worst, 1e-12))
    odd = True
    for e in link_error_states("B", "R"):
        r = run_elementary_swap(pure(psi_plus("L", "A")), pure(e), swap_map=lmap)
        odd &= all(o.pattern.total % 2 == 1 for o in r.outcomes)
    for e in link_error_states("L", "A"):
        r = run_elementary_swap(pure(e), pure(psi_plus("B", "R")), swap_map=lmap)
        odd &= all(o.pattern.total % 2 == 1 for o in r.outcomes)
    out.append(_close("swap filter: correct x error odd parity", 1, float(odd), 0))

    higher = run_higher_swap(pure(psi_plus("L", "A")), pure(psi_plus("B", "R")), swap_map=lmap)
    out.append(_close("higher swap: acceptance", 0.5, higher.acceptance_probability, 1e-10))
    out.append(_close("higher swap: fidelity", 1, higher.fidelity, 1e-10))

    rng = np.random.default_rng(seed)
    worst_f, worst_p = 0.0, 0.0
    for _ in range(noise_trials):
        links = []
        for left, right in (("L", "A"), ("B", "R")):
            phi = rng.uniform(0, 2 * math.pi)
            cfg = LinkConfig(
                left=left, right=right,
                noise_left=sample_jones(rng), noise_right=sample_jones(rng),
                phase_left=phi, phase_right=phi,
            )
            links.append(run_link_exhaustive(cfg).accepted_ensemble(corrected=True))
        r = run_elementary_swap(*links, swap_map=lmap)
        worst_f = max(worst_f, 1 - r.fidelity)
        worst_p = max(worst_p, abs(r.acceptance_probability - 1 / 36))
    out.append(_below("end-to-end noise: fidelity loss", worst_f, 1e-9))
    out.append(_below("end-to-end noise: acceptance drift", worst_p, 1e-10))
    return out


def unit_checks(trials: int = 100, seed: int = 3) -> list[Check]:
    out = []
    a, b = ModeId("a", "H"), ModeId("b", "H")
    vac = make_vacuum([a, b, ModeId("a", "V"), ModeId("b", "V")], [])
    hom = apply_mode_map(_photons(vac, a, b), optics.bs50("a", "b"))
    out.append(_below("HOM coincidence amplitude", abs(hom.amplitude(photons={a: 1, b: 1})), 1e-12))
    modes = [ModeId(p, q) for p in ("a", "b") for q in "HV"]
    vac = make_vacuum(modes, [])
    ha, va, hb, vb = modes
    singlet = (_photons(vac, ha, vb) - _photons(vac, va, hb)).scaled(1 / math.sqrt(2))
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        u = JonesUnitary(unitary_group.rvs(2, random_state=rng))
        s = apply_mode_map(singlet, optics.polarization_rotation("a", u.matrix))
        s = apply_mode_map(s, optics.polarization_rotation("b", u.matrix))
        worst = max(worst, 1 - fidelity(s, singlet))
    out.append(_below("psi- invariance (random U)", worst, 1e-9))
    return out


def run_checks(swap_matrix=None, noise_trials: int = 50) -> list[Check]:
    return (
        unit_checks()
        + link_checks(noise_trials=noise_trials)
        + swap_checks(swap_matrix=swap_matrix, noise_trials=noise_trials)
    )


def report(checks: list[Check], write: Callable[[str], None] = print) -> bool:
    for c in checks:
        write(c.line())
    ok = all(c.passed for c in checks)
    write(f"{sum(c.passed for c in checks)}/{len(checks)} checks passed")
    return ok
