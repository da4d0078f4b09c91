"""Optical elements of the link and swap stations as :class:`LinearModeMap` objects.

Phase conventions:

* 50:50 beam splitter: transmission amplitude 1, reflection amplitude ``i``.
* PBS / RPBS: transmit H (resp. F), reflect V (resp. S); reflection phase +1.
* Time-bin encoder: bin 1 is the long arm and carries the phase modulator,
  which adds pi to H only. The map is the forward-output branch, renormalized.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import block_diag

from .fock import (
    POLARIZATIONS,
    JointState,
    LinearModeMap,
    ModeId,
    apply_mode_map,
    create_photon,
    excite_memory,
    fidelity,
    make_vacuum,
)

SQRT2 = np.sqrt(2.0)


def _check_distinct(*paths):
    if len(set(paths)) != len(paths):
        raise ValueError(f"ports must be distinct, got {paths}")


def bs50(
    port_a: str,
    port_b: str,
    out_a: str | None = None,
    out_b: str | None = None,
    bins=(None,),
) -> LinearModeMap:
    """a -> (a' + i b')/sqrt2, b -> (i a' + b')/sqrt2 for every polarization and bin."""
    out_a = port_a if out_a is None else out_a
    out_b = port_b if out_b is None else out_b
    _check_distinct(port_a, port_b)
    _check_distinct(out_a, out_b)
    inputs, outputs = [], []
    for b in bins:
        for pol in POLARIZATIONS:
            inputs += [ModeId(port_a, pol, b), ModeId(port_b, pol, b)]
            outputs += [ModeId(out_a, pol, b), ModeId(out_b, pol, b)]
    m = np.zeros((len(outputs), len(inputs)), dtype=complex)
    for k in range(0, len(inputs), 2):
        m[k, k], m[k + 1, k] = 1 / SQRT2, 1j / SQRT2
        m[k, k + 1], m[k + 1, k + 1] = 1j / SQRT2, 1 / SQRT2
    return LinearModeMap(inputs, outputs, m, name="BS50")


def pbs(in_port: str, h_out: str, v_out: str, bins=(None,)) -> LinearModeMap:
    """Route H to ``h_out`` and V to ``v_out``."""
    _check_distinct(h_out, v_out)
    inputs, outputs = [], []
    for b in bins:
        inputs += [ModeId(in_port, "H", b), ModeId(in_port, "V", b)]
        outputs += [ModeId(h_out, "H", b), ModeId(v_out, "V", b)]
    return LinearModeMap(inputs, outputs, np.eye(len(inputs)), name="PBS")


def rpbs(in_port: str, f_out: str, s_out: str, bins=(None,)) -> LinearModeMap:
    """Rotated PBS: transmit F=(H+V)/sqrt2 to ``f_out``, reflect S=(H-V)/sqrt2 to ``s_out``.

    Output modes are labelled in the H/V basis: the F port carries the photon
    as H, the S port as V, so a downstream H/V-labelled detector sees it.
    """
    _check_distinct(f_out, s_out)
    inputs, outputs = [], []
    blocks = []
    for b in bins:
        inputs += [ModeId(in_port, "H", b), ModeId(in_port, "V", b)]
        outputs += [ModeId(f_out, "H", b), ModeId(s_out, "V", b)]
        blocks.append(np.array([[1, 1], [1, -1]]) / SQRT2)
    return LinearModeMap(inputs, outputs, block_diag(*blocks), name="RPBS")


def polarization_rotation(port: str, matrix, bins=(None,), name: str = "U") -> LinearModeMap:
    """Apply a 2x2 Jones matrix on (H, V) to every listed bin of ``port``."""
    u = np.asarray(matrix, dtype=complex)
    if u.shape != (2, 2):
        raise ValueError("Jones matrix must be 2x2")
    modes = [ModeId(port, pol, b) for b in bins for pol in POLARIZATIONS]
    return LinearModeMap(modes, modes, block_diag(*([u] * len(bins))), name=name)


def pol_phase_mod(port: str, phase_h: float, phase_v: float, bins=(None,)) -> LinearModeMap:
    """Polarization-dependent phase: H gets exp(i*phase_h), V gets exp(i*phase_v)."""
    d = np.diag([np.exp(1j * phase_h), np.exp(1j * phase_v)])
    return polarization_rotation(port, d, bins, name="PM")


def timebin_encoder(port: str, renormalize: bool = True) -> LinearModeMap:
    """Unbalanced Faraday-Michelson interferometer with a pi phase on H in the long arm.

    H -> (-H@bin1 + H@bin2)/sqrt2, V -> (V@bin1 + V@bin2)/sqrt2.

    Only the forward output is kept. With ``renormalize`` the map is an
    isometry and the 1/2 per-photon forward probability is carried in
    ``success_probability``; without it the amplitudes are scaled by 1/sqrt2.
    """
    inputs = [ModeId(port, "H"), ModeId(port, "V")]
    outputs = [ModeId(port, pol, b) for b in (1, 2) for pol in POLARIZATIONS]
    # long arm = bin 1: phase modulator then identity; short arm = bin 2
    long_arm = pol_phase_mod("x", np.pi, 0.0).matrix
    m = np.zeros((4, 2), dtype=complex)
    m[0:2, :] = long_arm / SQRT2
    m[2:4, :] = np.eye(2) / SQRT2
    m[np.abs(m) < 1e-15] = 0
    if renormalize:
        return LinearModeMap(inputs, outputs, m, name="TBE", success_probability=0.5)
    return LinearModeMap(inputs, outputs, m / SQRT2, unitary=False, name="TBE")


SWAP_DETECTOR_MODES = (
    ModeId("D1", "H"),
    ModeId("D2", "V"),
    ModeId("D3", "V"),
    ModeId("D4", "H"),
)

# rows: H_A, V_A, H_B, V_B; columns: H@D1, V@D2, V@D3, H@D4
SWAP_MATRIX = 0.5 * np.array(
    [
        [1, -1, 1, 1],
        [-1, 1, 1, 1],
        [1, 1, -1, 1],
        [1, 1, 1, -1],
    ],
    dtype=complex,
)


class SwapNetworkError(ValueError):
    """The swap interferometer does not reproduce the required photon polynomials."""


def swap_network(node_a: str = "A", node_b: str = "B", matrix=None, validate: bool = True) -> LinearModeMap:
    """Four-mode interferometer of the swap station, read out by D1..D4.

    The default matrix sends H_A V_A to ((V3+H4)^2 - (H1-V2)^2)/4 and H_B V_B to
    ((H1+V2)^2 - (V3-H4)^2)/4, so a Psi+ (x) Psi+ input produces the H1 V2 and
    H4 V3 coincidences with the (+) memory superposition and the four
    same-detector double hits with the (-) one. Any H_A/V_A x H_B/V_B product
    has zero H1 V2 and H4 V3 amplitude.
    """
    m = SWAP_MATRIX if matrix is None else np.asarray(matrix, dtype=complex)
    inputs = [ModeId(node_a, "H"), ModeId(node_a, "V"), ModeId(node_b, "H"), ModeId(node_b, "V")]
    lmap = LinearModeMap(inputs, SWAP_DETECTOR_MODES, m.T, name="SWAP")
    if validate:
        fid, leak = swap_network_residuals(lmap, node_a, node_b)
        if fid < 1 - 1e-10 or leak > 1e-12:
            raise SwapNetworkError(
                f"swap network check failed: fidelity {fid:.3e}, error coincidence {leak:.3e}"
            )
    return lmap


def swap_correct_target(outer=("L", "R")) -> JointState:
    """Expected detector-mode state for a Psi+ (x) Psi+ input, double-click sector.

    (1/8)[2 (LL + RR)(H1 V2 + H4 V3) + (LL - RR)(H1^2 + V2^2 - H4^2 - V3^2)] on
    the outer memories.
    """
    left, right = outer
    mems = [f"{left}1", f"{left}2", f"{right}1", f"{right}2"]
    vac = make_vacuum(SWAP_DETECTOR_MODES, mems)
    h1, v2, v3, h4 = SWAP_DETECTOR_MODES
    ll = excite_memory(excite_memory(vac, mems[0]), mems[1])
    rr = excite_memory(excite_memory(vac, mems[2]), mems[3])

    def photons(state, *modes):
        for m in modes:
            state = create_photon(state, m)
        return state

    plus = ll + rr
    minus = ll - rr
    out = (photons(plus, h1, v2) + photons(plus, h4, v3)).scaled(2)
    out = out + photons(minus, h1, h1) + photons(minus, v2, v2)
    out = out - photons(minus, h4, h4) - photons(minus, v3, v3)
    return out.scaled(1 / 8)


def swap_network_residuals(lmap: LinearModeMap, node_a: str = "A", node_b: str = "B") -> tuple[float, float]:
    """(fidelity to the correct-case target, max error-case coincidence amplitude)."""
    a = [ModeId(node_a, "H"), ModeId(node_a, "V")]
    b = [ModeId(node_b, "H"), ModeId(node_b, "V")]
    mems = ["L1", "L2", "R1", "R2"]
    vac = make_vacuum(a + b, mems)
    ll = excite_memory(excite_memory(vac, "L1"), "L2")
    rr = excite_memory(excite_memory(vac, "R1"), "R2")
    # L excited -> B holds its pair; R excited -> A holds its pair
    correct = create_photon(create_photon(ll, b[0]), b[1]) + create_photon(create_photon(rr, a[0]), a[1])
    out = apply_mode_map(correct.scaled(0.5), lmap)
    fid = fidelity(out, swap_correct_target())
    h1, v2, v3, h4 = SWAP_DETECTOR_MODES
    leak = 0.0
    vac2 = make_vacuum(a + b, [])
    for x in a:
        for y in b:
            s = apply_mode_map(create_photon(create_photon(vac2, x), y), lmap)
            leak = max(
                leak,
                abs(s.amplitude(photons={h1: 1, v2: 1})),
                abs(s.amplitude(photons={h4: 1, v3: 1})),
            )
    return fid, leak

