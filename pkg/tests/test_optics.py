import math

import numpy as np
import pytest

from conftest import photons, random_unitary
from qrepeater import optics
from qrepeater.fock import ModeId, apply_mode_map, create_photon, fidelity, make_vacuum, restrict
from qrepeater.verify import expected_encoder_output


def _vac(*paths, bins=(None,)):
    return make_vacuum([ModeId(p, q, b) for p in paths for b in bins for q in "HV"], [])


def test_bs50_single_photon_splits_evenly():
    a, b = ModeId("a", "H"), ModeId("b", "H")
    out = apply_mode_map(create_photon(_vac("a", "b"), a), optics.bs50("a", "b"))
    assert abs(out.amplitude(photons={a: 1})) ** 2 == pytest.approx(0.5)
    assert abs(out.amplitude(photons={b: 1})) ** 2 == pytest.approx(0.5)


def test_bs50_named_outputs_and_hom():
    a, b = ModeId("a", "V", 1), ModeId("b", "V", 1)
    vac = _vac("a", "b", bins=(1,))
    out = apply_mode_map(photons(vac, a, b), optics.bs50("a", "b", "c", "d", bins=(1,)))
    c, d = ModeId("c", "V", 1), ModeId("d", "V", 1)
    assert abs(out.amplitude(photons={c: 1, d: 1})) < 1e-12
    assert abs(out.amplitude(photons={c: 2})) ** 2 == pytest.approx(0.5)


def test_bs50_rejects_repeated_ports():
    with pytest.raises(ValueError):
        optics.bs50("a", "a")


def test_pbs_routes_by_polarization():
    lmap = optics.pbs("in", "h", "v")
    vac = _vac("in")
    h = apply_mode_map(create_photon(vac, ModeId("in", "H")), lmap)
    assert abs(h.amplitude(photons={ModeId("h", "H"): 1})) ** 2 == pytest.approx(1.0)
    v = apply_mode_map(create_photon(vac, ModeId("in", "V")), lmap)
    assert abs(v.amplitude(photons={ModeId("v", "V"): 1})) ** 2 == pytest.approx(1.0)
    diag = (create_photon(vac, ModeId("in", "H")) + create_photon(vac, ModeId("in", "V"))).scaled(1 / math.sqrt(2))
    d = apply_mode_map(diag, lmap)
    assert abs(d.amplitude(photons={ModeId("h", "H"): 1})) ** 2 == pytest.approx(0.5)


def test_rpbs_routes_diagonal_basis():
    lmap = optics.rpbs("in", "f", "s")
    vac = _vac("in")
    f_photon = (create_photon(vac, ModeId("in", "H")) + create_photon(vac, ModeId("in", "V"))).scaled(1 / math.sqrt(2))
    out = apply_mode_map(f_photon, lmap)
    assert abs(out.amplitude(photons={ModeId("f", "H"): 1})) ** 2 == pytest.approx(1.0)
    h = apply_mode_map(create_photon(vac, ModeId("in", "H")), lmap)
    assert abs(h.amplitude(photons={ModeId("f", "H"): 1})) ** 2 == pytest.approx(0.5)
    assert abs(h.amplitude(photons={ModeId("s", "V"): 1})) ** 2 == pytest.approx(0.5)


def test_rpbs_then_inverse_rotation_is_identity():
    r = optics.rpbs("in", "f", "s")
    back = np.linalg.inv(r.matrix)
    assert np.abs(back @ r.matrix - np.eye(2)).max() < 1e-12
    assert np.abs(back - r.matrix.conj().T).max() < 1e-12


def test_phase_modulator():
    h = ModeId("p", "H")
    vac = _vac("p")
    one = create_photon(vac, h)
    out = apply_mode_map(one, optics.pol_phase_mod("p", math.pi, 0))
    assert out.amplitude(photons={h: 1}) == pytest.approx(-1.0)
    same = apply_mode_map(one, optics.pol_phase_mod("p", 0, 0))
    assert (same - one).norm() < 1e-12
    pm = optics.pol_phase_mod("p", math.pi, 0)
    twice = apply_mode_map(apply_mode_map(one, pm), pm)
    assert (twice - one).norm() < 1e-12


def test_encoder_pair_matches_expected_expansion():
    l_h, l_v = ModeId("L", "H"), ModeId("L", "V")
    out = apply_mode_map(photons(_vac("L"), l_h, l_v), optics.timebin_encoder("L"))
    assert fidelity(out, expected_encoder_output()) > 1 - 1e-10


def test_encoder_bin_mixed_part_is_singlet():
    l_h, l_v = ModeId("L", "H"), ModeId("L", "V")
    out = apply_mode_map(photons(_vac("L"), l_h, l_v), optics.timebin_encoder("L"))
    mixed = restrict(out, lambda occ: sorted(m.bin for m, n in occ.items() for _ in range(n)) == [1, 2])
    assert mixed.norm2() == pytest.approx(0.5)
    vac = make_vacuum(list(out.modes), [])
    h1, v2, v1, h2 = ModeId("L", "H", 1), ModeId("L", "V", 2), ModeId("L", "V", 1), ModeId("L", "H", 2)
    psi_minus = photons(vac, h1, v2) - photons(vac, v1, h2)
    assert fidelity(mixed, psi_minus) == pytest.approx(1.0)


def test_encoder_single_photon_bins_equal():
    out = apply_mode_map(create_photon(_vac("L"), ModeId("L", "H")), optics.timebin_encoder("L"))
    assert abs(out.amplitude(photons={ModeId("L", "H", 1): 1})) ** 2 == pytest.approx(0.5)
    assert abs(out.amplitude(photons={ModeId("L", "H", 2): 1})) ** 2 == pytest.approx(0.5)


def test_encoder_without_renormalization_halves_probability():
    lmap = optics.timebin_encoder("L", renormalize=False)
    out = apply_mode_map(create_photon(_vac("L"), ModeId("L", "V")), lmap)
    assert out.norm2() == pytest.approx(0.5)
    assert optics.timebin_encoder("L").success_probability == 0.5


def _stats(state):
    return {k: abs(v) ** 2 for k, v in state.labeled().items()}


def _both_orders(inp, u):
    enc = optics.timebin_encoder("L")
    after = apply_mode_map(apply_mode_map(inp, enc), optics.polarization_rotation("L", u, (1, 2)))
    before = apply_mode_map(apply_mode_map(inp, optics.polarization_rotation("L", u)), enc)
    return _stats(after), _stats(before)


def _max_diff(a, b):
    return max(abs(a.get(k, 0) - b.get(k, 0)) for k in set(a) | set(b))


def test_encoder_commutes_with_noise_for_single_photons(rng):
    vac = _vac("L")
    for pol in "HV":
        inp = create_photon(vac, ModeId("L", pol))
        for _ in range(20):
            a, b = _both_orders(inp, random_unitary(2, rng))
            assert _max_diff(a, b) < 1e-12


def test_encoder_commutes_with_phase_type_noise(rng):
    inp = photons(_vac("L"), ModeId("L", "H"), ModeId("L", "V"))
    for _ in range(20):
        u = np.diag(np.exp(2j * np.pi * rng.random(2)))
        a, b = _both_orders(inp, u)
        assert _max_diff(a, b) < 1e-12


def test_encoder_does_not_commute_with_general_noise_on_pairs(rng):
    # the pi phase on H makes the ordering matter for an H V pair
    inp = photons(_vac("L"), ModeId("L", "H"), ModeId("L", "V"))
    u = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    a, b = _both_orders(inp, u)
    assert _max_diff(a, b) > 0.1


def test_swap_matrix_rows_orthonormal():
    m = optics.SWAP_MATRIX
    assert np.abs(m @ m.conj().T - np.eye(4)).max() < 1e-12


def test_swap_network_pair_from_one_node():
    lmap = optics.swap_network()
    vac = _vac("A", "B")
    out = apply_mode_map(photons(vac, ModeId("A", "H"), ModeId("A", "V")), lmap)
    h1, v2, v3, h4 = optics.SWAP_DETECTOR_MODES
    assert out.amplitude(photons={h1: 1, v2: 1}) == pytest.approx(0.5)
    assert out.amplitude(photons={h4: 1, v3: 1}) == pytest.approx(0.5)
    same = sum(abs(out.amplitude(photons={m: 2})) ** 2 for m in optics.SWAP_DETECTOR_MODES)
    assert same == pytest.approx(0.5)


@pytest.mark.parametrize("x", ["H", "V"])
@pytest.mark.parametrize("y", ["H", "V"])
def test_swap_network_error_inputs_never_coincide(x, y):
    out = apply_mode_map(photons(_vac("A", "B"), ModeId("A", x), ModeId("B", y)), optics.swap_network())
    h1, v2, v3, h4 = optics.SWAP_DETECTOR_MODES
    assert abs(out.amplitude(photons={h1: 1, v2: 1})) < 1e-12
    assert abs(out.amplitude(photons={h4: 1, v3: 1})) < 1e-12


def test_swap_network_reproduces_correct_case_polynomial():
    fid, leak = optics.swap_network_residuals(optics.swap_network())
    assert fid > 1 - 1e-10
    assert leak < 1e-12


def test_swap_network_rejects_wrong_interferometer():
    hadamard = 0.5 * np.array([[1, 1, 1, 1], [1, -1, 1, -1], [1, 1, -1, -1], [1, -1, -1, 1]])
    with pytest.raises(optics.SwapNetworkError):
        optics.swap_network(matrix=hadamard)
