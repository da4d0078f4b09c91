"""Channel imperfections and detector models.

Collective polarization noise is one Jones matrix acting on every time-bin of
a path. Loss couples each mode to an environment mode that is traced out at
once. Detectors turn photon numbers into click patterns keyed by
``(detector, time-bin)``; a detector observes every mode whose path is its
label and does not resolve polarization or tags.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple

import numpy as np
from scipy.stats import unitary_group

from . import optics
from .fock import (
    Ensemble,
    JointState,
    LinearModeMap,
    ModeId,
    apply_mode_map,
    split_by_occupation,
)


@dataclass(frozen=True, eq=False)
class JonesUnitary:
    """2x2 unitary acting on the (H, V) amplitudes of a photon."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError("Jones matrix must be 2x2")
        err = np.abs(m.conj().T @ m - np.eye(2)).max()
        if err > 1e-12:
            raise ValueError(f"Jones matrix not unitary (err {err:.2e})")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls) -> JonesUnitary:
        return cls(np.eye(2))

    @classmethod
    def rotation(cls, theta: float) -> JonesUnitary:
        """Real rotation by ``theta``: H -> cos(theta) H + sin(theta) V."""
        c, s = math.cos(theta), math.sin(theta)
        return cls(np.array([[c, -s], [s, c]]))

    @property
    def det(self) -> complex:
        return complex(np.linalg.det(self.matrix))

    def __matmul__(self, other: JonesUnitary) -> JonesUnitary:
        return JonesUnitary(self.matrix @ other.matrix)


def sample_jones(rng: np.random.Generator, strength: float = 1.0) -> JonesUnitary:
    """Random SU(2) polarization disturbance.

    ``strength`` 1 gives a Haar sample, 0 the identity; in between the Haar
    sample ``W = exp(i t n.sigma)`` is shortened along its geodesic to
    ``exp(i strength t n.sigma)``. The U(1) part is left to :func:`path_phase`.
    """
    if not 0 <= strength <= 1:
        raise ValueError("strength must lie in [0, 1]")
    w = unitary_group.rvs(2, random_state=rng)
    w = w / np.sqrt(np.linalg.det(w))
    if strength == 1:
        return JonesUnitary(w)
    if strength == 0:
        return JonesUnitary.identity()
    # W = cos t I + i sin t (n.sigma), t in [0, pi]
    cos_t = np.clip(np.trace(w).real / 2, -1.0, 1.0)
    t = math.acos(cos_t)
    if math.sin(t) < 1e-12:
        return JonesUnitary.identity() if cos_t > 0 else JonesUnitary(_haar_axis_rotation(rng, strength * t))
    gen = (w - cos_t * np.eye(2)) / math.sin(t)
    u = math.cos(strength * t) * np.eye(2) + math.sin(strength * t) * gen
    return JonesUnitary(u)


def _haar_axis_rotation(rng, angle):
    n = rng.normal(size=3)
    n /= np.linalg.norm(n)
    sx = np.array([[0, 1], [1, 0]])
    sy = np.array([[0, -1j], [1j, 0]])
    sz = np.array([[1, 0], [0, -1]])
    return math.cos(angle) * np.eye(2) + 1j * math.sin(angle) * (n[0] * sx + n[1] * sy + n[2] * sz)


def _bins_on(state: JointState, path: str) -> list[int | None]:
    bins = []
    for m in state.modes:
        if m.path == path and m.bin not in bins:
            bins.append(m.bin)
    if not bins:
        raise KeyError(f"path {path!r} not present in state")
    return bins


def collective_pol_unitary(state: JointState, path: str, u: JonesUnitary) -> JointState:
    """Apply the same Jones matrix to every time-bin mode of ``path``."""
    bins = _bins_on(state, path)
    return apply_mode_map(state, optics.polarization_rotation(path, u.matrix, bins, name="noise"))


def path_phase(state: JointState, path: str, phi: float) -> JointState:
    """Every photon on ``path`` picks up ``exp(i*phi)``."""
    bins = _bins_on(state, path)
    return apply_mode_map(state, optics.pol_phase_mod(path, phi, phi, bins))


def sagnac_phase(state: JointState, paths: Iterable[str], phi: float) -> JointState:
    """Common-mode phase on all paths of a link, as the Sagnac loop enforces."""
    for p in paths:
        state = path_phase(state, p, phi)
    return state


def loss(ensemble: Ensemble, path: str, transmittance: float) -> Ensemble:
    """Each photon on ``path`` survives independently with probability ``transmittance``."""
    if not 0 <= transmittance <= 1:
        raise ValueError("transmittance must lie in [0, 1]")
    if transmittance == 1:
        return ensemble
    return ensemble.flat_map(lambda s: _loss_state(s, path, transmittance))


def _loss_state(state: JointState, path: str, t: float) -> Ensemble:
    modes = [m.untagged for m in state.modes if m.path == path]
    modes = list(dict.fromkeys(modes))
    if not modes:
        raise KeyError(f"path {path!r} not present in state")
    env = [ModeId(f"{path}.env", m.pol, m.bin) for m in modes]
    mat = np.zeros((2 * len(modes), len(modes)), dtype=complex)
    for k in range(len(modes)):
        mat[k, k] = math.sqrt(t)
        mat[len(modes) + k, k] = math.sqrt(1 - t)
    lmap = LinearModeMap(modes, modes + env, mat, name="loss")
    out = apply_mode_map(state, lmap)
    env_modes = [m for m in out.modes if m.path == f"{path}.env"]
    parts = split_by_occupation(out, env_modes)
    # the squared norm of each part becomes its weight on normalization
    return Ensemble(tuple((1.0, p) for p in parts.values() if not p.is_zero))


@dataclass(frozen=True)
class DetectorModel:
    kind: str = "pnr"
    efficiency: float = 1.0
    dark_count: float = 0.0

    def __post_init__(self):
        if self.kind not in ("threshold", "pnr"):
            raise ValueError(f"detector kind must be 'threshold' or 'pnr', got {self.kind!r}")
        if not 0 <= self.efficiency <= 1:
            raise ValueError("efficiency must lie in [0, 1]")
        if not 0 <= self.dark_count <= 1:
            raise ValueError("dark_count must lie in [0, 1]")

    @classmethod
    def threshold(cls, efficiency: float = 1.0, dark_count: float = 0.0) -> DetectorModel:
        return cls("threshold", efficiency, dark_count)

    @classmethod
    def pnr(cls, efficiency: float = 1.0, dark_count: float = 0.0) -> DetectorModel:
        return cls("pnr", efficiency, dark_count)


def _slot_key(slot):
    det, b = slot
    return (det, -1 if b is None else b)


@dataclass(frozen=True)
class ClickPattern:
    """Nonzero counts per (detector, time-bin), canonically sorted."""

    counts: tuple[tuple[tuple[str, int | None], int], ...] = ()

    @classmethod
    def of(cls, counts: Mapping[tuple[str, int | None], int]) -> ClickPattern:
        items = [(k, int(v)) for k, v in counts.items() if v]
        if any(v < 0 for _, v in items):
            raise ValueError("counts must be non-negative")
        return cls(tuple(sorted(items, key=lambda kv: _slot_key(kv[0]))))

    def __getitem__(self, slot) -> int:
        return dict(self.counts).get(slot, 0)

    @property
    def total(self) -> int:
        return sum(v for _, v in self.counts)

    def as_dict(self) -> dict:
        return dict(self.counts)

    @property
    def label(self) -> str:
        if not self.counts:
            return "none"
        return ",".join(
            f"{d}{'' if b is None else f'@bin{b}'}:{n}" for (d, b), n in self.counts
        )

    @classmethod
    def parse(cls, label: str) -> ClickPattern:
        if label == "none":
            return cls()
        counts = {}
        for item in label.split(","):
            slot, _, n = item.rpartition(":")
            det, _, b = slot.partition("@bin")
            counts[(det, int(b) if b else None)] = int(n)
        return cls.of(counts)

    def __str__(self):
        return self.label


class DetectionOutcome(NamedTuple):
    pattern: ClickPattern
    ensemble: Ensemble
    probability: float


class UnassignedModeError(KeyError):
    pass


def detect(
    ensemble: Ensemble,
    detectors: Mapping[str, DetectorModel],
    measured_paths: Iterable[str] | None = None,
    mode: str = "exhaustive",
    rng: np.random.Generator | None = None,
) -> list[DetectionOutcome] | DetectionOutcome:
    """Measure every mode on the measured paths and group results by click pattern.

    Exhaustive mode returns all patterns with nonzero probability, sorted by
    label; conditional ensembles are normalized and have the measured modes
    stripped. Sampled mode draws one outcome with ``rng``.
    """
    paths = list(detectors) if measured_paths is None else list(measured_paths)
    for p in paths:
        if p not in detectors:
            raise UnassignedModeError(f"measured path {p!r} has no detector")
    # inefficiency is loss in front of an ideal detector
    for p in paths:
        eta = detectors[p].efficiency
        if eta < 1:
            ensemble = ensemble.flat_map(
                lambda s, p=p, eta=eta: _loss_state(s, p, eta) if _has_path(s, p) else Ensemble(((1.0, s),))
            )
    slots = _slots(ensemble, paths)
    dark = [(slot, detectors[slot[0]].dark_count) for slot in slots if detectors[slot[0]].dark_count > 0]
    buckets: dict[ClickPattern, list] = {}
    for w, s in ensemble:
        measured = [m for m in s.modes if m.path in paths]
        for assign, part in split_by_occupation(s, measured).items():
            if part.is_zero:
                continue
            prob = w * part.norm2()
            counts: dict = {}
            for m, n in zip(measured, assign):
                if n:
                    counts[(m.path, m.bin)] = counts.get((m.path, m.bin), 0) + n
            for extra, p_dark in _dark_outcomes(dark):
                c = dict(counts)
                for slot in extra:
                    c[slot] = c.get(slot, 0) + 1
                for slot in c:
                    if detectors[slot[0]].kind == "threshold":
                        c[slot] = min(c[slot], 1)
                pat = ClickPattern.of(c)
                buckets.setdefault(pat, []).append((prob * p_dark, part))
    outcomes = []
    for pat in sorted(buckets, key=lambda p: p.label):
        comps = [(w, s) for w, s in buckets[pat] if w > 0]
        total = math.fsum(w for w, _ in comps)
        if total <= 0:
            continue
        ens = Ensemble(tuple((w / total, s.normalized()) for w, s in comps)).merged()
        outcomes.append(DetectionOutcome(pat, ens, total))
    if mode == "exhaustive":
        return outcomes
    if mode == "sampled":
        if rng is None:
            raise ValueError("sampled detection needs an rng")
        return sample_outcome(outcomes, rng)
    raise ValueError(f"unknown detection mode {mode!r}")


def sample_outcome(outcomes, rng: np.random.Generator):
    """Draw one element of a list of outcomes by their ``probability`` field.

    Residual probability mass (sub-normalized inputs) is spread proportionally.
    """
    probs = np.array([o.probability for o in outcomes], dtype=float)
    k = rng.choice(len(outcomes), p=probs / probs.sum())
    return outcomes[k]


def _has_path(state, path):
    return any(m.path == path for m in state.modes)


def _slots(ensemble, paths):
    slots = []
    for _, s in ensemble:
        for m in s.modes:
            if m.path in paths and (m.path, m.bin) not in slots:
                slots.append((m.path, m.bin))
    return sorted(slots, key=_slot_key)


def _dark_outcomes(dark):
    if not dark:
        yield (), 1.0
        return
    for flags in itertools.product((False, True), repeat=len(dark)):
        p = 1.0
        extra = []
        for (slot, d), f in zip(dark, flags):
            p *= d if f else 1 - d
            if f:
                extra.append(slot)
        if p > 0:
            yield tuple(extra), p
