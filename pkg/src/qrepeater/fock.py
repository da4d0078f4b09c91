"""Sparse state vectors over bosonic photon modes and two-level atomic memories.

A :class:`JointState` stores complex amplitudes keyed by a basis label
``(memory_levels, occupations)``: ``memory_levels`` is a tuple of 0 (ground,
``g``) / 1 (metastable, ``s``) over the sorted memory registry, and
``occupations`` is a tuple of photon numbers over the mode registry.

Linear optics acts on creation operators, ``a_in^dag -> sum_j M[j, in] a_j^dag``,
and is lifted to the Fock space by re-expanding each monomial. Every state is
small (at most a handful of photons), so the expansion is done term by term.

Modes carry an optional ``tag``: an internal label that no optical element
or detector resolves. Maps act identically on every tag, and detectors sum
over tags. Photons with different tags therefore never interfere.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Iterable, Mapping, NamedTuple, Sequence

import numpy as np

AMPLITUDE_CUTOFF = 1e-14
MAX_PHOTONS = 4
POLARIZATIONS = ("H", "V")
BINS = (1, 2, None)

_RESERVED = re.compile(r"[|,:@~\s]")


class RegistryError(ValueError):
    """Duplicate, missing or overlapping mode / memory labels."""


class TruncationError(RuntimeError):
    """A state would hold more photons than ``max_photons`` allows."""


@dataclass(frozen=True)
class ModeId:
    path: str
    pol: str
    bin: int | None = None
    tag: str = ""

    def __post_init__(self):
        if self.pol not in POLARIZATIONS:
            raise ValueError(f"polarization must be H or V, got {self.pol!r}")
        if self.bin not in BINS:
            raise ValueError(f"time-bin must be 1, 2 or None, got {self.bin!r}")
        if not self.path or _RESERVED.search(self.path):
            raise ValueError(f"invalid path label {self.path!r}")
        if _RESERVED.search(self.tag):
            raise ValueError(f"invalid tag {self.tag!r}")

    @property
    def untagged(self) -> ModeId:
        return ModeId(self.path, self.pol, self.bin)

    def retag(self, tag: str) -> ModeId:
        return ModeId(self.path, self.pol, self.bin, tag)

    @property
    def label(self) -> str:
        s = f"{self.pol}_{self.path}"
        if self.bin is not None:
            s += f"@bin{self.bin}"
        if self.tag:
            s += f"~{self.tag}"
        return s

    @classmethod
    def parse(cls, label: str) -> ModeId:
        m = re.fullmatch(r"(H|V)_([^@~]+)(?:@bin([12]))?(?:~(.+))?", label.strip())
        if m is None:
            raise ValueError(f"cannot parse mode label {label!r}")
        pol, path, b, tag = m.groups()
        return cls(path, pol, int(b) if b else None, tag or "")

    def __str__(self):
        return self.label


def modes_on(path: str, bins: Iterable[int | None] = (None,)) -> list[ModeId]:
    """H and V modes of ``path`` for each requested time-bin."""
    return [ModeId(path, pol, b) for b in bins for pol in POLARIZATIONS]


def _check_unique(labels, what):
    seen = set()
    for x in labels:
        if x in seen:
            raise RegistryError(f"duplicate {what} {x}")
        seen.add(x)


class JointState:
    """Immutable sparse state over (memory configuration x photon occupation).

    ``norm_tracking`` accumulates the probability of every post-selection that
    produced this state; it starts at 1.
    """

    __slots__ = ("modes", "memories", "_terms", "norm_tracking", "max_photons", "_index")

    def __init__(
        self,
        modes: Sequence[ModeId],
        memories: Sequence[str],
        terms: Mapping[tuple, complex],
        norm_tracking: float = 1.0,
        max_photons: int = MAX_PHOTONS,
    ):
        modes = tuple(modes)
        memories = tuple(memories)
        _check_unique(modes, "mode")
        _check_unique(memories, "memory")
        if list(memories) != sorted(memories):
            raise RegistryError("memory registry must be sorted")
        for mem in memories:
            if not mem or _RESERVED.search(mem):
                raise RegistryError(f"invalid memory label {mem!r}")
        clean = {}
        for key, amp in terms.items():
            amp = complex(amp)
            if abs(amp) < AMPLITUDE_CUTOFF:
                continue
            mem, occ = key
            if len(mem) != len(memories) or len(occ) != len(modes):
                raise ValueError("basis label does not match registries")
            if sum(occ) > max_photons:
                raise TruncationError(
                    f"term holds {sum(occ)} photons, max_photons={max_photons}"
                )
            clean[(tuple(mem), tuple(occ))] = amp
        self.modes = modes
        self.memories = memories
        self._terms = clean
        self.norm_tracking = float(norm_tracking)
        self.max_photons = max_photons
        self._index = {m: i for i, m in enumerate(modes)}

    @property
    def terms(self) -> Mapping[tuple, complex]:
        return MappingProxyType(self._terms)

    def mode_index(self, mode: ModeId) -> int:
        try:
            return self._index[mode]
        except KeyError:
            raise RegistryError(f"mode {mode} not registered") from None

    def memory_index(self, memory: str) -> int:
        try:
            return self.memories.index(memory)
        except ValueError:
            raise RegistryError(f"memory {memory} not registered") from None

    def norm(self) -> float:
        return math.sqrt(self.norm2())

    def norm2(self) -> float:
        return float(sum(abs(a) ** 2 for a in self._terms.values()))

    @property
    def is_zero(self) -> bool:
        return not self._terms

    def _replace(self, terms=None, modes=None, memories=None, norm_tracking=None):
        return JointState(
            self.modes if modes is None else modes,
            self.memories if memories is None else memories,
            self._terms if terms is None else terms,
            self.norm_tracking if norm_tracking is None else norm_tracking,
            self.max_photons,
        )

    def normalized(self) -> JointState:
        n = self.norm()
        if n == 0:
            raise ValueError("cannot normalize the zero state")
        return self._replace({k: a / n for k, a in self._terms.items()})

    def scaled(self, factor: complex) -> JointState:
        return self._replace({k: a * factor for k, a in self._terms.items()})

    def __add__(self, other: JointState) -> JointState:
        if not isinstance(other, JointState):
            return NotImplemented
        other = _aligned(other, self)
        out = dict(self._terms)
        for k, a in other._terms.items():
            out[k] = out.get(k, 0) + a
        return self._replace(out)

    def __sub__(self, other: JointState) -> JointState:
        return self + other.scaled(-1)

    def photon_numbers(self) -> set[int]:
        return {sum(occ) for _, occ in self._terms}

    def labeled(self) -> dict[tuple[frozenset, frozenset], complex]:
        """Registry-order independent view: (excited memories, {(mode, n)}) -> amplitude."""
        out = {}
        for (mem, occ), a in self._terms.items():
            excited = frozenset(m for m, lv in zip(self.memories, mem) if lv)
            photons = frozenset((md, n) for md, n in zip(self.modes, occ) if n)
            out[(excited, photons)] = a
        return out

    def amplitude(self, excited: Iterable[str] = (), photons: Mapping[ModeId, int] | None = None) -> complex:
        key = (frozenset(excited), frozenset((photons or {}).items()))
        for m in key[0]:
            self.memory_index(m)
        return self.labeled().get(key, 0j)

    def basis_label(self, key) -> str:
        mem, occ = key
        left = ", ".join(f"{m}:{'s' if lv else 'g'}" for m, lv in zip(self.memories, mem))
        right = ", ".join(f"{md.label}:{n}" for md, n in zip(self.modes, occ) if n)
        return f"{left} | {right}"

    def parse_basis_label(self, label: str) -> tuple:
        left, _, right = label.partition("|")
        mem = [0] * len(self.memories)
        for item in filter(None, (x.strip() for x in left.split(","))):
            name, _, lv = item.partition(":")
            if lv not in ("g", "s"):
                raise ValueError(f"bad memory level in {item!r}")
            mem[self.memory_index(name)] = int(lv == "s")
        occ = [0] * len(self.modes)
        for item in filter(None, (x.strip() for x in right.split(","))):
            name, _, n = item.rpartition(":")
            occ[self.mode_index(ModeId.parse(name))] = int(n)
        return tuple(mem), tuple(occ)

    def __repr__(self):
        if not self._terms:
            return "JointState(0)"
        body = " + ".join(
            f"({a.real:+.4g}{a.imag:+.4g}j)|{self.basis_label(k)}>"
            for k, a in sorted(self._terms.items())
        )
        return f"JointState({body})"


def _aligned(state: JointState, like: JointState) -> JointState:
    """Re-express ``state`` in the registries of ``like`` (same label sets)."""
    if state.modes == like.modes and state.memories == like.memories:
        return state
    if set(state.modes) != set(like.modes) or set(state.memories) != set(like.memories):
        raise RegistryError("states live on different registries")
    perm = [state.mode_index(m) for m in like.modes]
    terms = {(mem, tuple(occ[i] for i in perm)): a for (mem, occ), a in state.terms.items()}
    return JointState(like.modes, like.memories, terms, state.norm_tracking, state.max_photons)


def make_vacuum(
    modes: Iterable[ModeId],
    memories: Iterable[str],
    max_photons: int = MAX_PHOTONS,
) -> JointState:
    """All memories in g, all modes empty, amplitude 1."""
    modes = list(modes)
    memories = list(memories)
    _check_unique(modes, "mode")
    _check_unique(memories, "memory")
    memories = sorted(memories)
    key = ((0,) * len(memories), (0,) * len(modes))
    return JointState(modes, memories, {key: 1.0}, 1.0, max_photons)


def with_modes(state: JointState, modes: Iterable[ModeId]) -> JointState:
    """Extend the mode registry with empty modes; already registered ones are skipped."""
    extra = [m for m in modes if m not in state._index]
    if not extra:
        return state
    _check_unique(extra, "mode")
    pad = (0,) * len(extra)
    terms = {(mem, occ + pad): a for (mem, occ), a in state.terms.items()}
    return state._replace(terms, modes=state.modes + tuple(extra))


def create_photon(state: JointState, mode: ModeId) -> JointState:
    """Bosonic creation ``a^dag|n> = sqrt(n+1)|n+1>``; not renormalized."""
    i = state.mode_index(mode)
    out = {}
    for (mem, occ), a in state.terms.items():
        n = occ[i]
        new = occ[:i] + (n + 1,) + occ[i + 1 :]
        out[(mem, new)] = a * math.sqrt(n + 1)
    return state._replace(out)


def excite_memory(state: JointState, memory: str) -> JointState:
    """``S^dag = |s><g|``: g-terms move to s, s-terms are annihilated."""
    i = state.memory_index(memory)
    out = {}
    for (mem, occ), a in state.terms.items():
        if mem[i] == 0:
            out[(mem[:i] + (1,) + mem[i + 1 :], occ)] = a
    return state._replace(out)


def memory_phase(state: JointState, memory: str, phase: float) -> JointState:
    """Multiply every term with ``memory`` in s by ``exp(i*phase)``."""
    i = state.memory_index(memory)
    f = np.exp(1j * phase)
    return state._replace({k: a * f if k[0][i] else a for k, a in state.terms.items()})


def transfer_memory_to_mode(state: JointState, memory: str, mode: ModeId) -> JointState:
    """Deterministic readout: an excitation in ``memory`` becomes a photon in ``mode``."""
    i = state.memory_index(memory)
    j = state.mode_index(mode)
    out = {}
    for (mem, occ), a in state.terms.items():
        if mem[i]:
            n = occ[j]
            mem = mem[:i] + (0,) + mem[i + 1 :]
            occ = occ[:j] + (n + 1,) + occ[j + 1 :]
            a = a * math.sqrt(n + 1)
        out[(mem, occ)] = out.get((mem, occ), 0) + a
    return state._replace(out)


def drop_memories(state: JointState, memories: Iterable[str]) -> JointState:
    """Remove memories from the registry; each must be in g in every term."""
    drop = {state.memory_index(m) for m in memories}
    keep = [i for i in range(len(state.memories)) if i not in drop]
    out = {}
    for (mem, occ), a in state.terms.items():
        if any(mem[i] for i in drop):
            raise ValueError("cannot drop a memory that is not in g")
        out[(tuple(mem[i] for i in keep), occ)] = a
    return state._replace(out, memories=tuple(state.memories[i] for i in keep))


def relabel_memories(state: JointState, mapping: Mapping[str, str]) -> JointState:
    """Rename memories; the registry is re-sorted."""
    names = [mapping.get(m, m) for m in state.memories]
    _check_unique(names, "memory")
    order = sorted(range(len(names)), key=names.__getitem__)
    terms = {(tuple(mem[i] for i in order), occ): a for (mem, occ), a in state.terms.items()}
    return JointState(
        state.modes, tuple(names[i] for i in order), terms, state.norm_tracking, state.max_photons
    )


def restrict(state: JointState, predicate: Callable[[dict[ModeId, int]], bool]) -> JointState:
    """Keep the terms whose photon occupation satisfies ``predicate``."""
    out = {}
    for (mem, occ), a in state.terms.items():
        if predicate({m: n for m, n in zip(state.modes, occ) if n}):
            out[(mem, occ)] = a
    return state._replace(out)


@dataclass(frozen=True, eq=False)
class LinearModeMap:
    """Linear map on creation operators: column ``k`` is the image of ``inputs[k]``.

    ``unitary`` means norm preserving (``M^dag M = 1``); otherwise the map must
    be a contraction. ``success_probability`` records the per-photon
    post-selection factor of a renormalized element, for bookkeeping only.
    """

    inputs: tuple[ModeId, ...]
    outputs: tuple[ModeId, ...]
    matrix: np.ndarray
    unitary: bool = True
    name: str = ""
    success_probability: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        m = np.asarray(self.matrix, dtype=complex)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        _check_unique(self.inputs, "map input")
        _check_unique(self.outputs, "map output")
        if any(md.tag for md in self.inputs + self.outputs):
            raise ValueError("maps are defined on untagged modes")
        if m.shape != (len(self.outputs), len(self.inputs)):
            raise ValueError(f"matrix shape {m.shape} does not match ports")
        if self.unitary:
            err = np.abs(m.conj().T @ m - np.eye(m.shape[1])).max()
            if err > 1e-12:
                raise ValueError(f"{self.name or 'map'} is not norm preserving (err {err:.2e})")
        elif np.linalg.svd(m, compute_uv=False).max(initial=0) > 1 + 1e-12:
            raise ValueError(f"{self.name or 'map'} is not a contraction")

    def then(self, other: LinearModeMap) -> LinearModeMap:
        """Composite map: first ``self``, then ``other``.

        Modes produced by ``self`` that ``other`` does not consume pass through;
        modes consumed by ``other`` that ``self`` does not produce are added as
        extra inputs.
        """
        a_out = {m: i for i, m in enumerate(self.outputs)}
        extra_in = [m for m in other.inputs if m not in a_out and m not in self.inputs]
        inputs = list(self.inputs) + extra_in
        passthrough = [m for m in self.outputs if m not in other.inputs]
        outputs = list(other.outputs) + [m for m in passthrough if m not in other.outputs]
        if len(set(outputs)) != len(outputs):
            raise RegistryError("composition collides on output modes")
        o_idx = {m: i for i, m in enumerate(outputs)}
        mat = np.zeros((len(outputs), len(inputs)), dtype=complex)
        for k, mode in enumerate(inputs):
            # image of `mode` after the first map, as a vector over intermediate modes
            if k < len(self.inputs):
                stage = {m: self.matrix[i, k] for m, i in a_out.items()}
            else:
                stage = {mode: 1.0}
            for mid, amp in stage.items():
                if amp == 0:
                    continue
                if mid in other.inputs:
                    col = other.inputs.index(mid)
                    for j, out in enumerate(other.outputs):
                        mat[o_idx[out], k] += amp * other.matrix[j, col]
                else:
                    mat[o_idx[mid], k] += amp
        return LinearModeMap(
            tuple(inputs), tuple(outputs), mat, self.unitary and other.unitary,
            f"{self.name}>{other.name}",
            self.success_probability * other.success_probability,
        )


def apply_mode_map(state: JointState, lmap: LinearModeMap) -> JointState:
    """Substitute each input creation operator by its image and re-expand.

    Registered modes matching an input (any tag) are consumed; the outputs are
    registered once per tag that occurs. Other modes pass through untouched.
    """
    in_pos = {m: k for k, m in enumerate(lmap.inputs)}
    consumed = [i for i, m in enumerate(state.modes) if m.untagged in in_pos]
    if not consumed:
        raise RegistryError(f"none of the inputs of {lmap.name or 'map'} are registered")
    present = {state.modes[i].untagged for i in consumed}
    missing = [m for m in lmap.inputs if m not in present]
    if missing:
        raise RegistryError(f"map inputs not registered: {', '.join(map(str, missing))}")
    tags = []
    for i in consumed:
        if state.modes[i].tag not in tags:
            tags.append(state.modes[i].tag)
    keep = [i for i in range(len(state.modes)) if i not in set(consumed)]
    new_modes = [state.modes[i] for i in keep]
    out_pos = {}
    for tag in tags:
        for m in lmap.outputs:
            t = m.retag(tag)
            if t in state._index and state._index[t] in keep:
                raise RegistryError(f"map output {t} collides with an untouched mode")
            out_pos[t] = len(new_modes)
            new_modes.append(t)
    # column of each consumed registry mode, as (output position, amplitude) pairs
    images = {}
    for i in consumed:
        m = state.modes[i]
        col = lmap.matrix[:, in_pos[m.untagged]]
        images[i] = [
            (out_pos[o.retag(m.tag)], c)
            for o, c in zip(lmap.outputs, col)
            if abs(c) > AMPLITUDE_CUTOFF
        ]
    width = len(new_modes)
    base_len = len(keep)
    cache = {}
    out = {}
    for (mem, occ), a in state.terms.items():
        sub = tuple(occ[i] for i in consumed)
        if sub not in cache:
            cache[sub] = _expand(sub, consumed, images, width, base_len)
        head = tuple(occ[i] for i in keep)
        for tail, c in cache[sub].items():
            key = (mem, head + tail)
            out[key] = out.get(key, 0) + a * c
    return JointState(new_modes, state.memories, out, state.norm_tracking, state.max_photons)


def _expand(sub, consumed, images, width, base_len):
    poly = {(0,) * (width - base_len): 1.0 + 0j}
    norm = 1.0
    for n, i in zip(sub, consumed):
        norm *= math.factorial(n)
        for _ in range(n):
            nxt = {}
            for exps, c in poly.items():
                for pos, amp in images[i]:
                    j = pos - base_len
                    e = exps[:j] + (exps[j] + 1,) + exps[j + 1 :]
                    nxt[e] = nxt.get(e, 0) + c * amp
            poly = nxt
    # a^dag^e |0> = sqrt(e!) |e>
    return {
        e: c * math.sqrt(math.prod(math.factorial(k) for k in e) / norm)
        for e, c in poly.items()
        if abs(c) > AMPLITUDE_CUTOFF
    }


def tensor(a: JointState, b: JointState) -> JointState:
    if set(a.modes) & set(b.modes) or set(a.memories) & set(b.memories):
        raise RegistryError("tensor factors share labels")
    memories = tuple(sorted(a.memories + b.memories))
    src = [("a", a.memories.index(m)) if m in a.memories else ("b", b.memories.index(m)) for m in memories]
    out = {}
    for (ma, oa), x in a.terms.items():
        for (mb, ob), y in b.terms.items():
            mem = tuple(ma[i] if s == "a" else mb[i] for s, i in src)
            out[(mem, oa + ob)] = x * y
    return JointState(
        a.modes + b.modes, memories, out,
        a.norm_tracking * b.norm_tracking, max(a.max_photons, b.max_photons),
    )


def inner(a: JointState, b: JointState) -> complex:
    """``<a|b>``; registries must hold the same labels."""
    b = _aligned(b, a)
    return complex(sum(np.conj(x) * b.terms.get(k, 0) for k, x in a.terms.items()))


def fidelity(a: JointState, b: JointState) -> float:
    """Global-phase insensitive overlap ``|<a|b>|^2`` of the normalized states."""
    if a.is_zero or b.is_zero:
        raise ValueError("fidelity of the zero state is undefined")
    f = abs(inner(a, b)) ** 2 / (a.norm2() * b.norm2())
    return min(1.0, f)


def split_by_occupation(state: JointState, modes: Sequence[ModeId]) -> dict[tuple[int, ...], JointState]:
    """Group terms by their occupation of ``modes``; those modes are removed from each part.

    Parts are not renormalized: the squared norm of a part is its Born weight.
    """
    idx = [state.mode_index(m) for m in modes]
    drop = set(idx)
    keep = [i for i in range(len(state.modes)) if i not in drop]
    rest = tuple(state.modes[i] for i in keep)
    groups: dict[tuple, dict] = {}
    for (mem, occ), a in state.terms.items():
        assign = tuple(occ[i] for i in idx)
        groups.setdefault(assign, {})[(mem, tuple(occ[i] for i in keep))] = a
    return {
        k: JointState(rest, state.memories, t, state.norm_tracking, state.max_photons)
        for k, t in groups.items()
    }


class Projection(NamedTuple):
    state: JointState
    probability: float

    @property
    def impossible(self) -> bool:
        return self.probability == 0.0


def project_occupation(state: JointState, assignment: Mapping[ModeId, int]) -> Projection:
    """Condition on exact photon numbers in the given modes and strip them.

    Returns the renormalized residual and the Born probability (squared norm of
    the kept part). An impossible outcome gives the zero state and probability 0.
    """
    modes = list(assignment)
    target = tuple(assignment[m] for m in modes)
    part = split_by_occupation(state, modes).get(target)
    if part is None or part.is_zero:
        idx = set(state.mode_index(m) for m in modes)
        rest = [m for i, m in enumerate(state.modes) if i not in idx]
        return Projection(JointState(rest, state.memories, {}, 0.0, state.max_photons), 0.0)
    p = part.norm2()
    res = part.normalized()
    return Projection(res._replace(norm_tracking=state.norm_tracking * p), p)


@dataclass(frozen=True)
class Ensemble:
    """Weighted list of normalized pure states; weights carry probability."""

    components: tuple[tuple[float, JointState], ...] = field(default_factory=tuple)

    def __post_init__(self):
        comps = []
        for w, s in self.components:
            if w < 0:
                raise ValueError("negative ensemble weight")
            if w == 0 or s.is_zero:
                continue
            n2 = s.norm2()
            if abs(n2 - 1) > 1e-12:
                w, s = w * n2, s.normalized()
            comps.append((float(w), s))
        object.__setattr__(self, "components", tuple(comps))
        if self.total_weight > 1 + 1e-12:
            raise ValueError(f"ensemble weights sum to {self.total_weight} > 1")

    def __iter__(self):
        return iter(self.components)

    def __len__(self):
        return len(self.components)

    @property
    def total_weight(self) -> float:
        return math.fsum(w for w, _ in self.components)

    @property
    def weights(self) -> list[float]:
        return [w for w, _ in self.components]

    @property
    def states(self) -> list[JointState]:
        return [s for _, s in self.components]

    @property
    def is_empty(self) -> bool:
        return not self.components

    def normalized(self) -> Ensemble:
        t = self.total_weight
        if t == 0:
            raise ValueError("cannot normalize an empty ensemble")
        return Ensemble(tuple((w / t, s) for w, s in self.components))

    def scaled(self, factor: float) -> Ensemble:
        return Ensemble(tuple((w * factor, s) for w, s in self.components))

    def map(self, fn: Callable[[JointState], JointState]) -> Ensemble:
        """Apply a state map componentwise; a norm change moves into the weight."""
        return Ensemble(tuple((w, fn(s)) for w, s in self.components))

    def flat_map(self, fn: Callable[[JointState], Ensemble]) -> Ensemble:
        out = []
        for w, s in self.components:
            out.extend((w * v, t) for v, t in fn(s))
        return Ensemble(tuple(out))

    def merged(self, digits: int = 9) -> Ensemble:
        """Combine components whose states coincide up to global phase.

        States are compared through a phase-fixed copy rounded to ``digits``.
        """
        out: dict = {}
        for w, s in self.components:
            key = _canonical_key(s, digits)
            if key in out:
                out[key][0] += w
            else:
                out[key] = [w, s]
        return Ensemble(tuple((w, s) for w, s in out.values()))

    def fidelity_to(self, target: JointState) -> float:
        """``<t|rho|t>`` for the normalized mixture and normalized pure target."""
        t = self.total_weight
        if t == 0:
            raise ValueError("fidelity of an empty ensemble")
        return min(1.0, math.fsum(w * fidelity(s, target) for w, s in self.components) / t)

    def __add__(self, other: Ensemble) -> Ensemble:
        return Ensemble(self.components + other.components)


def _canonical_key(s: JointState, digits: int):
    lab = s.labeled()
    items = sorted(lab.items(), key=lambda kv: (-round(abs(kv[1]), digits), repr(kv[0])))
    phase = items[0][1] / abs(items[0][1])
    body = frozenset(
        (k, round((a / phase).real, digits) + 0.0, round((a / phase).imag, digits) + 0.0)
        for k, a in items
    )
    return frozenset(s.modes), frozenset(s.memories), body


def mix(components: Iterable[tuple[float, JointState]]) -> Ensemble:
    comps = list(components)
    if any(w <= 0 for w, _ in comps):
        raise ValueError("mixture weights must be positive")
    return Ensemble(tuple(comps))


def condition(
    ensemble: Ensemble,
    modes: Sequence[ModeId],
    predicate: Callable[[dict[ModeId, int]], bool],
) -> tuple[Ensemble, float]:
    """Keep outcomes of measuring ``modes`` for which ``predicate`` holds.

    Returns the normalized conditional ensemble (measured modes stripped) and
    the total probability. An empty result comes back as an empty ensemble
    with probability 0.
    """
    modes = list(modes)
    out = []
    for w, s in ensemble:
        for assign, part in split_by_occupation(s, modes).items():
            if part.is_zero or not predicate(dict(zip(modes, assign))):
                continue
            out.append((w * part.norm2(), part.normalized()))
    total = math.fsum(w for w, _ in out)
    if total == 0:
        return Ensemble(), 0.0
    return Ensemble(tuple((w / total, s) for w, s in out)), total
