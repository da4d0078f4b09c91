"""Monte Carlo simulation of a nested repeater chain.

A chain of ``n`` segments (``n`` a power of two) is built by strict doubling:
a level-``k`` link covers ``2**k`` aligned segments. Every period each empty
segment attempts an elementary link. Whenever two sibling links of the same
level are both present, they are swapped in that same period; a failed swap
destroys both and their segments start over on the next period.

Level-0 swaps act on the link mixtures (error components included); higher
levels act on the already-filtered output. Between events the loop jumps
directly to the next link success, drawn from a geometric distribution, so the
cost scales with the number of events rather than with the number of periods.

With ``track_states`` each link success is simulated with a fresh channel
disturbance and the resulting mixtures are swapped exactly, so the reported
fidelities are those of the actual end-to-end states. Otherwise the swap
probabilities and fidelities of each level are precomputed once.
Accept/reject of link attempts always uses the precomputed link acceptance
probability, which the link model keeps independent of the disturbance.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .fock import Ensemble, relabel_memories
from .link import MINUS, LinkConfig, psi_plus, run_link_exhaustive, to_plus_form
from .noise import sample_jones, sample_outcome
from .swap import run_elementary_swap, run_higher_swap

_SETUP_STREAM = 0x5E7


@dataclass(frozen=True, eq=False)
class ChainConfig:
    segments: int = 2
    link: LinkConfig = field(default_factory=LinkConfig)
    link_success: float | None = None
    attempt_period: float = 1.0
    retrieval_efficiency: float = 1.0
    memory_cutoff: float = math.inf
    noise_strength: float = 0.0
    track_states: bool = False
    check_invariants: bool = False

    def __post_init__(self):
        n = self.segments
        if n < 2 or n & (n - 1):
            raise ValueError("segments must be a power of two >= 2")
        if self.link_success is not None and not 0 < self.link_success <= 1:
            raise ValueError("link_success must lie in (0, 1]")
        if not 0 < self.retrieval_efficiency <= 1:
            raise ValueError("retrieval_efficiency must lie in (0, 1]")
        if self.memory_cutoff < 1:
            raise ValueError("memory_cutoff must be at least one period")
        if not 0 <= self.noise_strength <= 1:
            raise ValueError("noise_strength must lie in [0, 1]")
        if self.attempt_period <= 0:
            raise ValueError("attempt_period must be positive")

    @property
    def levels(self) -> int:
        return int(math.log2(self.segments))

    def replace(self, **kw) -> ChainConfig:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d.update(kw)
        return ChainConfig(**d)


@dataclass(frozen=True)
class ChainStats:
    trials: int
    mean_attempts: float
    median_attempts: float
    std_attempts: float
    half_width: float
    mean_time: float
    rate: float
    link_successes: int
    swap_attempts: tuple
    swap_successes: tuple
    fidelity_mean: float
    fidelity_min: float

    def as_row(self) -> dict:
        row = asdict(self)
        for k in ("swap_attempts", "swap_successes"):
            row[k] = " ".join(str(x) for x in row[k])
        return row


def segment_nodes(i: int) -> tuple[str, str]:
    """Endpoint memories of segment ``i``: its left and right facing nodes."""
    return f"q{i:03d}l", f"q{i:03d}r"


class _Model:
    """Per-config precomputation shared by all trials."""

    def __init__(self, cfg: ChainConfig, seed: int):
        self.cfg = cfg
        rng = np.random.default_rng((seed, _SETUP_STREAM))
        link_cfg = self._noisy(cfg.link, rng)
        res = run_link_exhaustive(link_cfg.replace(left="P", right="A"))
        self.q = cfg.link_success if cfg.link_success is not None else res.acceptance_probability
        if self.q <= 0:
            raise ValueError("link acceptance probability is zero")
        base = res.accepted_ensemble(corrected=True)
        self.swap_p = []
        self.fid = []
        left = base
        right = _relabel(base, {"P": "B", "A": "Q"})
        for level in range(cfg.levels):
            run = run_elementary_swap if level == 0 else run_higher_swap
            out = run(left, right, retrieval_efficiency=cfg.retrieval_efficiency)
            self.swap_p.append(out.acceptance_probability)
            self.fid.append(out.fidelity)
            merged = out.accepted_ensemble()
            left = _relabel(merged, {"Q": "A"})
            right = _relabel(merged, {"P": "B"})

    def _noisy(self, link: LinkConfig, rng) -> LinkConfig:
        s = self.cfg.noise_strength
        if s == 0:
            return link
        phi = rng.uniform(0, 2 * math.pi)
        return link.replace(
            noise_left=sample_jones(rng, s),
            noise_right=sample_jones(rng, s),
            phase_left=phi,
            phase_right=phi,
        )

    def link_state(self, seg: int, rng) -> Ensemble:
        """Conditional mixture of one accepted attempt under fresh disturbance."""
        left, right = segment_nodes(seg)
        cfg = self._noisy(self.cfg.link, rng).replace(left=left, right=right)
        res = run_link_exhaustive(cfg)
        outcome = sample_outcome(res.accepted(), rng)
        ens = outcome.ensemble
        if outcome.kind == MINUS:
            ens = ens.map(lambda s: to_plus_form(s, right))
        return ens


def _relabel(ens: Ensemble, nodes: dict) -> Ensemble:
    mapping = {}
    for _, s in ens:
        for m in s.memories:
            if m[:-1] in nodes:
                mapping[m] = nodes[m[:-1]] + m[-1]
    return ens.map(lambda s: relabel_memories(s, mapping))


@dataclass
class _Block:
    level: int
    index: int
    born: int
    state: Ensemble | None = None

    @property
    def span(self) -> range:
        w = 2**self.level
        return range(self.index * w, (self.index + 1) * w)


def _geometric(rng, q) -> int:
    return int(rng.geometric(q))


def _run_trial(model: _Model, rng: np.random.Generator, counters: dict) -> tuple[int, float]:
    cfg = model.cfg
    n, top = cfg.segments, cfg.levels
    ready = {i: _geometric(rng, model.q) for i in range(n)}
    blocks: dict[tuple[int, int], _Block] = {}

    def release(block, now):
        del blocks[(block.level, block.index)]
        for i in block.span:
            ready[i] = now + _geometric(rng, model.q)

    while True:
        now = min(ready.values()) if ready else None
        if cfg.memory_cutoff != math.inf and blocks:
            exp = min(b.born + int(cfg.memory_cutoff) for b in blocks.values()) + 1
            now = exp if now is None else min(now, exp)
        for i in [i for i, t in ready.items() if t == now]:
            del ready[i]
            counters["links"] += 1
            state = model.link_state(i, rng) if cfg.track_states else None
            blocks[(0, i)] = _Block(0, i, now, state)
        if cfg.memory_cutoff != math.inf:
            for b in [b for b in blocks.values() if now - b.born > cfg.memory_cutoff]:
                release(b, now)
        for level in range(top):
            for m in range(2 ** (top - level - 1)):
                a, b = blocks.get((level, 2 * m)), blocks.get((level, 2 * m + 1))
                if a is None or b is None:
                    continue
                counters["attempts"][level] += 1
                ok, state = _swap(model, level, a, b, rng)
                if ok:
                    counters["successes"][level] += 1
                    del blocks[(level, 2 * m)], blocks[(level, 2 * m + 1)]
                    blocks[(level + 1, m)] = _Block(level + 1, m, min(a.born, b.born), state)
                else:
                    release(a, now)
                    release(b, now)
        if cfg.check_invariants:
            _check_conservation(blocks, ready, n)
        final = blocks.get((top, 0))
        if final is not None:
            if cfg.track_states:
                left = segment_nodes(0)[0]
                right = segment_nodes(n - 1)[1]
                fid = final.state.fidelity_to(psi_plus(left, right))
            else:
                fid = model.fid[-1]
            return now, fid


def _swap(model: _Model, level: int, a: _Block, b: _Block, rng):
    if not model.cfg.track_states:
        return rng.random() < model.swap_p[level], None
    inner = (segment_nodes(a.span[-1])[1], segment_nodes(b.span[0])[0])
    run = run_elementary_swap if level == 0 else run_higher_swap
    res = run(a.state, b.state, inner=inner, retrieval_efficiency=model.cfg.retrieval_efficiency)
    outcome = sample_outcome(res.outcomes, rng)
    if not outcome.accepted:
        return False, None
    return True, outcome.ensemble


def _check_conservation(blocks, ready, n):
    owner = {}
    for b in blocks.values():
        for i in b.span:
            if i in owner:
                raise AssertionError(f"segment {i} covered twice")
            owner[i] = b
    for i in range(n):
        if (i in owner) == (i in ready):
            raise AssertionError(f"segment {i} is both/neither empty and entangled")


def simulate_chain(config: ChainConfig, seed: int = 0, trials: int = 1000) -> ChainStats:
    """Run independent trials; trial ``k`` draws from the stream ``(seed, k)``."""
    model = _Model(config, seed)
    levels = config.levels
    counters = {"links": 0, "attempts": [0] * levels, "successes": [0] * levels}
    periods = np.empty(trials)
    fids = np.empty(trials)
    for k in range(trials):
        rng = np.random.default_rng((seed, k))
        periods[k], fids[k] = _run_trial(model, rng, counters)
    mean = float(np.mean(periods))
    std = float(np.std(periods, ddof=1)) if trials > 1 else 0.0
    return ChainStats(
        trials=trials,
        mean_attempts=mean,
        median_attempts=float(np.median(periods)),
        std_attempts=std,
        half_width=1.96 * std / math.sqrt(trials),
        mean_time=mean * config.attempt_period,
        rate=1.0 / (mean * config.attempt_period),
        link_successes=counters["links"],
        swap_attempts=tuple(counters["attempts"]),
        swap_successes=tuple(counters["successes"]),
        fidelity_mean=float(np.mean(fids)),
        fidelity_min=float(np.min(fids)),
    )


SWEEP_KEYS = ("p", "transmittance", "segments", "noise_strength")


def sweep(base: ChainConfig, grid: dict, seed: int = 0, trials: int = 1000) -> list[dict]:
    """Cartesian product over ``grid`` (keys from ``SWEEP_KEYS``); one row per cell."""
    unknown = set(grid) - set(SWEEP_KEYS)
    if unknown:
        raise KeyError(f"unknown sweep keys: {sorted(unknown)}")
    keys = [k for k in SWEEP_KEYS if k in grid]
    rows = []
    for values in itertools.product(*(grid[k] for k in keys)):
        cell = dict(zip(keys, values))
        link_kw = {k: cell[k] for k in ("p", "transmittance") if k in cell}
        chain_kw = {k: cell[k] for k in ("segments", "noise_strength") if k in cell}
        cfg = base.replace(link=base.link.replace(**link_kw), **chain_kw)
        stats = simulate_chain(cfg, seed=seed, trials=trials)
        row = {
            "p": cfg.link.p,
            "transmittance": cfg.link.transmittance,
            "segments": cfg.segments,
            "noise_strength": cfg.noise_strength,
            "link_success": "" if cfg.link_success is None else cfg.link_success,
        }
        row.update(stats.as_row())
        rows.append(row)
    return rows


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return buf.getvalue()


def scaling_exponent(segments, mean_attempts) -> float:
    """Least-squares slope of log(mean attempts) against log(segments)."""
    x = np.log(np.asarray(segments, dtype=float))
    y = np.log(np.asarray(mean_attempts, dtype=float))
    return float(np.polyfit(x, y, 1)[0])
