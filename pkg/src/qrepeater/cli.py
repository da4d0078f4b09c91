"""Command-line entry point: ``qrepeater {verify,link,swap,chain,sweep}``.

A run is described by an optional JSON config file; ``--seed``, ``--out``,
``--mode`` and ``--trials`` override the matching top-level keys. Exit codes:
0 success, 1 failed check, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import optics
from .chain import ChainConfig, rows_to_csv, simulate_chain, sweep
from .link import LinkConfig, psi_plus, run_link_exhaustive, run_link_sampled
from .noise import DetectorModel, sample_jones
from .serialize import ensemble_to_json, link_result_to_json, swap_result_to_json
from .swap import pure, run_elementary_swap, run_higher_swap
from .verify import report, run_checks

EXIT_OK, EXIT_CHECK, EXIT_CONFIG = 0, 1, 2

_PROB = {"type": "number", "minimum": 0, "maximum": 1}
_DETECTOR = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["threshold", "pnr"]},
        "efficiency": _PROB,
        "dark_count": _PROB,
    },
}
_COMPLEX = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "trials": {"type": "integer", "minimum": 1},
        "mode": {"enum": ["exhaustive", "sampled"]},
        "out": {"type": "string"},
        "link": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "p": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "transmittance": _PROB,
                "error_model": {"enum": ["incoherent", "coherent"]},
                "weighting": {"enum": ["exact", "product"]},
                "encoder_loss": {"type": "boolean"},
                "noise_strength": _PROB,
                "common_phase": {"type": "number"},
                "detectors": _DETECTOR,
            },
        },
        "swap": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "level": {"enum": ["elementary", "higher"]},
                "retrieval_efficiency": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "detectors": _DETECTOR,
                "matrix": {
                    "type": "array",
                    "minItems": 4,
                    "maxItems": 4,
                    "items": {"type": "array", "minItems": 4, "maxItems": 4, "items": _COMPLEX},
                },
            },
        },
        "chain": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "segments": {"type": "integer", "minimum": 2},
                "link_success": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "attempt_period": {"type": "number", "exclusiveMinimum": 0},
                "retrieval_efficiency": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "memory_cutoff": {"type": ["number", "null"], "minimum": 1},
                "noise_strength": _PROB,
                "track_states": {"type": "boolean"},
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "p": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                "transmittance": {"type": "array", "items": _PROB, "minItems": 1},
                "segments": {"type": "array", "items": {"type": "integer"}, "minItems": 1},
                "noise_strength": {"type": "array", "items": _PROB, "minItems": 1},
            },
        },
        "verify": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"noise_trials": {"type": "integer", "minimum": 1}},
        },
    },
}


class ConfigError(Exception):
    pass


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path} is not valid JSON: {e}") from None
    validate_config(data)
    return data


def validate_config(data: dict) -> None:
    try:
        jsonschema.validate(data, CONFIG_SCHEMA)
    except jsonschema.ValidationError as e:
        where = "/".join(str(x) for x in e.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {e.message}") from None


def _detectors(spec: dict | None, names, default_kind: str) -> dict:
    spec = dict(spec or {})
    spec.setdefault("kind", default_kind)
    return {d: DetectorModel(**spec) for d in names}


def link_config(cfg: dict, seed: int) -> LinkConfig:
    c = dict(cfg.get("link", {}))
    strength = c.pop("noise_strength", 0.0)
    phase = c.pop("common_phase", 0.0)
    dets = _detectors(c.pop("detectors", None), ("D1", "D2"), "threshold")
    kw = {}
    if strength > 0:
        rng = np.random.default_rng((seed, 1))
        kw = {"noise_left": sample_jones(rng, strength), "noise_right": sample_jones(rng, strength)}
    try:
        return LinkConfig(detectors=dets, phase_left=phase, phase_right=phase, **c, **kw)
    except ValueError as e:
        raise ConfigError(f"invalid config at link: {e}") from None


def swap_matrix(cfg: dict):
    m = cfg.get("swap", {}).get("matrix")
    if m is None:
        return None
    return np.array([[complex(re, im) for re, im in row] for row in m])


def chain_config(cfg: dict, seed: int) -> ChainConfig:
    c = dict(cfg.get("chain", {}))
    if c.get("memory_cutoff", 0) is None:
        c["memory_cutoff"] = math.inf
    try:
        return ChainConfig(link=link_config(cfg, seed), **c)
    except ValueError as e:
        raise ConfigError(f"invalid config at chain: {e}") from None


def _emit(payload: str, out: str | None) -> None:
    if out:
        Path(out).write_text(payload)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def cmd_verify(cfg: dict, args) -> int:
    n = cfg.get("verify", {}).get("noise_trials", 50)
    checks = run_checks(swap_matrix=swap_matrix(cfg), noise_trials=n)
    lines = []
    ok = report(checks, write=lambda s: (print(s), lines.append(s)))
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if ok else EXIT_CHECK


def cmd_link(cfg: dict, args) -> int:
    lc = link_config(cfg, args.seed)
    result = run_link_exhaustive(lc)
    payload = {"seed": args.seed, "mode": args.mode, **link_result_to_json(result)}
    if args.mode == "sampled":
        rng = np.random.default_rng((args.seed, 2))
        counts: dict[str, int] = {}
        for _ in range(args.trials):
            o = run_link_sampled(lc, rng, exhaustive=result)
            counts[o.pattern.label] = counts.get(o.pattern.label, 0) + 1
        accepted = sum(n for lab, n in counts.items() if result_kind(result, lab) != "rejected")
        payload["sampled"] = {"trials": args.trials, "accepted": accepted, "pattern_counts": counts}
    print(f"link acceptance probability: {result.acceptance_probability:.6e}")
    print(f"accepted mixture components: {len(payload['accepted_mixture'])}")
    _emit(_dump(payload), args.out)
    return EXIT_OK


def result_kind(result, label: str) -> str:
    for pat, o in result.outcomes.items():
        if pat.label == label:
            return o.kind
    return "rejected"


def cmd_swap(cfg: dict, args) -> int:
    sc = cfg.get("swap", {})
    level = sc.get("level", "elementary")
    dets = _detectors(sc.get("detectors"), ("D1", "D2", "D3", "D4"), "pnr")
    lmap = optics.swap_network(matrix=swap_matrix(cfg), validate=False)
    eta = sc.get("retrieval_efficiency", 1.0)
    if level == "elementary":
        base = link_config(cfg, args.seed)
        la = run_link_exhaustive(base.replace(left="L", right="A")).accepted_ensemble(corrected=True)
        br = run_link_exhaustive(base.replace(left="B", right="R")).accepted_ensemble(corrected=True)
        result = run_elementary_swap(la, br, dets, retrieval_efficiency=eta, swap_map=lmap)
        inputs = {"left": ensemble_to_json(la), "right": ensemble_to_json(br)}
    else:
        result = run_higher_swap(
            pure(psi_plus("L", "A")), pure(psi_plus("B", "R")), dets,
            retrieval_efficiency=eta, swap_map=lmap,
        )
        inputs = {"left": "psi+ L-A", "right": "psi+ B-R"}
    payload = {"seed": args.seed, "level": level, "inputs": inputs, **swap_result_to_json(result)}
    print(f"{level} swap acceptance probability: {result.acceptance_probability:.12g}")
    print(f"fidelity to psi+ (L, R): {result.fidelity:.12g}")
    _emit(_dump(payload), args.out)
    return EXIT_OK


def cmd_chain(cfg: dict, args) -> int:
    cc = chain_config(cfg, args.seed)
    stats = simulate_chain(cc, seed=args.seed, trials=args.trials)
    row = stats.as_row()
    payload = {"seed": args.seed, "segments": cc.segments, "stats": row}
    print(
        f"segments={cc.segments} trials={stats.trials} mean attempts={stats.mean_attempts:.4g} "
        f"+/- {stats.half_width:.2g} fidelity(mean,min)=({stats.fidelity_mean:.12g}, {stats.fidelity_min:.12g})"
    )
    _emit(_dump(payload), args.out)
    return EXIT_OK


def cmd_sweep(cfg: dict, args) -> int:
    grid = cfg.get("sweep") or {"segments": [2, 4]}
    base = chain_config(cfg, args.seed)
    try:
        rows = sweep(base, grid, seed=args.seed, trials=args.trials)
    except ValueError as e:
        raise ConfigError(f"invalid config at sweep: {e}") from None
    text = rows_to_csv(rows)
    sys.stdout.write(text)
    _emit(text, args.out)
    return EXIT_OK


COMMANDS = {
    "verify": cmd_verify,
    "link": cmd_link,
    "swap": cmd_swap,
    "chain": cmd_chain,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qrepeater", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", metavar="PATH")
    parser.add_argument("--seed", type=int, metavar="N")
    parser.add_argument("--out", metavar="PATH")
    parser.add_argument("--mode", choices=["exhaustive", "sampled"])
    parser.add_argument("--trials", type=int, metavar="N")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        for key, default in (("seed", 0), ("out", None), ("mode", "exhaustive"), ("trials", 1000)):
            if getattr(args, key) is None:
                setattr(args, key, cfg.get(key, default))
        if args.seed < 0 or args.trials < 1:
            raise ConfigError("--seed must be >= 0 and --trials >= 1")
        return COMMANDS[args.command](cfg, args)
    except ConfigError as e:
        print(f"qrepeater: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, KeyError) as e:
        print(f"qrepeater: invalid configuration: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
