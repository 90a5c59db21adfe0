"""Command-line front end: configuration files, run orchestration and
machine-readable outputs.

Verbs: optimize, sweep, oracle-check, keyrate, export-scheme.  Exit codes:
0 success, 1 usage error, 2 configuration error, 3 guarded-size refusal.
All data files are written atomically (temp file + rename) and reruns of
identical configurations are byte-identical; wall-clock information only
appears in the run manifest.
"""

from __future__ import annotations

import argparse
import copy
import dataclasses
import hashlib
import json
import math
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import jsonschema
import numpy as np
import yaml

from .chain import ChainConfig, ProtocolSet
from .errors import ConfigError, RepoptError, SizeGuardError
from .keyrate import qber, six_state_fraction
from .optimizer import OptimizeResult, OptimizerConfig, brute_force, optimize
from .platform_ip import IP_PARAMETER_SETS, IpParams
from .platform_mp import MP_PARAMETER_SETS, MpParams
from .scheme import scheme_to_dict, serialize, to_dot

VERSION = "0.1.0"

IP_PRESETS = {f"ip-set-{k}": v for k, v in IP_PARAMETER_SETS.items()}
MP_PRESETS = {f"mp-set-{k}": v for k, v in MP_PARAMETER_SETS.items()}

_NODE_SCHEMA = {
    "anyOf": [
        {"type": "string"},
        {"type": "object", "additionalProperties": {"type": ["number", "string", "boolean"]}},
    ]
}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["chain"],
    "additionalProperties": False,
    "properties": {
        "chain": {
            "type": "object",
            "required": ["platform"],
            "additionalProperties": False,
            "properties": {
                "platform": {"enum": ["ip", "mp", "combined"]},
                "n_links": {"type": "integer", "minimum": 1},
                "total_length_km": {"type": "number", "exclusiveMinimum": 0},
                "link_lengths": {
                    "type": "array",
                    "items": {"type": "number", "exclusiveMinimum": 0},
                    "minItems": 1,
                },
                "ip": _NODE_SCHEMA,
                "ip_ends": _NODE_SCHEMA,
                "mp": _NODE_SCHEMA,
                "mp_ends": _NODE_SCHEMA,
                "protocols": {"type": "object"},
            },
        },
        "optimizer": {"type": "object"},
        "keyrate": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"advantage_distillation": {"type": "boolean"}},
        },
        "sweep": {
            "type": "object",
            "required": ["parameters"],
            "additionalProperties": False,
            "properties": {
                "parameters": {
                    "type": "array",
                    "minItems": 1,
                    "maxItems": 2,
                    "items": {
                        "type": "object",
                        "required": ["name", "fields"],
                        "additionalProperties": False,
                        "properties": {
                            "name": {"type": "string"},
                            "fields": {"type": "array", "items": {"type": "string"}},
                            "values": {"type": "array", "items": {"type": "number"}},
                            "start": {"type": "number"},
                            "stop": {"type": "number"},
                            "steps": {"type": "integer", "minimum": 1},
                            "spacing": {"enum": ["linear", "log"]},
                        },
                    },
                },
                "targets": {"type": "array", "items": {"type": "number"}},
            },
        },
        "outputs": {
            "type": "array",
            "items": {"enum": ["frontier", "schemes", "counts", "keyrates", "heatmap", "dot"]},
        },
    },
}


@dataclass
class RunConfig:
    chain: ChainConfig
    optimizer: OptimizerConfig
    outputs: list[str]
    advantage_distillation: bool = False
    sweep: dict | None = None
    raw: dict = field(default_factory=dict)


def _node_params(section, presets, builder, what: str):
    if section is None:
        return builder()
    if isinstance(section, str):
        if section not in presets:
            raise ConfigError(
                f"unknown {what} preset {section!r}; available: {sorted(presets)}"
            )
        return presets[section]
    overrides = dict(section)
    preset = overrides.pop("preset", None)
    if preset is not None:
        if preset not in presets:
            raise ConfigError(
                f"unknown {what} preset {preset!r}; available: {sorted(presets)}"
            )
        base = presets[preset]
    else:
        base = builder()
    try:
        return dataclasses.replace(base, **overrides)
    except (TypeError, RepoptError) as exc:
        raise ConfigError(f"invalid {what} parameters: {exc}") from None


def _build_chain(section: dict) -> ChainConfig:
    if "link_lengths" in section:
        lengths = tuple(float(x) for x in section["link_lengths"])
        if "n_links" in section and section["n_links"] != len(lengths):
            raise ConfigError("chain.n_links disagrees with chain.link_lengths")
    else:
        if "n_links" not in section or "total_length_km" not in section:
            raise ConfigError(
                "chain needs either link_lengths or both n_links and total_length_km"
            )
        n = int(section["n_links"])
        lengths = tuple([float(section["total_length_km"]) / n] * n)
    platform = section["platform"]
    n_nodes = len(lengths) + 1
    try:
        protocols = ProtocolSet(**section.get("protocols", {}))
    except (TypeError, RepoptError) as exc:
        raise ConfigError(f"invalid chain.protocols: {exc}") from None

    def nodes(kind, presets, builder):
        middle = _node_params(section.get(kind), presets, builder, kind)
        ends = section.get(f"{kind}_ends")
        end = _node_params(ends, presets, builder, kind) if ends is not None else middle
        return tuple([end] + [middle] * (n_nodes - 2) + [end]) if n_nodes > 1 else (end,)

    ip_nodes = mp_nodes = None
    if platform in ("ip", "combined"):
        ip_nodes = nodes("ip", IP_PRESETS, IpParams)
    if platform in ("mp", "combined"):
        mp_nodes = nodes("mp", MP_PRESETS, MpParams)
    try:
        return ChainConfig(
            platform=platform,
            link_lengths=lengths,
            ip_nodes=ip_nodes,
            mp_nodes=mp_nodes,
            protocols=protocols,
        )
    except RepoptError as exc:
        raise ConfigError(f"invalid chain: {exc}") from None


def load_config(path: str) -> RunConfig:
    """Parse and validate a run configuration file."""
    try:
        with open(path) as handle:
            raw = yaml.safe_load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config field {exc.json_path}: {exc.message}") from None
    chain = _build_chain(raw["chain"])
    try:
        opt = OptimizerConfig(**raw.get("optimizer", {}))
    except (TypeError, RepoptError) as exc:
        raise ConfigError(f"invalid optimizer section: {exc}") from None
    return RunConfig(
        chain=chain,
        optimizer=opt,
        outputs=list(raw.get("outputs", ["frontier", "schemes", "counts"])),
        advantage_distillation=bool(
            raw.get("keyrate", {}).get("advantage_distillation", False)
        ),
        sweep=raw.get("sweep"),
        raw=raw,
    )


# -- output files ------------------------------------------------------------


def _atomic_write(path: str, text: str):
    directory = os.path.dirname(path) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x: float) -> str:
    return repr(float(x))


def frontier_rows(result: OptimizeResult):
    """Deterministically ordered (cell, scheme, id) rows of the final link."""
    cells = result.store.link_cells(result.end_key)
    ordered = sorted(cells.items(), key=lambda kv: (kv[0][0], -kv[1].fidelity, kv[0][1]))
    n_links = result.end_key if isinstance(result.end_key, int) else (
        result.end_key[1] - result.end_key[0]
    )
    rows = []
    for idx, ((pb, _fb), scheme) in enumerate(ordered):
        rows.append((n_links, pb, scheme, f"s{idx:04d}"))
    return rows


def write_frontier(path: str, result: OptimizeResult):
    lines = ["n_links,p_bin,F,p,T_seconds,scheme_id"]
    for n_links, pb, scheme, sid in frontier_rows(result):
        lines.append(
            f"{n_links},{pb},{_fmt(scheme.fidelity)},{_fmt(scheme.p)},{_fmt(scheme.t)},{sid}"
        )
    _atomic_write(path, "\n".join(lines) + "\n")


def write_schemes(path: str, result: OptimizeResult):
    records = {
        sid: scheme_to_dict(s) for _, _, s, sid in frontier_rows(result)
    }
    _atomic_write(path, json.dumps({"schemes": records}, indent=2, sort_keys=True) + "\n")


def write_counts(path: str, result: OptimizeResult):
    lines = ["link_length,candidates,stored"]
    for length in sorted(result.stats.candidates_per_length):
        lines.append(
            f"{length},{result.stats.candidates_per_length[length]},"
            f"{result.stats.stored_per_length.get(length, 0)}"
        )
    _atomic_write(path, "\n".join(lines) + "\n")


def write_keyrates(path: str, result: OptimizeResult, ad: bool):
    lines = ["scheme_id,F,p,T_seconds,q_x,q_y,q_z,secret_fraction,key_rate_bits_per_s"]
    for _, _, scheme, sid in frontier_rows(result):
        q = qber(scheme.state)
        frac = six_state_fraction(q, ad)
        rate = frac * scheme.p / scheme.t
        lines.append(
            f"{sid},{_fmt(scheme.fidelity)},{_fmt(scheme.p)},{_fmt(scheme.t)},"
            f"{_fmt(q.q_x)},{_fmt(q.q_y)},{_fmt(q.q_z)},{_fmt(frac)},{_fmt(rate)}"
        )
    _atomic_write(path, "\n".join(lines) + "\n")


def write_dots(outdir: str, result: OptimizeResult):
    for _, _, scheme, sid in frontier_rows(result):
        _atomic_write(os.path.join(outdir, f"{sid}.dot"), to_dot(scheme) + "\n")


def write_manifest(path: str, run: RunConfig, results: dict):
    manifest = {
        "config_sha256": hashlib.sha256(
            json.dumps(run.raw, sort_keys=True).encode()
        ).hexdigest(),
        "version": VERSION,
        **results,
    }
    _atomic_write(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def run_optimize(run: RunConfig, outdir: str) -> OptimizeResult:
    """Execute one optimisation and write the requested outputs."""
    started = time.perf_counter()
    result = optimize(run.chain, run.optimizer)
    outputs = run.outputs
    if "frontier" in outputs:
        write_frontier(os.path.join(outdir, "frontier.csv"), result)
    if "schemes" in outputs:
        write_schemes(os.path.join(outdir, "schemes.json"), result)
    if "counts" in outputs:
        write_counts(os.path.join(outdir, "counts.csv"), result)
    if "keyrates" in outputs:
        write_keyrates(
            os.path.join(outdir, "keyrates.csv"), result, run.advantage_distillation
        )
    if "dot" in outputs:
        write_dots(outdir, result)
    write_manifest(
        os.path.join(outdir, "manifest.json"),
        run,
        {
            "wall_time_s": time.perf_counter() - started,
            "candidates": result.stats.candidates_per_length,
            "frontier_size": len(result.store.link_cells(result.end_key)),
        },
    )
    return result


# -- sweeps ------------------------------------------------------------------


def _axis_values(param: dict) -> list[float]:
    if "values" in param:
        return [float(v) for v in param["values"]]
    for key in ("start", "stop", "steps"):
        if key not in param:
            raise ConfigError(f"sweep parameter {param['name']!r} needs values or start/stop/steps")
    if param.get("spacing", "linear") == "log":
        vals = np.geomspace(param["start"], param["stop"], param["steps"])
    else:
        vals = np.linspace(param["start"], param["stop"], param["steps"])
    return [float(v) for v in vals]


def _apply_field(raw: dict, dotted: str, value: float):
    parts = dotted.split(".")
    if len(parts) < 2:
        raise ConfigError(f"sweep field {dotted!r} must be dotted (section.key...)")
    node = raw
    for part in parts[:-1]:
        child = node.get(part)
        if child is None:
            child = {}
            node[part] = child
        elif isinstance(child, str):
            child = {"preset": child}
            node[part] = child
        elif not isinstance(child, dict):
            raise ConfigError(f"sweep field {dotted!r} does not address a mapping")
        node = child
    node[parts[-1]] = value


def _sweep_point_config(raw: dict, assignment: list[tuple[dict, float]]) -> RunConfig:
    point = copy.deepcopy(raw)
    point.pop("sweep", None)
    for param, value in assignment:
        for dotted in param["fields"]:
            _apply_field(point, dotted, value)
    chain = _build_chain(point["chain"])
    opt = OptimizerConfig(**point.get("optimizer", {}))
    return RunConfig(
        chain=chain,
        optimizer=opt,
        outputs=list(point.get("outputs", [])),
        advantage_distillation=bool(
            point.get("keyrate", {}).get("advantage_distillation", False)
        ),
        raw=point,
    )


def _sweep_point(args):
    index, raw, assignment, targets, outdir, per_point = args
    run = _sweep_point_config(raw, assignment)
    result = optimize(run.chain, run.optimizer)
    if per_point:
        point_dir = os.path.join(outdir, f"point_{index:04d}")
        write_frontier(os.path.join(point_dir, "frontier.csv"), result)
    frontier = result.frontier()
    rates = []
    for target in targets:
        eligible = [s for s in frontier if s.fidelity >= target]
        rates.append(max((s.p / s.t for s in eligible), default=math.nan))
    key = max(
        (six_state_fraction(qber(s.state), run.advantage_distillation) * s.p / s.t
         for s in frontier),
        default=math.nan,
    )
    return index, [v for _, v in assignment], rates, key


def run_sweep(run: RunConfig, outdir: str, workers: int = 1):
    """Grid sweep over at most two named parameters."""
    sweep = run.sweep
    if not sweep:
        raise ConfigError("config has no sweep section")
    params = sweep["parameters"]
    axes = [_axis_values(p) for p in params]
    targets = [float(t) for t in sweep.get("targets", [])]
    per_point = "frontier" in run.outputs
    jobs = []
    index = 0
    if len(axes) == 1:
        grid = [[v] for v in axes[0]]
    else:
        grid = [[v1, v2] for v1 in axes[0] for v2 in axes[1]]
    for values in grid:
        assignment = list(zip(params, values))
        jobs.append((index, run.raw, assignment, targets, outdir, per_point))
        index += 1
    started = time.perf_counter()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(job) for job in jobs]
    results.sort(key=lambda item: item[0])
    names = [p["name"] for p in params]
    header = ",".join(names + [f"rate_F{t}" for t in targets] + ["key_rate_bits_per_s"])
    lines = [header]
    for _, values, rates, key in results:
        cells = [_fmt(v) for v in values]
        cells += ["" if math.isnan(r) else _fmt(r) for r in rates]
        cells.append("" if math.isnan(key) else _fmt(key))
        lines.append(",".join(cells))
    _atomic_write(os.path.join(outdir, "grid.csv"), "\n".join(lines) + "\n")
    write_manifest(
        os.path.join(outdir, "manifest.json"),
        run,
        {"wall_time_s": time.perf_counter() - started, "points": len(jobs)},
    )


def run_oracle_check(run: RunConfig, outdir: str) -> bool:
    """Compare the heuristic store against the guarded reference search."""
    heur = optimize(run.chain, run.optimizer)
    ref = brute_force(run.chain, run.optimizer)
    h_cells = heur.store.link_cells(heur.end_key)
    b_cells = ref.store.link_cells(ref.end_key)
    mismatches = []
    for cell in sorted(h_cells):
        other = b_cells.get(cell)
        if other is None or other.t != h_cells[cell].t:
            mismatches.append(
                {
                    "cell": list(cell),
                    "heuristic_t": h_cells[cell].t,
                    "reference_t": None if other is None else other.t,
                }
            )
    report = {
        "heuristic_cells": len(h_cells),
        "reference_cells": len(b_cells),
        "heuristic_candidates": heur.stats.candidates_per_length,
        "reference_candidates": ref.stats.candidates_per_length,
        "mismatches": mismatches,
        "sound": not mismatches,
    }
    _atomic_write(
        os.path.join(outdir, "oracle_report.json"),
        json.dumps(report, indent=2, sort_keys=True) + "\n",
    )
    return not mismatches


def run_export(run: RunConfig, outdir: str, scheme_id: str):
    result = optimize(run.chain, run.optimizer)
    for _, _, scheme, sid in frontier_rows(result):
        if sid == scheme_id:
            _atomic_write(os.path.join(outdir, f"{sid}.json"), serialize(scheme) + "\n")
            _atomic_write(os.path.join(outdir, f"{sid}.dot"), to_dot(scheme) + "\n")
            return True
    return False


# -- entry point -------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="repopt",
        description="Optimise near-deterministic entanglement distribution over repeater chains",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in ("optimize", "sweep", "oracle-check", "keyrate", "export-scheme"):
        p = sub.add_parser(verb)
        p.add_argument("--config", "-c", required=True, help="YAML run configuration")
        p.add_argument("--outdir", "-o", required=True, help="output directory")
        if verb == "sweep":
            p.add_argument(
                "--workers", "-w", type=int, default=os.cpu_count() or 1,
                help="parallel sweep points (results are order-independent)",
            )
        if verb == "export-scheme":
            p.add_argument("--scheme-id", required=True)
    return parser


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        run = load_config(args.config)
        os.makedirs(args.outdir, exist_ok=True)
        if args.verb == "optimize":
            run_optimize(run, args.outdir)
        elif args.verb == "sweep":
            run_sweep(run, args.outdir, workers=args.workers)
        elif args.verb == "oracle-check":
            run_oracle_check(run, args.outdir)
        elif args.verb == "keyrate":
            run.outputs = sorted(set(run.outputs) | {"keyrates", "frontier"})
            run_optimize(run, args.outdir)
        elif args.verb == "export-scheme":
            if not run_export(run, args.outdir, args.scheme_id):
                print(f"scheme {args.scheme_id} not found", file=sys.stderr)
                return 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SizeGuardError as exc:
        print(f"size guard: {exc}", file=sys.stderr)
        return 3
    except RepoptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
