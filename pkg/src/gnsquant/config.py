"""Experiment configuration: YAML loading, overrides, validation, builders.

A config file is the single source of truth for a CLI run; every value can
be overridden on the command line with ``--set key=value`` using dotted
paths (numeric segments index into lists).  Validation happens before any
eigendecomposition and reports the offending field path.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from gnsquant.analysis import AlgorithmSpec
from gnsquant.graphs import (
    Graph,
    build_cycle,
    build_grid,
    build_knn_points,
    generate_point_cloud,
    load_edge_list,
    load_point_cloud,
)
from gnsquant.quant import parse_alphabet


class ConfigError(ValueError):
    """Invalid configuration; message starts with the field path."""


GRAPH_KINDS = ("grid", "cycle", "cloud", "edge_list", "cloud_csv")
CLOUD_KINDS = ("sphere", "swiss_roll", "grid2d")


@dataclass
class ExperimentConfig:
    """Validated, typed view of one experiment configuration."""

    raw: dict
    graph: dict
    r: int | None
    r_list: list[int] | None
    M_list: list[int] | None
    algorithms: list[AlgorithmSpec]
    seeds: list[int]
    fail_prob: float
    output: Path
    figures: bool
    cache: bool
    halftone: dict = field(default_factory=dict)


def load_config(path, overrides=()) -> dict:
    """Read the YAML config and apply ``--set`` overrides in order."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config: file not found: {path}")
    except yaml.YAMLError as exc:
        raise ConfigError(f"config: not valid YAML: {exc}")
    if cfg is None:
        cfg = {}
    if not isinstance(cfg, dict):
        raise ConfigError("config: top level must be a mapping")
    for item in overrides:
        cfg = apply_override(cfg, item)
    return cfg


def apply_override(cfg: dict, item: str) -> dict:
    """Set one dotted key to a YAML-parsed value, e.g. bandwidth.r=20."""
    if "=" not in item:
        raise ConfigError(f"--set {item!r}: expected KEY=VALUE")
    key, _, raw_value = item.partition("=")
    key = key.strip()
    if not key:
        raise ConfigError(f"--set {item!r}: empty key")
    try:
        value = yaml.safe_load(raw_value) if raw_value != "" else None
    except yaml.YAMLError:
        value = raw_value
    node = cfg
    parts = key.split(".")
    for i, part in enumerate(parts[:-1]):
        nxt = _descend(node, part, key)
        if nxt is None:
            if not isinstance(node, dict):
                raise ConfigError(f"--set {key}: {part} is not a mapping")
            node[part] = {}
            nxt = node[part]
        node = nxt
    leaf = parts[-1]
    if isinstance(node, list):
        idx = _list_index(node, leaf, key)
        node[idx] = value
    elif isinstance(node, dict):
        node[leaf] = value
    else:
        raise ConfigError(f"--set {key}: cannot assign into a scalar")
    return cfg


def _descend(node, part: str, full_key: str):
    if isinstance(node, list):
        return node[_list_index(node, part, full_key)]
    if isinstance(node, dict):
        return node.get(part)
    raise ConfigError(f"--set {full_key}: {part!r} reached a scalar")


def _list_index(node: list, part: str, full_key: str) -> int:
    try:
        idx = int(part)
    except ValueError:
        raise ConfigError(f"--set {full_key}: {part!r} is not a list index")
    if not 0 <= idx < len(node):
        raise ConfigError(f"--set {full_key}: index {idx} out of range")
    return idx


def _require(cfg: dict, key: str, types, path: str):
    if key not in cfg or cfg[key] is None:
        raise ConfigError(f"{path}{key}: required")
    value = cfg[key]
    if not isinstance(value, types):
        raise ConfigError(f"{path}{key}: wrong type {type(value).__name__}")
    return value


def _positive_int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ConfigError(f"{path}: must be a positive integer, got {value!r}")
    return value


def peek_n(graph: dict) -> int:
    """Vertex count implied by a graph spec, without building the graph."""
    kind = graph["kind"]
    if kind == "grid":
        return graph["rows"] * graph["cols"]
    if kind == "cycle":
        return graph["n"]
    if kind == "cloud":
        return graph["n"]
    if kind == "edge_list":
        with open(graph["path"], "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line and not line.startswith("#"):
                    return int(line)
        raise ConfigError(f"graph.path: {graph['path']} is empty")
    with open(graph["path"], "r", encoding="utf-8") as fh:
        return sum(1 for line in fh if line.strip())


def _validate_graph(graph, path="graph.") -> dict:
    if not isinstance(graph, dict):
        raise ConfigError("graph: must be a mapping")
    kind = _require(graph, "kind", str, path)
    if kind not in GRAPH_KINDS:
        raise ConfigError(f"{path}kind: unknown kind {kind!r}, expected {GRAPH_KINDS}")
    if kind == "grid":
        _positive_int(_require(graph, "rows", int, path), path + "rows")
        _positive_int(_require(graph, "cols", int, path), path + "cols")
        if graph["rows"] * graph["cols"] < 2:
            raise ConfigError(f"{path}rows: grid needs at least 2 vertices")
    elif kind == "cycle":
        n = _positive_int(_require(graph, "n", int, path), path + "n")
        if n < 3:
            raise ConfigError(f"{path}n: cycle needs n >= 3, got {n}")
    elif kind == "cloud":
        cloud_kind = _require(graph, "cloud_kind", str, path)
        if cloud_kind not in CLOUD_KINDS:
            raise ConfigError(
                f"{path}cloud_kind: unknown kind {cloud_kind!r}, expected {CLOUD_KINDS}"
            )
        n = _positive_int(_require(graph, "n", int, path), path + "n")
        if n < 4:
            raise ConfigError(f"{path}n: point clouds need n >= 4, got {n}")
        seed = graph.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            raise ConfigError(f"{path}seed: must be a nonnegative integer, got {seed!r}")
        k = _positive_int(_require(graph, "k", int, path), path + "k")
        if k >= n:
            raise ConfigError(f"{path}k: k={k} must be smaller than n={n}")
        _check_sigma(graph, path)
    else:
        p = _require(graph, "path", str, path)
        if not os.path.exists(p):
            raise ConfigError(f"{path}path: file not found: {p}")
        if kind == "cloud_csv":
            k = _positive_int(_require(graph, "k", int, path), path + "k")
            n = peek_n(graph)
            if k >= n:
                raise ConfigError(f"{path}k: k={k} must be smaller than N={n}")
            _check_sigma(graph, path)
    return graph


def _check_sigma(graph: dict, path: str) -> None:
    sigma = graph.get("sigma")
    if sigma is not None and (not isinstance(sigma, (int, float)) or sigma <= 0):
        raise ConfigError(f"{path}sigma: must be positive, got {sigma!r}")


def _validate_algorithms(cfg: dict) -> list[AlgorithmSpec]:
    algos = _require(cfg, "algorithms", list, "")
    if not algos:
        raise ConfigError("algorithms: at least one algorithm is required")
    specs = []
    for i, entry in enumerate(algos):
        path = f"algorithms.{i}."
        if not isinstance(entry, dict):
            raise ConfigError(f"algorithms.{i}: must be a mapping")
        tag = _require(entry, "tag", str, path)
        try:
            alphabet = parse_alphabet(_require(entry, "alphabet", str, path))
        except ValueError as exc:
            raise ConfigError(f"{path}alphabet: {exc}")
        T = entry.get("T", 10)
        M = entry.get("M")
        if T is not None:
            T = _positive_int(T, path + "T")
        if M is not None:
            M = _positive_int(M, path + "M")
        try:
            specs.append(AlgorithmSpec(tag=tag, alphabet=alphabet, T=T or 10, M=M))
        except ValueError as exc:
            raise ConfigError(f"{path}tag: {exc}")
    return specs


def _validate_seeds(cfg: dict, seed_override: int | None) -> list[int]:
    if seed_override is not None:
        return [int(seed_override)]
    seeds = _require(cfg, "seeds", (list, int), "")
    if isinstance(seeds, int):
        seeds = [seeds]
    if not seeds:
        raise ConfigError("seeds: must be nonempty")
    out = []
    for i, s in enumerate(seeds):
        if isinstance(s, bool) or not isinstance(s, int) or s < 0:
            raise ConfigError(f"seeds.{i}: must be a nonnegative integer, got {s!r}")
        out.append(s)
    return out


def validate_config(
    cfg: dict,
    command: str,
    seed_override: int | None = None,
    out_override: str | None = None,
) -> ExperimentConfig:
    """Type-check and range-check a config for one command.

    Raises ConfigError naming the offending field; performs no
    eigendecomposition or graph construction.
    """
    graph = _validate_graph(_require(cfg, "graph", dict, ""))
    n = peek_n(graph)

    bandwidth = cfg.get("bandwidth") or {}
    if not isinstance(bandwidth, dict):
        raise ConfigError("bandwidth: must be a mapping")
    r = bandwidth.get("r")
    r_list = bandwidth.get("r_list")
    M_list = bandwidth.get("M_list")
    if r is not None:
        r = _positive_int(r, "bandwidth.r")
        if r > n:
            raise ConfigError(f"bandwidth.r: r={r} exceeds N={n}")
    if r_list is not None:
        if not isinstance(r_list, list) or not r_list:
            raise ConfigError("bandwidth.r_list: must be a nonempty list")
        r_list = [_positive_int(x, f"bandwidth.r_list.{i}") for i, x in enumerate(r_list)]
        # entries past N are dropped, so one sweep config can serve graphs
        # of different sizes
        r_list = [x for x in r_list if x <= n]
        if not r_list:
            raise ConfigError(f"bandwidth.r_list: no entry is <= N={n}")
    if M_list is not None:
        if not isinstance(M_list, list) or not M_list:
            raise ConfigError("bandwidth.M_list: must be a nonempty list")
        M_list = [_positive_int(x, f"bandwidth.M_list.{i}") for i, x in enumerate(M_list)]

    fail_prob = cfg.get("fail_prob", 0.1)
    if not isinstance(fail_prob, (int, float)) or not 0.0 < fail_prob < 1.0:
        raise ConfigError(f"fail_prob: must lie in (0,1), got {fail_prob!r}")

    figures = cfg.get("figures", True)
    if not isinstance(figures, bool):
        raise ConfigError(f"figures: must be true or false, got {figures!r}")
    cache = cfg.get("cache", True)
    if not isinstance(cache, bool):
        raise ConfigError(f"cache: must be true or false, got {cache!r}")

    output = out_override or cfg.get("output")
    if command != "graph-info":
        if not output or not isinstance(output, (str, Path)):
            raise ConfigError("output: required output directory path")
    output = Path(output) if output else Path(".")

    halftone = cfg.get("halftone") or {}
    if not isinstance(halftone, dict):
        raise ConfigError("halftone: must be a mapping")

    if command == "quantize":
        if r is None:
            raise ConfigError("bandwidth.r: required for quantize")
        algorithms = _validate_algorithms(cfg)
        if len(algorithms) != 1:
            raise ConfigError("algorithms: quantize takes exactly one algorithm")
        seeds = _validate_seeds(cfg, seed_override)
        if len(seeds) != 1:
            raise ConfigError("seeds: quantize takes exactly one seed")
    elif command == "sweep":
        if r_list is None and M_list is None:
            raise ConfigError("bandwidth: sweep needs r_list or M_list")
        if M_list is not None and r is None:
            raise ConfigError("bandwidth.r: required for an M_list sweep")
        algorithms = _validate_algorithms(cfg)
        if M_list is not None and [a.tag for a in algorithms] != ["SSSR"]:
            raise ConfigError("algorithms: an M_list sweep takes exactly one SSSR entry")
        seeds = _validate_seeds(cfg, seed_override)
    elif command == "halftone":
        if graph["kind"] not in ("cloud", "cloud_csv"):
            raise ConfigError("graph.kind: halftone needs a point-cloud graph")
        ht_r = halftone.get("r", r if r is not None else 20)
        ht_r = _positive_int(ht_r, "halftone.r")
        if ht_r > n:
            raise ConfigError(f"halftone.r: r={ht_r} exceeds N={n}")
        column = halftone.get("column", 2)
        if isinstance(column, bool) or not isinstance(column, int) or column < 0:
            raise ConfigError(f"halftone.column: must be a nonnegative int, got {column!r}")
        try:
            alphabet = parse_alphabet(halftone.get("alphabet", "mt:1:1"))
        except ValueError as exc:
            raise ConfigError(f"halftone.alphabet: {exc}")
        T = _positive_int(halftone.get("T", 10), "halftone.T")
        M = halftone.get("M")
        if M is not None:
            M = _positive_int(M, "halftone.M")
        halftone = {"r": ht_r, "column": column, "alphabet": alphabet, "T": T, "M": M}
        seeds = _validate_seeds(cfg, seed_override)
        algorithms = []
    elif command == "graph-info":
        algorithms = []
        seeds = [0]
    else:
        raise ConfigError(f"unknown command {command!r}")

    return ExperimentConfig(
        raw=cfg,
        graph=graph,
        r=r,
        r_list=r_list,
        M_list=M_list,
        algorithms=algorithms,
        seeds=seeds,
        fail_prob=float(fail_prob),
        output=output,
        figures=figures,
        cache=cache,
        halftone=halftone,
    )


def build_graph(spec: dict) -> tuple[Graph, str, np.ndarray | None]:
    """Construct the graph named by a validated spec.

    Returns the graph, a short name for result rows, and the point cloud
    when the graph came from one (None otherwise).
    """
    kind = spec["kind"]
    if kind == "grid":
        return build_grid(spec["rows"], spec["cols"]), f"grid{spec['rows']}x{spec['cols']}", None
    if kind == "cycle":
        return build_cycle(spec["n"]), f"cycle{spec['n']}", None
    if kind == "cloud":
        points = generate_point_cloud(spec["cloud_kind"], spec["n"], spec.get("seed", 0))
        g = build_knn_points(points, spec["k"], spec.get("sigma"))
        name = f"{spec['cloud_kind']}{spec['n']}-k{spec['k']}"
        return g, name, points
    if kind == "edge_list":
        return load_edge_list(spec["path"]), f"edgelist:{Path(spec['path']).stem}", None
    points = load_point_cloud(spec["path"])
    g = build_knn_points(points, spec["k"], spec.get("sigma"))
    return g, f"cloud:{Path(spec['path']).stem}-k{spec['k']}", points
