"""Command-line interface.

Four subcommands wrap the library into reproducible file-producing runs:

- ``quantize``: one (graph, r, algorithm, seed) cell with full signal dumps.
- ``sweep``: error-versus-bandwidth or error-versus-M tables.
- ``halftone``: point-cloud halftoning comparison (MSQ vs SDW vs SSS-R).
- ``graph-info``: vertex/degree/spectral quick look, no files written.

Each command takes one config file; any value can be overridden with
``--set key=value``.  Data outputs are CSV/JSON and are byte-identical
across reruns of the same config; figures are rendered next to them unless
``figures: false`` or ``--no-figures`` is set.  ``GNSQUANT_THREADS``
controls sweep fan-out and ``--deterministic`` forces sequential order
(results are canonically sorted either way).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from gnsquant import __version__
from gnsquant.analysis import (
    effective_q,
    error_report,
    halftone_compare,
    prepare_context,
    rescale_to_unit,
    run_algorithm,
    summarize,
    sweep_bandwidth,
    sweep_iterations,
    write_manifest,
    write_results_csv,
    write_summary_csv,
)
from gnsquant.quant import bit_accounting
from gnsquant.config import ConfigError, ExperimentConfig, build_graph, load_config, validate_config
from gnsquant.graphs import Graph, GraphFormatError, normalized_laplacian
from gnsquant.rng import derive_seeds
from gnsquant.spectral import (
    SpectralBasis,
    bandlimited_filter,
    eigendecompose,
    incoherence,
    laplacian_hash,
    load_basis,
    save_basis,
    synthesize_bandlimited,
)


def _thread_count(deterministic: bool) -> int:
    if deterministic:
        return 1
    raw = os.environ.get("GNSQUANT_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"GNSQUANT_THREADS: not an integer: {raw!r}")


def _basis_for(g: Graph, cfg: ExperimentConfig) -> SpectralBasis:
    """Eigendecompose, going through the content-hash cache when enabled."""
    lap = normalized_laplacian(g)
    if not cfg.cache:
        return eigendecompose(lap)
    cache_dir = cfg.output / "cache"
    path = cache_dir / (laplacian_hash(lap) + ".basis")
    if path.exists():
        return load_basis(path)
    basis = eigendecompose(lap)
    cache_dir.mkdir(parents=True, exist_ok=True)
    save_basis(basis, path)
    return basis


def _write_signal_csv(path, values: np.ndarray, value_name: str, index_name: str = "vertex") -> None:
    lines = [f"{index_name},{value_name}"]
    lines.extend(f"{i},{float(v)!r}" for i, v in enumerate(values))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_cloud_csv(path, points: np.ndarray, values: np.ndarray) -> None:
    names = ["x", "y", "z"][: points.shape[1]]
    lines = [",".join(names + ["value"])]
    for row, v in zip(points, values):
        cells = [repr(float(c)) for c in row] + [repr(float(v))]
        lines.append(",".join(cells))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_quantize(cfg: ExperimentConfig) -> int:
    g, name, _ = build_graph(cfg.graph)
    basis = _basis_for(g, cfg)
    filt = bandlimited_filter(basis, cfg.r)
    spec = cfg.algorithms[0]
    seed = cfg.seeds[0]
    sig_seed, alg_seed = derive_seeds(seed, 2)
    f = synthesize_bandlimited(filt, seed=sig_seed)
    run = run_algorithm(g, filt, f, spec, alg_seed)
    report = error_report(basis, filt, f, run)

    out = cfg.output
    signals = out / "signals"
    signals.mkdir(parents=True, exist_ok=True)
    _write_signal_csv(signals / "f.csv", f, "value")
    _write_signal_csv(signals / "q.csv", run.q, "value")
    _write_signal_csv(signals / "f_q.csv", run.f_q, "value")
    _write_signal_csv(
        signals / "error_spectrum.csv", report.error_spectrum, "magnitude", "frequency"
    )
    symbols = run.q_tilde if run.q_tilde is not None else run.q
    accounting = bit_accounting(symbols)
    payload = {
        "graph": name,
        "algorithm": spec.tag,
        "alphabet": spec.alphabet.spec_string(),
        "r": cfg.r,
        "seed": seed,
        "M": run.M,
        "T": run.T,
        "epochs_used": run.epochs_used,
        "changed_last_epoch": run.changed_last_epoch,
        "relative_l2_sq": report.relative_l2_sq,
        "linf": report.linf,
        "lowpass_relative_l2_sq": report.lowpass_relative_l2_sq,
        "inband_energy_fraction": report.inband_energy_fraction,
        "distinct_levels": accounting["distinct_levels"],
        "bits_per_entry": accounting["bits_per_entry"],
    }
    _write_json(out / "report.json", payload)
    write_manifest(out / "manifest.json", cfg.raw, {"command": "quantize"})
    if cfg.figures:
        from gnsquant.reports import render_quantize

        (out / "figures").mkdir(exist_ok=True)
        render_quantize(f, run, report, cfg.r, out / "figures" / "quantize.png")
    return 0


def cmd_sweep(cfg: ExperimentConfig, deterministic: bool, bound_form: str = "statement") -> int:
    g, name, _ = build_graph(cfg.graph)
    basis = _basis_for(g, cfg)
    ctx = prepare_context(g, name, basis)
    threads = _thread_count(deterministic)

    def run_with(map_fn):
        if cfg.M_list is not None:
            alphabet = cfg.algorithms[0].alphabet
            return (
                sweep_iterations(
                    ctx, cfg.r, cfg.M_list, alphabet, cfg.seeds,
                    fail_prob=cfg.fail_prob, bound_form=bound_form, map_fn=map_fn,
                ),
                "M",
            )
        return (
            sweep_bandwidth(
                ctx, cfg.r_list, cfg.algorithms, cfg.seeds,
                fail_prob=cfg.fail_prob, bound_form=bound_form, map_fn=map_fn,
            ),
            "r",
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows, x_field = run_with(pool.map)
    else:
        rows, x_field = run_with(map)

    summary = summarize(rows)
    out = cfg.output
    out.mkdir(parents=True, exist_ok=True)
    write_results_csv(rows, out / "results.csv")
    write_summary_csv(summary, out / "summary.csv")
    write_manifest(out / "manifest.json", cfg.raw, {"command": "sweep"})
    if cfg.figures:
        from gnsquant.reports import render_sweep

        (out / "figures").mkdir(exist_ok=True)
        render_sweep(summary, out / "figures" / "relative_error.png", x_field=x_field)
    return 0


def cmd_halftone(cfg: ExperimentConfig) -> int:
    g, name, points = build_graph(cfg.graph)
    if points is None:
        raise ConfigError("graph.kind: halftone needs a point-cloud graph")
    basis = _basis_for(g, cfg)
    column = cfg.halftone["column"]
    if column >= points.shape[1]:
        raise ConfigError(
            f"halftone.column: column {column} out of range for "
            f"{points.shape[1]}-dimensional cloud"
        )
    f = rescale_to_unit(points[:, column])
    result = halftone_compare(
        g,
        basis,
        f,
        cfg.halftone["alphabet"],
        r=cfg.halftone["r"],
        T=cfg.halftone["T"],
        M=cfg.halftone["M"],
        seeds=cfg.seeds,
    )

    out = cfg.output
    signals = out / "signals"
    signals.mkdir(parents=True, exist_ok=True)
    _write_cloud_csv(signals / "halftone_original.csv", points, f)
    comparison = {
        "graph": name,
        "r": cfg.halftone["r"],
        "alphabet": cfg.halftone["alphabet"].spec_string(),
        "seeds": list(cfg.seeds),
        "methods": {},
    }
    for tag, method in result.methods.items():
        run = method.runs[0]
        _write_cloud_csv(
            signals / f"halftone_{tag.lower()}.csv", points, effective_q(run)
        )
        comparison["methods"][tag] = {
            "lowpass_linf": method.mean_lowpass_linf,
            "lowpass_relative_l2_sq": method.mean_lowpass_rel_l2_sq,
        }
    _write_json(out / "comparison.json", comparison)
    write_manifest(out / "manifest.json", cfg.raw, {"command": "halftone"})
    if cfg.figures:
        from gnsquant.reports import render_halftone

        (out / "figures").mkdir(exist_ok=True)
        render_halftone(points, result, out / "figures" / "halftone.png")
    return 0


def cmd_graph_info(cfg: ExperimentConfig, r_flag: int | None) -> int:
    g, name, _ = build_graph(cfg.graph)
    basis = _basis_for(g, cfg)
    deg = g.degrees()
    print(f"graph: {name}")
    print(f"vertices: {g.n_vertices}")
    print(f"edges: {g.edge_count}")
    print(
        "degree min/mean/max: "
        f"{deg.min():.6g} / {deg.mean():.6g} / {deg.max():.6g}"
    )
    print(f"connected: {'yes' if g.is_connected() else 'no'}")
    gap = float(basis.eigenvalues[1]) if g.n_vertices > 1 else 0.0
    print(f"spectral gap (lambda_2): {gap:.6g}")
    r_values = [r_flag] if r_flag else (cfg.r_list or ([cfg.r] if cfg.r else []))
    for r in r_values:
        if not 1 <= r <= g.n_vertices:
            raise ConfigError(f"--r: r={r} outside [1, {g.n_vertices}]")
        filt = bandlimited_filter(basis, r)
        inc = incoherence(filt)
        flag = " (degenerate crossing)" if filt.degenerate_crossing else ""
        print(f"r={r}: mu={inc.mu:.6g}, nu={inc.nu:.6g}{flag}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gnsquant",
        description="Noise-shaping quantization experiments on graph signals.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("config", help="YAML experiment config")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a config value by dotted path (repeatable)",
        )
        p.add_argument("--seed", type=int, help="replace the config seed list")
        p.add_argument("--out", help="replace the config output directory")
        p.add_argument(
            "--deterministic",
            action="store_true",
            help="force single-threaded execution order",
        )
        p.add_argument(
            "--no-figures", action="store_true", help="skip figure rendering"
        )

    p = sub.add_parser("quantize", help="run one quantization cell, dump signals")
    common(p)
    p = sub.add_parser("sweep", help="error vs bandwidth or vs iteration count")
    common(p)
    p.add_argument(
        "--bound-form",
        choices=("statement", "proof_chain"),
        default="statement",
        help="which relative-error bound form to tabulate",
    )
    p = sub.add_parser("halftone", help="point-cloud halftoning comparison")
    common(p)
    p = sub.add_parser("graph-info", help="print graph and spectrum facts")
    common(p)
    p.add_argument("--r", type=int, help="bandwidth for the incoherence report")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg_dict = load_config(args.config, args.overrides)
        cfg = validate_config(
            cfg_dict, args.command, seed_override=args.seed, out_override=args.out
        )
        if args.no_figures:
            cfg.figures = False
        if args.command == "quantize":
            return cmd_quantize(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.deterministic, bound_form=args.bound_form)
        if args.command == "halftone":
            return cmd_halftone(cfg)
        return cmd_graph_info(cfg, args.r)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (GraphFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
