"""Error metrics, theoretical bounds, oracles, and experiment sweeps.

Everything downstream of a quantization run lives here: the per-run error
report, the relative-error bound and the signal-energy lower bound, an
exhaustive small-instance optimum for testing, and the long-format sweep
drivers whose rows serialize to CSV.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from gnsquant import __version__
from gnsquant.graphs import Graph, normalized_laplacian
from gnsquant.quant import Alphabet, bit_accounting
from gnsquant.rng import derive_seeds
from gnsquant.shaping import (
    QuantRun,
    default_sssr_iterations,
    quantize_msq,
    quantize_permutation,
    quantize_sssr,
)
from gnsquant.spectral import (
    BandlimitedFilter,
    SpectralBasis,
    apply_lowpass,
    bandlimited_filter,
    eigendecompose,
    gft,
    incoherence,
    synthesize_bandlimited,
)

RESULT_COLUMNS = (
    "graph",
    "algorithm",
    "alphabet",
    "r",
    "M",
    "T",
    "seed",
    "relative_l2_sq",
    "linf",
    "lowpass_relative_l2_sq",
    "inband_energy_fraction",
    "bound_c1",
    "epochs_used",
    "distinct_levels",
)

SUMMARY_COLUMNS = (
    "graph",
    "algorithm",
    "alphabet",
    "r",
    "M",
    "T",
    "n_seeds",
    "mean_relative_l2_sq",
    "std_relative_l2_sq",
    "mean_linf",
    "mean_lowpass_relative_l2_sq",
    "mean_inband_energy_fraction",
    "bound_c1",
)


@dataclass(frozen=True)
class ErrorReport:
    """Scalar error metrics plus the error magnitude spectrum."""

    relative_l2_sq: float
    linf: float
    lowpass_relative_l2_sq: float
    error_spectrum: np.ndarray
    inband_energy_fraction: float


def effective_q(run: QuantRun) -> np.ndarray:
    """Quantized vector on the signal's scale.

    Sampling with replacement aggregates by summation, so its q carries an
    implicit M/N factor; the reconstruction-scale vector is (N/M) q.
    """
    if run.algorithm_tag == "SSSR":
        return (run.q.size / run.M) * run.q
    return run.q


def error_report(
    basis: SpectralBasis,
    filt: BandlimitedFilter,
    f: np.ndarray,
    run: QuantRun,
) -> ErrorReport:
    """All error metrics for one run against the original signal."""
    f = np.asarray(f, dtype=float)
    if f.shape != (basis.n,) or filt.n != basis.n or run.q.shape != f.shape:
        raise ValueError("basis, filter, signal, and run dimensions disagree")
    f_sq = float(f @ f)
    if f_sq == 0.0:
        raise ValueError("error metrics are undefined for the zero signal")
    e = run.f_q - f
    lp_f = apply_lowpass(filt, f)
    lp_e = apply_lowpass(filt, run.f_q) - lp_f
    lp_sq = float(lp_f @ lp_f)
    spectrum = np.abs(gft(basis, f - effective_q(run)))
    total = float(spectrum @ spectrum)
    inband = float(spectrum[: filt.r] @ spectrum[: filt.r]) / total if total else 0.0
    return ErrorReport(
        relative_l2_sq=float(e @ e) / f_sq,
        linf=float(np.max(np.abs(e))),
        lowpass_relative_l2_sq=float(lp_e @ lp_e) / lp_sq if lp_sq else 0.0,
        error_spectrum=spectrum,
        inband_energy_fraction=inband,
    )


@dataclass(frozen=True)
class BoundParams:
    """Inputs to the relative-error bound: constant, incoherence, bandwidth,
    iteration count, and failure probability."""

    C: float
    mu: float
    r: int
    M: int
    fail_prob: float

    def __post_init__(self) -> None:
        if self.C <= 0 or self.mu <= 0 or self.r < 1 or self.M < 1:
            raise ValueError("C and mu must be positive, r and M at least 1")
        if not 0.0 < self.fail_prob < 1.0:
            raise ValueError(f"fail_prob must lie in (0,1), got {self.fail_prob}")
        if self.r / self.fail_prob <= 1.0:
            raise ValueError("bound requires r/fail_prob > 1")


def theorem1_bound(p: BoundParams, form: str = "statement") -> float:
    """High-probability relative-error bound for sampling with replacement.

    The statement form is C mu^2 r^2 ln^2(r/fail_prob) / M; the proof-chain
    form carries a single logarithm, C mu^2 r^2 ln((r+1)/fail_prob) / M.
    Natural logarithms throughout.
    """
    if form == "statement":
        log_term = math.log(p.r / p.fail_prob) ** 2
    elif form == "proof_chain":
        log_term = math.log((p.r + 1) / p.fail_prob)
    else:
        raise ValueError(f"unknown bound form {form!r}")
    return p.C * p.mu**2 * p.r**2 * log_term / p.M


def signal_norm_lower_bound(n: int, r: int, mu: float) -> float:
    """Energy floor N/(r mu) for unit-infinity-norm bandlimited signals."""
    if n < 1 or r < 1 or mu <= 0:
        raise ValueError("n, r must be >= 1 and mu positive")
    return n / (r * mu)


def brute_force_optimum(
    filt: BandlimitedFilter, f: np.ndarray, a: Alphabet
) -> tuple[np.ndarray, float]:
    """Exhaustive minimizer of ||L (f - q)||_2 over all alphabet vectors.

    Only usable at toy scale; the search space |levels|^N is capped at 1e6.
    Ties resolve to the lexicographically smallest q (levels ascending).
    """
    f = np.asarray(f, dtype=float)
    n = f.size
    levels = np.asarray(a.all_levels(), dtype=float)
    total = len(levels) ** n
    if total > 10**6:
        raise ValueError(f"search space {len(levels)}^{n} exceeds 1e6 candidates")
    best_val = math.inf
    best_idx = -1
    chunk = 1 << 15
    place = len(levels) ** np.arange(n - 1, -1, -1, dtype=np.int64)
    for lo in range(0, total, chunk):
        idx = np.arange(lo, min(lo + chunk, total), dtype=np.int64)
        digits = (idx[:, None] // place) % len(levels)
        resid = (f[None, :] - levels[digits]) @ filt.rows.T
        obj = np.einsum("ij,ij->i", resid, resid)
        j = int(np.argmin(obj))
        if obj[j] < best_val:
            best_val = float(obj[j])
            best_idx = lo + j
    digits = (best_idx // place) % len(levels)
    return levels[digits], math.sqrt(best_val)


@dataclass(frozen=True)
class AlgorithmSpec:
    """One algorithm column of a sweep: tag, alphabet, and budget knobs."""

    tag: str
    alphabet: Alphabet
    T: int = 10
    M: int | None = None

    def __post_init__(self) -> None:
        if self.tag not in ("MSQ", "SSS", "SDW", "SSSR"):
            raise ValueError(f"unknown algorithm tag {self.tag!r}")
        if self.T < 1:
            raise ValueError(f"T must be >= 1, got {self.T}")
        if self.M is not None and self.M < 1:
            raise ValueError(f"M must be >= 1, got {self.M}")


def run_algorithm(
    g: Graph,
    filt: BandlimitedFilter,
    f: np.ndarray,
    spec: AlgorithmSpec,
    seed: int,
) -> QuantRun:
    """Dispatch one (algorithm, signal, seed) cell."""
    if spec.tag == "MSQ":
        return quantize_msq(filt, f, spec.alphabet)
    if spec.tag in ("SSS", "SDW"):
        return quantize_permutation(
            g, filt, f, spec.alphabet, spec.tag, seed, T_max=spec.T
        )
    M = spec.M if spec.M is not None else default_sssr_iterations(filt.n)
    return quantize_sssr(filt, f, spec.alphabet, M=M, seed=seed)


@dataclass(frozen=True)
class ResultRow:
    """One long-format record per (graph, algorithm, r or M, seed)."""

    graph: str
    algorithm: str
    alphabet: str
    r: int
    M: int | None
    T: int | None
    seed: int
    relative_l2_sq: float
    linf: float
    lowpass_relative_l2_sq: float
    inband_energy_fraction: float
    bound_c1: float | None
    epochs_used: int | None
    distinct_levels: int


def _row(
    graph_name: str,
    spec: AlgorithmSpec,
    r: int,
    seed: int,
    mu: float,
    fail_prob: float,
    run: QuantRun,
    report: ErrorReport,
    bound_form: str = "statement",
) -> ResultRow:
    bound = None
    if spec.tag == "SSSR" and r / fail_prob > 1.0:
        bound = theorem1_bound(BoundParams(1.0, mu, r, run.M, fail_prob), form=bound_form)
    # Bit accounting counts transmitted symbols: the per-visit levels for
    # sampling with replacement, the vertex samples otherwise.
    symbols = run.q_tilde if run.q_tilde is not None else run.q
    return ResultRow(
        graph=graph_name,
        algorithm=spec.tag,
        alphabet=spec.alphabet.spec_string(),
        r=r,
        M=run.M,
        T=run.T if spec.tag in ("SSS", "SDW") else None,
        seed=seed,
        relative_l2_sq=report.relative_l2_sq,
        linf=report.linf,
        lowpass_relative_l2_sq=report.lowpass_relative_l2_sq,
        inband_energy_fraction=report.inband_energy_fraction,
        bound_c1=bound,
        epochs_used=run.epochs_used if spec.tag in ("SSS", "SDW") else None,
        distinct_levels=bit_accounting(symbols)["distinct_levels"],
    )


@dataclass
class SweepContext:
    """Shared per-graph state for sweep cells (read-only once built)."""

    graph: Graph
    name: str
    basis: SpectralBasis


def prepare_context(g: Graph, name: str, basis: SpectralBasis | None = None) -> SweepContext:
    if basis is None:
        basis = eigendecompose(normalized_laplacian(g))
    return SweepContext(graph=g, name=name, basis=basis)


def _canonical_sort(rows: list[ResultRow]) -> list[ResultRow]:
    return sorted(
        rows,
        key=lambda x: (x.graph, x.r, x.M or 0, x.algorithm, x.alphabet, x.seed),
    )


def sweep_bandwidth(
    ctx: SweepContext,
    r_list,
    algorithms: list[AlgorithmSpec],
    seeds,
    fail_prob: float = 0.1,
    bound_form: str = "statement",
    map_fn=map,
) -> list[ResultRow]:
    """Error-versus-bandwidth experiment.

    For each r and seed one bandlimited signal is synthesized and handed to
    every algorithm, so curves are comparable pointwise.  ``map_fn`` lets a
    caller fan cells out over a thread pool; rows come back canonically
    sorted either way.
    """
    n = ctx.graph.n_vertices
    r_list = [int(r) for r in r_list]
    for r in r_list:
        if not 1 <= r <= n:
            raise ValueError(f"bandwidth r={r} outside [1, {n}]")
    if not seeds:
        raise ValueError("at least one seed is required")

    cells = []
    for r in r_list:
        filt = bandlimited_filter(ctx.basis, r)
        mu = incoherence(filt).mu
        for seed in seeds:
            sig_seed, alg_seed = derive_seeds(seed, 2)
            f = synthesize_bandlimited(filt, seed=sig_seed)
            for spec in algorithms:
                cells.append((r, filt, mu, seed, alg_seed, f, spec))

    def work(cell) -> ResultRow:
        r, filt, mu, seed, alg_seed, f, spec = cell
        run = run_algorithm(ctx.graph, filt, f, spec, alg_seed)
        rep = error_report(ctx.basis, filt, f, run)
        return _row(ctx.name, spec, r, seed, mu, fail_prob, run, rep, bound_form)

    return _canonical_sort(list(map_fn(work, cells)))


def sweep_iterations(
    ctx: SweepContext,
    r: int,
    M_list,
    alphabet: Alphabet,
    seeds,
    fail_prob: float = 0.1,
    bound_form: str = "statement",
    map_fn=map,
) -> list[ResultRow]:
    """Error-versus-M experiment for sampling with replacement.

    One signal per seed is reused across every M so the decay in M is not
    confounded by signal variation.
    """
    n = ctx.graph.n_vertices
    if not 1 <= r <= n:
        raise ValueError(f"bandwidth r={r} outside [1, {n}]")
    M_list = [int(m) for m in M_list]
    for m in M_list:
        if m < 1:
            raise ValueError(f"M must be >= 1, got {m}")
    if not seeds:
        raise ValueError("at least one seed is required")

    filt = bandlimited_filter(ctx.basis, r)
    mu = incoherence(filt).mu
    cells = []
    for seed in seeds:
        sig_seed, alg_seed = derive_seeds(seed, 2)
        f = synthesize_bandlimited(filt, seed=sig_seed)
        for m in M_list:
            cells.append((m, seed, alg_seed, f))

    def work(cell) -> ResultRow:
        m, seed, alg_seed, f = cell
        spec = AlgorithmSpec(tag="SSSR", alphabet=alphabet, M=m)
        run = quantize_sssr(filt, f, alphabet, M=m, seed=alg_seed)
        rep = error_report(ctx.basis, filt, f, run)
        return _row(ctx.name, spec, r, seed, mu, fail_prob, run, rep, bound_form)

    return _canonical_sort(list(map_fn(work, cells)))


def summarize(rows: list[ResultRow]) -> list[dict]:
    """Mean/std across seeds per (graph, algorithm, alphabet, r, M, T)."""
    groups: dict[tuple, list[ResultRow]] = {}
    for row in rows:
        groups.setdefault(
            (row.graph, row.algorithm, row.alphabet, row.r, row.M, row.T), []
        ).append(row)
    out = []
    for key in sorted(groups, key=lambda k: (k[0], k[3], k[4] or 0, k[1], k[2])):
        graph, algorithm, alphabet, r, M, T = key
        rel = np.array([x.relative_l2_sq for x in groups[key]])
        out.append(
            {
                "graph": graph,
                "algorithm": algorithm,
                "alphabet": alphabet,
                "r": r,
                "M": M,
                "T": T,
                "n_seeds": len(rel),
                "mean_relative_l2_sq": float(rel.mean()),
                "std_relative_l2_sq": float(rel.std(ddof=1)) if len(rel) > 1 else 0.0,
                "mean_linf": float(np.mean([x.linf for x in groups[key]])),
                "mean_lowpass_relative_l2_sq": float(
                    np.mean([x.lowpass_relative_l2_sq for x in groups[key]])
                ),
                "mean_inband_energy_fraction": float(
                    np.mean([x.inband_energy_fraction for x in groups[key]])
                ),
                "bound_c1": groups[key][0].bound_c1,
            }
        )
    return out


def _format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_results_csv(rows: list[ResultRow], path) -> None:
    """Long-format result table; float cells use repr for bit-exact reruns."""
    lines = [",".join(RESULT_COLUMNS)]
    for row in rows:
        lines.append(
            ",".join(_format_value(getattr(row, col)) for col in RESULT_COLUMNS)
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_summary_csv(summary: list[dict], path) -> None:
    lines = [",".join(SUMMARY_COLUMNS)]
    for rec in summary:
        lines.append(",".join(_format_value(rec[col]) for col in SUMMARY_COLUMNS))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_results_csv(path) -> list[dict]:
    """Read a results CSV back into typed records (for tests and plots)."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if tuple(header) != RESULT_COLUMNS:
            raise ValueError(f"unexpected results header in {path}")
        out = []
        for line in fh:
            parts = line.rstrip("\n").split(",")
            rec = dict(zip(header, parts))
            for key in ("r", "M", "T", "seed", "epochs_used", "distinct_levels"):
                rec[key] = int(rec[key]) if rec[key] else None
            for key in (
                "relative_l2_sq",
                "linf",
                "lowpass_relative_l2_sq",
                "inband_energy_fraction",
                "bound_c1",
            ):
                rec[key] = float(rec[key]) if rec[key] else None
            out.append(rec)
    return out


def write_manifest(path, config: dict, extra: dict | None = None) -> None:
    """JSON run manifest: config echo, library version, wall clock."""
    payload = {
        "version": __version__,
        "wall_clock_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "config": config,
    }
    if extra:
        payload.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass
class HalftoneMethodResult:
    """Per-method outcome of the halftoning comparison."""

    runs: list[QuantRun] = field(default_factory=list)
    lowpass_linf: list[float] = field(default_factory=list)
    lowpass_rel_l2_sq: list[float] = field(default_factory=list)

    @property
    def mean_lowpass_linf(self) -> float:
        return float(np.mean(self.lowpass_linf))

    @property
    def mean_lowpass_rel_l2_sq(self) -> float:
        return float(np.mean(self.lowpass_rel_l2_sq))


@dataclass
class HalftoneResult:
    """Input signal, its low-pass component, and the per-method outcomes."""

    f: np.ndarray
    lowpass_f: np.ndarray
    methods: dict[str, HalftoneMethodResult]


def rescale_to_unit(x: np.ndarray) -> np.ndarray:
    """Affine map of a column onto [-1, 1]; constant columns are rejected."""
    x = np.asarray(x, dtype=float)
    lo, hi = float(x.min()), float(x.max())
    if hi == lo:
        raise ValueError("cannot rescale a constant signal to [-1, 1]")
    return (x - lo) / (hi - lo) * 2.0 - 1.0


def halftone_compare(
    g: Graph,
    basis: SpectralBasis,
    f: np.ndarray,
    a: Alphabet,
    r: int = 20,
    T: int = 10,
    M: int | None = None,
    seeds=(0,),
) -> HalftoneResult:
    """Quantize one fixed signal with MSQ, SDW, and SSS-R.

    Reports low-pass errors (infinity norm and relative squared l2 against
    the signal's own low-pass component), averaged over seeds for the
    seeded methods.  MSQ is deterministic but repeated per seed so every
    method has the same number of rows.
    """
    filt = bandlimited_filter(basis, r)
    f = np.asarray(f, dtype=float)
    lp_f = apply_lowpass(filt, f)
    lp_sq = float(lp_f @ lp_f)
    if lp_sq == 0.0:
        raise ValueError("signal has no in-band component to compare against")
    result = HalftoneResult(f=f, lowpass_f=lp_f, methods={})
    for tag in ("MSQ", "SDW", "SSSR"):
        method = HalftoneMethodResult()
        for seed in seeds:
            if tag == "MSQ":
                run = quantize_msq(filt, f, a)
            elif tag == "SDW":
                run = quantize_permutation(g, filt, f, a, "SDW", seed, T_max=T)
            else:
                run = quantize_sssr(filt, f, a, M=M, seed=seed)
            e = run.f_q - lp_f
            method.runs.append(run)
            method.lowpass_linf.append(float(np.max(np.abs(e))))
            method.lowpass_rel_l2_sq.append(float(e @ e) / lp_sq)
        result.methods[tag] = method
    return result
