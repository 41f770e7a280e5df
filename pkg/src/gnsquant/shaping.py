"""The noise-shaping quantization schemes.

Three procedures fill quantized samples so that the filtered residual stays
small: a one-pass sequential initialization (SSS), a BFS error-diffusion
initialization weighted by edge weights (SDW), and the greedy permutation
refinement that sweeps coordinates until the quantized vector stops
changing.  A fourth scheme samples vertices uniformly with replacement and
aggregates repeated visits (SSS-R).

State vectors live in the compact r-dimensional filter coordinates, so each
step costs O(r); equivalence with the full N-dimensional projector columns
is a tested invariant of the spectral layer.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from gnsquant.graphs import Graph, eccentricity, k_hop_sets
from gnsquant.quant import Alphabet, msq, quantize_scalar
from gnsquant.rng import Xoshiro256StarStar
from gnsquant.spectral import BandlimitedFilter, apply_lowpass

# Columns with squared norm at or below this are treated as orthogonal to
# the band: their sample is rounded directly and the state is left alone.
ZERO_NORM_SQ = 1e-24

ALGORITHM_TAGS = ("MSQ", "SSS", "SDW", "PERM", "SSSR")


@dataclass
class StateVector:
    """Running filtered residual in compact coordinates."""

    u: np.ndarray
    norm_trace: list[float] | None = None


@dataclass
class QuantRun:
    """Everything a quantization run produced.

    ``q`` are the quantized samples and ``f_q`` the low-pass reconstruction
    (scaled by N/M for SSS-R).  ``sample_trace``/``q_tilde`` hold the SSS-R
    visit order and per-visit levels; ``final_state`` is the state vector
    after the last step.  ``debug_violations`` counts greedy updates that
    increased the objective when debug checking was on (must stay 0).
    """

    q: np.ndarray
    f_q: np.ndarray
    algorithm_tag: str
    epochs_used: int = 0
    changed_last_epoch: bool = False
    rng_seed: int | None = None
    T: int | None = None
    M: int | None = None
    state_norm_trace: list[float] | None = None
    sample_trace: np.ndarray | None = None
    q_tilde: np.ndarray | None = None
    final_state: np.ndarray | None = field(default=None, repr=False)
    debug_violations: int | None = None


def _check_signal(filt: BandlimitedFilter, f: np.ndarray) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != (filt.n,):
        raise ValueError(f"signal length {f.shape} does not match N={filt.n}")
    return f


def _check_order(order, n: int) -> list[int]:
    order = [int(k) for k in order]
    if sorted(order) != list(range(n)):
        raise ValueError("order must be a permutation of 0..N-1")
    return order


def init_sss(
    filt: BandlimitedFilter,
    f: np.ndarray,
    order,
    a: Alphabet,
    record_norms: bool = False,
) -> tuple[np.ndarray, StateVector]:
    """Step-by-Step-Serving initialization: one sequential greedy pass.

    Visits vertices in ``order``; each sample is rounded after adding the
    state correction <l_k, u> / ||l_k||^2, and the state accumulates the
    filtered error l_k (f_k - q_k).
    """
    f = _check_signal(filt, f)
    order = _check_order(order, filt.n)
    if np.max(np.abs(f)) > 1.0 + 1e-12:
        warnings.warn("signal exceeds unit infinity norm; alphabet may saturate")
    cols = np.ascontiguousarray(filt.rows.T)
    n2s = filt.column_sq_norms
    q = np.zeros(filt.n)
    u = np.zeros(cols.shape[1])
    trace: list[float] | None = [] if record_norms else None
    for k in order:
        n2 = n2s[k]
        if n2 <= ZERO_NORM_SQ:
            q[k] = quantize_scalar(a, f[k])
        else:
            c = cols[k]
            q[k] = quantize_scalar(a, f[k] + float(c @ u) / n2)
            u += c * (f[k] - q[k])
        if trace is not None:
            trace.append(float(np.linalg.norm(u)))
    return q, StateVector(u=u, norm_trace=trace)


def init_sdw(
    g: Graph,
    filt: BandlimitedFilter,
    f: np.ndarray,
    a: Alphabet,
    s_max: int | None = None,
) -> np.ndarray:
    """Sigma-Delta-Weights initialization: BFS error diffusion.

    Starts at a maximum-degree vertex (ties to the smaller index) and walks
    hop shells outward.  Within a shell, vertices with more already
    quantized neighbors go first (ties to the smaller index).  Each vertex
    adds the weight-averaged state of its quantized neighbors to its sample
    before rounding, then stores its own scalar state.

    ``s_max`` defaults to the eccentricity of the start vertex.  Leftover
    vertices (disconnected graphs, or ``s_max`` smaller than the
    eccentricity) trigger a restart from the max-degree unquantized vertex.
    """
    f = _check_signal(filt, f)
    if g.n_vertices != filt.n:
        raise ValueError(f"graph size {g.n_vertices} does not match filter N={filt.n}")
    if s_max is not None and s_max < 1:
        raise ValueError(f"s_max must be >= 1, got {s_max}")
    degrees = g.degrees()
    n = g.n_vertices
    q = np.zeros(n)
    u = np.zeros(n)
    quantized = np.zeros(n, dtype=bool)
    while not quantized.all():
        pending = np.flatnonzero(~quantized)
        start = int(pending[np.argmax(degrees[pending])])
        q[start] = quantize_scalar(a, f[start])
        u[start] = f[start] - q[start]
        quantized[start] = True
        s_eff = min(s_max, eccentricity(g, start)) if s_max else eccentricity(g, start)
        if s_eff < 1:
            continue
        for shell in k_hop_sets(g, start, s_eff):
            todo = [j for j in sorted(shell) if not quantized[j]]
            counts = {j: int(np.count_nonzero(quantized[g.neighbors(j)])) for j in todo}
            for j in sorted(todo, key=lambda j: (-counts[j], j)):
                nbrs = g.neighbors(j)
                done = nbrs[quantized[nbrs]]
                if done.size:
                    w = g.weights[j, done]
                    avg = float(w @ u[done]) / float(w.sum())
                else:
                    avg = 0.0
                q[j] = quantize_scalar(a, f[j] + avg)
                u[j] = avg + f[j] - q[j]
                quantized[j] = True
    return q


def _representable(a: Alphabet, q: np.ndarray) -> bool:
    if a.kind == "explicit":
        return bool(np.all(q >= a.levels[0]) and np.all(q <= a.levels[-1]))
    if a.kind == "mid_tread_finite":
        return bool(np.all(np.abs(q) <= a.q_max + 1e-12))
    return True


def refine_permutation(
    filt: BandlimitedFilter,
    f: np.ndarray,
    order,
    a: Alphabet,
    q_init: np.ndarray,
    T_max: int,
    debug: bool = False,
    record_norms: bool = False,
) -> QuantRun:
    """Greedy permutation refinement of an initial quantized vector.

    Sweeps the fixed order up to ``T_max`` epochs; each visit re-rounds one
    coordinate to the exact minimizer of the filtered-residual norm given
    the others, and stops early once a full epoch changes nothing.  Updated
    entries are visible to later vertices within the same epoch.

    With ``debug=True`` the global residual is recomputed from scratch each
    epoch and every update is checked for monotonicity; violations are
    counted in ``debug_violations``.
    """
    if T_max < 1:
        raise ValueError(f"T_max must be >= 1, got {T_max}")
    f = _check_signal(filt, f)
    order = _check_order(order, filt.n)
    q = np.asarray(q_init, dtype=float).copy()
    if q.shape != f.shape:
        raise ValueError("q_init length does not match the signal")
    if not _representable(a, q):
        raise ValueError("q_init has entries outside the alphabet's range")

    cols = np.ascontiguousarray(filt.rows.T)
    n2s = filt.column_sq_norms
    resid = cols.T @ (f - q)  # running sum_j l_j (f_j - q_j)
    trace: list[float] | None = [] if record_norms else None
    violations = 0
    epochs_used = 0
    changed_last = False
    for _ in range(T_max):
        if debug:
            resid = cols.T @ (f - q)
        changed = False
        for k in order:
            n2 = n2s[k]
            if n2 <= ZERO_NORM_SQ:
                new_q = quantize_scalar(a, f[k])
                if new_q != q[k]:
                    q[k] = new_q
                    changed = True
                continue
            c = cols[k]
            # With u = resid - l_k (f_k - q_k), the closed-form argument
            # f_k + <l_k, u>/||l_k||^2 reduces to q_k + <l_k, resid>/||l_k||^2.
            new_q = quantize_scalar(a, q[k] + float(c @ resid) / n2)
            if new_q != q[k]:
                if debug:
                    before = float(resid @ resid)
                resid = resid + c * (q[k] - new_q)
                q[k] = new_q
                changed = True
                if debug:
                    after = float(resid @ resid)
                    if math.sqrt(after) > math.sqrt(before) + 1e-9:
                        violations += 1
            if trace is not None:
                trace.append(float(np.linalg.norm(resid)))
        epochs_used += 1
        changed_last = changed
        if not changed:
            break
    return QuantRun(
        q=q,
        f_q=apply_lowpass(filt, q),
        algorithm_tag="PERM",
        epochs_used=epochs_used,
        changed_last_epoch=changed_last,
        T=T_max,
        state_norm_trace=trace,
        final_state=resid,
        debug_violations=violations if debug else None,
    )


def quantize_permutation(
    g: Graph,
    filt: BandlimitedFilter,
    f: np.ndarray,
    a: Alphabet,
    init_kind: str,
    seed: int,
    T_max: int = 10,
    debug: bool = False,
    record_norms: bool = False,
) -> QuantRun:
    """Full permutation scheme: seeded random order, init, then refinement."""
    if init_kind not in ("SSS", "SDW"):
        raise ValueError(f"init_kind must be SSS or SDW, got {init_kind!r}")
    if T_max < 1:
        raise ValueError(f"T_max must be >= 1, got {T_max}")
    f = _check_signal(filt, f)
    rng = Xoshiro256StarStar(seed)
    order = rng.permutation(filt.n)
    if init_kind == "SSS":
        q0, _ = init_sss(filt, f, order, a)
    else:
        q0 = init_sdw(g, filt, f, a)
    run = refine_permutation(
        filt, f, order, a, q0, T_max, debug=debug, record_norms=record_norms
    )
    run.algorithm_tag = init_kind
    run.rng_seed = seed
    return run


def default_sssr_iterations(n: int) -> int:
    """Coupon-collector default M = round(N ln N)."""
    return max(1, round(n * math.log(n)))


def quantize_sssr(
    filt: BandlimitedFilter,
    f: np.ndarray,
    a: Alphabet,
    M: int | None = None,
    seed: int = 0,
    record_norms: bool = False,
) -> QuantRun:
    """Step-by-Step Sampling with Replacement (SSS-R).

    Draws M uniform vertex indices, greedily quantizes each visit against
    the running state, aggregates repeated visits by summation, and
    reconstructs as (N/M) L q.
    """
    f = _check_signal(filt, f)
    n = filt.n
    if M is None:
        M = default_sssr_iterations(n)
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    rng = Xoshiro256StarStar(seed)
    cols = np.ascontiguousarray(filt.rows.T)
    n2s = filt.column_sq_norms
    u = np.zeros(cols.shape[1])
    q_tilde = np.zeros(M)
    visits = np.zeros(M, dtype=np.int64)
    trace: list[float] | None = [] if record_norms else None
    for i in range(M):
        k = rng.randbelow(n)
        visits[i] = k
        n2 = n2s[k]
        if n2 <= ZERO_NORM_SQ:
            q_tilde[i] = quantize_scalar(a, f[k])
        else:
            c = cols[k]
            q_tilde[i] = quantize_scalar(a, f[k] + float(c @ u) / n2)
            u += c * (f[k] - q_tilde[i])
        if trace is not None:
            trace.append(float(np.linalg.norm(u)))
    q = aggregate(q_tilde, visits, n)
    return QuantRun(
        q=q,
        f_q=(n / M) * apply_lowpass(filt, q),
        algorithm_tag="SSSR",
        rng_seed=seed,
        M=M,
        state_norm_trace=trace,
        sample_trace=visits,
        q_tilde=q_tilde,
        final_state=u,
    )


def aggregate(q_tilde: np.ndarray, v: np.ndarray, n: int) -> np.ndarray:
    """Sum per-visit levels into one value per vertex; unvisited get 0."""
    q_tilde = np.asarray(q_tilde, dtype=float)
    v = np.asarray(v, dtype=np.int64)
    if q_tilde.shape != v.shape:
        raise ValueError("q_tilde and v must have the same length")
    if v.size and (v.min() < 0 or v.max() >= n):
        raise ValueError(f"visit indices must lie in [0, {n})")
    q = np.zeros(n)
    np.add.at(q, v, q_tilde)
    return q


def quantize_msq(filt: BandlimitedFilter, f: np.ndarray, a: Alphabet) -> QuantRun:
    """Memoryless baseline wrapped as a run (low-pass reconstruction)."""
    f = _check_signal(filt, f)
    q = msq(a, f)
    return QuantRun(q=q, f_q=apply_lowpass(filt, q), algorithm_tag="MSQ")
