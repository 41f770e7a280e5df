"""Metrics, bounds, brute-force oracle, sweeps, and table serialization."""

import json
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from gnsquant.graphs import (
    build_cycle,
    build_grid,
    build_knn_points,
    generate_point_cloud,
    normalized_laplacian,
)
from gnsquant.quant import Alphabet, msq
from gnsquant.shaping import (
    QuantRun,
    quantize_msq,
    quantize_permutation,
    quantize_sssr,
)
from gnsquant.spectral import (
    BandlimitedFilter,
    apply_lowpass,
    bandlimited_filter,
    eigendecompose,
    incoherence,
    synthesize_bandlimited,
)
from gnsquant.analysis import (
    RESULT_COLUMNS,
    AlgorithmSpec,
    BoundParams,
    ErrorReport,
    brute_force_optimum,
    effective_q,
    error_report,
    halftone_compare,
    load_results_csv,
    prepare_context,
    rescale_to_unit,
    signal_norm_lower_bound,
    summarize,
    sweep_bandwidth,
    sweep_iterations,
    theorem1_bound,
    write_manifest,
    write_results_csv,
    write_summary_csv,
)


def make_setup(g, r):
    basis = eigendecompose(normalized_laplacian(g))
    return basis, bandlimited_filter(basis, r)


def spearman(xs, ys):
    rx = np.argsort(np.argsort(xs))
    ry = np.argsort(np.argsort(ys))
    return float(np.corrcoef(rx, ry)[0, 1])


class TestEffectiveQ:
    def test_plain_runs_pass_through(self):
        g = build_cycle(8)
        basis, filt = make_setup(g, 3)
        f = synthesize_bandlimited(filt, seed=1)
        run = quantize_msq(filt, f, Alphabet.mid_tread_finite(0.5, 2))
        assert effective_q(run) is run.q

    def test_replacement_sampling_rescales(self):
        g = build_cycle(8)
        basis, filt = make_setup(g, 3)
        f = synthesize_bandlimited(filt, seed=1)
        run = quantize_sssr(filt, f, Alphabet.mid_tread_finite(0.5, 2), M=16, seed=0)
        np.testing.assert_allclose(effective_q(run), (8 / 16) * run.q, atol=1e-15)


class TestErrorReport:
    def test_perfect_reconstruction_scores_zero(self):
        g = build_grid(3, 3)
        basis, filt = make_setup(g, 9)
        f = synthesize_bandlimited(filt, seed=2)
        run = QuantRun(q=f.copy(), f_q=f.copy(), algorithm_tag="MSQ")
        rep = error_report(basis, filt, f, run)
        assert rep.relative_l2_sq == 0.0
        assert rep.linf == 0.0

    def test_zero_reconstruction_scores_one(self):
        g = build_cycle(6)
        basis, filt = make_setup(g, 2)
        f = synthesize_bandlimited(filt, seed=3)
        run = QuantRun(q=np.zeros(6), f_q=np.zeros(6), algorithm_tag="MSQ")
        rep = error_report(basis, filt, f, run)
        assert rep.relative_l2_sq == pytest.approx(1.0)

    def test_shaped_lowpass_error_beats_memoryless(self):
        g = build_grid(16, 16)
        basis, filt = make_setup(g, 20)
        a = Alphabet.mid_tread_finite(1.0, 1)
        f = synthesize_bandlimited(filt, seed=42)
        rep_sdw = error_report(
            basis, filt, f, quantize_permutation(g, filt, f, a, "SDW", seed=0)
        )
        rep_msq = error_report(basis, filt, f, quantize_msq(filt, f, a))
        assert rep_sdw.lowpass_relative_l2_sq < rep_msq.lowpass_relative_l2_sq

    def test_parseval_consistency(self):
        g = build_grid(5, 5)
        basis, filt = make_setup(g, 6)
        a = Alphabet.mid_tread_finite(0.5, 2)
        f = synthesize_bandlimited(filt, seed=7)
        for run in (
            quantize_msq(filt, f, a),
            quantize_permutation(g, filt, f, a, "SSS", seed=1),
            quantize_sssr(filt, f, a, M=200, seed=1),
        ):
            rep = error_report(basis, filt, f, run)
            diff = f - effective_q(run)
            assert float(rep.error_spectrum @ rep.error_spectrum) == pytest.approx(
                float(diff @ diff), abs=1e-9
            )

    def test_noise_shaping_moves_error_out_of_band(self):
        g = build_grid(5, 5)
        basis, filt = make_setup(g, 6)
        a = Alphabet.mid_tread_finite(0.5, 2)
        f = synthesize_bandlimited(filt, seed=9)
        inband_msq = error_report(
            basis, filt, f, quantize_msq(filt, f, a)
        ).inband_energy_fraction
        for run in (
            quantize_permutation(g, filt, f, a, "SSS", seed=2),
            quantize_permutation(g, filt, f, a, "SDW", seed=2),
            quantize_sssr(filt, f, a, M=400, seed=2),
        ):
            frac = error_report(basis, filt, f, run).inband_energy_fraction
            assert 0.0 <= frac <= 1.0
            assert frac < inband_msq

    def test_rejects_mismatch_and_zero_signal(self):
        g = build_cycle(6)
        basis, filt = make_setup(g, 2)
        f = synthesize_bandlimited(filt, seed=1)
        run = quantize_msq(filt, f, Alphabet.mid_tread_finite(0.5, 2))
        with pytest.raises(ValueError):
            error_report(basis, filt, f[:5], run)
        with pytest.raises(ValueError):
            error_report(basis, filt, np.zeros(6), run)


class TestTheorem1Bound:
    def test_reference_value(self):
        p = BoundParams(C=1.0, mu=1.0, r=1, M=100, fail_prob=0.5)
        assert theorem1_bound(p) == pytest.approx(math.log(2.0) ** 2 / 100)
        assert theorem1_bound(p) == pytest.approx(0.004805, abs=5e-7)

    def test_doubling_m_halves(self):
        p1 = BoundParams(C=1.0, mu=2.0, r=5, M=100, fail_prob=0.1)
        p2 = BoundParams(C=1.0, mu=2.0, r=5, M=200, fail_prob=0.1)
        assert theorem1_bound(p2) == pytest.approx(theorem1_bound(p1) / 2)

    def test_doubling_mu_quadruples(self):
        p1 = BoundParams(C=1.0, mu=1.5, r=5, M=100, fail_prob=0.1)
        p2 = BoundParams(C=1.0, mu=3.0, r=5, M=100, fail_prob=0.1)
        assert theorem1_bound(p2) == pytest.approx(4 * theorem1_bound(p1))

    def test_proof_chain_form(self):
        p = BoundParams(C=2.0, mu=1.5, r=4, M=50, fail_prob=0.2)
        expected = 2.0 * 1.5**2 * 16 * math.log(5 / 0.2) / 50
        assert theorem1_bound(p, form="proof_chain") == pytest.approx(expected)
        with pytest.raises(ValueError):
            theorem1_bound(p, form="twosided")

    def test_monotonicity_grid(self):
        base = dict(C=1.0, mu=2.0, r=10, M=100, fail_prob=0.1)
        b0 = theorem1_bound(BoundParams(**base))
        for m in (150, 200, 400):
            assert theorem1_bound(BoundParams(**{**base, "M": m})) < b0
        for r in (12, 20, 40):
            assert theorem1_bound(BoundParams(**{**base, "r": r})) > b0
        for mu in (2.5, 3.0, 5.0):
            assert theorem1_bound(BoundParams(**{**base, "mu": mu})) > b0
        for fp in (0.05, 0.01, 0.001):
            assert theorem1_bound(BoundParams(**{**base, "fail_prob": fp})) > b0

    def test_rejects_invalid_params(self):
        with pytest.raises(ValueError):
            BoundParams(C=0.0, mu=1.0, r=1, M=1, fail_prob=0.5)
        with pytest.raises(ValueError):
            BoundParams(C=1.0, mu=-1.0, r=1, M=1, fail_prob=0.5)
        with pytest.raises(ValueError):
            BoundParams(C=1.0, mu=1.0, r=0, M=1, fail_prob=0.5)
        with pytest.raises(ValueError):
            BoundParams(C=1.0, mu=1.0, r=1, M=0, fail_prob=0.5)
        with pytest.raises(ValueError):
            BoundParams(C=1.0, mu=1.0, r=1, M=1, fail_prob=0.0)
        with pytest.raises(ValueError):
            BoundParams(C=1.0, mu=1.0, r=1, M=1, fail_prob=1.0)


class TestSignalNormLowerBound:
    def test_reference_values(self):
        assert signal_norm_lower_bound(100, 1, 1.0) == pytest.approx(100.0)
        assert signal_norm_lower_bound(100, 4, 2.5) == pytest.approx(10.0)

    def test_constant_signal_saturates(self):
        # regular graph, r=1: the synthesized signal is constant +-1 with
        # squared norm exactly N = N/(r mu)
        g = build_cycle(100)
        basis, filt = make_setup(g, 1)
        f = synthesize_bandlimited(filt, seed=0)
        mu = incoherence(filt).mu
        assert mu == pytest.approx(1.0)
        assert float(f @ f) == pytest.approx(signal_norm_lower_bound(100, 1, mu))

    def test_floor_holds_across_seeds(self):
        g = build_grid(6, 5)
        basis = eigendecompose(normalized_laplacian(g))
        for r in (1, 3, 7):
            filt = bandlimited_filter(basis, r)
            mu = incoherence(filt).mu
            floor = signal_norm_lower_bound(30, r, mu)
            for seed in range(30):
                f = synthesize_bandlimited(filt, seed=seed)
                assert float(f @ f) >= floor - 1e-9

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            signal_norm_lower_bound(0, 1, 1.0)
        with pytest.raises(ValueError):
            signal_norm_lower_bound(10, 0, 1.0)
        with pytest.raises(ValueError):
            signal_norm_lower_bound(10, 1, 0.0)


class TestBruteForceOptimum:
    def test_full_band_reduces_to_rounding(self):
        g = build_cycle(5)
        basis, filt = make_setup(g, 5)
        a = Alphabet.mid_tread_finite(0.5, 1)
        f = synthesize_bandlimited(filt, seed=6)
        q_opt, obj = brute_force_optimum(filt, f, a)
        assert np.array_equal(q_opt, msq(a, f))
        assert obj == pytest.approx(float(np.linalg.norm(filt.rows @ (f - q_opt))))

    def test_two_vertex_binary_enumeration(self):
        filt = BandlimitedFilter.from_rows(1, np.array([[0.8, 0.6]]))
        a = Alphabet.explicit([-1.0, 1.0])
        f = np.array([0.9, -0.2])
        q_opt, obj = brute_force_optimum(filt, f, a)
        cands = [np.array([x, y]) for x in (-1.0, 1.0) for y in (-1.0, 1.0)]
        objs = [float(np.linalg.norm(filt.rows @ (f - q))) for q in cands]
        assert obj == pytest.approx(min(objs))
        assert np.array_equal(q_opt, cands[int(np.argmin(objs))])

    def test_defines_floor_for_refinement(self):
        g = build_cycle(8)
        basis, filt = make_setup(g, 2)
        a = Alphabet.mid_tread_finite(1.0, 1)
        for seed in range(4):
            f = synthesize_bandlimited(filt, seed=50 + seed)
            _, best = brute_force_optimum(filt, f, a)
            run = quantize_permutation(g, filt, f, a, "SSS", seed=seed, T_max=20)
            assert best <= float(np.linalg.norm(filt.rows @ (f - run.q))) + 1e-12

    def test_lexicographic_tie_break(self):
        # zero filter rows make every candidate optimal; the reported q must
        # be the lexicographically smallest (all lowest level)
        filt = BandlimitedFilter.from_rows(1, np.zeros((1, 3)))
        a = Alphabet.mid_tread_finite(0.5, 1)
        q_opt, obj = brute_force_optimum(filt, np.array([0.1, -0.2, 0.3]), a)
        assert np.array_equal(q_opt, [-0.5, -0.5, -0.5])
        assert obj == 0.0

    def test_rejects_oversized_search(self):
        g = build_grid(4, 4)
        basis, filt = make_setup(g, 3)
        a = Alphabet.mid_tread_finite(0.5, 1)
        f = synthesize_bandlimited(filt, seed=1)
        with pytest.raises(ValueError, match="search space"):
            brute_force_optimum(filt, f, a)


class TestAlgorithmSpec:
    def test_validation(self):
        a = Alphabet.mid_tread_finite(0.5, 2)
        assert AlgorithmSpec("SSSR", a, M=10).M == 10
        with pytest.raises(ValueError):
            AlgorithmSpec("PERM", a)
        with pytest.raises(ValueError):
            AlgorithmSpec("SSS", a, T=0)
        with pytest.raises(ValueError):
            AlgorithmSpec("SSSR", a, M=0)


@pytest.fixture(scope="module")
def ctx():
    return prepare_context(build_grid(8, 8), "grid8x8")


@pytest.fixture(scope="module")
def rows(ctx):
    a = Alphabet.mid_tread_finite(0.5, 2)
    algos = [AlgorithmSpec("SDW", a), AlgorithmSpec("SSSR", a)]
    return sweep_bandwidth(ctx, [2, 6, 12, 20, 30], algos, seeds=range(8))


class TestSweepBandwidth:
    def test_shape_and_column_fill_rules(self, rows):
        assert len(rows) == 5 * 8 * 2
        for row in rows:
            if row.algorithm == "SSSR":
                assert row.M is not None and row.T is None
                assert row.epochs_used is None and row.bound_c1 is not None
            else:
                assert row.M is None and row.T == 10
                assert row.epochs_used >= 1 and row.bound_c1 is None

    def test_deterministic_and_canonically_sorted(self, ctx, rows):
        a = Alphabet.mid_tread_finite(0.5, 2)
        algos = [AlgorithmSpec("SDW", a), AlgorithmSpec("SSSR", a)]
        again = sweep_bandwidth(ctx, [2, 6, 12, 20, 30], algos, seeds=range(8))
        assert again == rows
        keys = [(x.graph, x.r, x.M or 0, x.algorithm, x.alphabet, x.seed) for x in rows]
        assert keys == sorted(keys)

    def test_signals_shared_across_algorithms(self, ctx):
        a = Alphabet.mid_tread_finite(0.5, 2)
        alone = sweep_bandwidth(ctx, [6], [AlgorithmSpec("MSQ", a)], seeds=[3])
        paired = sweep_bandwidth(
            ctx, [6], [AlgorithmSpec("MSQ", a), AlgorithmSpec("SSS", a)], seeds=[3]
        )
        msq_rows = [x for x in paired if x.algorithm == "MSQ"]
        assert msq_rows == alone

    def test_thread_pool_matches_sequential(self, ctx, rows):
        a = Alphabet.mid_tread_finite(0.5, 2)
        algos = [AlgorithmSpec("SDW", a), AlgorithmSpec("SSSR", a)]
        with ThreadPoolExecutor(max_workers=4) as pool:
            threaded = sweep_bandwidth(
                ctx, [2, 6, 12, 20, 30], algos, seeds=range(8), map_fn=pool.map
            )
        assert threaded == rows

    def test_error_grows_with_bandwidth(self, rows):
        summ = summarize(rows)
        for tag in ("SDW", "SSSR"):
            pts = [
                (s["r"], s["mean_relative_l2_sq"])
                for s in summ
                if s["algorithm"] == tag
            ]
            assert spearman([p[0] for p in pts], [p[1] for p in pts]) > 0

    def test_bound_dominates_every_row(self, rows):
        for row in rows:
            if row.algorithm == "SSSR":
                assert row.relative_l2_sq <= row.bound_c1

    def test_rejects_bad_inputs(self, ctx):
        a = Alphabet.mid_tread_finite(0.5, 2)
        with pytest.raises(ValueError):
            sweep_bandwidth(ctx, [0], [AlgorithmSpec("MSQ", a)], seeds=[0])
        with pytest.raises(ValueError):
            sweep_bandwidth(ctx, [200], [AlgorithmSpec("MSQ", a)], seeds=[0])
        with pytest.raises(ValueError):
            sweep_bandwidth(ctx, [2], [AlgorithmSpec("MSQ", a)], seeds=[])


@pytest.fixture(scope="module")
def ctx10():
    return prepare_context(build_grid(10, 10), "grid10x10")


class TestSweepIterations:
    def test_doubling_m_roughly_halves_error(self, ctx10):
        a = Alphabet.mid_tread_finite(0.5, 2)
        m0 = round(100 * math.log(100))
        rows = sweep_iterations(ctx10, 5, [m0, 2 * m0], a, seeds=range(20))
        means = {s["M"]: s["mean_relative_l2_sq"] for s in summarize(rows)}
        ratio = means[2 * m0] / means[m0]
        assert 0.3 <= ratio <= 0.8

    def test_large_budget_beats_default(self, ctx10):
        a = Alphabet.mid_tread_finite(0.5, 2)
        m0 = round(100 * math.log(100))
        rows = sweep_iterations(ctx10, 5, [m0, 64 * m0], a, seeds=range(5))
        means = {s["M"]: s["mean_relative_l2_sq"] for s in summarize(rows)}
        assert means[64 * m0] < means[m0]

    def test_deterministic_and_m_column(self, ctx10):
        a = Alphabet.mid_tread_finite(0.5, 2)
        rows = sweep_iterations(ctx10, 4, [50, 100], a, seeds=[0, 1])
        again = sweep_iterations(ctx10, 4, [50, 100], a, seeds=[0, 1])
        assert rows == again
        assert {x.M for x in rows} == {50, 100}
        assert all(x.T is None and x.algorithm == "SSSR" for x in rows)

    def test_rejects_bad_inputs(self, ctx10):
        a = Alphabet.mid_tread_finite(0.5, 2)
        with pytest.raises(ValueError):
            sweep_iterations(ctx10, 0, [10], a, seeds=[0])
        with pytest.raises(ValueError):
            sweep_iterations(ctx10, 4, [0], a, seeds=[0])
        with pytest.raises(ValueError):
            sweep_iterations(ctx10, 4, [10], a, seeds=[])


class TestSummarizeAndCSV:
    def make_rows(self):
        ctx = prepare_context(build_cycle(12), "cycle12")
        a = Alphabet.mid_tread_finite(0.5, 2)
        algos = [AlgorithmSpec("MSQ", a), AlgorithmSpec("SSSR", a, M=40)]
        return sweep_bandwidth(ctx, [2, 4], algos, seeds=[0, 1, 2])

    def test_summarize_groups_and_moments(self):
        rows = self.make_rows()
        summ = summarize(rows)
        assert len(summ) == 4  # 2 r values x 2 algorithms
        for rec in summ:
            group = [
                x.relative_l2_sq
                for x in rows
                if (x.algorithm, x.r) == (rec["algorithm"], rec["r"])
            ]
            assert rec["n_seeds"] == 3
            assert rec["mean_relative_l2_sq"] == pytest.approx(np.mean(group))
            assert rec["std_relative_l2_sq"] == pytest.approx(np.std(group, ddof=1))

    def test_single_seed_std_is_zero(self):
        ctx = prepare_context(build_cycle(12), "cycle12")
        a = Alphabet.mid_tread_finite(0.5, 2)
        rows = sweep_bandwidth(ctx, [2], [AlgorithmSpec("MSQ", a)], seeds=[5])
        assert summarize(rows)[0]["std_relative_l2_sq"] == 0.0

    def test_results_roundtrip_and_byte_stability(self, tmp_path):
        rows = self.make_rows()
        p1 = tmp_path / "a.csv"
        p2 = tmp_path / "b.csv"
        write_results_csv(rows, p1)
        write_results_csv(rows, p2)
        assert p1.read_bytes() == p2.read_bytes()
        loaded = load_results_csv(p1)
        assert len(loaded) == len(rows)
        for rec, row in zip(loaded, rows):
            assert rec["graph"] == row.graph
            assert rec["algorithm"] == row.algorithm
            assert rec["r"] == row.r
            assert rec["M"] == row.M
            assert rec["seed"] == row.seed
            assert rec["relative_l2_sq"] == row.relative_l2_sq  # repr roundtrip
            assert rec["bound_c1"] == row.bound_c1
            assert rec["distinct_levels"] == row.distinct_levels

    def test_header_is_the_contract(self, tmp_path):
        rows = self.make_rows()
        path = tmp_path / "r.csv"
        write_results_csv(rows, path)
        header = path.read_text().splitlines()[0]
        assert header == (
            "graph,algorithm,alphabet,r,M,T,seed,relative_l2_sq,linf,"
            "lowpass_relative_l2_sq,inband_energy_fraction,bound_c1,"
            "epochs_used,distinct_levels"
        )
        assert tuple(header.split(",")) == RESULT_COLUMNS

    def test_load_rejects_foreign_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(ValueError, match="header"):
            load_results_csv(path)

    def test_summary_csv_written(self, tmp_path):
        rows = self.make_rows()
        path = tmp_path / "s.csv"
        write_summary_csv(summarize(rows), path)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("graph,algorithm,alphabet,r,M,T,n_seeds,")
        assert len(lines) == 5


class TestManifest:
    def test_contents(self, tmp_path):
        path = tmp_path / "manifest.json"
        write_manifest(path, {"graph": {"kind": "cycle", "n": 12}}, {"command": "sweep"})
        data = json.loads(path.read_text())
        assert data["config"] == {"graph": {"kind": "cycle", "n": 12}}
        assert data["command"] == "sweep"
        assert "wall_clock_utc" in data and "version" in data


class TestHalftone:
    def test_rescale_to_unit(self):
        out = rescale_to_unit(np.array([0.0, 5.0, 10.0]))
        np.testing.assert_allclose(out, [-1.0, 0.0, 1.0], atol=1e-15)
        assert out.min() == -1.0 and out.max() == 1.0
        with pytest.raises(ValueError):
            rescale_to_unit(np.full(4, 2.0))

    def test_shaped_methods_beat_memoryless(self):
        pts = generate_point_cloud("sphere", 60, seed=4)
        g = build_knn_points(pts, k=6)
        basis = eigendecompose(normalized_laplacian(g))
        f = rescale_to_unit(pts[:, 2])
        res = halftone_compare(
            g, basis, f, Alphabet.explicit([-1.0, 1.0]), r=10, seeds=(0, 1, 2)
        )
        assert set(res.methods) == {"MSQ", "SDW", "SSSR"}
        msq_err = res.methods["MSQ"].mean_lowpass_rel_l2_sq
        for tag in ("SDW", "SSSR"):
            assert res.methods[tag].mean_lowpass_rel_l2_sq < msq_err
            assert len(res.methods[tag].runs) == 3

    def test_rejects_signal_without_inband_component(self):
        g = build_cycle(10)
        basis = eigendecompose(normalized_laplacian(g))
        with pytest.raises(ValueError):
            halftone_compare(g, basis, np.zeros(10), Alphabet.explicit([-1.0, 1.0]), r=1)
