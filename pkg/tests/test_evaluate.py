"""AUC/ROC oracles and experiment-harness bookkeeping."""

import numpy as np
import pytest

from latentlink.errors import ParameterError, UsageError
from latentlink.evaluate import (
    ExperimentConfig,
    auc,
    roc_points,
    run_experiment,
    run_replicated,
    sweep_cost_ratio,
    write_report,
)
from latentlink.gibbs import ChainConfig
from latentlink.model import HyperParams
from latentlink.network import split_dense
from latentlink.rng import RngStream
from latentlink.synthetic import planted_network


def auc_pairwise_oracle(scores, labels):
    """O(n^2) comparison count with half credit for ties."""
    scores = np.asarray(scores, dtype=float)
    pos = scores[np.asarray(labels) > 0]
    neg = scores[np.asarray(labels) <= 0]
    wins = sum((p > q) + 0.5 * (p == q) for p in pos for q in neg)
    return wins / (len(pos) * len(neg))


def small_split(seed=0, n=30):
    rng = RngStream(seed)
    net, _, _ = planted_network(n, rng, n_blocks=2, block_size=8, in_weight=4.0, bg_weight=-6.0)
    return split_dense(net, 0.8, rng)


class TestAuc:
    def test_perfect_ranking(self):
        assert auc([0.9, 0.8, 0.3], [1, 1, -1]) == 1.0

    def test_full_tie(self):
        assert auc([0.5, 0.5], [1, -1]) == 0.5

    def test_matches_pairwise_oracle_random(self):
        rng = RngStream(200)
        scores = np.round(rng.random(200), 2)  # rounding forces ties
        labels = np.where(rng.random(200) < 0.4, 1, -1)
        got = auc(scores, labels)
        want = auc_pairwise_oracle(scores, labels)
        assert abs(got - want) < 1e-12

    def test_invariant_under_increasing_transform(self):
        rng = RngStream(201)
        scores = rng.normal(size=300)
        labels = np.where(rng.random(300) < 0.5, 1, -1)
        a = auc(scores, labels)
        b = auc(np.exp(scores) + 3.0, labels)
        assert a == pytest.approx(b, abs=1e-12)

    def test_negation_complements(self):
        rng = RngStream(202)
        scores = rng.normal(size=150)  # continuous: ties have measure zero
        labels = np.where(rng.random(150) < 0.5, 1, -1)
        assert auc(scores, labels) + auc(-scores, labels) == pytest.approx(1.0)

    def test_single_class_rejected(self):
        with pytest.raises(UsageError):
            auc([0.1, 0.2], [1, 1])


class TestRoc:
    def test_endpoints_and_monotone(self):
        rng = RngStream(203)
        scores = np.round(rng.normal(size=80), 1)
        labels = np.where(rng.random(80) < 0.3, 1, -1)
        pts = roc_points(scores, labels)
        assert pts[0] == (0.0, 0.0)
        assert pts[-1] == (1.0, 1.0)
        fpr = [p[0] for p in pts]
        tpr = [p[1] for p in pts]
        assert all(a <= b + 1e-15 for a, b in zip(fpr, fpr[1:]))
        assert all(a <= b + 1e-15 for a, b in zip(tpr, tpr[1:]))

    def test_trapezoid_equals_auc(self):
        rng = RngStream(204)
        for trial in range(5):
            scores = np.round(rng.normal(size=60), 1)
            labels = np.where(rng.random(60) < 0.4, 1, -1)
            pts = np.asarray(roc_points(scores, labels))
            trapz = np.trapezoid(pts[:, 1], pts[:, 0])
            assert trapz == pytest.approx(auc(scores, labels), abs=1e-12)


class TestRunExperiment:
    def test_report_bookkeeping(self):
        split = small_split()
        hp = HyperParams(alpha=1.0, c_pos=2.0, c_neg=0.2)
        cfg = ExperimentConfig(chain=ChainConfig(n_iters=20, burn_in=10), eval_every=5)
        rep = run_experiment(split, hp, cfg, RngStream(5))
        assert 0.0 <= rep.auc <= 1.0
        assert set(rep.phase_times) == {"sample_Z", "sample_U", "sample_lambda"}
        assert len(rep.k_trace) == 20
        assert rep.n_samples == 10
        # trace recorded at the eval cadence once samples exist
        assert [it for it, _ in rep.auc_trace] == [15, 20]
        assert rep.dev_auc is not None

    def test_k_trace_matches_sampler_reports(self):
        split = small_split(1)
        hp = HyperParams(alpha=1.0)
        cfg = ExperimentConfig(chain=ChainConfig(n_iters=8, burn_in=2), eval_every=4)
        rep = run_experiment(split, hp, cfg, RngStream(6))
        iters = [it for it, _ in rep.k_trace]
        assert iters == list(range(1, 9))
        assert all(k >= 0 for _, k in rep.k_trace)

    def test_replicated_reports_five_values(self):
        split = small_split(2)
        hp = HyperParams(alpha=1.0, c_pos=2.0, c_neg=0.2)
        cfg = ExperimentConfig(chain=ChainConfig(n_iters=10, burn_in=5), eval_every=5)
        mean, sd, reports = run_replicated(split, hp, cfg, seed=3, n_runs=5)
        aucs = [r.auc for r in reports]
        assert len(aucs) == 5
        assert mean == pytest.approx(np.mean(aucs))
        assert sd == pytest.approx(np.std(aucs, ddof=1))

    def test_deterministic_given_seed(self):
        split = small_split(3)
        hp = HyperParams(alpha=1.0)
        cfg = ExperimentConfig(chain=ChainConfig(n_iters=6, burn_in=2), eval_every=3)
        a = run_experiment(split, hp, cfg, RngStream(9))
        b = run_experiment(split, hp, cfg, RngStream(9))
        assert a.auc == b.auc
        assert a.k_trace == b.k_trace


class TestSweepCostRatio:
    def test_output_shape_and_ratios(self):
        split = small_split(4)
        hp = HyperParams(alpha=1.0, c_neg=1.0)
        cfg = ExperimentConfig(chain=ChainConfig(n_iters=6, burn_in=3), eval_every=3)
        results = sweep_cost_ratio(split, hp, [1.0, 5.0, 10.0], cfg, seed=2)
        assert [r for r, _ in results] == [1.0, 5.0, 10.0]
        assert all(0.0 <= a <= 1.0 for _, a in results)

    def test_ratio_below_one_rejected(self):
        split = small_split(5)
        hp = HyperParams()
        cfg = ExperimentConfig(chain=ChainConfig(n_iters=4, burn_in=1))
        with pytest.raises(ParameterError):
            sweep_cost_ratio(split, hp, [0.5], cfg, seed=0)


class TestWriteReport:
    def test_files_emitted(self, tmp_path):
        split = small_split(6)
        hp = HyperParams(alpha=1.0)
        cfg = ExperimentConfig(chain=ChainConfig(n_iters=6, burn_in=3), eval_every=3)
        rep = run_experiment(split, hp, cfg, RngStream(11))
        summary = write_report(rep, str(tmp_path))
        assert "test AUC" in summary
        for name in ("eval_roc.csv", "eval_k_trace.csv", "eval_auc_trace.csv", "eval_summary.txt"):
            assert (tmp_path / name).exists()
