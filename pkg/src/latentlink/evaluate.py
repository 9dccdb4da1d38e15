"""AUC/ROC computation and the experiment harness.

`run_experiment` drives one chain over a split: it collects post-burn-in
states, accumulates averaged pair scores for the held-out set, records
an AUC trace at a fixed cadence, and aggregates per-phase wall-clock
times. `run_replicated` repeats it over independent seeds and reports
mean and standard deviation. `sweep_cost_ratio` re-runs the experiment
across a grid of positive/negative cost ratios.
"""

import csv
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .errors import ParameterError, UsageError
from .gibbs import ChainConfig, SuffStats, init_chain, iterate_chain
from .model import omega_pairs
from .rng import RngStream
from .sgld import SgldSchedule, make_weight_step

__all__ = [
    "auc",
    "roc_points",
    "EvalReport",
    "ExperimentConfig",
    "run_experiment",
    "run_replicated",
    "sweep_cost_ratio",
    "write_report",
]


def auc(scores, labels):
    """Area under the ROC curve (rank statistic, half credit for ties)."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    pos = labels > 0
    n_pos = int(pos.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UsageError("AUC needs at least one positive and one negative label")
    ranks = rankdata(scores)
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def roc_points(scores, labels):
    """ROC curve as (fpr, tpr) points from (0, 0) to (1, 1), ties grouped.

    Trapezoidal integration of these points reproduces `auc` exactly.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    pos = labels > 0
    n_pos = int(pos.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UsageError("ROC needs at least one positive and one negative label")
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    p = pos[order]
    # One point per distinct threshold (group tied scores).
    boundary = np.flatnonzero(np.diff(s) != 0)
    cuts = np.concatenate([boundary, [len(s) - 1]])
    tp = np.cumsum(p)[cuts]
    fp = cuts + 1 - tp
    points = [(0.0, 0.0)]
    points += [(fp_i / n_neg, tp_i / n_pos) for fp_i, tp_i in zip(fp, tp)]
    return points


@dataclass
class EvalReport:
    """Result bundle for one trained chain evaluated on one split."""

    auc: float
    roc: list
    k_trace: list  # (iteration, K)
    phase_times: dict  # phase -> seconds
    auc_trace: list  # (iteration, auc so far)
    n_samples: int = 0
    dev_auc: float | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything `run_experiment` needs besides data and hyperparameters."""

    chain: ChainConfig = field(default_factory=ChainConfig)
    weight_sampler: str = "exact"  # exact | sgld
    sgld_inner: int = 10
    sgld_batch: int = 1024
    sgld_kind: str | None = None  # default: polynomial for logistic, adagrad for hinge
    sgld_a: float = 0.2
    sgld_b: float = 100.0
    sgld_gamma: float = 0.6
    sgld_adagrad_base: float = 0.1
    sgld_noise: bool = True
    eval_every: int = 10

    def __post_init__(self):
        if self.weight_sampler not in ("exact", "sgld"):
            raise ParameterError("weight_sampler must be 'exact' or 'sgld'")
        if self.eval_every < 1:
            raise ParameterError("eval_every must be positive")

    def make_schedule(self, loss):
        kind = self.sgld_kind or ("adagrad" if loss == "hinge" else "polynomial")
        return SgldSchedule(
            kind=kind,
            a=self.sgld_a,
            b=self.sgld_b,
            gamma=self.sgld_gamma,
            adagrad_base=self.sgld_adagrad_base,
            noise=self.sgld_noise,
        )


def run_experiment(split, hp, cfg, rng, collect_samples=False):
    """Train one chain on split.train and evaluate on split.test.

    Post-burn-in states contribute to a running average of test-pair
    scores; the AUC of the running average is appended to the trace every
    `cfg.eval_every` sweeps. Returns an EvalReport (with the collected
    states attached as `.samples` when `collect_samples` is set).
    """
    test = split.test
    if len(test) == 0:
        raise UsageError("split has no test entries")
    state = init_chain(split.n_entities, len(split.train), hp, rng)
    stats = SuffStats(state, split.train, hp)
    weight_step = None
    if cfg.weight_sampler == "sgld":
        sched = cfg.make_schedule(hp.loss)
        weight_step = make_weight_step(sched, n_inner=cfg.sgld_inner, batch_size=cfg.sgld_batch)

    score_sum = np.zeros(len(test))
    dev_sum = np.zeros(len(split.dev))
    n_samples = 0
    k_trace, auc_trace = [], []
    phase_times = {"sample_Z": 0.0, "sample_U": 0.0, "sample_lambda": 0.0}
    samples = []
    chain = cfg.chain
    for it, st, diag in iterate_chain(state, stats, hp, chain, rng, weight_step=weight_step):
        k_trace.append((it, diag.k))
        for phase, sec in diag.seconds.items():
            phase_times[phase] += sec
        if it > chain.burn_in and (it - chain.burn_in) % chain.thin == 0:
            score_sum += omega_pairs(st, test[:, 0], test[:, 1])
            if len(split.dev):
                dev_sum += omega_pairs(st, split.dev[:, 0], split.dev[:, 1])
            n_samples += 1
            if collect_samples:
                samples.append(st.copy())
        if n_samples and it % cfg.eval_every == 0:
            auc_trace.append((it, auc(score_sum / n_samples, test[:, 2])))
    if n_samples == 0:
        raise UsageError("no post-burn-in samples were collected")
    final_scores = score_sum / n_samples
    report = EvalReport(
        auc=auc(final_scores, test[:, 2]),
        roc=roc_points(final_scores, test[:, 2]),
        k_trace=k_trace,
        phase_times=phase_times,
        auc_trace=auc_trace,
        n_samples=n_samples,
        dev_auc=auc(dev_sum / n_samples, split.dev[:, 2]) if len(split.dev) else None,
    )
    if collect_samples:
        report.samples = samples
    return report


def run_replicated(split, hp, cfg, seed, n_runs=5):
    """Independent chains on per-run streams; reports mean +/- sd of AUC.

    Returns (mean, sd, reports).
    """
    if n_runs < 1:
        raise ParameterError("n_runs must be positive")
    root = RngStream(seed)
    reports = [run_experiment(split, hp, cfg, root.split(r)) for r in range(n_runs)]
    aucs = np.array([r.auc for r in reports])
    return float(aucs.mean()), float(aucs.std(ddof=1)) if n_runs > 1 else 0.0, reports


def sweep_cost_ratio(split, hp_base, ratios, cfg, seed, n_runs=1):
    """One experiment per cost ratio, c_pos = ratio * c_neg; returns
    [(ratio, mean auc)] in the given ratio order."""
    results = []
    for ratio in ratios:
        if ratio < 1:
            raise ParameterError("cost ratios must be >= 1")
        hp = hp_base.with_ratio(ratio)
        mean, _, _ = run_replicated(split, hp, cfg, seed, n_runs=n_runs)
        results.append((float(ratio), mean))
    return results


def write_report(report, out_dir, prefix="eval"):
    """Emit the report as CSV traces plus a human-readable summary."""
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, f"{prefix}_roc.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["fpr", "tpr"])
        w.writerows(report.roc)
    with open(os.path.join(out_dir, f"{prefix}_k_trace.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "k"])
        w.writerows(report.k_trace)
    with open(os.path.join(out_dir, f"{prefix}_auc_trace.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "auc"])
        w.writerows(report.auc_trace)
    total = sum(report.phase_times.values()) or 1.0
    lines = [f"test AUC: {report.auc:.4f} ({report.n_samples} samples)"]
    if report.dev_auc is not None:
        lines.append(f"dev AUC: {report.dev_auc:.4f}")
    lines.append("training time by phase:")
    for phase, sec in report.phase_times.items():
        lines.append(f"  {phase:>13}: {sec:10.2f} s ({100.0 * sec / total:5.2f}%)")
    summary = "\n".join(lines) + "\n"
    with open(os.path.join(out_dir, f"{prefix}_summary.txt"), "w") as fh:
        fh.write(summary)
    return summary
