"""Command-line entry point.

Subcommands:
  split     build train/dev/test files from an edge list
  train     run a sampler chain, writing checkpoints, samples, diagnostics
  eval      score a trained run (or a proximity baseline) on a split
  sweep     re-run training across a grid of positive/negative cost ratios
  baseline  emit raw per-pair proximity scores as CSV

Every command is deterministic given its config and seed. `--config FILE`
loads defaults from a JSON file; explicit flags win. Each training run
writes a manifest.json that fully reproduces it. The default output root
is $LATENTLINK_OUTDIR (falling back to the current directory).

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical error.
"""

import argparse
import csv
import dataclasses
import glob
import json
import os
import sys

import numpy as np

from .baselines import AdjacencyIndex, score_pairs
from .checkpoint import load_checkpoint, save_checkpoint
from .errors import (
    DataError,
    LatentLinkError,
    NumericalError,
    ParameterError,
    UsageError,
)
from .evaluate import ExperimentConfig, auc, roc_points, EvalReport, write_report
from .gibbs import ChainConfig, SuffStats, init_chain, iterate_chain
from .model import HyperParams, LatentState, predict_scores
from .network import load_edge_list, load_split, per_relation_views, save_split, split_dense, split_sparse
from .rng import RngStream
from .sgld import make_weight_step

VARIANTS = ("dlfrm", "stodlfrm", "diagdlfrm")
BASELINES = ("cn", "jaccard", "katz")

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _out_root(path):
    if path:
        return path
    return os.environ.get("LATENTLINK_OUTDIR", ".")


# ---------------------------------------------------------------------------
# config plumbing


TRAIN_DEFAULTS = {
    "variant": "dlfrm",
    "loss": "logistic",
    "seed": 0,
    "alpha": 1.0,
    "nu_sq": 1.0,
    "c_pos": 10.0,
    "c_neg": 1.0,
    "ell": 1.0,
    "k_max": 5,
    "pg_trunc": 200,
    "iters": 300,
    "burn_in": 150,
    "thin": 1,
    "eval_every": 10,
    "checkpoint_every": 50,
    "sgld_inner": 10,
    "sgld_batch": 1024,
    "sgld_kind": None,
    "sgld_a": 0.2,
    "sgld_b": 100.0,
    "sgld_gamma": 0.6,
    "sgld_adagrad_base": 0.1,
    "sgld_noise": True,
}


def _merge_config(args, keys):
    """defaults <- config file <- explicit flags (flags win)."""
    merged = {k: TRAIN_DEFAULTS[k] for k in keys}
    config_path = getattr(args, "config", None)
    if config_path:
        with open(config_path) as fh:
            loaded = json.load(fh)
        unknown = set(loaded) - set(TRAIN_DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        merged.update({k: v for k, v in loaded.items() if k in keys})
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            merged[k] = v
    return merged


def _hyper_from(cfg):
    variant = cfg["variant"]
    if variant not in VARIANTS:
        raise UsageError(f"variant must be one of {VARIANTS}")
    return HyperParams(
        alpha=cfg["alpha"],
        nu_sq=cfg["nu_sq"],
        c_pos=cfg["c_pos"],
        c_neg=cfg["c_neg"],
        ell=cfg["ell"],
        loss=cfg["loss"],
        structure="diagonal" if variant == "diagdlfrm" else "full",
        k_max=cfg["k_max"],
        pg_trunc=cfg["pg_trunc"],
    )


def _experiment_from(cfg):
    return ExperimentConfig(
        chain=ChainConfig(n_iters=cfg["iters"], burn_in=cfg["burn_in"], thin=cfg["thin"]),
        weight_sampler="sgld" if cfg["variant"] == "stodlfrm" else "exact",
        sgld_inner=cfg["sgld_inner"],
        sgld_batch=cfg["sgld_batch"],
        sgld_kind=cfg["sgld_kind"],
        sgld_a=cfg["sgld_a"],
        sgld_b=cfg["sgld_b"],
        sgld_gamma=cfg["sgld_gamma"],
        sgld_adagrad_base=cfg["sgld_adagrad_base"],
        sgld_noise=cfg["sgld_noise"],
        eval_every=cfg["eval_every"],
    )


# ---------------------------------------------------------------------------
# split


def cmd_split(args):
    rng = RngStream(args.seed)
    net = load_edge_list(args.data, n_entities=args.n_entities, symmetrize=args.symmetrize)
    out = _out_root(args.out)
    os.makedirs(out, exist_ok=True)

    def one_split(network, rng_i, out_dir):
        if args.mode == "dense":
            split = split_dense(network, args.train_frac, rng_i)
        else:
            split = split_sparse(network, args.pos_frac, args.neg_multiple, rng_i)
        save_split(split, out_dir)

    if args.per_relation:
        for r, view in enumerate(per_relation_views(net)):
            one_split(view, rng.split(r), os.path.join(out, f"rel_{r:03d}"))
    else:
        one_split(net, rng, out)
    manifest = {
        "command": "split",
        "data": args.data,
        "mode": args.mode,
        "train_frac": args.train_frac,
        "pos_frac": args.pos_frac,
        "neg_multiple": args.neg_multiple,
        "symmetrize": args.symmetrize,
        "per_relation": args.per_relation,
        "n_entities": net.n_entities,
        "seed": args.seed,
    }
    with open(os.path.join(out, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)
    print(f"wrote split to {out}")
    return 0


# ---------------------------------------------------------------------------
# train


def _sample_path(out_dir, it):
    return os.path.join(out_dir, "samples", f"sample_{it:06d}.npz")


def _save_sample(path, state):
    np.savez_compressed(
        path,
        z_bits=np.packbits(state.z.astype(np.uint8), axis=None),
        shape=np.asarray(state.z.shape, dtype=np.int64),
        eta=state.eta,
        structure=np.str_(state.structure),
    )


def _load_sample(path):
    data = np.load(path, allow_pickle=False)
    n, k = (int(v) for v in data["shape"])
    z = np.unpackbits(data["z_bits"], count=n * k).reshape(n, k).astype(np.int8)
    return LatentState(z, data["eta"], np.ones(0), structure=str(data["structure"]))


def _rel_dirs(path):
    return sorted(glob.glob(os.path.join(path, "rel_*")))


def _train_single(split_dir, cfg, out_dir, resume=None):
    split = load_split(split_dir)
    hp = _hyper_from(cfg)
    exp = _experiment_from(cfg)
    chain = exp.chain
    os.makedirs(os.path.join(out_dir, "samples"), exist_ok=True)
    os.makedirs(os.path.join(out_dir, "checkpoints"), exist_ok=True)

    sched = exp.make_schedule(hp.loss) if exp.weight_sampler == "sgld" else None
    if resume:
        state, hp_saved, start_iter, rng, extra = load_checkpoint(resume)
        if dataclasses.asdict(hp_saved) != dataclasses.asdict(hp):
            raise UsageError("checkpoint hyperparameters do not match the requested run")
        if sched is not None and "sched" in extra:
            sched.load_state_dict(extra["sched"])
        diag_mode = "a"
    else:
        rng = RngStream(cfg["seed"])
        state = init_chain(split.n_entities, len(split.train), hp, rng)
        start_iter = 0
        diag_mode = "w"
    stats = SuffStats(state, split.train, hp)
    weight_step = None
    if exp.weight_sampler == "sgld":
        weight_step = make_weight_step(sched, n_inner=exp.sgld_inner, batch_size=exp.sgld_batch)

    def checkpoint(it):
        extra = {"sched": sched.state_dict()} if sched is not None else {}
        path = os.path.join(out_dir, "checkpoints", f"ckpt_{it:06d}.npz")
        save_checkpoint(path, state, hp, it, rng, extra=extra)
        return path

    diag_path = os.path.join(out_dir, "diag.csv")
    with open(diag_path, diag_mode, newline="") as fh:
        writer = csv.writer(fh)
        if diag_mode == "w":
            writer.writerow(
                ["iteration", "k", "ms_sample_Z", "ms_sample_U", "ms_sample_lambda", "log_pseudo_lik"]
            )
        last = None
        for it, st, diag in iterate_chain(
            state, stats, hp, chain, rng, weight_step=weight_step, start=start_iter + 1
        ):
            writer.writerow(
                [
                    it,
                    diag.k,
                    f"{1000 * diag.seconds['sample_Z']:.3f}",
                    f"{1000 * diag.seconds['sample_U']:.3f}",
                    f"{1000 * diag.seconds['sample_lambda']:.3f}",
                    f"{diag.log_pseudo_lik:.6f}",
                ]
            )
            if it > chain.burn_in and (it - chain.burn_in) % chain.thin == 0:
                _save_sample(_sample_path(out_dir, it), st)
            if it % cfg["checkpoint_every"] == 0:
                last = checkpoint(it)
        if last is None or not last.endswith(f"ckpt_{chain.n_iters:06d}.npz"):
            checkpoint(chain.n_iters)


def cmd_train(args):
    keys = list(TRAIN_DEFAULTS)
    cfg = _merge_config(args, keys)
    out = _out_root(args.out)
    os.makedirs(out, exist_ok=True)
    manifest = dict(cfg)
    manifest.update({"command": "train", "split_dir": args.split_dir})
    with open(os.path.join(out, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)
    rel_dirs = _rel_dirs(args.split_dir) if args.relation_mode == "single" else []
    if rel_dirs:
        if args.resume:
            raise UsageError("--resume is not supported with --relation-mode single")
        for r, rel_dir in enumerate(rel_dirs):
            rel_cfg = dict(cfg)
            rel_cfg["seed"] = int(RngStream(cfg["seed"]).split(r).integers(0, 2**62))
            _train_single(rel_dir, rel_cfg, os.path.join(out, os.path.basename(rel_dir)))
    else:
        _train_single(args.split_dir, cfg, out, resume=args.resume)
    print(f"trained into {out}")
    return 0


# ---------------------------------------------------------------------------
# eval


def _phase_totals(run_dir):
    path = os.path.join(run_dir, "diag.csv")
    totals = {"sample_Z": 0.0, "sample_U": 0.0, "sample_lambda": 0.0}
    k_trace = []
    if not os.path.exists(path):
        return totals, k_trace
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            totals["sample_Z"] += float(row["ms_sample_Z"]) / 1000.0
            totals["sample_U"] += float(row["ms_sample_U"]) / 1000.0
            totals["sample_lambda"] += float(row["ms_sample_lambda"]) / 1000.0
            k_trace.append((int(row["iteration"]), int(row["k"])))
    return totals, k_trace


def _eval_model_run(run_dir, split_dir, out_dir):
    split = load_split(split_dir)
    paths = sorted(glob.glob(os.path.join(run_dir, "samples", "sample_*.npz")))
    if not paths:
        raise UsageError(f"no samples found under {run_dir}")
    samples = [_load_sample(p) for p in paths]
    test = split.test
    scores = predict_scores(samples, test[:, 0], test[:, 1])
    phase_times, k_trace = _phase_totals(run_dir)
    report = EvalReport(
        auc=auc(scores, test[:, 2]),
        roc=roc_points(scores, test[:, 2]),
        k_trace=k_trace,
        phase_times=phase_times,
        auc_trace=[],
        n_samples=len(samples),
    )
    _write_scores(os.path.join(out_dir, "scores.csv"), test, scores)
    summary = write_report(report, out_dir)
    return report, summary


def _write_scores(path, rows, scores):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["src", "dst", "score"])
        for (s, d, _), sc in zip(rows, scores):
            w.writerow([s, d, f"{sc:.10g}"])


def _eval_baseline(split_dir, measure, out_dir, beta, max_len):
    split = load_split(split_dir)
    idx = AdjacencyIndex.from_split(split)
    test = split.test
    scores = score_pairs(idx, test[:, 0], test[:, 1], measure, beta=beta, max_len=max_len)
    report = EvalReport(
        auc=auc(scores, test[:, 2]),
        roc=roc_points(scores, test[:, 2]),
        k_trace=[],
        phase_times={},
        auc_trace=[],
        n_samples=0,
    )
    _write_scores(os.path.join(out_dir, "scores.csv"), test, scores)
    summary = write_report(report, out_dir, prefix=f"baseline_{measure}")
    return report, summary


def cmd_eval(args):
    out = _out_root(args.out)
    os.makedirs(out, exist_ok=True)
    if args.baseline:
        if args.relation_mode == "single":
            rel_dirs = _rel_dirs(args.split_dir)
            if not rel_dirs:
                raise UsageError("no rel_* splits found for --relation-mode single")
            aucs = []
            for rel_dir in rel_dirs:
                rep, _ = _eval_baseline(
                    rel_dir, args.baseline, os.path.join(out, os.path.basename(rel_dir)),
                    args.beta, args.max_len,
                )
                aucs.append(rep.auc)
            mean = float(np.mean(aucs))
            print(f"mean per-relation AUC ({args.baseline}): {mean:.4f} over {len(aucs)} relations")
        else:
            rep, summary = _eval_baseline(args.split_dir, args.baseline, out, args.beta, args.max_len)
            print(summary, end="")
        return 0
    if not args.run_dir:
        raise UsageError("eval needs either --run-dir or --baseline")
    if args.relation_mode == "single":
        run_dirs = _rel_dirs(args.run_dir)
        split_dirs = _rel_dirs(args.split_dir)
        if not run_dirs or len(run_dirs) != len(split_dirs):
            raise UsageError("per-relation run and split layouts do not match")
        aucs = []
        for run_dir, split_dir in zip(run_dirs, split_dirs):
            rep, _ = _eval_model_run(run_dir, split_dir, os.path.join(out, os.path.basename(run_dir)))
            aucs.append(rep.auc)
        mean = float(np.mean(aucs))
        with open(os.path.join(out, "per_relation.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["relation", "auc"])
            w.writerows(enumerate(aucs))
        print(f"mean per-relation AUC: {mean:.4f} over {len(aucs)} relations")
    else:
        rep, summary = _eval_model_run(args.run_dir, args.split_dir, out)
        print(summary, end="")
    return 0


# ---------------------------------------------------------------------------
# sweep / baseline


def cmd_sweep(args):
    from .evaluate import sweep_cost_ratio

    keys = list(TRAIN_DEFAULTS)
    cfg = _merge_config(args, keys)
    split = load_split(args.split_dir)
    hp = _hyper_from(cfg)
    exp = _experiment_from(cfg)
    ratios = [float(r) for r in args.ratios.split(",")]
    results = sweep_cost_ratio(split, hp, ratios, exp, cfg["seed"], n_runs=args.runs)
    out = _out_root(args.out)
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "cost_ratio_sweep.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["ratio", "auc"])
        w.writerows(results)
    for ratio, score in results:
        print(f"ratio {ratio:6.2f}: AUC {score:.4f}")
    return 0


def cmd_baseline(args):
    split = load_split(args.split_dir)
    idx = AdjacencyIndex.from_split(split)
    test = split.test
    scores = score_pairs(idx, test[:, 0], test[:, 1], args.measure, beta=args.beta, max_len=args.max_len)
    out = _out_root(args.out)
    _write_scores(os.path.join(out, f"{args.measure}_scores.csv"), test, scores)
    print(f"wrote {len(scores)} {args.measure} scores to {out}")
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_train_flags(p):
    p.add_argument("--config", help="JSON config file; explicit flags override it")
    p.add_argument("--variant", choices=VARIANTS)
    p.add_argument("--loss", choices=("logistic", "hinge"))
    p.add_argument("--seed", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--nu-sq", dest="nu_sq", type=float)
    p.add_argument("--c-pos", dest="c_pos", type=float)
    p.add_argument("--c-neg", dest="c_neg", type=float)
    p.add_argument("--ell", type=float)
    p.add_argument("--k-max", dest="k_max", type=int)
    p.add_argument("--pg-trunc", dest="pg_trunc", type=int)
    p.add_argument("--iters", type=int)
    p.add_argument("--burn-in", dest="burn_in", type=int)
    p.add_argument("--thin", type=int)
    p.add_argument("--eval-every", dest="eval_every", type=int)
    p.add_argument("--checkpoint-every", dest="checkpoint_every", type=int)
    p.add_argument("--sgld-inner", dest="sgld_inner", type=int)
    p.add_argument("--sgld-batch", dest="sgld_batch", type=int)
    p.add_argument("--sgld-kind", dest="sgld_kind", choices=("polynomial", "adagrad"))
    p.add_argument("--sgld-a", dest="sgld_a", type=float)
    p.add_argument("--sgld-b", dest="sgld_b", type=float)
    p.add_argument("--sgld-gamma", dest="sgld_gamma", type=float)
    p.add_argument("--sgld-adagrad-base", dest="sgld_adagrad_base", type=float)
    p.add_argument(
        "--no-sgld-noise", dest="sgld_noise", action="store_const", const=False, default=None
    )


def build_parser():
    parser = _Parser(prog="latentlink", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("split", help="build train/dev/test files from an edge list")
    p.add_argument("--data", required=True)
    p.add_argument("--n-entities", dest="n_entities", type=int)
    p.add_argument("--symmetrize", action="store_true")
    p.add_argument("--mode", choices=("dense", "sparse"), default="dense")
    p.add_argument("--train-frac", dest="train_frac", type=float, default=0.8)
    p.add_argument("--pos-frac", dest="pos_frac", type=float, default=0.9)
    p.add_argument("--neg-multiple", dest="neg_multiple", type=int, default=10)
    p.add_argument("--per-relation", dest="per_relation", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="run a sampler chain")
    p.add_argument("--split-dir", dest="split_dir", required=True)
    p.add_argument("--out")
    p.add_argument("--resume", help="checkpoint file to continue from")
    p.add_argument("--relation-mode", dest="relation_mode", choices=("single",))
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a run or a proximity baseline")
    p.add_argument("--run-dir", dest="run_dir")
    p.add_argument("--split-dir", dest="split_dir", required=True)
    p.add_argument("--baseline", choices=BASELINES)
    p.add_argument("--beta", type=float, default=0.005)
    p.add_argument("--max-len", dest="max_len", type=int, default=4)
    p.add_argument("--relation-mode", dest="relation_mode", choices=("single",))
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="cost-ratio sensitivity sweep")
    p.add_argument("--split-dir", dest="split_dir", required=True)
    p.add_argument("--ratios", default="1,2,4,6,8,10,12,15")
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--out")
    _add_train_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("baseline", help="emit per-pair proximity scores as CSV")
    p.add_argument("--split-dir", dest="split_dir", required=True)
    p.add_argument("--measure", choices=BASELINES, required=True)
    p.add_argument("--beta", type=float, default=0.005)
    p.add_argument("--max-len", dest="max_len", type=int, default=4)
    p.add_argument("--out")
    p.set_defaults(func=cmd_baseline)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (UsageError, ParameterError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except LatentLinkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
