"""Versioned chain checkpoints.

A checkpoint captures everything needed to resume a run bit-exactly:
the feature matrix (packed row-major into a bitset), weights,
auxiliaries, hyperparameters, the iteration counter, and the full random
stream state. Optional extras (e.g. schedule state) ride along as JSON.
"""

import dataclasses
import json

import numpy as np

from .errors import CheckpointError
from .model import HyperParams, LatentState

__all__ = ["CHECKPOINT_VERSION", "save_checkpoint", "load_checkpoint"]

CHECKPOINT_VERSION = 1


def save_checkpoint(path, state, hp, iteration, rng, extra=None):
    n, k = state.z.shape
    np.savez_compressed(
        path,
        version=np.int64(CHECKPOINT_VERSION),
        z_bits=np.packbits(state.z.astype(np.uint8), axis=None),
        n_entities=np.int64(n),
        k=np.int64(k),
        eta=state.eta,
        lam=state.lam,
        structure=np.str_(state.structure),
        iteration=np.int64(iteration),
        hp_json=np.str_(json.dumps(dataclasses.asdict(hp))),
        rng_seed=np.int64(rng.seed),
        rng_spawn_key=np.asarray(rng.spawn_key, dtype=np.int64),
        rng_state=np.str_(json.dumps(rng.state())),
        extra_json=np.str_(json.dumps(extra if extra is not None else {})),
    )


def load_checkpoint(path):
    """Returns (state, hp, iteration, rng, extra) with the stream restored."""
    from .rng import RngStream

    try:
        data = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if "version" not in data:
        raise CheckpointError(f"{path} is not a checkpoint file")
    version = int(data["version"])
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"checkpoint version {version} is not supported (expected {CHECKPOINT_VERSION})"
        )
    n = int(data["n_entities"])
    k = int(data["k"])
    z = np.unpackbits(data["z_bits"], count=n * k).reshape(n, k).astype(np.int8)
    hp = HyperParams(**json.loads(str(data["hp_json"])))
    state = LatentState(z, data["eta"], data["lam"], structure=str(data["structure"]))
    rng = RngStream(int(data["rng_seed"]), tuple(int(x) for x in data["rng_spawn_key"]))
    rng.set_state(json.loads(str(data["rng_state"])))
    extra = json.loads(str(data["extra_json"]))
    return state, hp, int(data["iteration"]), rng, extra
