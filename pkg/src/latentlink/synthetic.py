"""Model-generated benchmark networks.

Plants a binary feature matrix and a full weight matrix, then draws each
ordered off-diagonal pair's sign from the logistic link probability. One
planted feature is a shared background with a strongly negative weight
(which sets the base density); the remaining features are entity blocks
with positive self-weights, optionally with an asymmetric cross-block
weight so the planted weight matrix is genuinely non-diagonal.
"""

import numpy as np
from scipy.special import expit

from .errors import ParameterError
from .network import Network

__all__ = ["planted_network"]


def planted_network(
    n_entities,
    rng,
    n_blocks=3,
    block_size=16,
    in_weight=3.0,
    bg_weight=-5.0,
    cross_weight=0.0,
    fringe_size=0,
    fringe_prob=0.2,
):
    """Draw a network from planted features; returns (network, z_true, u_true).

    Features: one shared background column plus `n_blocks` disjoint blocks
    of `block_size` entities. u_true[0, 0] = bg_weight; each block feature
    b has u_true[b, b] = in_weight - bg_weight so within-block pairs score
    exactly `in_weight`; `cross_weight` (if nonzero) is added on the
    directed block-1 -> block-2 entry.

    With `fringe_size` > 0, each block additionally gets that many fringe
    entities whose pairs with the block (either direction) appear with
    probability `fringe_prob` instead of the model value: partially
    observed members, deliberately off-model.
    """
    need = n_blocks * (block_size + fringe_size)
    if need > n_entities:
        raise ParameterError("blocks do not fit into the entity set")
    k = n_blocks + 1
    z = np.zeros((n_entities, k), dtype=np.int8)
    z[:, 0] = 1
    cursor = n_blocks * block_size
    fringe = []
    for b in range(n_blocks):
        members = np.arange(b * block_size, (b + 1) * block_size)
        z[members, b + 1] = 1
        fringe.append(np.arange(cursor, cursor + fringe_size))
        cursor += fringe_size
    u = np.zeros((k, k))
    u[0, 0] = bg_weight
    for b in range(1, k):
        u[b, b] = in_weight - bg_weight
    if cross_weight and n_blocks >= 2:
        u[1, 2] = cross_weight
    logits = z.astype(float) @ u @ z.astype(float).T
    prob = expit(logits)
    for b in range(n_blocks):
        group = np.concatenate(
            [np.arange(b * block_size, (b + 1) * block_size), fringe[b]]
        )
        f = fringe[b]
        prob[np.ix_(f, group)] = fringe_prob
        prob[np.ix_(group, f)] = fringe_prob
    draws = rng.random((n_entities, n_entities)) < prob
    np.fill_diagonal(draws, False)
    src, dst = np.nonzero(draws)
    net = Network(
        n_entities=n_entities,
        src=src,
        dst=dst,
        sign=np.ones(len(src), dtype=np.int64),
    )
    return net, z, u
