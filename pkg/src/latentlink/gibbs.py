"""Data-augmented Gibbs sampler.

One sweep visits every entity, resampling its active feature indicators
one at a time and then proposing new features; afterwards the chain
redraws the weights from their exact Gaussian conditional and the
per-link auxiliary variables from their exact conditionals, and finally
drops feature columns that lost their last owner.

Feature indicator updates only ever touch the training links incident to
the entity being updated, and the per-link scores omega are maintained
incrementally so a sweep costs O(sum_n deg(n) * K) score work instead of
O(|train| * K) per flip.

New-feature proposals need, for each candidate count k, the marginal
likelihood of the k new weight blocks. With the rows/columns the new
features add to the weight matrix laid out blockwise, the posterior
precision of each block is a rank-structured matrix (ones-matrix Kronecker
an incidence second-moment matrix plus a ridge), so one symmetric
eigendecomposition per entity prices all candidate counts.
"""

import time
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, gammaln

from .errors import ParameterError
from .model import LatentState, augmented_coeffs, interaction_rows, log_pseudo_lik, omega_pairs
from .rng import mvn_from_natural, polya_gamma_draws, gig_half_draws, sample_ibp

__all__ = [
    "ChainConfig",
    "SuffStats",
    "SweepDiag",
    "init_chain",
    "resample_active_features",
    "birth_masses",
    "sample_new_features",
    "weight_posterior_natural",
    "resample_weights",
    "resample_lambda",
    "compact",
    "gibbs_sweep",
    "iterate_chain",
]

PHASES = ("sample_Z", "sample_U", "sample_lambda")

# Hinge slack can hit zero (auxiliary mean diverges); clamp below this.
MIN_HINGE_SLACK = 1e-8


@dataclass(frozen=True)
class ChainConfig:
    """Sweep count and bookkeeping policy for one chain."""

    n_iters: int = 300
    burn_in: int = 150
    thin: int = 1
    compact_every_sweep: bool = True

    def __post_init__(self):
        if self.n_iters < 1 or self.thin < 1:
            raise ParameterError("n_iters and thin must be positive")
        if not 0 <= self.burn_in < self.n_iters:
            raise ParameterError("burn_in must satisfy 0 <= burn_in < n_iters")


@dataclass
class SweepDiag:
    """Per-sweep diagnostics: current K, phase seconds, train log pseudo-lik."""

    iteration: int
    k: int
    seconds: dict
    log_pseudo_lik: float


class SuffStats:
    """Derived quantities the kernels share for one (state, training set) pair.

    Holds per-feature ownership counts, the cached omega of every training
    link, the current augmentation coefficients, and per-entity incidence
    lists. `refresh_omega` recomputes scores from scratch (called after
    weight updates); `refresh_coeffs` recomputes (kappa, rho) after
    auxiliary updates.
    """

    def __init__(self, state, train, hp):
        train = np.asarray(train, dtype=np.int64).reshape(-1, 3)
        self.src = train[:, 0]
        self.dst = train[:, 1]
        self.y = train[:, 2]
        n = state.n_entities
        self.out_links = [np.flatnonzero(self.src == i) for i in range(n)]
        self.in_links = [np.flatnonzero(self.dst == i) for i in range(n)]
        self.m = state.z.sum(axis=0).astype(np.int64)
        self.refresh_omega(state)
        self.refresh_coeffs(state, hp)

    @property
    def n_links(self):
        return len(self.src)

    def refresh_omega(self, state):
        self.omega = omega_pairs(state, self.src, self.dst)

    def refresh_coeffs(self, state, hp):
        coeffs = augmented_coeffs(self.y, state.lam, hp)
        self.kappa = coeffs.kappa
        self.rho = coeffs.rho

    def check_consistency(self, state, atol=1e-10):
        """Debug invariant: caches match a from-scratch recomputation."""
        assert np.array_equal(self.m, state.z.sum(axis=0)), "feature counts drifted"
        fresh = omega_pairs(state, self.src, self.dst)
        assert np.allclose(self.omega, fresh, atol=atol), "omega cache drifted"


def init_chain(n_entities, n_train_links, hp, rng):
    """Draw the initial state: Z from the buffet prior, weights from their
    Gaussian prior, all auxiliaries set to 1."""
    z = sample_ibp(n_entities, hp.alpha, rng)
    k = z.shape[1]
    dim = k if hp.diagonal else k * k
    eta = rng.normal(0.0, 1.0 / np.sqrt(hp.nu_sq), size=dim)
    lam = np.ones(n_train_links)
    return LatentState(z, eta, lam, structure=hp.structure)


def _entity_deltas(state, stats, n):
    """Per-feature score deltas for every training link incident to entity n.

    Returns (idx, deltas) with deltas[k, t] the change of omega on link
    idx[t] if z[n, k] flips from 0 to 1. Valid for the whole row update
    because self-loops are excluded, so the other endpoint's features
    cannot change while row n is being resampled.
    """
    out_idx = stats.out_links[n]
    in_idx = stats.in_links[n]
    idx = np.concatenate([out_idx, in_idx])
    k = state.k
    if k == 0 or len(idx) == 0:
        return idx, np.zeros((k, len(idx)))
    if state.structure == "diagonal":
        d_out = state.eta[:, None] * state.z[stats.dst[out_idx]].T
        d_in = state.eta[:, None] * state.z[stats.src[in_idx]].T
    else:
        u = state.eta.reshape(k, k)
        d_out = u @ state.z[stats.dst[out_idx]].T.astype(float)
        d_in = u.T @ state.z[stats.src[in_idx]].T.astype(float)
    return idx, np.concatenate([d_out, d_in], axis=1)


def resample_active_features(state, n, stats, hp, rng):
    """Redraw every active indicator z[n, k] from its exact conditional.

    The prior odds are m / (N - m) with m the feature's ownership count
    excluding entity n; features whose count drops to zero are removed
    from the row deterministically (zero prior mass). The likelihood odds
    involve only links incident to n.

    Returns the conditional p(z[n, k] = 1) actually used per feature
    (0 for the forced removals), mainly for diagnostics and oracle tests.
    """
    k_count = state.k
    probs = np.zeros(k_count)
    if k_count == 0:
        return probs
    n_entities = state.n_entities
    idx, deltas = _entity_deltas(state, stats, n)
    om = stats.omega[idx].copy()
    kap = stats.kappa[idx]
    rho = stats.rho[idx]
    row = state.z[n]
    for k in range(k_count):
        z_cur = int(row[k])
        m = stats.m[k] - z_cur
        if m == 0:
            if z_cur:
                row[k] = 0
                stats.m[k] -= 1
                om -= deltas[k]
            continue
        d = deltas[k]
        # log-lik(z=1) - log-lik(z=0) over incident links.
        mid = om + (0.5 - z_cur) * d
        llr = float(d @ (kap - rho * mid))
        p_one = float(expit(np.log(m) - np.log(n_entities - m) + llr))
        probs[k] = p_one
        z_new = int(rng.random() < p_one)
        if z_new != z_cur:
            row[k] = z_new
            stats.m[k] += z_new - z_cur
            om += d if z_new else -d
    stats.omega[idx] = om
    return probs


def _birth_block_moments(state, stats, n):
    """Second moments and residual projections of the links incident to n.

    Outgoing links constrain the new rows of the weight matrix through the
    target's features; incoming links constrain the new columns through
    the source's features. Returns ((s_out, w_out), (s_in, w_in)) with s
    the rho-weighted feature second-moment matrix and w the residual-
    weighted feature sum.
    """
    blocks = []
    for idx, other in (
        (stats.out_links[n], stats.dst),
        (stats.in_links[n], stats.src),
    ):
        z_other = state.z[other[idx]].astype(float)
        resid = stats.kappa[idx] - stats.rho[idx] * stats.omega[idx]
        s = z_other.T @ (stats.rho[idx][:, None] * z_other)
        w = resid @ z_other
        blocks.append((s, w))
    return blocks


def _birth_log_masses(blocks, k_grid, rate, hp, k_old):
    """Unnormalized log mass of each candidate new-feature count.

    The prior over the count is Poisson(alpha / N). For count k the new
    weights form independent Gaussian blocks whose precisions are
    ones(k,k) kron S + nu^2 I; the ones matrix has a single nonzero
    eigenvalue k, so the marginal-likelihood factor of a block is
    prod_i nu / sqrt(k s_i + nu^2) * exp(k w_i^2 / (2 (k s_i + nu^2)))
    in the eigenbasis of S. Blocks with no incident links contribute 1.
    """
    log_prior = k_grid * np.log(rate) - gammaln(k_grid + 1)  # Poisson up to const
    if hp.diagonal or k_old == 0:
        # New features of entity n interact with no other entity yet, so
        # the likelihood factor is exactly 1 and the prior decides.
        return log_prior
    total = log_prior.astype(float)
    for s, w in blocks:
        evals, evecs = np.linalg.eigh(s)
        evals = np.maximum(evals, 0.0)
        wt = evecs.T @ w
        for pos, k in enumerate(k_grid):
            if k == 0:
                continue
            denom = k * evals + hp.nu_sq
            total[pos] += 0.5 * (
                k_old * np.log(hp.nu_sq)
                - np.log(denom).sum()
                + (k * wt * wt / denom).sum()
            )
    return total


def birth_masses(state, n, stats, hp):
    """Normalized probabilities of adding 0..k_max new features for entity n."""
    k_grid = np.arange(hp.k_max + 1)
    blocks = _birth_block_moments(state, stats, n) if not hp.diagonal else None
    log_mass = _birth_log_masses(blocks, k_grid, hp.alpha / state.n_entities, hp, state.k)
    log_mass -= log_mass.max()
    mass = np.exp(log_mass)
    return mass / mass.sum()


def sample_new_features(state, n, stats, hp, rng):
    """Propose k in 0..k_max new features for entity n and, on birth, draw
    the new weights from their exact Gaussian conditional.

    Returns the number of features added.
    """
    k_old = state.k
    mass = birth_masses(state, n, stats, hp)
    k_new = min(int(np.searchsorted(np.cumsum(mass), rng.random())), hp.k_max)
    if k_new == 0:
        return 0
    blocks = _birth_block_moments(state, stats, n) if not hp.diagonal else None

    if hp.diagonal:
        new_eta = rng.normal(0.0, 1.0 / np.sqrt(hp.nu_sq), size=k_new)
        state.eta = np.concatenate([state.eta, new_eta])
    else:
        (s_out, w_out), (s_in, w_in) = blocks
        ridge = hp.nu_sq * np.eye(k_new * k_old)
        ones = np.ones((k_new, k_new))
        if k_old > 0:
            row_block, _ = mvn_from_natural(
                np.tile(w_out, k_new), np.kron(ones, s_out) + ridge, rng
            )
            col_block, _ = mvn_from_natural(
                np.repeat(w_in, k_new), np.kron(s_in, ones) + ridge, rng
            )
            rows = row_block.reshape(k_new, k_old)
            cols = col_block.reshape(k_old, k_new)
        else:
            rows = np.zeros((k_new, 0))
            cols = np.zeros((0, k_new))
        corner = rng.normal(0.0, 1.0 / np.sqrt(hp.nu_sq), size=(k_new, k_new))
        u_new = np.zeros((k_old + k_new, k_old + k_new))
        u_new[:k_old, :k_old] = state.eta.reshape(k_old, k_old)
        u_new[k_old:, :k_old] = rows
        u_new[:k_old, k_old:] = cols
        u_new[k_old:, k_old:] = corner
        state.eta = u_new.ravel()
        # The new rows/columns shift the scores of links incident to n.
        out_idx, in_idx = stats.out_links[n], stats.in_links[n]
        if len(out_idx):
            stats.omega[out_idx] += state.z[stats.dst[out_idx]].astype(float) @ rows.sum(axis=0)
        if len(in_idx):
            stats.omega[in_idx] += state.z[stats.src[in_idx]].astype(float) @ cols.sum(axis=1)

    cols_new = np.zeros((state.n_entities, k_new), dtype=np.int8)
    cols_new[n] = 1
    state.z = np.concatenate([state.z, cols_new], axis=1)
    stats.m = np.concatenate([stats.m, np.ones(k_new, dtype=np.int64)])
    return k_new


def weight_posterior_natural(state, stats, hp, max_chunk=4_000_000):
    """Natural parameters (h, precision) of the weight conditional:
    precision = sum_links rho * x x^T + nu^2 I, h = sum_links kappa * x,
    with x the link's feature-interaction vector. Accumulated in chunks so
    the (links x K^2) scratch stays bounded."""
    k = state.k
    dim = k if hp.diagonal else k * k
    precision = hp.nu_sq * np.eye(dim)
    h = np.zeros(dim)
    step = max(1, max_chunk // max(1, dim))
    for lo in range(0, stats.n_links, step):
        hi = min(lo + step, stats.n_links)
        rows = interaction_rows(
            state.z[stats.src[lo:hi]], state.z[stats.dst[lo:hi]], state.structure
        )
        precision += rows.T @ (stats.rho[lo:hi, None] * rows)
        h += stats.kappa[lo:hi] @ rows
    return h, precision


def resample_weights(state, stats, hp, rng):
    """Exact Gaussian redraw of all weights given Z and the auxiliaries."""
    if state.k == 0:
        return
    h, precision = weight_posterior_natural(state, stats, hp)
    draw, _ = mvn_from_natural(h, precision, rng)
    state.eta = draw
    stats.refresh_omega(state)


def resample_lambda(state, stats, hp, rng):
    """Exact conditional redraw of every per-link auxiliary variable.

    Logistic: lambda ~ PG(cost, omega). Hinge: 1/lambda is inverse
    Gaussian with mean 1 / (cost * |slack|), slack = margin - y * omega.
    """
    c = np.where(stats.y > 0, hp.c_pos, hp.c_neg)
    if hp.loss == "logistic":
        state.lam = polya_gamma_draws(c, stats.omega, rng, n_terms=hp.pg_trunc)
    else:
        slack = hp.ell - stats.y * stats.omega
        safe = np.maximum(np.abs(slack), MIN_HINGE_SLACK)
        state.lam = gig_half_draws(np.ones_like(safe), (c * safe) ** 2, rng)
    stats.refresh_coeffs(state, hp)


def compact(state, stats):
    """Drop all-zero feature columns and their weights; scores are unchanged."""
    keep = stats.m > 0
    if keep.all():
        return
    k = state.k
    state.z = np.ascontiguousarray(state.z[:, keep])
    if state.structure == "diagonal":
        state.eta = state.eta[keep]
    else:
        state.eta = np.ascontiguousarray(state.eta.reshape(k, k)[np.ix_(keep, keep)]).ravel()
    stats.m = stats.m[keep]


def gibbs_sweep(state, stats, hp, cfg, rng, iteration=0, weight_step=None):
    """One full sweep: all entity feature updates, weights, auxiliaries,
    then compaction. Returns per-phase timing diagnostics.

    `weight_step` replaces the exact weight redraw when given (used by the
    stochastic-gradient sampler); it must leave state.eta current, after
    which the cached scores are refreshed here.
    """
    t0 = time.perf_counter()
    for n in range(state.n_entities):
        resample_active_features(state, n, stats, hp, rng)
        sample_new_features(state, n, stats, hp, rng)
    t1 = time.perf_counter()
    if weight_step is None:
        resample_weights(state, stats, hp, rng)
    else:
        weight_step(state, stats, hp, rng)
        stats.refresh_omega(state)
    t2 = time.perf_counter()
    resample_lambda(state, stats, hp, rng)
    t3 = time.perf_counter()
    if cfg.compact_every_sweep:
        compact(state, stats)
    seconds = {"sample_Z": t1 - t0, "sample_U": t2 - t1, "sample_lambda": t3 - t2}
    return SweepDiag(
        iteration=iteration,
        k=state.k,
        seconds=seconds,
        log_pseudo_lik=log_pseudo_lik(stats.omega, stats.y, hp),
    )


def iterate_chain(state, stats, hp, cfg, rng, weight_step=None, start=1):
    """Yield (iteration, state, diag) for sweeps start..n_iters."""
    for it in range(start, cfg.n_iters + 1):
        diag = gibbs_sweep(state, stats, hp, cfg, rng, iteration=it, weight_step=weight_step)
        yield it, state, diag
