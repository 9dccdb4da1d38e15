"""Stochastic-gradient Langevin weight updates.

Replaces the exact Gaussian weight redraw with a few noisy gradient steps
per sweep, each using a uniform minibatch of training links. The drift is
half the step size times an unbiased estimate of the gradient of the
weight log-conditional; the injected noise has per-coordinate variance
equal to the step size. Feature and auxiliary updates are unchanged.

Two step-size schedules: a decaying polynomial eps_t = a (b + t)^-gamma,
and an adaptive per-coordinate schedule driven by accumulated squared
gradients. The adaptive schedule can run with or without injected noise.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, UsageError
from .gibbs import iterate_chain
from .model import interaction_rows

__all__ = [
    "SgldSchedule",
    "Minibatch",
    "draw_minibatch",
    "weight_gradient",
    "sgld_step",
    "make_weight_step",
    "run_sto_chain",
]

ADAGRAD_EPS = 1e-8


class SgldSchedule:
    """Step-size policy plus its mutable state (step counter, accumulator)."""

    KINDS = ("polynomial", "adagrad")

    def __init__(self, kind="polynomial", a=0.2, b=100.0, gamma=0.6,
                 adagrad_base=0.1, noise=True):
        if kind not in self.KINDS:
            raise ParameterError(f"schedule kind must be one of {self.KINDS}")
        if min(a, b, adagrad_base) <= 0 or gamma <= 0:
            raise ParameterError("schedule constants must be positive")
        self.kind = kind
        self.a = a
        self.b = b
        self.gamma = gamma
        self.adagrad_base = adagrad_base
        self.noise = noise
        self.t = 0
        self.accum = None

    def step_size(self, t):
        """Polynomial step size at step t (1-based)."""
        return self.a * (self.b + t) ** (-self.gamma)

    def next_step(self, grad):
        """Advance one step; returns the (scalar or per-coordinate) step size."""
        self.t += 1
        if self.kind == "polynomial":
            return self.step_size(self.t)
        if self.accum is None or self.accum.shape != grad.shape:
            # The weight layout reshuffles when features are born or die,
            # so a stale accumulator cannot be carried over; start fresh.
            self.accum = np.zeros_like(grad)
        self.accum += grad * grad
        return self.adagrad_base / (ADAGRAD_EPS + np.sqrt(self.accum))

    def state_dict(self):
        return {
            "t": self.t,
            "accum": None if self.accum is None else self.accum.tolist(),
        }

    def load_state_dict(self, d):
        self.t = int(d["t"])
        self.accum = None if d["accum"] is None else np.asarray(d["accum"], dtype=float)


@dataclass(frozen=True)
class Minibatch:
    """Uniform without-replacement subset of training links, with the
    |train| / m gradient rescale."""

    indices: np.ndarray
    scale: float


def draw_minibatch(n_links, batch_size, rng):
    if n_links == 0:
        raise UsageError("cannot draw a minibatch from an empty training set")
    m = min(batch_size, n_links)
    idx = rng.choice(n_links, size=m, replace=False)
    return Minibatch(indices=idx, scale=n_links / m)


def weight_gradient(state, stats, batch, hp):
    """Minibatch estimate of the gradient of the weight log-conditional:
    -nu^2 eta + scale * sum_batch (kappa - rho * omega) x."""
    idx = batch.indices
    rows = interaction_rows(state.z[stats.src[idx]], state.z[stats.dst[idx]], state.structure)
    om = rows @ state.eta
    resid = stats.kappa[idx] - stats.rho[idx] * om
    return -hp.nu_sq * state.eta + batch.scale * (resid @ rows)


def sgld_step(state, stats, batch, hp, sched, rng):
    """One Langevin step on the weights; returns the updated eta."""
    if len(batch.indices) == 0:
        raise UsageError("empty minibatch")
    grad = weight_gradient(state, stats, batch, hp)
    eps = sched.next_step(grad)
    delta = 0.5 * eps * grad
    if sched.noise:
        delta = delta + np.sqrt(eps) * rng.standard_normal(grad.shape)
    state.eta = state.eta + delta
    return state.eta


def make_weight_step(sched, n_inner=10, batch_size=1024):
    """Weight-phase callback for the sweep driver: `n_inner` Langevin steps."""

    def weight_step(state, stats, hp, rng):
        for _ in range(n_inner):
            if state.k == 0:
                return
            batch = draw_minibatch(stats.n_links, batch_size, rng)
            sgld_step(state, stats, batch, hp, sched, rng)

    return weight_step


def run_sto_chain(state, stats, hp, cfg, sched, rng, n_inner=10, batch_size=1024):
    """Run a full chain with Langevin weight updates.

    Returns (samples, diagnostics): post-burn-in thinned state copies and
    the per-sweep diagnostics list.
    """
    step = make_weight_step(sched, n_inner=n_inner, batch_size=batch_size)
    samples, diags = [], []
    for it, st, diag in iterate_chain(state, stats, hp, cfg, rng, weight_step=step):
        diags.append(diag)
        if it > cfg.burn_in and (it - cfg.burn_in) % cfg.thin == 0:
            samples.append(st.copy())
    return samples, diags
