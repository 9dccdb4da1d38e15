"""Model state and closed-form quantities.

The model scores an ordered pair (i, j) with omega = Z_i U Z_j^T, where Z
holds binary per-entity features and U is a full (or diagonal) weight
matrix. Training links enter through cost-weighted pseudo-likelihoods:
a powered logistic form or an exponentiated hinge form, each with its own
per-sign cost. Both admit a Gaussian-form augmentation in which every
training link carries a positive auxiliary variable lambda and a pair of
coefficients (kappa, rho) such that the augmented log-likelihood of a link
is kappa * omega - rho * omega^2 / 2.

All likelihood arithmetic is done in log space.
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import ParameterError, UsageError

__all__ = [
    "HyperParams",
    "LatentState",
    "AugmentedCoeffs",
    "omega",
    "omega_pairs",
    "interaction_rows",
    "pseudo_lik_logistic",
    "pseudo_lik_hinge",
    "log_pseudo_lik",
    "link_costs",
    "augmented_coeffs",
    "predict_scores",
    "predict_signs",
]

LOSSES = ("logistic", "hinge")
STRUCTURES = ("full", "diagonal")


@dataclass(frozen=True)
class HyperParams:
    """Priors, costs, and loss/structure selection for one model."""

    alpha: float = 1.0  # feature-allocation concentration
    nu_sq: float = 1.0  # prior precision on every weight
    c_pos: float = 10.0  # cost applied to positive training links
    c_neg: float = 1.0  # cost applied to negative training links
    ell: float = 1.0  # hinge margin
    loss: str = "logistic"
    structure: str = "full"
    k_max: int = 5  # max new features per entity update
    pg_trunc: int = 200  # gamma-series terms per Polya-Gamma draw

    def __post_init__(self):
        for name in ("alpha", "nu_sq", "c_pos", "c_neg", "ell"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive")
        if self.loss not in LOSSES:
            raise ParameterError(f"loss must be one of {LOSSES}, got {self.loss!r}")
        if self.structure not in STRUCTURES:
            raise ParameterError(f"structure must be one of {STRUCTURES}")
        if self.k_max < 1 or self.pg_trunc < 1:
            raise ParameterError("k_max and pg_trunc must be positive integers")

    def with_ratio(self, ratio):
        """Copy with c_pos = ratio * c_neg."""
        return replace(self, c_pos=ratio * self.c_neg)

    @property
    def diagonal(self):
        return self.structure == "diagonal"


@dataclass
class LatentState:
    """Mutable state of one chain: features Z, weights eta, auxiliaries lambda.

    For the full structure eta has length K*K and reshapes row-major to the
    weight matrix U; for the diagonal structure eta has length K. lam holds
    one positive auxiliary variable per training link.
    """

    z: np.ndarray
    eta: np.ndarray
    lam: np.ndarray
    structure: str = "full"

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=np.int8)
        self.eta = np.asarray(self.eta, dtype=float)
        self.lam = np.asarray(self.lam, dtype=float)
        self.check_shapes()

    def check_shapes(self):
        k = self.z.shape[1]
        want = k if self.structure == "diagonal" else k * k
        if self.eta.shape != (want,):
            raise ParameterError(f"eta has length {self.eta.shape}, expected ({want},)")
        if len(self.lam) and self.lam.min() <= 0:
            raise ParameterError("all lambda must be positive")

    @property
    def n_entities(self):
        return self.z.shape[0]

    @property
    def k(self):
        return self.z.shape[1]

    @property
    def weight_matrix(self):
        """U as a K x K matrix view (diagonal embedded for the diagonal structure)."""
        if self.structure == "diagonal":
            return np.diag(self.eta)
        return self.eta.reshape(self.k, self.k)

    def copy(self):
        return LatentState(self.z.copy(), self.eta.copy(), self.lam.copy(), self.structure)


@dataclass
class AugmentedCoeffs:
    """Per-link Gaussian-form coefficients; fields may be scalars or arrays."""

    kappa: np.ndarray
    rho: np.ndarray


def omega(state, i, j):
    """Score of the ordered pair (i, j) under the current state."""
    zi = state.z[i].astype(float)
    zj = state.z[j].astype(float)
    if state.structure == "diagonal":
        return float(np.dot(state.eta, zi * zj))
    return float(zi @ state.eta.reshape(state.k, state.k) @ zj)


def omega_pairs(state, src, dst):
    """Vectorized omega for arrays of sources and targets."""
    src = np.asarray(src)
    dst = np.asarray(dst)
    if state.k == 0:
        return np.zeros(len(src))
    zs = state.z[src].astype(float)
    zd = state.z[dst].astype(float)
    if state.structure == "diagonal":
        return (zs * zd) @ state.eta
    return np.einsum("la,ab,lb->l", zs, state.eta.reshape(state.k, state.k), zd)


def interaction_rows(zs, zd, structure):
    """Per-link feature-interaction vectors: omega = rows @ eta.

    Full structure: the flattened outer product of the two feature rows
    (length K^2). Diagonal: the elementwise product (length K).
    """
    zs = np.asarray(zs, dtype=float)
    zd = np.asarray(zd, dtype=float)
    if structure == "diagonal":
        return zs * zd
    n, k = zs.shape
    return (zs[:, :, None] * zd[:, None, :]).reshape(n, k * k)


def pseudo_lik_logistic(om, y, c):
    """Powered logistic pseudo-likelihood (e^om)^(c*ytil) / (1 + e^om)^c."""
    if np.any(np.asarray(c) <= 0):
        raise ParameterError("cost must be positive")
    om = np.asarray(om, dtype=float)
    ytil = (np.asarray(y) + 1) / 2.0
    return np.exp(c * (ytil * om - np.logaddexp(0.0, om)))


def pseudo_lik_hinge(om, y, c, ell):
    """Exponentiated hinge pseudo-likelihood exp(-2c * max(0, ell - y*om))."""
    if np.any(np.asarray(c) <= 0) or ell <= 0:
        raise ParameterError("cost and margin must be positive")
    om = np.asarray(om, dtype=float)
    slack = np.maximum(0.0, ell - np.asarray(y) * om)
    return np.exp(-2.0 * c * slack)


def link_costs(y, hp):
    """Per-link cost keyed on the observed sign."""
    return np.where(np.asarray(y) > 0, hp.c_pos, hp.c_neg)


def log_pseudo_lik(om, y, hp):
    """Total log pseudo-likelihood of a set of links (training diagnostic)."""
    om = np.asarray(om, dtype=float)
    y = np.asarray(y)
    c = link_costs(y, hp)
    if hp.loss == "logistic":
        ytil = (y + 1) / 2.0
        return float(np.sum(c * (ytil * om - np.logaddexp(0.0, om))))
    return float(np.sum(-2.0 * c * np.maximum(0.0, hp.ell - y * om)))


def augmented_coeffs(y, lam, hp):
    """Gaussian-form coefficients (kappa, rho) for links with auxiliaries lam.

    Logistic: kappa = c (ytil - 1/2), rho = lam.
    Hinge, with gamma = 1 / lam: kappa = c y (1 + c ell gamma), rho = c^2 gamma.
    """
    y = np.asarray(y)
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0):
        raise ParameterError("auxiliary variables must be positive")
    c = link_costs(y, hp)
    if hp.loss == "logistic":
        return AugmentedCoeffs(kappa=c * y / 2.0, rho=lam.copy())
    gamma = 1.0 / lam
    return AugmentedCoeffs(kappa=c * y * (1.0 + c * hp.ell * gamma), rho=c * c * gamma)


def predict_scores(samples, src, dst):
    """Average omega over posterior samples for each requested pair.

    The averaged score is what AUC ranking consumes; its sign is the
    predicted link sign (ties predict -1).
    """
    if not samples:
        raise UsageError("need at least one posterior sample")
    total = np.zeros(len(np.asarray(src)))
    for state in samples:
        total += omega_pairs(state, src, dst)
    return total / len(samples)


def predict_signs(scores):
    """Sign rule on averaged scores; the boundary score 0 predicts -1."""
    return np.where(np.asarray(scores) > 0, 1, -1)
