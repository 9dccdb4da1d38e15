"""Random-variate generation for the samplers.

Provides seeded, splittable random streams plus draws from every
distribution the chains need: Polya-Gamma, inverse Gaussian, the
half-order generalized inverse Gaussian, precision-parameterized
multivariate normals, Poisson, and Indian-buffet-process feature
matrices.

All functions are pure in (params, rng): the only state they touch is
the stream they are handed.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

from .errors import ParameterError, SingularPrecisionError

__all__ = [
    "RngStream",
    "PolyaGammaParams",
    "GigParams",
    "sample_polya_gamma",
    "sample_inverse_gaussian",
    "sample_gig_half",
    "sample_mvn",
    "sample_ibp",
    "sample_poisson",
    "polya_gamma_mean",
    "polya_gamma_draws",
    "inverse_gaussian_draws",
    "mvn_from_natural",
]

DEFAULT_PG_TERMS = 200


class RngStream:
    """A seeded random stream with counter-based splitting.

    Identical seed + identical call sequence gives bit-identical draws.
    A stream is single-owner; parallel work must use `split(i)` children,
    which are statistically independent of the parent and of each other.
    """

    def __init__(self, seed, spawn_key=()):
        self.seed = int(seed)
        self.spawn_key = tuple(int(k) for k in spawn_key)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.spawn_key)
        self.generator = np.random.Generator(np.random.Philox(ss))

    def split(self, index):
        """Child stream number `index`; independent of this stream."""
        return RngStream(self.seed, self.spawn_key + (index,))

    def state(self):
        """JSON-compatible snapshot of the underlying bit generator."""
        return _jsonify(self.generator.bit_generator.state)

    def set_state(self, state):
        self.generator.bit_generator.state = state

    def __getattr__(self, name):
        # Delegate draw methods (normal, gamma, poisson, ...) to numpy.
        if name == "generator":
            raise AttributeError(name)
        return getattr(self.generator, name)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, spawn_key={self.spawn_key})"


def _jsonify(obj):
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return [int(v) for v in obj.ravel()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


@dataclass(frozen=True)
class PolyaGammaParams:
    """Shape b > 0 and tilt z of a PG(b, z) distribution."""

    b: float
    z: float = 0.0

    def __post_init__(self):
        if not self.b > 0:
            raise ParameterError(f"Polya-Gamma shape must be positive, got {self.b}")


@dataclass(frozen=True)
class GigParams:
    """Order p and rate parameters (a, b) of a GIG(p, a, b) distribution."""

    p: float
    a: float
    b: float

    def __post_init__(self):
        if not self.a > 0 or self.b < 0:
            raise ParameterError(f"GIG needs a > 0, b >= 0, got a={self.a}, b={self.b}")


def polya_gamma_mean(b, z):
    """Mean of PG(b, z): (b / (2 z)) * tanh(z / 2), with limit b / 4 at z = 0."""
    b = np.asarray(b, dtype=float)
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-6
    z_safe = np.where(small, 1.0, z)
    exact = (b / (2.0 * z_safe)) * np.tanh(z_safe / 2.0)
    series = b * (0.25 - z * z / 48.0)
    return np.where(small, series, exact)


def polya_gamma_draws(b, z, rng, n_terms=DEFAULT_PG_TERMS, max_block=2_000_000):
    """Vectorized PG(b, z) draws via a truncated sum of gammas.

    Each draw sums `n_terms` leading terms of the gamma-convolution series
    and adds a constant equal to the analytic mean of the dropped tail, so
    sample means are exact for any truncation level.
    """
    b = np.asarray(b, dtype=float)
    z = np.asarray(z, dtype=float)
    if np.any(b <= 0):
        raise ParameterError("Polya-Gamma shape must be positive")
    b, z = np.broadcast_arrays(b, z)
    shape = b.shape
    b_flat = np.ascontiguousarray(b, dtype=float).ravel()
    z_flat = np.ascontiguousarray(z, dtype=float).ravel()
    out = np.empty(b_flat.size)
    d = np.arange(1, n_terms + 1, dtype=float)
    base = (d - 0.5) ** 2
    # Chunk so the (draws x terms) scratch stays within max_block entries.
    step = max(1, max_block // n_terms)
    for lo in range(0, b_flat.size, step):
        hi = min(lo + step, b_flat.size)
        denom = base[None, :] + (z_flat[lo:hi, None] / (2.0 * np.pi)) ** 2
        g = rng.gamma(np.broadcast_to(b_flat[lo:hi, None], denom.shape), 1.0)
        head = (g / denom).sum(axis=1) / (2.0 * np.pi**2)
        head_mean = (b_flat[lo:hi] / (2.0 * np.pi**2)) * (1.0 / denom).sum(axis=1)
        tail_mean = polya_gamma_mean(b_flat[lo:hi], z_flat[lo:hi]) - head_mean
        out[lo:hi] = head + tail_mean
    return out.reshape(shape)


def sample_polya_gamma(params, rng, n_terms=DEFAULT_PG_TERMS):
    """One draw from PG(params.b, params.z)."""
    return float(polya_gamma_draws(params.b, params.z, rng, n_terms=n_terms))


def inverse_gaussian_draws(mu, lam, rng):
    """Vectorized IG(mu, lam) draws (Michael-Schucany-Haas transformation).

    One standard normal and one uniform per draw; constant time.
    """
    mu = np.asarray(mu, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if np.any(mu <= 0) or np.any(lam <= 0):
        raise ParameterError("inverse Gaussian needs mu > 0 and shape > 0")
    mu, lam = np.broadcast_arrays(mu, lam)
    nu = rng.standard_normal(mu.shape)
    w = mu * nu * nu
    # Stable form of mu + mu^2 y / (2 lam) - mu sqrt(4 mu lam y + mu^2 y^2) / (2 lam);
    # the max() keeps the w = 0 case finite (x -> mu).
    denom = np.maximum(w + np.sqrt(w * (w + 4.0 * lam)), np.finfo(float).tiny)
    x = mu * (1.0 - 2.0 * w / denom)
    u = rng.random(mu.shape)
    return np.where(u <= mu / (mu + x), x, mu * mu / x)


def sample_inverse_gaussian(mu, shape, rng):
    """One draw from the inverse Gaussian with mean `mu` and shape parameter."""
    if not (np.isscalar(mu) or np.ndim(mu) == 0):
        return inverse_gaussian_draws(mu, shape, rng)
    return float(inverse_gaussian_draws(mu, shape, rng))


def gig_half_draws(a, b, rng):
    """Vectorized GIG(1/2, a, b) draws via the reciprocal identity.

    If X ~ GIG(1/2, a, b) then 1/X ~ IG(sqrt(a/b), a), so we draw the
    reciprocal with the constant-time IG sampler and invert.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a <= 0) or np.any(b <= 0):
        raise ParameterError("half-order GIG needs a > 0 and b > 0")
    return 1.0 / inverse_gaussian_draws(np.sqrt(a / b), a, rng)


def sample_gig_half(a, b, rng):
    """One draw from GIG(1/2, a, b)."""
    if not (np.isscalar(a) or np.ndim(a) == 0):
        return gig_half_draws(a, b, rng)
    return float(gig_half_draws(a, b, rng))


def _cholesky_precision(precision):
    precision = np.asarray(precision, dtype=float)
    try:
        return cholesky(precision, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularPrecisionError(
            f"precision matrix of size {precision.shape[0]} is not positive definite"
        ) from exc


def sample_mvn(mean, precision, rng):
    """Draw from the Gaussian with the given mean and precision (inverse covariance).

    One Cholesky factorization and one triangular solve per draw.
    """
    mean = np.asarray(mean, dtype=float)
    if mean.size == 0:
        return mean.copy()
    chol = _cholesky_precision(precision)
    noise = rng.standard_normal(mean.shape[0])
    return mean + solve_triangular(chol, noise, lower=True, trans=1)


def mvn_from_natural(h, precision, rng):
    """Draw from N(mu, precision^-1) with mu = precision^-1 h.

    Returns (draw, mu); reuses a single factorization for both.
    """
    h = np.asarray(h, dtype=float)
    if h.size == 0:
        return h.copy(), h.copy()
    chol = _cholesky_precision(precision)
    mu = cho_solve((chol, True), h)
    noise = rng.standard_normal(h.shape[0])
    return mu + solve_triangular(chol, noise, lower=True, trans=1), mu


def sample_poisson(rate, rng):
    """Poisson draw with the given non-negative rate."""
    if rate < 0:
        raise ParameterError(f"Poisson rate must be non-negative, got {rate}")
    return int(rng.poisson(rate))


def sample_ibp(n_entities, alpha, rng):
    """Draw a left-ordered binary feature matrix from an Indian buffet process.

    Entity n picks up each existing feature k with probability m_k / n and
    then tries Poisson(alpha / n) new features. The expected total column
    count is alpha * H_N.
    """
    if n_entities < 1:
        raise ParameterError("need at least one entity")
    if not alpha > 0:
        raise ParameterError("concentration must be positive")
    columns = []  # per feature: list of entity indices owning it
    counts = []
    for n in range(1, n_entities + 1):
        for k in range(len(columns)):
            if rng.random() < counts[k] / n:
                columns[k].append(n - 1)
                counts[k] += 1
        for _ in range(sample_poisson(alpha / n, rng)):
            columns.append([n - 1])
            counts.append(1)
    z = np.zeros((n_entities, len(columns)), dtype=np.int8)
    for k, rows in enumerate(columns):
        z[rows, k] = 1
    return left_order(z)


def left_order(z):
    """Reorder columns into left-ordered form (history-as-binary, descending)."""
    if z.shape[1] <= 1:
        return z
    order = np.lexsort(z[::-1, :])[::-1]
    return np.ascontiguousarray(z[:, order])
