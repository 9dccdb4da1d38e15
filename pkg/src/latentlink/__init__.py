"""Nonparametric latent-feature link prediction.

Binary per-entity features with an Indian-buffet-process prior, a full or
diagonal pairwise weight matrix, and cost-weighted logistic or hinge
pseudo-likelihoods with per-sign costs for imbalanced networks. Inference
is a data-augmented Gibbs sampler (Polya-Gamma / inverse-Gaussian
auxiliaries) with an optional stochastic-gradient Langevin weight sampler
for large networks.
"""

from .baselines import AdjacencyIndex, common_neighbors, jaccard, katz_truncated
from .checkpoint import load_checkpoint, save_checkpoint
from .errors import (
    CapacityError,
    CheckpointError,
    DataError,
    LatentLinkError,
    NumericalError,
    ParameterError,
    ParseError,
    SingularPrecisionError,
    UsageError,
)
from .evaluate import (
    EvalReport,
    ExperimentConfig,
    auc,
    roc_points,
    run_experiment,
    run_replicated,
    sweep_cost_ratio,
)
from .gibbs import ChainConfig, SuffStats, gibbs_sweep, init_chain, iterate_chain
from .model import (
    AugmentedCoeffs,
    HyperParams,
    LatentState,
    augmented_coeffs,
    omega,
    omega_pairs,
    predict_scores,
    predict_signs,
    pseudo_lik_hinge,
    pseudo_lik_logistic,
)
from .network import (
    LinkSplit,
    Network,
    load_edge_list,
    load_split,
    per_relation_views,
    save_split,
    split_dense,
    split_sparse,
)
from .rng import (
    GigParams,
    PolyaGammaParams,
    RngStream,
    sample_gig_half,
    sample_ibp,
    sample_inverse_gaussian,
    sample_mvn,
    sample_poisson,
    sample_polya_gamma,
)
from .sgld import Minibatch, SgldSchedule, draw_minibatch, run_sto_chain, sgld_step
from .synthetic import planted_network

__version__ = "0.1.0"
