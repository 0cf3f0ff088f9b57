"""Fair graph representation learning through automated augmentation.

An adversarially trained augmentation model rewires edges and masks features
so that a contrastively trained encoder produces representations that keep
task signal while shedding sensitive-attribute signal.
"""

from .analysis import (HomophilyReport, SpearmanReport, claim3_report,
                       sensitive_homophily, spearman_sensitive)
from .data import (DatasetError, EdgeSplit, Graph, ParseError,
                   StatsMismatchError, load_dataset, load_dataset_dir,
                   minibatch_subgraph, split_edges)
from .evaluation import (ClassifierConfig, MetricsReport, auc, delta_dp,
                         delta_eo, dyadic_groups, evaluate_link,
                         evaluate_node, link_embed)
from .experiments import (DATASET_DEFAULTS, ExperimentConfig, ablate,
                          default_config, epoch_sweep, grid_search,
                          plot_tradeoff, run_experiment)
from .losses import (LossBreakdown, LossWeights, NonFiniteLossError,
                     adversarial_loss, contrastive_loss, pairwise_contrastive,
                     reconstruction_loss, total_loss)
from .models import (Adversary, AugmentedView, Augmentor, Encoder, GCN,
                     TensorGraph, normalize_adjacency,
                     straight_through_bernoulli)
from .trainer import (TrainConfig, TrainState, fit, load_checkpoint,
                      sample_eval_view, save_checkpoint, train_step)

__version__ = "0.1.0"

__all__ = [
    "Adversary", "AugmentedView", "Augmentor", "ClassifierConfig",
    "DATASET_DEFAULTS", "DatasetError", "EdgeSplit", "Encoder",
    "ExperimentConfig", "GCN", "Graph", "HomophilyReport", "LossBreakdown",
    "LossWeights", "MetricsReport", "NonFiniteLossError", "ParseError",
    "SpearmanReport", "StatsMismatchError", "TensorGraph", "TrainConfig",
    "TrainState", "ablate", "adversarial_loss", "auc", "claim3_report",
    "contrastive_loss", "default_config", "delta_dp", "delta_eo",
    "dyadic_groups", "epoch_sweep", "evaluate_link", "evaluate_node", "fit",
    "grid_search", "link_embed", "load_checkpoint", "load_dataset",
    "load_dataset_dir", "minibatch_subgraph", "normalize_adjacency",
    "pairwise_contrastive", "plot_tradeoff", "reconstruction_loss",
    "run_experiment", "sample_eval_view", "save_checkpoint",
    "sensitive_homophily", "spearman_sensitive", "split_edges",
    "straight_through_bernoulli", "total_loss", "train_step",
]
