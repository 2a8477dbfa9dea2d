"""Multi-modal deep auto-encoder-like NMF clustering.

Typical use::

    from aenmf import AdmmConfig, fit, spectral_cluster, evaluate
    Hstar, traces, state = fit([X_visual, X_tactile], layer_sizes=[500, 50])
    labels = spectral_cluster(Hstar, k=10).labels
"""

from .admm import AdmmConfig, IterTrace, fit, objective_value
from .data import ModalityData, load_matrix, save_matrix
from .graph import GraphPrior, build_graph_prior
from .metrics import MetricReport, evaluate
from .pipeline import ExperimentConfig, load_config, run_experiment
from .pretrain import LayerStack, pretrain_stack
from .spectral import kmeans, spectral_cluster
from .synth import SynthSpec, complementary_spec, generate

__version__ = "0.1.0"

__all__ = [
    "AdmmConfig", "IterTrace", "fit", "objective_value", "ModalityData", "load_matrix", "save_matrix",
    "GraphPrior", "build_graph_prior", "MetricReport", "evaluate", "ExperimentConfig", "load_config",
    "run_experiment", "LayerStack", "pretrain_stack", "kmeans", "spectral_cluster", "SynthSpec",
    "complementary_spec", "generate",
]
