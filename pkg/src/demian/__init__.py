"""Modality-invariant representation learning with adversarial training.

Public surface: the :class:`Demian` estimator, the :class:`LinearCCA`
baseline, the :class:`SoftmaxRegression` classifier, the evaluation
protocols, and the dataset/serialization helpers backing the CLI.
"""

from .cca import LinearCCA
from .data import (EmbeddingSet, IdxFormatError, PairedDataset, join_left_right,
                   load_mnist_idx, make_validation_split, split_left_right,
                   synth_cca_dataset, synth_rotation_dataset)
from .evaluation import (CorrelationReport, RetrievalResult, SrlResult,
                         cosine_retrieval_classify, label_efficiency_curve,
                         srl_evaluate, topk_correlation)
from .logreg import SoftmaxRegression
from .model import (Demian, TrainingDivergedError, adversarial_losses,
                    make_discriminator, make_generator, pairing_loss)
from .nn import (ELU, BatchNorm, Dense, GaussianPrior, Network, Parameter, ReLU,
                 matmul, softmax_cross_entropy)
from .optim import Adam
from .serialize import (load_checkpoint, load_matrix, save_checkpoint,
                        save_embeddings, save_matrix, write_metrics)

__version__ = "0.1.0"

__all__ = [
    "Adam",
    "BatchNorm",
    "CorrelationReport",
    "Demian",
    "Dense",
    "ELU",
    "EmbeddingSet",
    "GaussianPrior",
    "IdxFormatError",
    "LinearCCA",
    "Network",
    "PairedDataset",
    "Parameter",
    "ReLU",
    "RetrievalResult",
    "SoftmaxRegression",
    "SrlResult",
    "TrainingDivergedError",
    "adversarial_losses",
    "cosine_retrieval_classify",
    "join_left_right",
    "label_efficiency_curve",
    "load_checkpoint",
    "load_matrix",
    "load_mnist_idx",
    "make_discriminator",
    "make_generator",
    "make_validation_split",
    "matmul",
    "pairing_loss",
    "save_checkpoint",
    "save_embeddings",
    "save_matrix",
    "softmax_cross_entropy",
    "split_left_right",
    "srl_evaluate",
    "synth_cca_dataset",
    "synth_rotation_dataset",
    "topk_correlation",
    "write_metrics",
]
