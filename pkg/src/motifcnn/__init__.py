"""Motif-based graph convolutional networks for semi-supervised node classification."""
from .graph import Dataset, HeteroGraph, LabelSet, build_feature_matrix, load_dataset, split_labels
from .motifs import Motif, MotifTensor, brute_force_instances, build_motif_tensor, enumerate_instances
from .neural import Model, init_model, model_backward, model_forward
from .training import TrainConfig, TrainReport, evaluate_f1, train

__version__ = "0.1.0"
