"""Residual RNNs as linear models on path signatures.

The package computes truncated path signatures, integrates the network's
continuous-time limit and its controlled form, expands that solution as a
linear functional of the signature via iterated star products, measures the
induced coefficient-series norm, and uses it for penalized training and
robustness experiments.
"""

from .estimators import RnnClassifier, SignatureFeatures
from .paths import PathConfig, PiecewiseLinearPath, from_samples, normalize, time_augment
from .rkhs import alpha_series, bound_binary, bound_sequential, rkhs_norm, rkhs_predict
from .rnn import Activation, RnnParams, random_params, rnn_forward
from .signatures import Signature, path_signature, segment_signature, sig_kernel
from .taylor import iterated_star, taylor_expansion
from .training import SpiralDataset, TrainConfig, make_spirals, pgd_attack, train

__version__ = "0.1.0"

__all__ = [
    "Activation",
    "PathConfig",
    "PiecewiseLinearPath",
    "RnnClassifier",
    "RnnParams",
    "Signature",
    "SignatureFeatures",
    "SpiralDataset",
    "TrainConfig",
    "alpha_series",
    "bound_binary",
    "bound_sequential",
    "from_samples",
    "iterated_star",
    "make_spirals",
    "normalize",
    "path_signature",
    "pgd_attack",
    "random_params",
    "rkhs_norm",
    "rkhs_predict",
    "rnn_forward",
    "segment_signature",
    "sig_kernel",
    "taylor_expansion",
    "time_augment",
    "train",
]
