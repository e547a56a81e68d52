"""Estimator-style wrappers so the numerics compose with the ML ecosystem.

SignatureFeatures turns batches of sequences into flattened truncated
signature features of their normalized, time-augmented paths; a linear
kernel on these features equals the signature kernel.  RnnClassifier wraps
the penalized trainer behind fit/predict.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.exceptions import NotFittedError

from .paths import PathConfig, from_samples, normalize, time_augment
from .rkhs import rkhs_norm
from .rnn import RnnParams
from .signatures import path_signature
from .training import (
    SpiralDataset,
    TrainConfig,
    final_outputs,
    model_inputs,
    train,
)
from .validation import check_binary_labels, check_sequence_array


class SignatureFeatures(BaseEstimator, TransformerMixin):
    """Truncated signature features of normalized sequence paths.

    Parameters
    ----------
    depth : truncation level of the signature.
    tv_budget : total-variation budget used for normalization and the
        clock channel.
    time_augmented : whether to append the clock channel before taking
        signatures (the kernel construction does).
    """

    def __init__(self, depth: int = 4, tv_budget: float = 0.5, time_augmented: bool = True):
        self.depth = depth
        self.tv_budget = tv_budget
        self.time_augmented = time_augmented

    def fit(self, X, y=None):
        X = check_sequence_array(X)
        self.n_channels_ = X.shape[2]
        d = self.n_channels_ + (1 if self.time_augmented else 0)
        self.n_features_out_ = sum(d**k for k in range(self.depth + 1))
        return self

    def transform(self, X) -> np.ndarray:
        if not hasattr(self, "n_channels_"):
            raise NotFittedError("SignatureFeatures is not fitted")
        X = check_sequence_array(X)
        if X.shape[2] != self.n_channels_:
            raise ValueError(
                f"expected {self.n_channels_} channels, got {X.shape[2]}"
            )
        config = PathConfig(self.tv_budget)
        rows = []
        for seq in X:
            path = normalize(from_samples(seq), config)
            if self.time_augmented:
                path = time_augment(path, config)
            sig = path_signature(path, self.depth)
            rows.append(
                np.concatenate([sig.level(k).reshape(-1) for k in range(self.depth + 1)])
            )
        return np.vstack(rows)


class RnnClassifier(BaseEstimator, ClassifierMixin):
    """Residual recurrent classifier with optional series-norm penalty.

    fit expects X of shape (n_sequences, n_steps, n_channels) and a
    two-class label vector.  decision_function returns the final network
    output z_T; predicted classes follow its sign, ties to the first class.
    """

    def __init__(
        self,
        hidden_dim: int = 8,
        activation: str = "tanh",
        penalty: float = 0.0,
        penalty_depth: int = 3,
        epochs: int = 200,
        learning_rate: float = 0.1,
        lr_halving_epochs: int = 40,
        tv_budget: float = 0.5,
        input_gain: float = 4.0,
        learn_h0: bool = True,
        seed: int = 0,
    ):
        self.hidden_dim = hidden_dim
        self.activation = activation
        self.penalty = penalty
        self.penalty_depth = penalty_depth
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.lr_halving_epochs = lr_halving_epochs
        self.tv_budget = tv_budget
        self.input_gain = input_gain
        self.learn_h0 = learn_h0
        self.seed = seed

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            lr_halving_epochs=self.lr_halving_epochs,
            lam=self.penalty,
            penalty_depth=self.penalty_depth,
            learn_h0=self.learn_h0,
            seed=self.seed,
            tv_budget=self.tv_budget,
            input_gain=self.input_gain,
        )

    def fit(self, X, y):
        X = check_sequence_array(X)
        y, classes = check_binary_labels(y, X.shape[0])
        self.classes_ = classes
        signed = np.where(y == classes[1], 1.0, -1.0)
        dataset = SpiralDataset(X, signed, self.seed)
        result = train(
            self._train_config(), dataset,
            hidden_dim=self.hidden_dim, activation=self.activation,
        )
        self.params_: RnnParams = result.params
        self.trace_ = result.trace
        self.n_iter_ = len(result.trace)
        return self

    def _check_fitted(self):
        if not hasattr(self, "params_"):
            raise NotFittedError("RnnClassifier is not fitted")

    def decision_function(self, X) -> np.ndarray:
        self._check_fitted()
        X = check_sequence_array(X)
        return final_outputs(self.params_, model_inputs(X, self.input_gain))

    def predict(self, X) -> np.ndarray:
        scores = self.decision_function(X)
        return np.where(scores > 0.0, self.classes_[1], self.classes_[0])

    def rkhs_norm_(self, depth: int | None = None) -> float:
        """Truncated series norm of the fitted network."""
        self._check_fitted()
        depth = self.penalty_depth if depth is None else depth
        return rkhs_norm(self.params_, depth, PathConfig(self.tv_budget))
