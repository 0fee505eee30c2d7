"""Learned per-metric consistency thresholds.

A transition is scored on four metrics (cosine, histogram correlation, mask
IoU, and inverted perceptual distance, in that canonical order). Each metric k
gets a learnable threshold tau_k; the soft pass probability is
sigma(lambda * (s_k - tau_k)) and the thresholds are fit by minimizing
binary cross-entropy on labeled consistent/inconsistent transition pairs.
The sharpness lambda is a fixed hyperparameter, not a learned quantity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import json

import numpy as np

from .features import TransitionFeatures

__all__ = [
    "METRIC_NAMES",
    "ThresholdVector",
    "TrainingSet",
    "FitConfig",
    "FitDiagnostics",
    "FitDivergedError",
    "sigmoid",
    "per_metric_probability",
    "bce_loss",
    "bce_gradient",
    "fit_thresholds",
    "classify",
]

METRIC_NAMES = ("clip", "hist", "iou", "lpips")

_PROB_CLAMP = 1e-12


class FitDivergedError(RuntimeError):
    """Optimization produced a non-finite loss."""


@dataclass(frozen=True)
class ThresholdVector:
    """The four metric thresholds plus the shared sigmoid sharpness.

    ``tau_lpips_inverted`` lives on the inverted-distance axis used internally
    (larger is better); the serialized form exposes ``tau_lpips`` in distance
    orientation, i.e. ``-tau_lpips_inverted``.
    """

    tau_cos: float
    tau_hist: float
    tau_iou: float
    tau_lpips_inverted: float
    lam: float = 10.0

    def __post_init__(self):
        for name in ("tau_cos", "tau_hist", "tau_iou", "tau_lpips_inverted", "lam"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if self.lam <= 0.0:
            raise ValueError(f"lambda must be > 0, got {self.lam!r}")

    @property
    def tau_lpips(self) -> float:
        """Perceptual-distance threshold in distance orientation (d <= tau passes)."""
        return -self.tau_lpips_inverted

    def as_vector(self) -> np.ndarray:
        return np.array(
            [self.tau_cos, self.tau_hist, self.tau_iou, self.tau_lpips_inverted], dtype=float
        )

    def to_json_dict(self) -> dict:
        return {
            "tau_cos": self.tau_cos,
            "tau_hist": self.tau_hist,
            "tau_iou": self.tau_iou,
            "tau_lpips": -self.tau_lpips_inverted,
            "lambda": self.lam,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "ThresholdVector":
        expected = {"tau_cos", "tau_hist", "tau_iou", "tau_lpips", "lambda"}
        if not isinstance(obj, dict) or set(obj) != expected:
            raise ValueError(f"threshold JSON must have exactly the keys {sorted(expected)}")
        return cls(
            tau_cos=float(obj["tau_cos"]),
            tau_hist=float(obj["tau_hist"]),
            tau_iou=float(obj["tau_iou"]),
            tau_lpips_inverted=-float(obj["tau_lpips"]),
            lam=float(obj["lambda"]),
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "ThresholdVector":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))


@dataclass(frozen=True)
class TrainingSet:
    """Labeled transitions: positives are consistent, negatives are not."""

    positives: tuple[TransitionFeatures, ...]
    negatives: tuple[TransitionFeatures, ...]

    def __post_init__(self):
        object.__setattr__(self, "positives", tuple(self.positives))
        object.__setattr__(self, "negatives", tuple(self.negatives))
        if not self.positives:
            raise ValueError("training set needs at least one positive transition")
        if not self.negatives:
            raise ValueError("training set needs at least one negative transition")

    def design_matrix(self) -> tuple[np.ndarray, np.ndarray]:
        """Stack features into (N, 4) values and an (N,) 0/1 label vector."""
        rows = [t.as_vector() for t in self.positives] + [t.as_vector() for t in self.negatives]
        labels = np.concatenate(
            [np.ones(len(self.positives)), np.zeros(len(self.negatives))]
        )
        return np.vstack(rows), labels


@dataclass(frozen=True)
class FitConfig:
    """Adam hyperparameters for threshold fitting; lambda rides along fixed."""

    learning_rate: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon_adam: float = 1e-8
    max_epochs: int = 500
    loss_tolerance: float = 1e-7
    lam: float = 10.0

    def __post_init__(self):
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be > 0")
        if not 0.0 < self.beta1 < 1.0 or not 0.0 < self.beta2 < 1.0:
            raise ValueError("beta1 and beta2 must lie strictly inside (0, 1)")
        if self.epsilon_adam <= 0.0:
            raise ValueError("epsilon_adam must be > 0")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.loss_tolerance < 0.0:
            raise ValueError("loss_tolerance must be >= 0")
        if self.lam <= 0.0:
            raise ValueError("lambda must be > 0")


@dataclass(frozen=True)
class FitDiagnostics:
    initial_loss: float
    final_loss: float
    epochs: int
    loss_history: tuple[float, ...]


def sigmoid(z):
    """Numerically stable logistic function."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    if out.ndim == 0:
        return float(out)
    return out


def per_metric_probability(features: TransitionFeatures, tau: ThresholdVector, metric_index: int) -> float:
    """Soft pass probability sigma(lambda * (s_k - tau_k)) for one metric."""
    if metric_index not in (0, 1, 2, 3):
        raise ValueError(f"metric_index must be in 0..3, got {metric_index}")
    margin = features.as_vector()[metric_index] - tau.as_vector()[metric_index]
    return float(sigmoid(tau.lam * margin))


def _probabilities(values: np.ndarray, tau_vec: np.ndarray, lam: float) -> np.ndarray:
    return sigmoid(lam * (values - tau_vec[np.newaxis, :]))


def bce_loss(train: TrainingSet, tau: ThresholdVector) -> tuple[np.ndarray, float]:
    """Per-metric binary cross-entropy and its total.

    Probabilities are clamped to [1e-12, 1 - 1e-12] before the logs so that
    saturated examples cannot produce infinities.
    """
    values, labels = train.design_matrix()
    probs = _probabilities(values, tau.as_vector(), tau.lam)
    probs = np.clip(probs, _PROB_CLAMP, 1.0 - _PROB_CLAMP)
    y = labels[:, np.newaxis]
    per_example = -(y * np.log(probs) + (1.0 - y) * np.log(1.0 - probs))
    per_metric = per_example.mean(axis=0)
    return per_metric, float(per_metric.sum())


def bce_gradient(train: TrainingSet, tau: ThresholdVector) -> np.ndarray:
    """Analytic gradient of the total BCE with respect to each threshold.

    With P_k(i) = sigma(lambda * (s_k(i) - tau_k)) the chain rule gives
    dP_k/dtau_k = -lambda * P_k * (1 - P_k), and the cross-entropy collapses to

        dL/dtau_k = (lambda / N) * sum_i (y_i - P_k(i)).

    Raising tau_k lowers every P_k, which hurts positives (y=1) and helps
    negatives (y=0); the sign is verified against central finite differences
    in the test suite.
    """
    values, labels = train.design_matrix()
    probs = _probabilities(values, tau.as_vector(), tau.lam)
    y = labels[:, np.newaxis]
    return (tau.lam / values.shape[0]) * (y - probs).sum(axis=0)


def fit_thresholds(train: TrainingSet, config: FitConfig = FitConfig()) -> tuple[ThresholdVector, FitDiagnostics]:
    """Fit the four thresholds with full-batch Adam.

    Deterministic: thresholds start at the midpoint between the per-metric
    positive and negative means and no randomness enters the optimization.
    Stops early once the epoch-to-epoch loss change falls below the configured
    tolerance.
    """
    values, labels = train.design_matrix()
    pos_mean = values[labels == 1].mean(axis=0)
    neg_mean = values[labels == 0].mean(axis=0)
    tau_vec = (pos_mean + neg_mean) / 2.0

    def make(vec: np.ndarray) -> ThresholdVector:
        return ThresholdVector(
            tau_cos=float(vec[0]),
            tau_hist=float(vec[1]),
            tau_iou=float(vec[2]),
            tau_lpips_inverted=float(vec[3]),
            lam=config.lam,
        )

    m = np.zeros(4)
    v = np.zeros(4)
    _, loss = bce_loss(train, make(tau_vec))
    if not np.isfinite(loss):
        raise FitDivergedError("non-finite loss at initialization")
    history = [loss]
    epochs_run = 0
    for epoch in range(1, config.max_epochs + 1):
        grad = bce_gradient(train, make(tau_vec))
        m = config.beta1 * m + (1.0 - config.beta1) * grad
        v = config.beta2 * v + (1.0 - config.beta2) * grad * grad
        m_hat = m / (1.0 - config.beta1**epoch)
        v_hat = v / (1.0 - config.beta2**epoch)
        tau_vec = tau_vec - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.epsilon_adam)
        _, loss = bce_loss(train, make(tau_vec))
        if not np.isfinite(loss):
            raise FitDivergedError(f"non-finite loss at epoch {epoch}")
        history.append(loss)
        epochs_run = epoch
        if abs(history[-2] - history[-1]) < config.loss_tolerance:
            break
    diagnostics = FitDiagnostics(
        initial_loss=history[0],
        final_loss=history[-1],
        epochs=epochs_run,
        loss_history=tuple(history),
    )
    return make(tau_vec), diagnostics


def classify(features: TransitionFeatures, tau: ThresholdVector) -> tuple[bool, bool, bool, bool]:
    """Hard threshold decision per metric; boundary equality counts as a pass.

    Order matches METRIC_NAMES: cosine, histogram, IoU, perceptual. The
    perceptual check compares the raw distance against ``tau.tau_lpips``
    (small distances pass), which is the same decision as comparing inverted
    values against ``tau_lpips_inverted``.
    """
    return (
        features.s_cos >= tau.tau_cos,
        features.s_hist >= tau.tau_hist,
        features.s_iou >= tau.tau_iou,
        features.d_lpips <= tau.tau_lpips,
    )
