"""Linear max-margin classification for predicate synthesis.

Trains a soft-margin linear separator by minimizing the squared-hinge primal

    sum_i max(0, 1 - y_i (w.x_i - c))^2 + (1/penalty) * |w|^2 / 2

with L-BFGS on standardized features.  A large penalty makes the solution
hard-margin-like on separable data.  Training is deterministic for a fixed
data order.  Positive class: w.x - c >= 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import ConfigError


@dataclass(frozen=True)
class LinearClassifier:
    """Separator `sum_i coefficients[i]*x_i >= threshold` over named features."""

    feature_names: tuple[str, ...]
    coefficients: np.ndarray
    threshold: float
    accuracy: float
    margin: float

    def decision_values(self, rows: np.ndarray) -> np.ndarray:
        return rows @ self.coefficients - self.threshold

    def predict(self, rows: np.ndarray) -> np.ndarray:
        """+1 on and above the hyperplane, -1 below."""
        return np.where(self.decision_values(rows) >= 0.0, 1, -1)


def _standardize(rows: np.ndarray):
    mean = rows.mean(axis=0)
    std = rows.std(axis=0)
    std = np.where(std < 1e-12, 1.0, std)
    return (rows - mean) / std, mean, std


def _score(coefficients: np.ndarray, threshold: float, pos: np.ndarray, neg: np.ndarray):
    correct = int(np.sum(pos @ coefficients - threshold >= 0.0))
    correct += int(np.sum(neg @ coefficients - threshold < 0.0))
    return correct / (len(pos) + len(neg))


def train_linear_classifier(
    positives: np.ndarray,
    negatives: np.ndarray,
    feature_names,
    penalty: float = 1e4,
    accuracy_threshold: float = 0.99,
) -> LinearClassifier | None:
    """Fit a separator with positives on the `>=` side.

    Returns None when no acceptable separator exists: training accuracy below
    the threshold, or degenerate data with no usable direction.
    """
    positives = np.atleast_2d(np.asarray(positives, dtype=np.float64))
    negatives = np.atleast_2d(np.asarray(negatives, dtype=np.float64))
    if len(positives) == 0 or len(negatives) == 0:
        raise ConfigError("both classes must be non-empty")
    feature_names = tuple(feature_names)
    x = np.vstack([positives, negatives])
    y = np.concatenate([np.ones(len(positives)), -np.ones(len(negatives))])
    xs, mean, std = _standardize(x)
    lam = 1.0 / penalty
    n_feat = x.shape[1]
    n = len(y)

    def objective(theta):
        # Mean loss keeps gradients O(1) regardless of dataset size.
        w, b = theta[:n_feat], theta[n_feat]
        margins = y * (xs @ w - b)
        viol = np.maximum(0.0, 1.0 - margins)
        grad_scale = (-2.0 / n) * viol * y
        grad_w = xs.T @ grad_scale + lam * w
        grad_b = -np.sum(grad_scale)
        value = float(np.mean(viol**2) + 0.5 * lam * np.dot(w, w))
        return value, np.concatenate([grad_w, [grad_b]])

    result = minimize(
        objective,
        np.zeros(n_feat + 1),
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": 2000, "ftol": 1e-14, "gtol": 1e-12},
    )
    w_std, b_std = result.x[:n_feat], result.x[n_feat]
    if np.max(np.abs(w_std)) < 1e-9:
        return None
    coefficients = w_std / std
    threshold = float(b_std + np.dot(w_std, mean / std))
    decisions = x @ coefficients - threshold
    if np.all(decisions >= 0.0) or np.all(decisions < 0.0):
        return None  # puts all training data on one side: separates nothing
    accuracy = _score(coefficients, threshold, positives, negatives)
    if accuracy < accuracy_threshold:
        return None
    norm = float(np.linalg.norm(coefficients))
    margin = float(np.min(y * (x @ coefficients - threshold)) / norm) if norm > 0 else 0.0
    return LinearClassifier(
        feature_names=feature_names,
        coefficients=coefficients,
        threshold=threshold,
        accuracy=accuracy,
        margin=margin,
    )


def minimize_features(
    clf: LinearClassifier,
    positives: np.ndarray,
    negatives: np.ndarray,
    penalty: float = 1e4,
    accuracy_threshold: float = 0.99,
) -> LinearClassifier:
    """Retrain on growing coefficient-ranked feature subsets; keep the smallest
    subset still meeting the accuracy threshold.

    Falls back to `clf` itself, so the result never uses more variables.
    """
    positives = np.atleast_2d(np.asarray(positives, dtype=np.float64))
    negatives = np.atleast_2d(np.asarray(negatives, dtype=np.float64))
    nonzero = [i for i, c in enumerate(clf.coefficients) if c != 0.0]
    order = sorted(nonzero, key=lambda i: (-abs(clf.coefficients[i]), i))
    for size in range(1, len(order) + 1):
        if size == len(clf.feature_names):
            break  # no smaller than the classifier itself
        subset = sorted(order[:size])
        candidate = train_linear_classifier(
            positives[:, subset],
            negatives[:, subset],
            tuple(clf.feature_names[i] for i in subset),
            penalty=penalty,
            accuracy_threshold=accuracy_threshold,
        )
        if candidate is not None:
            return candidate
    return clf
