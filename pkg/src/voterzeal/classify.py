"""Linear one-vs-rest classifiers fitted by full-batch gradient descent.

The objective follows the usual ``C`` parametrization,

    1/2 ||w||^2 + C * sum_i s_i * loss(y_i (w . x_i + b)),

with an unpenalized intercept and ``C = 1``.  ``hinge`` is the squared
hinge ``max(0, 1 - m)^2`` (smooth, so a fixed step size converges);
``logistic`` is ``log(1 + exp(-m))``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

LOSSES = ("hinge", "logistic")
WEIGHTINGS = ("none", "balanced")


@dataclass
class LinearClassifier:
    coef: np.ndarray
    intercept: np.ndarray
    classes: np.ndarray
    loss: str
    weighting: str
    epochs: int = 0
    grad_norm: float = 0.0

    def decision_function(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.coef.T + self.intercept

    def predict(self, X) -> np.ndarray:
        return self.classes[np.argmax(self.decision_function(X), axis=1)]

    def score(self, X, y) -> float:
        return float(np.mean(self.predict(X) == np.asarray(y)))


def class_weights(y: np.ndarray, weighting: str) -> np.ndarray:
    """Per-sample weights; ``balanced`` gives ``n / (C * n_c)``."""
    if weighting not in WEIGHTINGS:
        raise DomainError(f"unknown weighting {weighting!r}")
    if weighting == "none":
        return np.ones(y.size)
    classes, inv, counts = np.unique(y, return_inverse=True, return_counts=True)
    return (y.size / (classes.size * counts))[inv]


def _loss_terms(loss, m):
    """Loss value and derivative with respect to the margin."""
    if loss == "logistic":
        value = np.logaddexp(0.0, -m)
        deriv = -np.exp(-np.logaddexp(0.0, m))
    else:
        slack = np.maximum(0.0, 1.0 - m)
        value = slack * slack
        deriv = -2.0 * slack
    return value, deriv


def fit_binary(X, y, sample_weight, loss="logistic", C=1.0, max_epochs=10_000, gtol=1e-6,
               n_total=None):
    """Fit one binary problem with ``y`` in ``{-1, +1}``.

    Nesterov-accelerated gradient steps of size ``1/L`` where ``L`` bounds
    the curvature of the (n-scaled) objective.  Starts at zero, so the fit
    is deterministic.  Returns ``(w, b, epochs, grad_norm)``.

    ``n_total`` overrides the sample count used to scale the objective,
    for callers that pass merged (weighted) duplicate observations.
    """
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    s = C * np.asarray(sample_weight, dtype=float)
    if n_total is not None:
        n = n_total
    s = s / n
    Xt = np.hstack([X, np.ones((X.shape[0], 1))])
    curv = 0.25 if loss == "logistic" else 2.0
    L = 1.0 / n + curv * float(np.linalg.eigvalsh((Xt * s[:, None]).T @ Xt)[-1])
    step = 1.0 / L
    reg = np.r_[np.full(d, 1.0 / n), 0.0]

    def grad(theta):
        m = y * (Xt @ theta)
        _, dl = _loss_terms(loss, m)
        return reg * theta + Xt.T @ (s * dl * y)

    theta = np.zeros(d + 1)
    prev = theta
    gnorm = np.inf
    epoch = 0
    for epoch in range(1, max_epochs + 1):
        look = theta + (epoch - 1) / (epoch + 2) * (theta - prev)
        g = grad(look)
        gnorm = float(np.linalg.norm(g))
        if gnorm < gtol:
            theta = look
            break
        prev, theta = theta, look - step * g
    return theta[:d], theta[d], epoch, gnorm


def train_classifier(features, labels, loss: str = "hinge", weighting: str = "none",
                     seed: int = 0, C: float = 1.0, max_epochs: int = 10_000,
                     gtol: float = 1e-6):
    """Fit a one-vs-rest linear classifier and report training accuracy.

    ``seed`` is accepted for interface symmetry with the other routines;
    the fit starts from zero and uses no randomness.
    """
    del seed
    if loss not in LOSSES:
        raise DomainError(f"unknown loss {loss!r}")
    X = np.asarray(features, dtype=float)
    y = np.asarray(labels)
    classes = np.unique(y)
    if classes.size < 2:
        raise DomainError("need at least two classes to train a classifier")
    sw = class_weights(y, weighting)
    if classes.size == 2:
        w, b, ep, gn = fit_binary(X, np.where(y == classes[1], 1.0, -1.0), sw, loss, C,
                                  max_epochs, gtol)
        coef = np.vstack([-w, w]) / 2.0
        intercept = np.array([-b, b]) / 2.0
        epochs, gnorm = ep, gn
    else:
        rows, bias, epochs, gnorm = [], [], 0, 0.0
        for c in classes:
            w, b, ep, gn = fit_binary(X, np.where(y == c, 1.0, -1.0), sw, loss, C,
                                      max_epochs, gtol)
            rows.append(w)
            bias.append(b)
            epochs, gnorm = max(epochs, ep), max(gnorm, gn)
        coef, intercept = np.vstack(rows), np.array(bias)
    clf = LinearClassifier(coef, intercept, classes, loss, weighting, epochs, gnorm)
    return clf, clf.score(X, y)
