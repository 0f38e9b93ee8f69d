"""Classification with a rule base and held-out evaluation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import UsageError
from .rule_model import RuleBase

BLOCK = 8192


@dataclass(frozen=True)
class Prediction:
    label: int
    scores: np.ndarray


@dataclass(frozen=True)
class EvalMetrics:
    accuracy: float
    confusion: np.ndarray
    n: int


def _stack(base: RuleBase):
    if len(base) == 0:
        raise UsageError("cannot predict with an empty rule base")
    centers = np.stack([r.center for r in base.rules])
    inv = np.stack([r.inv_dispersion for r in base.rules])
    cons = np.stack([r.consequent for r in base.rules])
    return centers, inv, cons


def _scores_block(X, centers, inv, cons):
    d = X[:, None, :] - centers[None]
    m = np.einsum("nri,rij,nrj->nr", d, inv, d)
    phi = np.exp(-0.5 * m)
    out = cons[None, :, 0, :] + np.einsum("ni,ric->nrc", X, cons[:, 1:, :])
    total = phi.sum(axis=1)
    scores = np.einsum("nr,nrc->nc", phi, out)
    dead = total == 0.0
    with np.errstate(invalid="ignore", divide="ignore"):
        scores = scores / total[:, None]
    if dead.any():
        # every firing underflowed: answer with the nearest rule alone
        nearest = np.argmin(m[dead], axis=1)
        scores[dead] = out[dead][np.arange(nearest.size), nearest]
    return scores


def decision_scores(base: RuleBase, X) -> np.ndarray:
    """Normalized firing-weighted TSK outputs, shape ``(n, n_classes)``."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, base.p)
    if X.ndim != 2 or X.shape[1] != base.p:
        raise UsageError(f"expected inputs with {base.p} features, got shape {X.shape}")
    centers, inv, cons = _stack(base)
    parts = [_scores_block(X[i:i + BLOCK], centers, inv, cons) for i in range(0, X.shape[0], BLOCK)]
    if not parts:
        return np.empty((0, base.n_classes))
    return np.concatenate(parts)


def predict_labels(base: RuleBase, X) -> np.ndarray:
    # np.argmax returns the first maximum, i.e. the lowest class on ties
    return np.argmax(decision_scores(base, X), axis=1)


def predict(base: RuleBase, x) -> Prediction:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (base.p,):
        raise UsageError(f"expected a vector of length {base.p}, got shape {x.shape}")
    scores = decision_scores(base, x[None])[0]
    return Prediction(int(np.argmax(scores)), scores)


def evaluate(base: RuleBase, X, y) -> EvalMetrics:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise UsageError("evaluation needs a non-empty 2-D input array")
    if y.shape != (X.shape[0],):
        raise UsageError("X and y lengths differ")
    c = base.n_classes
    if y.min() < 0 or y.max() >= c:
        raise UsageError(f"labels must lie in 0..{c - 1}")
    pred = predict_labels(base, X)
    confusion = np.bincount(y * c + pred, minlength=c * c).reshape(c, c)
    return EvalMetrics(float(np.trace(confusion)) / y.size, confusion, int(y.size))
