"""scikit-learn compatible front ends.

>>> from panfis_fuse import ScalablePANFISClassifier
>>> clf = ScalablePANFISClassifier(n_partitions=8).fit(X, y)   # doctest: +SKIP
>>> clf.predict(X_test)                                         # doctest: +SKIP
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import check_classification_targets
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .fusion import MergeConfig
from .inference import decision_scores
from .learner import LearnerConfig, PANFISLearner
from .orchestrator import train_scalable, train_single


class PANFISClassifier(ClassifierMixin, BaseEstimator):
    """Evolving fuzzy-rule classifier trained in one pass over the data.

    Parameters mirror :class:`~panfis_fuse.learner.LearnerConfig`.

    Attributes
    ----------
    rule_base_ : RuleBase
    classes_ : ndarray
    run_report_ : RunReport
        Present after :meth:`fit`, not after :meth:`partial_fit`.
    """

    def __init__(self, eps_coverage=0.135, kerr=0.01, sker=0.8, init_spread=None,
                 spread_floor=1e-3, rls_init=1e5, prune_every=50, merge_every=50):
        self.eps_coverage = eps_coverage
        self.kerr = kerr
        self.sker = sker
        self.init_spread = init_spread
        self.spread_floor = spread_floor
        self.rls_init = rls_init
        self.prune_every = prune_every
        self.merge_every = merge_every

    def _learner_config(self, thr=None):
        return LearnerConfig(
            eps_coverage=self.eps_coverage,
            kerr=self.kerr,
            sker=self.sker,
            thr=self.sker if thr is None else thr,
            init_spread=self.init_spread,
            spread_floor=self.spread_floor,
            rls_init=self.rls_init,
            prune_every=self.prune_every,
            merge_every=self.merge_every,
        )

    def _encode(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        check_classification_targets(y)
        self.classes_, y_enc = np.unique(y, return_inverse=True)
        self.n_features_in_ = X.shape[1]
        return X, y_enc

    def _train(self, X, y_enc):
        return train_single((X, y_enc), self._learner_config(), n_classes=len(self.classes_))

    def fit(self, X, y):
        X, y_enc = self._encode(X, y)
        self.rule_base_, self.run_report_ = self._train(X, y_enc)
        self._learner = None
        return self

    def partial_fit(self, X, y, classes=None):
        """Feed one more batch of the stream.

        ``classes`` must list every label on the first call.
        """
        X, y = check_X_y(X, y, dtype=np.float64)
        if getattr(self, "_learner", None) is None:
            if classes is None:
                raise ValueError("classes must be given on the first call to partial_fit")
            self.classes_ = np.unique(classes)
            self.n_features_in_ = X.shape[1]
            self._learner = PANFISLearner(
                self._learner_config().resolve(X), len(self.classes_), p=X.shape[1]
            )
        elif X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        idx = np.searchsorted(self.classes_, y)
        if np.any(idx >= len(self.classes_)) or np.any(self.classes_[np.minimum(idx, len(self.classes_) - 1)] != y):
            raise ValueError("y holds labels not declared in classes")
        for x, label in zip(X, idx.tolist()):
            self._learner.learn_one(x, label)
        self.rule_base_ = self._learner.rule_base()
        return self

    def decision_function(self, X):
        check_is_fitted(self, "rule_base_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return decision_scores(self.rule_base_, X)

    def predict(self, X):
        scores = self.decision_function(X)
        return self.classes_[np.argmax(scores, axis=1)]

    @property
    def n_rules_(self):
        check_is_fitted(self, "rule_base_")
        return len(self.rule_base_)


class ScalablePANFISClassifier(PANFISClassifier):
    """Chunk-parallel variant: one learner per partition, then rule fusion.

    Attributes
    ----------
    fusion_report_ : FusionReport
    """

    def __init__(self, n_partitions=50, thr=0.8, max_passes=1000, criterion="and",
                 n_jobs=None, backend="process", eps_coverage=0.135, kerr=0.01,
                 sker=0.8, init_spread=None, spread_floor=1e-3, rls_init=1e5,
                 prune_every=50, merge_every=50):
        super().__init__(eps_coverage, kerr, sker, init_spread, spread_floor,
                         rls_init, prune_every, merge_every)
        self.n_partitions = n_partitions
        self.thr = thr
        self.max_passes = max_passes
        self.criterion = criterion
        self.n_jobs = n_jobs
        self.backend = backend

    def _train(self, X, y_enc):
        cfg = self._learner_config(thr=self.thr)
        mcfg = MergeConfig(self.thr, self.max_passes, self.criterion, self.rls_init)
        P = min(self.n_partitions, X.shape[0])
        base, report = train_scalable(
            (X, y_enc), P, cfg, mcfg,
            n_jobs=self.n_jobs, backend=self.backend, n_classes=len(self.classes_),
        )
        self.fusion_report_ = report.fusion
        return base, report
