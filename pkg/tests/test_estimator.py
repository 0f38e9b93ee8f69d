import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.model_selection import cross_val_score
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import StandardScaler

from panfis_fuse import PANFISClassifier, ScalablePANFISClassifier
from panfis_fuse.data import SynthConfig, synth_rss
from panfis_fuse.model_io import dumps_model
from panfis_fuse.orchestrator import train_single


@pytest.fixture(scope="module")
def data():
    d = synth_rss(SynthConfig(n=8000, seed=21))
    return d.X, d.y


def test_params_round_trip():
    clf = ScalablePANFISClassifier(n_partitions=7, thr=0.7, sker=0.9)
    params = clf.get_params()
    assert params["n_partitions"] == 7 and params["thr"] == 0.7 and params["sker"] == 0.9
    c2 = clone(clf)
    assert c2.get_params() == params
    c2.set_params(thr=0.6)
    assert c2.thr == 0.6 and clf.thr == 0.7


def test_fit_matches_library_call(data):
    X, y = data
    clf = PANFISClassifier().fit(X, y)
    ref, _ = train_single((X, y))
    assert dumps_model(clf.rule_base_) == dumps_model(ref)
    assert clf.n_rules_ == len(ref)
    assert clf.score(X, y) > 0.9


def test_string_labels(data):
    X, y = data
    names = np.array(["hall", "lab", "office", "stairs"])
    clf = PANFISClassifier().fit(X, names[y])
    pred = clf.predict(X[:200])
    assert set(pred) <= set(names)
    np.testing.assert_array_equal(pred, names[PANFISClassifier().fit(X, y).predict(X[:200])])


def test_scalable(data):
    X, y = data
    clf = ScalablePANFISClassifier(n_partitions=8, n_jobs=1).fit(X, y)
    assert clf.fusion_report_.rules_after == clf.n_rules_
    assert clf.fusion_report_.rules_before >= clf.n_rules_
    assert clf.decision_function(X[:10]).shape == (10, 4)
    assert clf.score(X, y) > 0.9


def test_partial_fit_matches_fit(data):
    X, y = data
    inc = PANFISClassifier()
    for s in range(0, len(X), 1000):
        inc.partial_fit(X[s:s + 1000], y[s:s + 1000], classes=np.arange(4))
    # partial_fit resolves the first-rule spread from the first batch and
    # never runs the end-of-stream cleanup, so only quality is compared
    assert inc.score(X, y) > 0.9


def test_partial_fit_requires_classes(data):
    X, y = data
    with pytest.raises(ValueError, match="classes"):
        PANFISClassifier().partial_fit(X[:10], y[:10])
    keep = y < 3
    clf = PANFISClassifier().partial_fit(X[keep][:10], y[keep][:10], classes=[0, 1, 2])
    with pytest.raises(ValueError):
        clf.partial_fit(X[:10], np.full(10, 3))
    with pytest.raises(ValueError):
        clf.partial_fit(np.zeros((3, 2)), [0, 1, 2])


def test_pipeline_and_cv(data):
    X, y = data
    pipe = make_pipeline(StandardScaler(), PANFISClassifier())
    scores = cross_val_score(pipe, X[:3000], y[:3000], cv=3)
    assert np.all(scores > 0.85)


def test_not_fitted():
    with pytest.raises(NotFittedError):
        PANFISClassifier().predict([[0.0]])


def test_feature_count_checked(data):
    X, y = data
    clf = PANFISClassifier().fit(X[:500], y[:500])
    with pytest.raises(ValueError):
        clf.predict(np.zeros((2, 3)))
