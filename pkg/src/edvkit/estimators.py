"""scikit-learn style wrappers around the measurement and analysis routines.

These let the EDV measurements, complexity scores, split generation and
regression analysis drop into sklearn pipelines and model-selection code.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import morphology, statistics
from .conllu_io import Sentence
from .displacement import DEFAULT_SUPPORT, displacement_distribution
from .divergence import vaserstein
from .splitter import generate_split


def check_sentences(X, name: str = "X") -> list:
    """Validate a sequence of :class:`Sentence` objects."""
    if isinstance(X, Sentence):
        raise TypeError(f"{name} must be a sequence of sentences, not a single sentence")
    sentences = list(X)
    if not sentences:
        raise ValueError(f"{name} is empty")
    bad = next((i for i, s in enumerate(sentences) if not isinstance(s, Sentence)), None)
    if bad is not None:
        raise TypeError(f"{name}[{bad}] is {type(sentences[bad]).__name__}, expected Sentence")
    return sentences


def check_corpora(X, name: str = "X") -> list:
    """Validate a sequence of sentence collections (one per treebank)."""
    if isinstance(X, Sentence):
        raise TypeError(f"{name} must be a sequence of sentence lists")
    X = list(X)
    if X and isinstance(X[0], Sentence):
        raise TypeError(f"{name} must be a sequence of sentence lists")
    return [check_sentences(c, f"{name}[{i}]") for i, c in enumerate(X)]


class EDVTransformer(TransformerMixin, BaseEstimator):
    """Fit on training sentences; transform sentence groups into their EDV.

    >>> EDVTransformer().fit(train).transform([test])  # doctest: +SKIP
    array([[0.0003]])
    """

    def __init__(self, support=DEFAULT_SUPPORT):
        self.support = support

    def fit(self, X, y=None):
        self.distribution_ = displacement_distribution(check_sentences(X), tuple(self.support))
        return self

    def transform(self, X):
        check_is_fitted(self, "distribution_")
        groups = check_corpora(X)
        return np.array([[vaserstein(self.distribution_, displacement_distribution(g, tuple(self.support)))]
                         for g in groups])


class EDVSplitter(BaseEstimator):
    """Adversarial (``max_edv``) or complementary (``min_edv``) 60/20/20 splitter.

    ``split`` yields one ``(train, test)`` index pair so the splitter can be
    passed as ``cv`` to sklearn model-selection helpers; the dev indices
    are available as ``dev_indices_`` after fitting.
    """

    def __init__(self, mode="max_edv", seed=0, support=DEFAULT_SUPPORT):
        self.mode = mode
        self.seed = seed
        self.support = support

    def fit(self, X, y=None):
        self.result_ = generate_split(check_sentences(X), self.mode, self.seed, tuple(self.support))
        self.train_indices_ = np.array(self.result_.train_idx)
        self.dev_indices_ = np.array(self.result_.dev_idx)
        self.test_indices_ = np.array(self.result_.test_idx)
        self.achieved_edv_ = self.result_.achieved_edv
        return self

    def split(self, X, y=None, groups=None):
        self.fit(X)
        yield self.train_indices_, self.test_indices_

    def get_n_splits(self, X=None, y=None, groups=None):
        return 1


class MorphologicalComplexity(TransformerMixin, BaseEstimator):
    """Map each treebank (a list of training sentences) to its six complexity columns."""

    columns = ("h_word_norm", "ttr", "f_l_norm", "f_il_norm", "hpe_norm", "mc")

    def __init__(self, lowercase=False):
        self.lowercase = lowercase

    def fit(self, X, y=None):
        check_corpora(X)
        self.n_features_out_ = len(self.columns)
        return self

    def transform(self, X):
        rows = []
        for corpus in check_corpora(X):
            scores = morphology.complexity_scores(corpus, lowercase=self.lowercase).as_dict()
            rows.append([scores[c] for c in self.columns])
        return np.array(rows)

    def get_feature_names_out(self, input_features=None):
        return np.array(self.columns, dtype=object)


class ComplexityClassifier(ClassifierMixin, BaseEstimator):
    """Label a treebank complex (1) when its MC is strictly above the fitted mean."""

    def fit(self, X, y=None):
        mc = check_array(X, ensure_2d=False).ravel()
        if mc.size < 2:
            raise ValueError("need at least two treebanks")
        self.threshold_ = float(np.mean(mc))
        self.classes_ = np.array([0, 1])
        return self

    def predict(self, X):
        check_is_fitted(self, "threshold_")
        return (check_array(X, ensure_2d=False).ravel() > self.threshold_).astype(int)


class BackgroundRegressor(RegressorMixin, BaseEstimator):
    """Sequential fit-and-divide background model.

    Column ``j`` of ``X`` is fitted with ``families[j]`` (``log_linear`` or
    ``linear``) against the target already divided by the earlier stages.
    ``predict`` returns the product of stage predictions, so
    ``y / predict(X)`` is the normalized target.
    """

    def __init__(self, families=("log_linear",)):
        self.families = families

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        if X.shape[1] != len(self.families):
            raise ValueError(f"{X.shape[1]} covariates but {len(self.families)} families")
        self.normalized_, self.stages_ = statistics.background_removal(
            y, list(zip(X.T, self.families)))
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "stages_")
        X = check_array(X)
        out = np.ones(X.shape[0])
        for col, stage in zip(X.T, self.stages_):
            design = np.log(col) if stage["family"] == "log_linear" else col
            out *= stage["slope"] * design + stage["intercept"]
        return out

    def normalize(self, X, y):
        return np.asarray(y, dtype=float) / self.predict(X)


class LMGRegressor(RegressorMixin, BaseEstimator):
    """OLS with intercept plus LMG relative importance of each column."""

    def fit(self, X, y):
        names = list(getattr(X, "columns", [])) or None
        X, y = check_X_y(X, y)
        names = [str(n) for n in names] if names else [f"x{i}" for i in range(X.shape[1])]
        res = statistics.ols_regression(y, dict(zip(names, X.T)))
        self.result_ = res
        self.feature_names_in_ = np.array(names, dtype=object)
        self.n_features_in_ = X.shape[1]
        self.coef_ = np.array([res.coefficients[n][0] for n in names])
        self.p_values_ = np.array([res.coefficients[n][1] for n in names])
        self.intercept_ = res.intercept
        self.relative_importance_ = np.array([res.relative_importance[n] for n in names])
        self.adj_r2_ = res.adj_r_squared
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        return check_array(X) @ self.coef_ + self.intercept_
