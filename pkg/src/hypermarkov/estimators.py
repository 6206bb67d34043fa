"""scikit-learn style wrappers.

Only two pieces of the toolkit look like estimators: convolution by a
measure (a fixed linear transformer of sampled functions) and the cyclic
class decomposition of a Markov matrix (fitted structure, then averaging).
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .circle import GridFunction, apply_multiplier
from .finite import FiniteBiStochasticOperator, period_and_classes, projection_matrix
from .measures import SpectralMeasure, measure_from_spec


class ConvolutionTransformer(BaseEstimator, TransformerMixin):
    """Convolve sampled functions on the circle with a measure.

    Each row of ``X`` holds the values of a function at ``j/M``,
    ``j = 0..M-1``. The output rows are the samples of ``nu * f``, computed
    with the Fourier multiplier ``nu_hat`` up to degree ``M//2 - 1``.

    Parameters
    ----------
    measure : SpectralMeasure or dict
        The convolving measure or its JSON spec.
    """

    def __init__(self, measure=None):
        self.measure = measure

    def fit(self, X, y=None):
        X = np.asarray(X)
        if X.ndim != 2 or X.shape[1] < 2:
            raise ValueError("X must be 2-d with at least two samples per row")
        m = self.measure
        if m is None:
            raise ValueError("a measure is required")
        self.measure_ = m if isinstance(m, SpectralMeasure) else measure_from_spec(m)
        self.n_features_in_ = X.shape[1]
        self.degree_ = X.shape[1] // 2 - 1
        return self

    def transform(self, X):
        check_is_fitted(self, "measure_")
        X = np.asarray(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} samples per row")
        out = []
        for row in X:
            g = GridFunction.from_samples(row, self.degree_)
            h = apply_multiplier(self.measure_, g).samples_on(len(row))
            out.append(h.real if np.isrealobj(X) else h)
        return np.array(out)


class CyclicClassEstimator(BaseEstimator, TransformerMixin):
    """Period and cyclic classes of a bi-stochastic matrix.

    ``fit`` takes the transition matrix ``S`` as ``X`` and the invariant
    vector through ``mu`` (uniform by default). ``transform`` averages
    function rows over the fitted classes; ``predict`` maps state indices
    to class labels.
    """

    def __init__(self, tol: float = 1e-12):
        self.tol = tol

    def fit(self, X, y=None, mu=None):
        S = np.asarray(X, dtype=float)
        mu = np.full(S.shape[0], 1.0 / S.shape[0]) if mu is None else np.asarray(mu, dtype=float)
        self.operator_ = FiniteBiStochasticOperator(S, mu, self.tol)
        dec = period_and_classes(self.operator_)
        self.period_ = dec.d
        self.labels_ = dec.labels
        self.masses_ = dec.masses
        self.projection_ = projection_matrix(self.operator_, dec)
        self.n_features_in_ = S.shape[0]
        return self

    def transform(self, X):
        check_is_fitted(self, "projection_")
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return X @ self.projection_.T

    def predict(self, X):
        check_is_fitted(self, "labels_")
        return self.labels_[np.asarray(X, dtype=int)]
