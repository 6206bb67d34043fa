import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from hypermarkov import finite as F
from hypermarkov import measures as M
from hypermarkov.estimators import ConvolutionTransformer, CyclicClassEstimator


def smooth_rows(count=3, M_=64, seed=0):
    rng = np.random.default_rng(seed)
    x = np.arange(M_) / M_
    return np.array([sum(rng.standard_normal() * np.cos(2 * np.pi * k * x + rng.random())
                         for k in range(6)) for _ in range(count)])


def test_convolution_with_lebesgue_gives_row_means():
    X = smooth_rows()
    out = ConvolutionTransformer({"kind": "lebesgue"}).fit_transform(X)
    assert np.allclose(out, X.mean(axis=1, keepdims=True), atol=1e-12)


def test_convolution_with_dirac_translates_samples():
    X = smooth_rows(M_=64)
    out = ConvolutionTransformer(M.Dirac(0.25)).fit_transform(X)
    assert np.allclose(out, np.roll(X, 16, axis=1), atol=1e-12)


def test_convolution_transformer_clones_and_pipelines():
    X = smooth_rows()
    t = ConvolutionTransformer({"kind": "cantor"})
    pipe = make_pipeline(clone(t), ConvolutionTransformer({"kind": "cantor"}))
    twice = pipe.fit_transform(X)
    once = ConvolutionTransformer(M.Power(M.Cantor(), 2)).fit_transform(X)
    assert np.allclose(twice, once, atol=1e-12)
    assert t.get_params() == {"measure": {"kind": "cantor"}}


def test_convolution_transformer_checks():
    with pytest.raises(NotFittedError):
        ConvolutionTransformer({"kind": "cantor"}).transform(smooth_rows())
    t = ConvolutionTransformer({"kind": "cantor"}).fit(smooth_rows(M_=32))
    with pytest.raises(ValueError):
        t.transform(smooth_rows(M_=64))


def test_cyclic_class_estimator_on_example2():
    op = F.example2(6)
    est = CyclicClassEstimator().fit(op.S)
    assert est.period_ == 2
    assert est.predict([0, 3, 5]).tolist() == [0, 1, 1]
    f = np.array([[3.0, 0, 0, 1, 1, 1]])
    assert np.allclose(est.transform(f), [[1, 1, 1, 1, 1, 1]])
    assert np.allclose(est.masses_, 0.5)


def test_cyclic_class_estimator_with_weights():
    op = F.random_block_cyclic(3, 9, seed=2)
    est = CyclicClassEstimator().fit(op.S, mu=op.mu)
    E = est.projection_
    assert est.period_ == 3 and np.allclose(E @ E, E)
    with pytest.raises(NotFittedError):
        CyclicClassEstimator().predict([0])
