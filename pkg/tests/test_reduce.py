"""PCA fitting, the sign/ordering conventions, and dimension selection."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cdselect.reduce import fit_pca, select_dimensions


def test_collinear_oracle():
    # three points on the diagonal: all variance in one direction
    X = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
    model = fit_pca(X)
    np.testing.assert_allclose(model.variances, [4.0 / 3.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(model.explained_variance_ratio(), [1.0, 0.0],
                               atol=1e-12)
    r = 1.0 / np.sqrt(2.0)
    np.testing.assert_allclose(model.components[0], [r, r], atol=1e-12)
    proj = select_dimensions(model, X, "most", 1).matrix
    np.testing.assert_allclose(proj[:, 0], [-np.sqrt(2), 0.0, np.sqrt(2)],
                               atol=1e-12)


def test_variances_match_covariance_eigenvalues():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((40, 6)) @ np.diag([3.0, 2.0, 1.5, 1.0, 0.5, 0.1])
    model = fit_pca(X)
    cov = np.cov(X, rowvar=False, bias=True)   # divisor n
    eig = np.sort(np.linalg.eigvalsh(cov))[::-1]
    np.testing.assert_allclose(model.variances, eig, atol=1e-9)


def test_full_rank_reconstruction():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((25, 5))
    model = fit_pca(X)
    proj = select_dimensions(model, X, "most", 5).matrix
    recon = proj @ model.components + model.mean
    rel = np.abs(recon - X).max() / np.abs(X).max()
    assert rel < 1e-9


def test_fit_deterministic():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((30, 4))
    a, b = fit_pca(X), fit_pca(X)
    np.testing.assert_array_equal(a.components, b.components)
    np.testing.assert_array_equal(a.variances, b.variances)


def test_sign_convention():
    rng = np.random.default_rng(6)
    X = rng.standard_normal((50, 5)) * np.array([5, 4, 3, 2, 1])
    comps = fit_pca(X).components
    lead = np.argmax(np.abs(comps), axis=1)
    assert np.all(comps[np.arange(5), lead] > 0)


def test_mode_none_passthrough():
    X = np.arange(12.0).reshape(4, 3)
    model = fit_pca(X)
    out = select_dimensions(model, X, "none", 3)
    np.testing.assert_array_equal(out.matrix, X)
    assert out.k == 3 and out.mode == "none"
    with pytest.raises(ValueError):
        select_dimensions(model, X, "none", 2)


def test_most_vs_least_split():
    rng = np.random.default_rng(7)
    X = rng.standard_normal((30, 4)) * np.array([10, 5, 1, 0.1])
    model = fit_pca(X)
    top = select_dimensions(model, X, "most", 2).matrix
    bot = select_dimensions(model, X, "least", 2).matrix
    assert top.shape == bot.shape == (30, 2)
    # the top projections carry the large-scale directions
    assert top.var(axis=0).sum() > bot.var(axis=0).sum()
    np.testing.assert_allclose(top.var(axis=0), model.variances[:2], atol=1e-9)
    np.testing.assert_allclose(bot.var(axis=0), model.variances[2:], atol=1e-9)


def test_k_bounds():
    X = np.zeros((4, 3))
    model = fit_pca(X)
    with pytest.raises(ValueError):
        select_dimensions(model, X, "most", 0)
    with pytest.raises(ValueError):
        select_dimensions(model, X, "least", 4)
    with pytest.raises(ValueError):
        select_dimensions(model, X, "weird", 2)


def test_more_samples_than_dims_and_reverse():
    rng = np.random.default_rng(8)
    for shape in ((3, 7), (7, 3)):
        X = rng.standard_normal(shape)
        model = fit_pca(X)
        assert model.components.shape == (shape[1], shape[1])
        assert np.all(np.diff(model.variances) <= 1e-12)


@settings(max_examples=25, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 12), st.integers(1, 6)),
              elements=st.floats(-100, 100)))
def test_pca_properties(X):
    model = fit_pca(X)
    K = X.shape[1]
    assert np.all(model.variances >= 0)
    assert np.all(np.diff(model.variances) <= 1e-12)
    gram = model.components @ model.components.T
    np.testing.assert_allclose(gram, np.eye(K), atol=1e-9)
