import numpy as np
import pytest
from numpy.testing import assert_allclose

from pdspeech.models.svm import SvmConfig, fit_svm, rbf_kernel


def two_blobs(rng, n_per_class, dim, gap=2.0):
    a = rng.standard_normal((n_per_class, dim)) - gap / 2
    b = rng.standard_normal((n_per_class, dim)) + gap / 2
    x = np.concatenate([a, b])
    y = np.concatenate([np.zeros(n_per_class, dtype=int),
                        np.ones(n_per_class, dtype=int)])
    return x, y


def dual_objective(alpha, y_signed, gram):
    q = np.outer(y_signed, y_signed) * gram
    return 0.5 * alpha @ q @ alpha - alpha.sum()


def qp_reference(z, y_signed, c, gamma):
    """Independent solution of the same dual QP via a generic convex solver."""
    from cvxopt import matrix, solvers

    n = len(y_signed)
    gram = rbf_kernel(z, z, gamma)
    saved = dict(solvers.options)
    solvers.options.update({"show_progress": False, "abstol": 1e-11,
                            "reltol": 1e-11, "feastol": 1e-11})
    try:
        sol = solvers.qp(
            matrix(np.outer(y_signed, y_signed) * gram),
            matrix(-np.ones(n)),
            matrix(np.vstack([-np.eye(n), np.eye(n)])),
            matrix(np.hstack([np.zeros(n), np.full(n, float(c))])),
            matrix(y_signed.reshape(1, -1)),
            matrix(0.0),
        )
    finally:
        solvers.options.clear()
        solvers.options.update(saved)
    assert sol["status"] == "optimal"
    alpha = np.asarray(sol["x"]).ravel()
    f_without_bias = (alpha * y_signed) @ gram
    non_bound = (alpha > 1e-6 * c) & (alpha < c * (1 - 1e-6))
    assert non_bound.any()
    bias = float(np.mean(y_signed[non_bound] - f_without_bias[non_bound]))
    return alpha, bias, dual_objective(alpha, y_signed, gram)


@pytest.fixture(scope="module")
def problem():
    rng = np.random.default_rng(17)
    x, labels = two_blobs(rng, 30, 5, gap=1.5)
    config = SvmConfig(c=10.0, gamma=0.1, tol=1e-6)
    model = fit_svm(x, labels, config)
    z = model.standardize(x)
    y_signed = np.where(labels == 1, 1.0, -1.0)
    ref_alpha, ref_bias, ref_obj = qp_reference(z, y_signed, config.c,
                                                config.gamma)
    return model, x, z, y_signed, ref_alpha, ref_bias, ref_obj


class TestAgainstQpOracle:
    def test_objective_matches_reference(self, problem):
        model, _, z, y_signed, _, _, ref_obj = problem
        gram = rbf_kernel(z, z, model.config.gamma)
        smo_obj = dual_objective(model.alpha, y_signed, gram)
        # the reference value is the minimum, so the solver can only sit
        # slightly above it
        assert smo_obj >= ref_obj - 1e-8
        assert smo_obj - ref_obj <= 1e-5 * (1.0 + abs(ref_obj))

    def test_decision_values_match_reference(self, problem):
        model, x, z, y_signed, ref_alpha, ref_bias, _ = problem
        gram = rbf_kernel(z, z, model.config.gamma)
        ref_decision = gram @ (ref_alpha * y_signed) + ref_bias
        assert_allclose(model.decision_function(x), ref_decision, atol=2e-4)

    def test_alphas_match_reference(self, problem):
        model, _, _, _, ref_alpha, _, _ = problem
        assert_allclose(model.alpha, ref_alpha, atol=1e-3)


class TestKktConditions:
    def test_all_points_satisfy_kkt_at_tol(self):
        rng = np.random.default_rng(3)
        x, labels = two_blobs(rng, 40, 8, gap=1.0)
        config = SvmConfig(c=10.0, gamma=0.05, tol=1e-4)
        model = fit_svm(x, labels, config)
        z = model.standardize(x)
        y_signed = np.where(labels == 1, 1.0, -1.0)
        gram = rbf_kernel(z, z, config.gamma)
        margins = y_signed * (gram @ (model.alpha * y_signed) + model.bias)
        slack = 5 * config.tol
        at_zero = model.alpha <= 1e-10
        at_c = model.alpha >= config.c - 1e-10
        interior = ~at_zero & ~at_c
        assert (margins[at_zero] >= 1 - slack).all()
        assert (np.abs(margins[interior] - 1) <= slack).all()
        assert (margins[at_c] <= 1 + slack).all()

    def test_alphas_inside_box_and_balanced(self):
        rng = np.random.default_rng(4)
        x, labels = two_blobs(rng, 25, 6)
        model = fit_svm(x, labels, SvmConfig(c=10.0, gamma=0.1, tol=1e-5))
        assert (model.alpha >= -1e-12).all()
        assert (model.alpha <= model.config.c + 1e-12).all()
        assert np.abs(model.dual_coef).max() <= model.config.c + 1e-12
        y_signed = np.where(labels == 1, 1.0, -1.0)
        assert abs(model.alpha @ y_signed) < 1e-9


class TestBehavior:
    def test_xor_with_unit_gamma(self):
        x = np.array([[-1.0, -1.0], [-1.0, 1.0], [1.0, -1.0], [1.0, 1.0]])
        labels = np.array([0, 1, 1, 0])
        model = fit_svm(x, labels, SvmConfig(c=10.0, gamma=1.0, tol=1e-4))
        assert (model.predict(x) == labels).all()

    def test_duplicating_data_equals_doubling_c(self):
        rng = np.random.default_rng(9)
        x, labels = two_blobs(rng, 20, 4, gap=1.2)
        doubled = fit_svm(x, labels, SvmConfig(c=20.0, gamma=0.2, tol=1e-7))
        duplicated = fit_svm(np.repeat(x, 2, axis=0), np.repeat(labels, 2),
                             SvmConfig(c=10.0, gamma=0.2, tol=1e-7))
        probe = rng.standard_normal((64, 4)) * 1.5
        assert_allclose(duplicated.decision_function(probe),
                        doubled.decision_function(probe), atol=1e-3)

    def test_deterministic(self):
        rng = np.random.default_rng(10)
        x, labels = two_blobs(rng, 15, 5)
        a = fit_svm(x, labels, SvmConfig(gamma=0.1))
        b = fit_svm(x, labels, SvmConfig(gamma=0.1))
        assert (a.alpha == b.alpha).all()
        assert a.bias == b.bias

    def test_standardization_absorbs_affine_feature_maps(self):
        rng = np.random.default_rng(11)
        x, labels = two_blobs(rng, 20, 6)
        warped = x.copy()
        warped[:, 2] = warped[:, 2] * 1000.0 + 50.0
        warped[:, 5] = warped[:, 5] * -0.001
        config = SvmConfig(gamma=0.1, tol=1e-8)
        plain = fit_svm(x, labels, config)
        scaled = fit_svm(warped, labels, config)
        probe = rng.standard_normal((32, 6))
        warped_probe = probe.copy()
        warped_probe[:, 2] = warped_probe[:, 2] * 1000.0 + 50.0
        warped_probe[:, 5] = warped_probe[:, 5] * -0.001
        assert_allclose(scaled.decision_function(warped_probe),
                        plain.decision_function(probe), atol=1e-5)

    def test_constant_feature_does_not_blow_up(self):
        rng = np.random.default_rng(12)
        x, labels = two_blobs(rng, 10, 3)
        x = np.hstack([x, np.full((len(x), 1), 7.0)])
        model = fit_svm(x, labels, SvmConfig(gamma=0.2))
        assert np.isfinite(model.decision_function(x)).all()

    def test_high_dim_small_gamma_regime(self):
        # mirrors the intended use: hundreds of standardized descriptors
        # with a gamma small enough to keep the kernel near-linear
        rng = np.random.default_rng(13)
        x, labels = two_blobs(rng, 30, 232, gap=0.5)
        model = fit_svm(x, labels, SvmConfig(c=10.0, gamma=1e-4, tol=1e-3))
        assert (model.predict(x) == labels).mean() >= 0.9

    def test_predict_labels_are_binary_ints(self):
        rng = np.random.default_rng(14)
        x, labels = two_blobs(rng, 10, 4)
        pred = fit_svm(x, labels, SvmConfig(gamma=0.1)).predict(x)
        assert pred.dtype == np.int64
        assert set(np.unique(pred)) <= {0, 1}

    def test_decision_feature_count_checked(self):
        rng = np.random.default_rng(15)
        x, labels = two_blobs(rng, 8, 4)
        model = fit_svm(x, labels, SvmConfig(gamma=0.1))
        with pytest.raises(ValueError, match="features"):
            model.decision_function(np.zeros((2, 5)))


class TestValidation:
    def test_rejects_bad_inputs(self):
        good_x = np.zeros((4, 2))
        good_y = np.array([0, 1, 0, 1])
        with pytest.raises(ValueError, match="2-D"):
            fit_svm(np.zeros(4), good_y)
        with pytest.raises(ValueError, match="one value per"):
            fit_svm(good_x, np.array([0, 1]))
        with pytest.raises(ValueError, match="two classes"):
            fit_svm(good_x, np.zeros(4, dtype=int))
        with pytest.raises(ValueError, match="0 or 1"):
            fit_svm(good_x, np.array([0, 1, 2, 1]))
        bad_x = good_x.copy()
        bad_x[0, 0] = np.inf
        with pytest.raises(ValueError, match="non-finite"):
            fit_svm(bad_x, good_y)

    def test_config_validation(self):
        for kwargs in ({"c": 0.0}, {"gamma": -1.0}, {"tol": 0.0},
                       {"max_sweeps": 0}):
            with pytest.raises(ValueError):
                SvmConfig(**kwargs)
