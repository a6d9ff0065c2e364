"""Loss values, gradients, domains, and curvature certificates."""

import numpy as np
import pytest

from saoco import (
    Ball,
    ConfigError,
    DomainError,
    KernelSquaredLoss,
    LinearSquaredLoss,
    QuadraticLoss,
    gram_matrix,
)
from saoco.bench import sample_in_ball

RNG = np.random.default_rng(20240811)


def finite_difference_grad(loss, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (loss.value(x + e) - loss.value(x - e)) / (2 * h)
    return g


def random_quadratic(rng, dim=4, radius=2.0):
    center = sample_in_ball(rng, dim, radius)
    return QuadraticLoss(center, float(rng.uniform(0.5, 4.0)), Ball(dim, radius))


def random_kernel_loss(rng, n_anchors=6, dim=2, radius=1.5):
    anchors = rng.uniform(-1, 1, size=(n_anchors, dim))
    gram = gram_matrix(anchors, 1.0)
    j = int(rng.integers(n_anchors))
    label = float(rng.uniform(-radius, radius))
    return KernelSquaredLoss(gram, j, label, 1.0, radius)


def coef_in_rkhs_ball(rng, gram, radius):
    c = rng.standard_normal(gram.shape[0])
    n = np.sqrt(c @ gram @ c)
    return c * (radius * rng.uniform() / n)


class TestEval:
    def test_quadratic_minimum(self):
        loss = QuadraticLoss(np.zeros(2), 2.0, Ball(2, 1.0))
        assert loss.value(np.zeros(2)) == 0.0

    def test_linear_exact_fit(self):
        loss = LinearSquaredLoss(np.array([1.0, 0.0]), 1.0, radius=1.0)
        assert loss.value(np.array([1.0, 0.0])) == 0.0

    def test_quadratic_unit_offset(self):
        loss = QuadraticLoss(np.array([1.0]), 2.0, Ball(1, 1.0))
        assert loss.value(np.array([0.0])) == pytest.approx(1.0)

    def test_domain_violation_names_norm(self):
        loss = QuadraticLoss(np.zeros(2), 1.0, Ball(2, 1.0))
        with pytest.raises(DomainError, match="norm 2"):
            loss.value(np.array([2.0, 0.0]))


class TestGrad:
    def test_quadratic_scalar(self):
        loss = QuadraticLoss(np.zeros(1), 2.0, Ball(1, 5.0))
        assert loss.grad(np.array([3.0])) == pytest.approx([6.0])

    def test_linear_squared(self):
        loss = LinearSquaredLoss(np.array([1.0]), 0.0, radius=2.0)
        assert loss.grad(np.array([2.0])) == pytest.approx([4.0])

    def test_random_quadratic_matches_finite_differences(self):
        rng = np.random.default_rng(7)
        loss = random_quadratic(rng)
        x = sample_in_ball(rng, 4, 1.9)
        fd = finite_difference_grad(loss, x)
        assert np.allclose(loss.grad(x), fd, rtol=1e-5, atol=1e-7)

    def test_finite_differences_all_families(self):
        # 100 random (loss, point) pairs across the three families
        rng = np.random.default_rng(99)
        for i in range(100):
            kind = i % 3
            if kind == 0:
                loss = random_quadratic(rng)
                x = sample_in_ball(rng, 4, loss.domain.radius * 0.95)
            elif kind == 1:
                v = rng.standard_normal(3)
                v /= max(1.0, np.linalg.norm(v))
                loss = LinearSquaredLoss(v, float(rng.uniform(-1, 1)), radius=1.5)
                x = sample_in_ball(rng, 3, 1.4)
            else:
                loss = random_kernel_loss(rng)
                x = coef_in_rkhs_ball(rng, loss.gram, loss.radius * 0.95)
            fd = finite_difference_grad(loss, x)
            g = loss.grad(x)
            assert np.linalg.norm(g - fd) <= 1e-5 * max(1.0, np.linalg.norm(fd))


class TestCertify:
    def test_kernel_certificate(self):
        loss = random_kernel_loss(np.random.default_rng(0), radius=1.0)
        cert = loss.certificate()
        assert cert.exp_concavity == pytest.approx(0.125)
        assert cert.grad_bound == pytest.approx(2.0)

    def test_quadratic_certificate_worst_center(self):
        # center on the boundary of the unit ball: G = H * (r + ||c||) = 4
        loss = QuadraticLoss(np.array([1.0, 0.0]), 2.0, Ball(2, 1.0))
        cert = loss.certificate()
        assert cert.grad_bound == pytest.approx(4.0)
        assert cert.exp_concavity == pytest.approx(0.125)

    def test_quadratic_certificate_g_bounded(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            c = sample_in_ball(rng, 2, 1.0)
            cert = QuadraticLoss(c, 2.0, Ball(2, 1.0)).certificate()
            assert cert.grad_bound <= 4.0 + 1e-12

    def test_degenerate_domain_rejected(self):
        loss = QuadraticLoss(np.zeros(2), 1.0, Ball(2, 0.0))
        with pytest.raises(ConfigError):
            loss.certificate()


class TestCurvatureInequalities:
    def test_strong_convexity_quadratics(self):
        # f(y) >= f(x) + <y-x, grad f(x)> + (H/2)||x-y||^2 on sampled pairs
        rng = np.random.default_rng(11)
        for _ in range(10):
            loss = random_quadratic(rng)
            h = loss.curvature
            r = loss.domain.radius
            for _ in range(100):
                x = sample_in_ball(rng, 4, r)
                y = sample_in_ball(rng, 4, r)
                lhs = loss.value(y)
                rhs = (
                    loss.value(x)
                    + float((y - x) @ loss.grad(x))
                    + 0.5 * (h - 1e-9) * float((y - x) @ (y - x))
                )
                assert lhs >= rhs - 1e-9

    def test_exp_concavity_squared_error(self):
        # curvature term (alpha/2) (<y-x, grad>)^2 with alpha = 1/(8 B^2)
        rng = np.random.default_rng(13)
        for trial in range(10):
            if trial % 2 == 0:
                v = rng.standard_normal(3)
                v /= max(1.0, np.linalg.norm(v))
                loss = LinearSquaredLoss(v, float(rng.uniform(-1, 1)), radius=1.0)
                draw = lambda: sample_in_ball(rng, 3, 1.0)  # noqa: E731
            else:
                loss = random_kernel_loss(rng, radius=1.0)
                draw = lambda: coef_in_rkhs_ball(rng, loss.gram, 1.0)  # noqa: E731
            alpha = loss.certificate().exp_concavity - 1e-9
            for _ in range(100):
                u, w = draw(), draw()
                inner = float((w - u) @ loss.grad(u))
                rhs = loss.value(u) + inner + 0.5 * alpha * inner**2
                assert loss.value(w) >= rhs - 1e-9


def test_feature_norm_guard():
    with pytest.raises(ConfigError):
        LinearSquaredLoss(np.array([2.0, 0.0]), 0.0, radius=1.0)


def test_label_outside_range_rejected():
    with pytest.raises(ConfigError):
        LinearSquaredLoss(np.array([1.0]), 3.0, radius=1.0)
