"""Loss functions with evaluable curvature certificates.

Three families are supported:

- quadratic:        f(x) = (H/2) * ||x - c||^2 over a Euclidean ball,
- linear squared:   f(w) = (w'v - y)^2 over ||w|| <= B with ||v|| <= 1,
- kernel squared:   f(a) = ((K a)_j - y)^2 over RKHS functions encoded as
                    coefficient vectors on a fixed anchor set, a'Ka <= B^2.

Each loss reports a certificate (H, alpha, G, D) so learners and the regret
accountant never have to inspect loss internals. Values and gradients are
pure; losses are immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError

# Absolute tolerance on norm constraints; absorbs drift from repeated
# projections without accepting genuinely external points.
DOMAIN_TOL = 1e-9


class Ball:
    """Euclidean ball {x : ||x|| <= radius} centered at the origin."""

    __slots__ = ("dim", "radius")

    def __init__(self, dim: int, radius: float):
        if dim < 1:
            raise ConfigError(f"ball dimension must be >= 1, got {dim}")
        if radius < 0:
            raise ConfigError(f"ball radius must be >= 0, got {radius}")
        self.dim = int(dim)
        self.radius = float(radius)

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def contains(self, x: np.ndarray, tol: float = DOMAIN_TOL) -> bool:
        return float(np.linalg.norm(x)) <= self.radius + tol

    def check(self, x: np.ndarray) -> None:
        n = float(np.linalg.norm(x))
        if n > self.radius + DOMAIN_TOL:
            raise DomainError(
                f"point norm {n:.12g} exceeds ball radius {self.radius:.12g}"
            )

    def project(self, x: np.ndarray) -> np.ndarray:
        n = float(np.linalg.norm(x))
        if n <= self.radius or n == 0.0:
            return np.asarray(x, dtype=float)
        return np.asarray(x, dtype=float) * (self.radius / n)

    def __repr__(self) -> str:
        return f"Ball(dim={self.dim}, radius={self.radius})"


@dataclass(frozen=True)
class CurvatureCertificate:
    """Curvature summary consumed by learners and regret bounds.

    strong_convexity is 0 for losses that are merely convex. For strongly
    convex losses exp_concavity >= strong_convexity / grad_bound^2.
    """

    strong_convexity: float
    exp_concavity: float
    grad_bound: float
    diameter: float


class QuadraticLoss:
    """f(x) = (curvature/2) * ||x - center||^2 over a Euclidean ball.

    Center form keeps the per-round minimizer explicit, which environment
    generators rely on to construct comparator sequences analytically.
    """

    __slots__ = ("center", "curvature", "domain")

    def __init__(self, center: np.ndarray, curvature: float, domain: Ball):
        if curvature <= 0:
            raise ConfigError(f"quadratic curvature must be > 0, got {curvature}")
        center = np.asarray(center, dtype=float)
        if center.shape != (domain.dim,):
            raise ConfigError(
                f"center shape {center.shape} does not match domain dim {domain.dim}"
            )
        self.center = center
        self.curvature = float(curvature)
        self.domain = domain

    @property
    def minimizer(self) -> np.ndarray:
        return self.center

    def value(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        self.domain.check(x)
        d = x - self.center
        return 0.5 * self.curvature * float(d @ d)

    def grad(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        self.domain.check(x)
        return self.curvature * (x - self.center)

    def certificate(self) -> CurvatureCertificate:
        if self.domain.radius <= 0:
            raise ConfigError("degenerate domain: ball radius must be > 0")
        # sup over the ball of ||H (x - c)|| is attained on the boundary
        # opposite the center.
        g = self.curvature * (self.domain.radius + float(np.linalg.norm(self.center)))
        return CurvatureCertificate(
            strong_convexity=self.curvature,
            exp_concavity=self.curvature / g**2,
            grad_bound=g,
            diameter=self.domain.diameter,
        )

    def __call__(self, x: np.ndarray) -> float:
        return self.value(x)


class LinearSquaredLoss:
    """f(w) = (w'v - y)^2 for weights in the ball ||w|| <= B, ||v|| <= 1.

    With |y| <= B the loss is 1/(8 B^2) exp-concave on its domain and its
    gradient norm is certified as 2 B^2.
    """

    __slots__ = ("feature", "label", "domain")

    def __init__(self, feature: np.ndarray, label: float, radius: float):
        feature = np.asarray(feature, dtype=float)
        if radius <= 0:
            raise ConfigError(f"prediction bound must be > 0, got {radius}")
        if float(np.linalg.norm(feature)) > 1.0 + DOMAIN_TOL:
            raise ConfigError("feature norm must be <= 1 for the certificate to hold")
        if abs(label) > radius + DOMAIN_TOL:
            raise ConfigError(f"label {label} outside [-B, B] with B={radius}")
        self.feature = feature
        self.label = float(label)
        self.domain = Ball(feature.shape[0], radius)

    def value(self, w: np.ndarray) -> float:
        w = np.asarray(w, dtype=float)
        self.domain.check(w)
        return (float(w @ self.feature) - self.label) ** 2

    def grad(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        self.domain.check(w)
        return 2.0 * (float(w @ self.feature) - self.label) * self.feature

    def certificate(self) -> CurvatureCertificate:
        b = self.domain.radius
        return CurvatureCertificate(
            strong_convexity=0.0,
            exp_concavity=1.0 / (8.0 * b**2),
            grad_bound=2.0 * b**2,
            diameter=2.0 * b,
        )

    def __call__(self, w: np.ndarray) -> float:
        return self.value(w)


class KernelSquaredLoss:
    """Squared error of an RKHS function observed at one anchor point.

    Candidate functions are coefficient vectors ``a`` over a fixed anchor
    set with Gram matrix K; the function value at anchor j is (K a)_j and
    the RKHS norm is sqrt(a' K a). The domain is the RKHS ball of radius B.
    Gradients are reported in coefficient space, 2 ((K a)_j - y) K[:, j],
    so that plain dot products against coefficient differences reproduce
    the RKHS pairing <f_b - f_a, grad f>.
    """

    __slots__ = ("gram", "point_index", "label", "bandwidth", "radius")

    def __init__(
        self,
        gram: np.ndarray,
        point_index: int,
        label: float,
        bandwidth: float,
        radius: float,
    ):
        gram = np.asarray(gram, dtype=float)
        if bandwidth <= 0:
            raise ConfigError(f"bandwidth must be > 0, got {bandwidth}")
        if radius <= 0:
            raise ConfigError(f"RKHS ball radius must be > 0, got {radius}")
        if not (0 <= point_index < gram.shape[0]):
            raise ConfigError(f"point index {point_index} outside anchor set")
        if abs(label) > radius + DOMAIN_TOL:
            raise ConfigError(f"label {label} outside [-B, B] with B={radius}")
        self.gram = gram
        self.point_index = int(point_index)
        self.label = float(label)
        self.bandwidth = float(bandwidth)
        self.radius = float(radius)

    def _check_domain(self, coef: np.ndarray) -> None:
        n = float(np.sqrt(max(coef @ self.gram @ coef, 0.0)))
        if n > self.radius + DOMAIN_TOL:
            raise DomainError(
                f"RKHS norm {n:.12g} exceeds ball radius {self.radius:.12g}"
            )

    def predict(self, coef: np.ndarray) -> float:
        return float(self.gram[self.point_index] @ coef)

    def value(self, coef: np.ndarray) -> float:
        coef = np.asarray(coef, dtype=float)
        self._check_domain(coef)
        return (self.predict(coef) - self.label) ** 2

    def grad(self, coef: np.ndarray) -> np.ndarray:
        coef = np.asarray(coef, dtype=float)
        self._check_domain(coef)
        return 2.0 * (self.predict(coef) - self.label) * self.gram[:, self.point_index]

    def certificate(self) -> CurvatureCertificate:
        b = self.radius
        return CurvatureCertificate(
            strong_convexity=0.0,
            exp_concavity=1.0 / (8.0 * b**2),
            grad_bound=2.0 * b**2,
            diameter=2.0 * b,
        )

    def __call__(self, coef: np.ndarray) -> float:
        return self.value(coef)
