"""Base learners for the expert-restart meta-algorithm.

- OgdLearner: projected gradient descent with step 1/(H*t) on a local clock
  that starts at 1 when the learner is born.
- OnsLearner: Online Newton Step with accumulated outer-product matrix and
  generalized (Mahalanobis) projection onto the ball.
- KrrLearner: online clipped kernel ridge regression backed by an
  incrementally factorized Gram matrix.

Learner states are single-owner mutable values; every operation is
deterministic.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, LabelRangeError, NumericalError
from .kernels import GramState, kernel_vector
from .losses import Ball


class OgdLearner:
    """Projected OGD for H-strongly convex losses, eta_t = 1/(H t)."""

    def __init__(self, domain: Ball, curvature: float, x0: np.ndarray | None = None):
        if curvature <= 0:
            raise ConfigError(f"curvature must be > 0, got {curvature}")
        self.domain = domain
        self.curvature = float(curvature)
        self.iterate = (
            np.zeros(domain.dim) if x0 is None else domain.project(np.asarray(x0, float))
        )
        self.step_count = 1  # local clock, 1 at birth

    def predict(self) -> np.ndarray:
        return self.iterate

    def step(self, g: np.ndarray) -> None:
        g = np.asarray(g, dtype=float)
        if g.shape != self.iterate.shape:
            raise ValueError(f"gradient shape {g.shape} != iterate shape {self.iterate.shape}")
        eta = 1.0 / (self.curvature * self.step_count)
        self.iterate = self.domain.project(self.iterate - eta * g)
        self.step_count += 1


def project_mahalanobis(
    point: np.ndarray,
    metric: np.ndarray,
    radius: float,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> np.ndarray:
    """argmin_{||z|| <= radius} (z - point)' metric (z - point).

    No closed form exists for a general PD metric, so the KKT multiplier is
    found by bisection: z(t) = (A + tI)^{-1} A u has strictly decreasing
    Euclidean norm in t. Points already inside the ball are returned as is.
    """
    u = np.asarray(point, dtype=float)
    if float(np.linalg.norm(u)) <= radius:
        return u
    vals, vecs = np.linalg.eigh(np.asarray(metric, dtype=float))
    c = vecs.T @ u

    def norm_at(t: float) -> float:
        return float(np.linalg.norm(vals * c / (vals + t)))

    lo, hi = 0.0, 1.0
    while norm_at(hi) > radius:
        hi *= 2.0
        if hi > 1e300:
            raise NumericalError("mahalanobis projection bracket diverged")
    for _ in range(max_iter):
        if hi - lo <= tol * max(1.0, hi):
            break
        mid = 0.5 * (lo + hi)
        if norm_at(mid) > radius:
            lo = mid
        else:
            hi = mid
    t = 0.5 * (lo + hi)
    z = vecs @ (vals * c / (vals + t))
    n = float(np.linalg.norm(z))
    if n > radius:  # land exactly on the ball
        z *= radius / n
    return z


class OnsLearner:
    """Online Newton Step for alpha-exp-concave losses.

    Parameter choices follow the classical ONS analysis:
    gamma = 0.5 * min{1/(4 G D), alpha} and A_0 = eps I with
    eps = 1/(gamma^2 D^2).
    """

    def __init__(
        self,
        domain: Ball,
        grad_bound: float,
        exp_concavity: float,
        x0: np.ndarray | None = None,
        step_param: float | None = None,
        regularizer: float | None = None,
    ):
        if grad_bound <= 0 or exp_concavity <= 0:
            raise ConfigError("grad_bound and exp_concavity must be > 0")
        if domain.diameter <= 0:
            raise ConfigError("ONS needs a bounded domain with positive diameter")
        self.domain = domain
        self.gamma = (
            0.5 * min(1.0 / (4.0 * grad_bound * domain.diameter), exp_concavity)
            if step_param is None
            else float(step_param)
        )
        eps = (
            1.0 / (self.gamma**2 * domain.diameter**2)
            if regularizer is None
            else float(regularizer)
        )
        self.metric = eps * np.eye(domain.dim)
        self.iterate = (
            np.zeros(domain.dim) if x0 is None else domain.project(np.asarray(x0, float))
        )

    def predict(self) -> np.ndarray:
        return self.iterate

    def step(self, g: np.ndarray) -> None:
        g = np.asarray(g, dtype=float)
        if g.shape != self.iterate.shape:
            raise ValueError(f"gradient shape {g.shape} != iterate shape {self.iterate.shape}")
        self.metric += np.outer(g, g)
        try:
            direction = np.linalg.solve(self.metric, g)
        except np.linalg.LinAlgError as exc:
            raise NumericalError("ONS preconditioner solve failed") from exc
        u = self.iterate - direction / self.gamma
        if float(np.linalg.norm(u)) <= self.domain.radius:
            self.iterate = u
        else:
            self.iterate = project_mahalanobis(u, self.metric, self.domain.radius)


class KrrLearner:
    """Online clipped kernel ridge regression.

    Predicts clip(k(x)' (K + aI)^{-1} y, [-B, B]) from the history observed
    since birth; an empty history predicts 0. The Gram factorization grows
    by rank-one appends, so updates cost O(n^2).
    """

    def __init__(
        self,
        dim: int,
        bandwidth: float,
        ridge: float,
        clip: float,
        refactor_every: int = 512,
    ):
        if clip <= 0:
            raise ConfigError(f"clip level must be > 0, got {clip}")
        self.clip = float(clip)
        self.gram = GramState(dim, bandwidth, ridge, refactor_every=refactor_every)
        self._labels: list[float] = []
        self._coef = np.empty(0)

    @property
    def history_length(self) -> int:
        return self.gram.n

    @property
    def labels(self) -> np.ndarray:
        return np.asarray(self._labels, dtype=float)

    def predict(self, x: np.ndarray) -> float:
        if self.gram.n == 0:
            return 0.0
        kv = kernel_vector(self.gram.points, np.asarray(x, float), self.gram.bandwidth)
        raw = float(kv @ self._coef)
        return min(max(raw, -self.clip), self.clip)

    def update(self, x: np.ndarray, y: float) -> None:
        if abs(y) > self.clip:
            raise LabelRangeError(f"label {y} outside [-B, B] with B={self.clip}")
        self.gram.append(np.asarray(x, dtype=float))
        self._labels.append(float(y))
        self._coef = self.gram.solve(self.labels)
