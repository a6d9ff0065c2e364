"""Gaussian-kernel primitives, ridge closed forms, and penalized-regret bounds.

All (K + a I) solves go through Cholesky factors; determinants are taken in
log space from the factor diagonals so nothing overflows at T ~ 1e3. The
incremental ``GramState`` grows its factor by rank-one appends (O(n^2) per
point) with a periodic full refactorization to bound drift.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

from .errors import ConfigError, NumericalError

log = logging.getLogger(__name__)

_JITTER = 1e-10


def gaussian_kernel(x: np.ndarray, y: np.ndarray, bandwidth: float) -> float:
    """k(x, y) = exp(-||x - y||^2 / (2 sigma^2)), in (0, 1]."""
    if bandwidth <= 0:
        raise ConfigError(f"bandwidth must be > 0, got {bandwidth}")
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    return float(np.exp(-float(d @ d) / (2.0 * bandwidth**2)))


def kernel_vector(points: np.ndarray, x: np.ndarray, bandwidth: float) -> np.ndarray:
    """Column of kernel evaluations k(points[i], x)."""
    if bandwidth <= 0:
        raise ConfigError(f"bandwidth must be > 0, got {bandwidth}")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    d = points - np.asarray(x, dtype=float)[None, :]
    return np.exp(-np.sum(d * d, axis=1) / (2.0 * bandwidth**2))


def gram_matrix(points: np.ndarray, bandwidth: float) -> np.ndarray:
    """Pairwise Gaussian kernel matrix; unit diagonal by construction."""
    if bandwidth <= 0:
        raise ConfigError(f"bandwidth must be > 0, got {bandwidth}")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    sq = np.sum(points * points, axis=1)
    dist2 = sq[:, None] + sq[None, :] - 2.0 * points @ points.T
    np.maximum(dist2, 0.0, out=dist2)
    k = np.exp(-dist2 / (2.0 * bandwidth**2))
    np.fill_diagonal(k, 1.0)
    return k


def _chol_lower(mat: np.ndarray, what: str) -> np.ndarray:
    """Lower Cholesky with a single logged jitter retry on failure."""
    try:
        return cholesky(mat, lower=True)
    except np.linalg.LinAlgError:
        log.warning("cholesky of %s failed; retrying with %g jitter", what, _JITTER)
        try:
            return cholesky(mat + _JITTER * np.eye(mat.shape[0]), lower=True)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"cholesky of {what} failed even with jitter") from exc


class GramState:
    """Incrementally grown kernel matrix with a factorization of (K + a I).

    Appending a point extends the lower Cholesky factor by one row (a
    triangular solve plus a scalar), so online solves cost O(n^2) per step.
    A full refactorization every ``refactor_every`` appends bounds roundoff
    accumulation.
    """

    def __init__(
        self,
        dim: int,
        bandwidth: float,
        ridge: float,
        refactor_every: int = 512,
    ):
        if bandwidth <= 0:
            raise ConfigError(f"bandwidth must be > 0, got {bandwidth}")
        if ridge <= 0:
            raise ConfigError(f"ridge must be > 0, got {ridge}")
        self.dim = int(dim)
        self.bandwidth = float(bandwidth)
        self.ridge = float(ridge)
        self.refactor_every = int(refactor_every)
        self.n = 0
        self._cap = 16
        self._points = np.empty((self._cap, dim))
        self._K = np.empty((self._cap, self._cap))
        self._L = np.zeros((self._cap, self._cap))
        self._since_refactor = 0

    @property
    def points(self) -> np.ndarray:
        return self._points[: self.n]

    @property
    def gram(self) -> np.ndarray:
        return self._K[: self.n, : self.n]

    @property
    def chol(self) -> np.ndarray:
        return self._L[: self.n, : self.n]

    def _grow(self) -> None:
        cap = 2 * self._cap
        pts = np.empty((cap, self.dim))
        pts[: self.n] = self._points[: self.n]
        km = np.empty((cap, cap))
        km[: self.n, : self.n] = self._K[: self.n, : self.n]
        lm = np.zeros((cap, cap))
        lm[: self.n, : self.n] = self._L[: self.n, : self.n]
        self._points, self._K, self._L, self._cap = pts, km, lm, cap

    def append(self, x: np.ndarray) -> None:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"point shape {x.shape} does not match dim {self.dim}")
        if self.n == self._cap:
            self._grow()
        n = self.n
        kv = kernel_vector(self._points[:n], x, self.bandwidth) if n else np.empty(0)
        self._points[n] = x
        self._K[n, :n] = kv
        self._K[:n, n] = kv
        self._K[n, n] = 1.0
        if n == 0:
            self._L[0, 0] = np.sqrt(1.0 + self.ridge)
        else:
            w = solve_triangular(self._L[:n, :n], kv, lower=True)
            s = 1.0 + self.ridge - float(w @ w)
            self._L[n, :n] = w
            if s <= _JITTER:
                # Schur complement of a PD matrix should stay >= ridge;
                # hitting this means accumulated drift, so refactor.
                self.n = n + 1
                self.refactor()
                self._since_refactor = 0
                return
            self._L[n, n] = np.sqrt(s)
        self.n = n + 1
        self._since_refactor += 1
        if self._since_refactor >= self.refactor_every:
            self.refactor()
            self._since_refactor = 0

    def refactor(self) -> None:
        n = self.n
        mat = self._K[:n, :n] + self.ridge * np.eye(n)
        self._L[:n, :n] = _chol_lower(mat, "K + aI")

    def solve(self, b: np.ndarray) -> np.ndarray:
        """(K + a I)^{-1} b via the maintained factor."""
        if self.n == 0:
            return np.empty(0)
        return cho_solve((self._L[: self.n, : self.n], True), np.asarray(b, float))


def krr_fit(gram: np.ndarray, labels: np.ndarray, ridge: float) -> np.ndarray:
    """Ridge coefficients (K + a I)^{-1} y.

    This is simultaneously the kernel ridge predictor's weight vector and
    the MAP coefficient vector of the Gaussian-likelihood construction used
    by the lower-bound identities.
    """
    if ridge <= 0:
        raise ConfigError(f"ridge must be > 0, got {ridge}")
    gram = np.asarray(gram, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if gram.shape[0] != gram.shape[1] or gram.shape[0] != labels.shape[0]:
        raise ValueError(f"shape mismatch: K {gram.shape}, y {labels.shape}")
    lower = _chol_lower(gram + ridge * np.eye(gram.shape[0]), "K + aI")
    return cho_solve((lower, True), labels)


def offline_penalized_optimum(gram: np.ndarray, labels: np.ndarray, ridge: float) -> float:
    """inf_f sum (f(x_t) - y_t)^2 + a ||f||^2  =  a y'(K + aI)^{-1} y."""
    labels = np.asarray(labels, dtype=float)
    return ridge * float(labels @ krr_fit(gram, labels, ridge))


def log_det_ratio(gram: np.ndarray, ridge: float) -> float:
    """log |I + K/a|, nonnegative, computed from Cholesky diagonals."""
    if ridge <= 0:
        raise ConfigError(f"ridge must be > 0, got {ridge}")
    gram = np.asarray(gram, dtype=float)
    n = gram.shape[0]
    lower = _chol_lower(np.eye(n) + gram / ridge, "I + K/a")
    return 2.0 * float(np.sum(np.log(np.diag(lower))))


def penalized_regret_upper(gram: np.ndarray, ridge: float, clip: float) -> float:
    """Upper bound 4 B^2 log |I + K/a| on clipped-KRR penalized regret."""
    return 4.0 * clip**2 * log_det_ratio(gram, ridge)


def penalized_regret_lower(gram: np.ndarray, ridge: float, horizon: float) -> float:
    """Minimax lower bound log |I + K/a| + 2 log(1 - 1/T), valid for T > 1."""
    if horizon <= 1:
        raise ValueError(f"horizon must be > 1, got {horizon}")
    return log_det_ratio(gram, ridge) + 2.0 * float(np.log1p(-1.0 / horizon))


def effective_dimension(gram: np.ndarray, lam: float) -> float:
    """d_eff(lambda) = Tr(K (K + lambda I)^{-1}), in [0, T]."""
    if lam <= 0:
        raise ConfigError(f"lambda must be > 0, got {lam}")
    gram = np.asarray(gram, dtype=float)
    n = gram.shape[0]
    lower = _chol_lower(gram + lam * np.eye(n), "K + lambda*I")
    inv = cho_solve((lower, True), np.eye(n))
    return float(n - lam * np.trace(inv))


def lb_noise_level(peak: float, ridge: float, horizon: float) -> float:
    """Label range B = sqrt(2 (1 + kappa^2/a) log T) used by the lower bound."""
    if ridge <= 0:
        raise ConfigError(f"ridge must be > 0, got {ridge}")
    if horizon < 2:
        raise ValueError(f"horizon must be >= 2, got {horizon}")
    return float(np.sqrt(2.0 * (1.0 + peak**2 / ridge) * np.log(horizon)))


def _neg_log_map_product(gram: np.ndarray, ridge: float, labels: np.ndarray) -> float:
    # -log of [unit-variance Gaussian likelihood at the ridge fit] times
    # [prior weight exp(-a ||f_map||^2 / 2)], dropping the shared (T/2)log(2pi).
    coef = krr_fit(gram, labels, ridge)
    fitted = gram @ coef
    resid = labels - fitted
    return 0.5 * float(resid @ resid) + 0.5 * ridge * float(coef @ fitted)


def map_density_identity_check(
    gram: np.ndarray, ridge: float, y1: np.ndarray, y2: np.ndarray
) -> float:
    """Gap between the MAP-product route and the quadratic-form route.

    The product of the Gaussian likelihood at the ridge fit and the RKHS
    prior weight is proportional to a Gaussian with covariance I + K/a, so
    differences of negative log products must equal differences of the
    quadratic forms (1/2) y'(I + K/a)^{-1} y. Returns the absolute gap,
    which is pure floating-point noise when the identity holds.
    """
    gram = np.asarray(gram, dtype=float)
    y1 = np.asarray(y1, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    n = gram.shape[0]
    actual = _neg_log_map_product(gram, ridge, y1) - _neg_log_map_product(gram, ridge, y2)
    lower = _chol_lower(np.eye(n) + gram / ridge, "I + K/a")
    q1 = 0.5 * float(y1 @ cho_solve((lower, True), y1))
    q2 = 0.5 * float(y2 @ cho_solve((lower, True), y2))
    return abs(actual - (q1 - q2))


@dataclass(frozen=True)
class PenalizedBoundReport:
    """Bound summary for one Gram matrix; serializes with wire names
    logdet / upper / lower / d_eff / lambda / a / B / T."""

    logdet: float
    upper: float
    lower: float
    d_eff: float
    lam: float
    ridge: float
    clip: float
    horizon: int

    def to_dict(self) -> dict:
        return {
            "logdet": self.logdet,
            "upper": self.upper,
            "lower": self.lower,
            "d_eff": self.d_eff,
            "lambda": self.lam,
            "a": self.ridge,
            "B": self.clip,
            "T": self.horizon,
        }


def penalized_bound_report(
    gram: np.ndarray,
    ridge: float,
    clip: float,
    lam: float | None = None,
) -> PenalizedBoundReport:
    """Evaluate the upper/lower penalized-regret bounds for one Gram matrix."""
    gram = np.asarray(gram, dtype=float)
    n = gram.shape[0]
    lam = ridge if lam is None else float(lam)
    logdet = log_det_ratio(gram, ridge)
    lower = penalized_regret_lower(gram, ridge, n) if n > 1 else float("nan")
    return PenalizedBoundReport(
        logdet=logdet,
        upper=4.0 * clip**2 * logdet,
        lower=lower,
        d_eff=effective_dimension(gram, lam),
        lam=lam,
        ridge=float(ridge),
        clip=float(clip),
        horizon=n,
    )
