"""Non-stationary environments, variation measures, and regret accounting.

Comparator sequences live either in Euclidean space or in an RKHS (as
coefficient vectors over anchor points, measured in the Gram-weighted
norm). Drift environments are built so that the emitted comparators are
the per-round loss minimizers, which makes their losses and path variation
analytic and the realized variation land on the requested target.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .kernels import gram_matrix, kernel_vector, offline_penalized_optimum
from .losses import Ball, CurvatureCertificate, QuadraticLoss

VT_RELATIVE_TOL = 0.05  # realized variation must land within 5% of target


def sample_in_ball(rng: np.random.Generator, dim: int, radius: float) -> np.ndarray:
    """Uniform draw from the Euclidean ball."""
    x = rng.standard_normal(dim)
    n = float(np.linalg.norm(x))
    if n == 0.0:
        return np.zeros(dim)
    r = radius * rng.uniform() ** (1.0 / dim)
    return x * (r / n)


def path_variation(points: np.ndarray, gram: np.ndarray | None = None) -> float:
    """Total movement sum_{t>=2} ||z_t - z_{t-1}||; zero for a single point.

    With ``gram`` set, differences are measured in the Gram-weighted
    (RKHS) norm instead of the Euclidean one.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[0] < 2:
        return 0.0
    diffs = np.diff(points, axis=0)
    if gram is None:
        return float(np.sum(np.linalg.norm(diffs, axis=1)))
    sq = np.einsum("ij,jk,ik->i", diffs, gram, diffs)
    return float(np.sum(np.sqrt(np.maximum(sq, 0.0))))


class ComparatorSequence:
    """Comparator points z_1..z_T with a cached path variation."""

    def __init__(self, points: np.ndarray, gram: np.ndarray | None = None):
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        self.gram = None if gram is None else np.asarray(gram, dtype=float)
        self.variation = path_variation(self.points, self.gram)

    def __len__(self) -> int:
        return self.points.shape[0]


def functional_variation(
    losses: list,
    probes: np.ndarray | None = None,
    probe_count: int = 128,
    seed: int = 0,
) -> float:
    """Cumulative sup-norm change sum_t sup_x |f_t(x) - f_{t-1}(x)|.

    Pairs of quadratics with equal curvature have an affine difference, so
    the supremum over the ball is exact: r ||w|| + |b|. Otherwise the sup
    is lower-approximated by a maximum over a probe set (a deterministic
    seeded sample by default; tightens monotonically as probes are added).
    """
    if len(losses) < 2:
        return 0.0
    if probes is not None:
        probes = np.atleast_2d(np.asarray(probes, dtype=float))
        if probes.shape[0] == 0:
            raise ValueError("probe set must be nonempty")

    total = 0.0
    for prev, cur in itertools.pairwise(losses):
        closed = (
            isinstance(prev, QuadraticLoss)
            and isinstance(cur, QuadraticLoss)
            and prev.curvature == cur.curvature
        )
        if closed and probes is None:
            h, r = prev.curvature, prev.domain.radius
            w = h * (prev.center - cur.center)
            b = 0.5 * h * (float(cur.center @ cur.center) - float(prev.center @ prev.center))
            total += r * float(np.linalg.norm(w)) + abs(b)
        else:
            if probes is None:
                rng = np.random.default_rng(seed)
                dom = prev.domain
                probes = np.array(
                    [sample_in_ball(rng, dom.dim, dom.radius) for _ in range(probe_count)]
                )
            total += max(abs(cur.value(p) - prev.value(p)) for p in probes)
    return total


@dataclass(frozen=True)
class Partition:
    """Ordered contiguous bins [start, end] (1-indexed, inclusive) covering [1, T]."""

    bins: tuple[tuple[int, int], ...]

    def __len__(self) -> int:
        return len(self.bins)


def partition_by_variation(
    points: np.ndarray, vbar: float, gram: np.ndarray | None = None
) -> Partition:
    """Split [1, T] into bins of comparator variation strictly below ``vbar``.

    Running transcription of the greedy scheme: keep a bin open from s and
    close [s, t-1] as soon as the variation accumulated on [s, t] reaches
    vbar, restarting at t. The trailing open bin [s, T] is appended so the
    bins are exhaustive. Guarantees (#bins - 1) * vbar <= V_T and per-bin
    variation < vbar.
    """
    if vbar <= 0:
        raise ValueError(f"variation budget must be > 0, got {vbar}")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    horizon = points.shape[0]
    diffs = np.diff(points, axis=0)
    if gram is None:
        steps = np.linalg.norm(diffs, axis=1) if horizon > 1 else np.empty(0)
    else:
        sq = np.einsum("ij,jk,ik->i", diffs, gram, diffs) if horizon > 1 else np.empty(0)
        steps = np.sqrt(np.maximum(sq, 0.0))

    bins: list[tuple[int, int]] = []
    start = 1
    running = 0.0
    for t in range(2, horizon + 1):
        running += float(steps[t - 2])  # variation on [start, t]
        if running >= vbar:
            bins.append((start, t - 1))
            start = t
            running = 0.0
    bins.append((start, horizon))
    return Partition(tuple(bins))


@dataclass
class RegretTrace:
    """Per-round learner/comparator losses plus run metadata.

    ``predictions``/``labels`` are populated for squared-error runs so the
    penalized regret can be accounted afterwards.
    """

    algorithm: str
    seed: int
    config_hash: str
    learner_loss: np.ndarray
    comparator_loss: np.ndarray
    predictions: np.ndarray | None = None
    labels: np.ndarray | None = None

    def __post_init__(self):
        self.learner_loss = np.asarray(self.learner_loss, dtype=float)
        self.comparator_loss = np.asarray(self.comparator_loss, dtype=float)
        if self.learner_loss.shape != self.comparator_loss.shape:
            raise ValueError("learner and comparator loss lengths differ")

    def __len__(self) -> int:
        return self.learner_loss.shape[0]

    @property
    def cum_regret(self) -> np.ndarray:
        return np.cumsum(self.learner_loss - self.comparator_loss)

    def write_csv(self, path) -> None:
        cum = self.cum_regret
        with open(path, "w", newline="") as fh:
            fh.write("round,learner_loss,comparator_loss,cum_regret\n")
            for t in range(len(self)):
                fh.write(
                    f"{t + 1},{self.learner_loss[t]:.17g},"
                    f"{self.comparator_loss[t]:.17g},{cum[t]:.17g}\n"
                )


def dynamic_regret(trace: RegretTrace) -> float:
    """Total learner loss minus total comparator loss."""
    return float(np.sum(trace.learner_loss) - np.sum(trace.comparator_loss))


def interval_regret(
    losses: list,
    played_losses: np.ndarray,
    interval: tuple[int, int],
    comparator: np.ndarray,
) -> float:
    """Regret on [r, s] (1-indexed, inclusive) against one fixed point."""
    r, s = interval
    horizon = len(losses)
    if not (1 <= r <= s <= horizon):
        raise ValueError(f"interval [{r}, {s}] invalid for horizon {horizon}")
    played = np.asarray(played_losses, dtype=float)
    comp = sum(losses[t].value(comparator) for t in range(r - 1, s))
    return float(np.sum(played[r - 1 : s]) - comp)


def penalized_regret(trace: RegretTrace, gram: np.ndarray, ridge: float) -> float:
    """Cumulative squared error minus the penalized offline optimum."""
    if trace.predictions is None or trace.labels is None:
        raise ValueError("trace has no recorded predictions/labels")
    err = float(np.sum((trace.predictions - trace.labels) ** 2))
    return err - offline_penalized_optimum(gram, trace.labels, ridge)


# ---------------------------------------------------------------------------
# Environments
# ---------------------------------------------------------------------------

ENVIRONMENT_KINDS = (
    "piecewise-constant-drift",
    "random-walk-drift",
    "kernel-regression-drift",
)


@dataclass
class Environment:
    """One generated stream: losses (or labelled points) plus comparators."""

    kind: str
    horizon: int
    dim: int
    seed: int
    vt_target: float
    comparators: ComparatorSequence
    certificate: CurvatureCertificate
    # quadratic streams
    losses: list | None = None
    domain: Ball | None = None
    # kernel-regression streams
    xs: np.ndarray | None = None
    ys: np.ndarray | None = None
    anchors: np.ndarray | None = None
    anchor_gram: np.ndarray | None = None
    bandwidth: float | None = None
    clip: float | None = None
    comparator_loss: np.ndarray = field(default=None)  # type: ignore[assignment]

    @property
    def realized_variation(self) -> float:
        return self.comparators.variation


def _step_within_ball(
    rng: np.random.Generator,
    point: np.ndarray,
    step: float,
    radius: float,
    gram: np.ndarray | None = None,
) -> np.ndarray:
    """Move ``point`` by exactly ``step`` (in the given norm) staying inside
    the radius ball; falls back to stepping straight toward the origin."""

    def norm(v):
        if gram is None:
            return float(np.linalg.norm(v))
        return float(np.sqrt(max(v @ gram @ v, 0.0)))

    for _ in range(64):
        d = rng.standard_normal(point.shape[0])
        n = norm(d)
        if n == 0.0:
            continue
        candidate = point + d * (step / n)
        if norm(candidate) <= radius:
            return candidate
    n = norm(point)
    if n == 0.0:
        raise ConfigError(f"drift step {step} cannot stay inside radius {radius}")
    return point * (1.0 - step / n)


def _drift_centers(
    rng: np.random.Generator,
    kind: str,
    horizon: int,
    dim: int,
    radius: float,
    vt_target: float,
    switches: int | None,
) -> np.ndarray:
    start = sample_in_ball(rng, dim, 0.5 * radius)
    centers = np.tile(start, (horizon, 1))
    if vt_target == 0.0 or horizon == 1:
        return centers
    if kind == "random-walk-drift":
        step = vt_target / (horizon - 1)
        if step > radius:
            raise ConfigError(
                f"variation target {vt_target} needs per-step drift {step} > radius {radius}"
            )
        for t in range(1, horizon):
            centers[t] = _step_within_ball(rng, centers[t - 1], step, radius)
    else:  # piecewise-constant-drift
        m = int(switches) if switches else max(1, int(round(np.sqrt(horizon))))
        m = min(m, horizon - 1)
        jump = vt_target / m
        if jump > 1.9 * radius:
            raise ConfigError(
                f"variation target {vt_target} over {m} switches needs jump {jump} "
                f"> ball diameter margin"
            )
        switch_rounds = np.linspace(1, horizon - 1, m).round().astype(int)
        cur = start
        pos = 0
        for t in range(1, horizon):
            if pos < m and t == switch_rounds[pos]:
                cur = _step_within_ball(rng, cur, jump, radius)
                pos += 1
            centers[t] = cur
    return centers


def _require_achievable(vt_target: float, horizon: int, diameter: float) -> None:
    if vt_target < 0:
        raise ConfigError(f"variation target must be >= 0, got {vt_target}")
    if vt_target > diameter * horizon:
        raise ConfigError(
            f"variation target {vt_target} unachievable: exceeds D*T = {diameter * horizon}"
        )


def _check_realized(env: Environment) -> Environment:
    realized = env.realized_variation
    target = env.vt_target
    if target == 0.0:
        ok = realized == 0.0
    else:
        ok = abs(realized - target) <= VT_RELATIVE_TOL * target
    if not ok:
        raise ConfigError(
            f"realized variation {realized} misses target {target} by more than "
            f"{VT_RELATIVE_TOL:.0%}"
        )
    return env


def generate_environment(
    kind: str,
    horizon: int,
    dim: int,
    seed: int,
    vt_target: float,
    *,
    curvature: float = 1.0,
    ball_radius: float = 2.0,
    switches: int | None = None,
    bandwidth: float = 1.0,
    clip: float = 1.0,
    noise: float = 0.05,
    anchor_count: int = 12,
) -> Environment:
    """Deterministically generate one stream for the requested drift kind.

    Comparators are the per-round loss minimizers (quadratic kinds) or the
    drifting target function itself (kernel kind), so comparator losses are
    analytic and realized variation matches the target.
    """
    if kind not in ENVIRONMENT_KINDS:
        raise ConfigError(f"unknown environment kind {kind!r}")
    if horizon < 1:
        raise ConfigError(f"horizon must be >= 1, got {horizon}")
    rng = np.random.default_rng(np.random.SeedSequence((seed, horizon, dim)))

    if kind in ("piecewise-constant-drift", "random-walk-drift"):
        domain = Ball(dim, ball_radius)
        _require_achievable(vt_target, horizon, domain.diameter)
        centers = _drift_centers(rng, kind, horizon, dim, ball_radius, vt_target, switches)
        losses = [QuadraticLoss(c, curvature, domain) for c in centers]
        max_center = float(np.max(np.linalg.norm(centers, axis=1)))
        g = curvature * (ball_radius + max_center)
        cert = CurvatureCertificate(
            strong_convexity=curvature,
            exp_concavity=curvature / g**2,
            grad_bound=g,
            diameter=domain.diameter,
        )
        env = Environment(
            kind=kind,
            horizon=horizon,
            dim=dim,
            seed=seed,
            vt_target=vt_target,
            comparators=ComparatorSequence(centers),
            certificate=cert,
            losses=losses,
            domain=domain,
            comparator_loss=np.zeros(horizon),
        )
        return _check_realized(env)

    # kernel-regression-drift
    _require_achievable(vt_target, horizon, 2.0 * clip)
    anchors = rng.uniform(-1.0, 1.0, size=(anchor_count, dim))
    k_anchor = gram_matrix(anchors, bandwidth)

    def rkhs_norm(coef):
        return float(np.sqrt(max(coef @ k_anchor @ coef, 0.0)))

    coef0 = rng.standard_normal(anchor_count)
    n0 = rkhs_norm(coef0)
    coef0 = coef0 * (0.5 * clip / n0) if n0 > 0 else coef0
    coefs = np.tile(coef0, (horizon, 1))
    if vt_target > 0.0 and horizon > 1:
        step = vt_target / (horizon - 1)
        if step > clip:
            raise ConfigError(
                f"variation target {vt_target} needs per-step RKHS drift {step} > B {clip}"
            )
        for t in range(1, horizon):
            coefs[t] = _step_within_ball(rng, coefs[t - 1], step, clip, gram=k_anchor)

    xs = rng.uniform(-1.0, 1.0, size=(horizon, dim))
    target_vals = np.array(
        [float(coefs[t] @ kernel_vector(anchors, xs[t], bandwidth)) for t in range(horizon)]
    )
    ys = np.clip(target_vals + noise * rng.standard_normal(horizon), -clip, clip)
    cert = CurvatureCertificate(
        strong_convexity=0.0,
        exp_concavity=1.0 / (8.0 * clip**2),
        grad_bound=2.0 * clip**2,
        diameter=2.0 * clip,
    )
    env = Environment(
        kind=kind,
        horizon=horizon,
        dim=dim,
        seed=seed,
        vt_target=vt_target,
        comparators=ComparatorSequence(coefs, gram=k_anchor),
        certificate=cert,
        xs=xs,
        ys=ys,
        anchors=anchors,
        anchor_gram=k_anchor,
        bandwidth=bandwidth,
        clip=clip,
        comparator_loss=(target_vals - ys) ** 2,
    )
    return _check_realized(env)
