"""Expert-restart aggregation with exponential weights.

One base learner is born per round; the pool's predictions are combined by
a probability vector that is re-weighted exponentially by each expert's own
loss, then mixed with the newcomer at weight 1/(t+1). Optional pruning
gives the expert born at round j a lifetime of 2^(2 + z(j)) rounds, where
z(j) is the exponent of 2 in j; this geometric schedule keeps O(log t)
experts alive while every suffix interval stays covered.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError, NumericalError

PRUNING_MODES = ("none", "aflh")


def expert_lifetime(birth: int) -> int:
    """Rounds an expert born at ``birth`` stays alive: 2^(2 + z(birth))."""
    if birth < 1:
        raise ValueError(f"birth round must be >= 1, got {birth}")
    z = (birth & -birth).bit_length() - 1  # exponent of 2 in birth
    return 2 ** (2 + z)


def alive_births(t: int) -> set[int]:
    """Birth rounds alive at round t under the geometric lifetime schedule.

    Expert j is alive at rounds j, ..., j + lifetime(j) - 1. The set has
    O(log t) elements and always contains a birth in [ceil(t/2), t].
    """
    if t < 1:
        raise ValueError(f"round must be >= 1, got {t}")
    return {j for j in range(1, t + 1) if t < j + expert_lifetime(j)}


@dataclass
class _Expert:
    birth: int
    learner: object
    weight: float


@dataclass(frozen=True)
class FlhRound:
    """Record of one meta round: what was played and what each expert did."""

    index: int
    prediction: np.ndarray | float
    meta_loss: float
    births: tuple[int, ...]
    expert_losses: np.ndarray
    expert_weights: np.ndarray


class Flh:
    """Meta-algorithm over a growing pool of base learners.

    ``spawn`` builds a fresh base learner given its birth round. Weights
    always form a probability vector; with pruning="aflh" expired experts
    are dropped and the survivors renormalized.
    """

    def __init__(self, zeta: float, spawn: Callable[[int], object], pruning: str = "none"):
        if zeta <= 0:
            raise ConfigError(f"learning rate zeta must be > 0, got {zeta}")
        if pruning not in PRUNING_MODES:
            raise ConfigError(f"pruning must be one of {PRUNING_MODES}, got {pruning!r}")
        self.zeta = float(zeta)
        self.spawn = spawn
        self.pruning = pruning
        self.round_index = 1
        self.experts: list[_Expert] = [_Expert(1, spawn(1), 1.0)]

    @property
    def weights(self) -> np.ndarray:
        return np.array([e.weight for e in self.experts])

    @property
    def births(self) -> tuple[int, ...]:
        return tuple(e.birth for e in self.experts)

    def combine(self, predictions: list) -> np.ndarray | float:
        """Weighted average of one prediction per live expert."""
        if len(predictions) != len(self.experts):
            raise ValueError(
                f"got {len(predictions)} predictions for {len(self.experts)} experts"
            )
        w = self.weights
        stacked = np.asarray(predictions, dtype=float)
        if stacked.ndim == 1:
            return float(w @ stacked)
        return w @ stacked

    def update_weights(self, losses: np.ndarray) -> None:
        """Exponential reweighting by expert losses, then newcomer injection.

        The shift by the smallest loss before exponentiation is the usual
        log-sum-exp guard; normalized weights are invariant to it.
        """
        losses = np.asarray(losses, dtype=float)
        if losses.shape != (len(self.experts),):
            raise ValueError(
                f"got {losses.shape[0] if losses.ndim else 'scalar'} losses "
                f"for {len(self.experts)} experts"
            )
        if not np.all(np.isfinite(losses)):
            raise ValueError("expert losses must be finite")
        scaled = -self.zeta * losses
        w = self.weights * np.exp(scaled - scaled.max())
        total = float(w.sum())
        if not np.isfinite(total) or total <= 0.0:
            raise NumericalError("expert weights collapsed to zero")
        w /= total

        next_round = self.round_index + 1
        w *= 1.0 - 1.0 / next_round
        for expert, wi in zip(self.experts, w):
            expert.weight = float(wi)
        self.experts.append(_Expert(next_round, self.spawn(next_round), 1.0 / next_round))

        if self.pruning == "aflh":
            self.experts = [
                e for e in self.experts if next_round < e.birth + expert_lifetime(e.birth)
            ]
            total = sum(e.weight for e in self.experts)
            for e in self.experts:
                e.weight /= total

        self.round_index = next_round

    def play_round(self, loss) -> FlhRound:
        """Full convex-protocol round against an evaluable loss.

        Each expert is queried at its own iterate, the weighted average is
        played, every expert descends on the gradient at its own point, and
        the weights are updated by the experts' own losses.
        """
        preds = [e.learner.predict() for e in self.experts]
        used_weights = self.weights
        played = self.combine(preds)
        meta_loss = loss.value(played)
        expert_losses = np.array([loss.value(p) for p in preds])
        for expert, p in zip(self.experts, preds):
            expert.learner.step(loss.grad(p))
        record = FlhRound(
            index=self.round_index,
            prediction=played,
            meta_loss=meta_loss,
            births=self.births,
            expert_losses=expert_losses,
            expert_weights=used_weights,
        )
        self.update_weights(expert_losses)
        return record

    def play_regression_round(self, x: np.ndarray, y: float) -> FlhRound:
        """Squared-error protocol round: predict y_hat for x, observe y.

        Experts are scored by their own squared errors and fed the raw
        (x, y) pair.
        """
        preds = np.array([e.learner.predict(x) for e in self.experts])
        used_weights = self.weights
        y_hat = float(used_weights @ preds)
        expert_losses = (preds - y) ** 2
        meta_loss = (y_hat - y) ** 2
        for expert in self.experts:
            expert.learner.update(x, y)
        record = FlhRound(
            index=self.round_index,
            prediction=y_hat,
            meta_loss=meta_loss,
            births=self.births,
            expert_losses=expert_losses,
            expert_weights=used_weights,
        )
        self.update_weights(expert_losses)
        return record
