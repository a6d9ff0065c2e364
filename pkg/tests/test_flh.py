"""Meta-algorithm: weight updates, lifetimes, full rounds vs a reference."""

import math

import numpy as np
import pytest

from saoco import (
    Ball,
    Flh,
    OgdLearner,
    QuadraticLoss,
    alive_births,
    expert_lifetime,
    generate_environment,
    interval_regret,
)


def make_flh(zeta=0.5, dim=2, radius=1.0, curvature=1.0, pruning="none"):
    dom = Ball(dim, radius)
    return Flh(zeta, lambda birth: OgdLearner(dom, curvature), pruning=pruning), dom


class TestLifetimes:
    def test_round_one_single_expert(self):
        assert alive_births(1) == {1}

    def test_birth_four_lifetime(self):
        # z(4) = 2, lifetime 16: alive through round 19, dead at 20
        assert expert_lifetime(4) == 16
        assert 4 in alive_births(19)
        assert 4 not in alive_births(20)

    def test_alive_count_logarithmic(self):
        for t in range(1, 4097):
            assert len(alive_births(t)) <= 4 * (math.log2(t) + 1)

    def test_recent_birth_always_alive(self):
        for t in range(1, 2049):
            assert any(math.ceil(t / 2) <= j <= t for j in alive_births(t))


class TestCombine:
    def test_single_expert_passthrough(self):
        flh, _ = make_flh()
        pred = np.array([0.3, -0.1])
        assert np.allclose(flh.combine([pred]), pred)

    def test_two_experts_half_half(self):
        flh, _ = make_flh(zeta=1.0)
        flh.update_weights(np.array([0.0]))  # second expert joins at weight 1/2
        out = flh.combine([np.array([0.0]), np.array([2.0])])
        assert np.allclose(out, [1.0])

    def test_random_weights_dot_product(self):
        rng = np.random.default_rng(2)
        flh, _ = make_flh(zeta=1.0, dim=1)
        for _ in range(4):  # grow pool to 5 experts
            flh.update_weights(rng.uniform(0, 1, size=len(flh.experts)))
        preds = [rng.standard_normal(1) for _ in range(5)]
        expected = sum(w * p for w, p in zip(flh.weights, preds))
        assert np.allclose(flh.combine(preds), expected, atol=1e-12)

    def test_length_mismatch_rejected(self):
        flh, _ = make_flh()
        with pytest.raises(ValueError):
            flh.combine([np.zeros(2), np.zeros(2)])


class TestUpdateWeights:
    def test_first_round_forced_half_half(self):
        flh, _ = make_flh(zeta=0.7)
        flh.update_weights(np.array([123.4]))  # any loss: single expert renormalizes to 1
        assert np.allclose(flh.weights, [0.5, 0.5])
        assert flh.births == (1, 2)

    def test_equal_losses_preserve_ratios(self):
        flh, _ = make_flh(zeta=1.0)
        flh.update_weights(np.array([0.0]))
        flh.update_weights(np.array([1.0, 1.0]))
        # exp factors cancel: (1/2, 1/2) scaled by 2/3, newcomer 1/3
        assert np.allclose(flh.weights, [1 / 3, 1 / 3, 1 / 3])

    def test_three_expert_hand_computation(self):
        flh, _ = make_flh(zeta=1.0)
        # force a uniform prior over three experts
        flh.update_weights(np.array([0.0]))
        flh.update_weights(np.array([1.0, 1.0]))
        flh.update_weights(np.array([0.0, 1.0, 2.0]))
        raw = np.array([1.0, np.exp(-1.0), np.exp(-2.0)]) / 3.0
        step3 = raw / raw.sum()
        expected = np.concatenate([step3 * 0.75, [0.25]])
        assert np.allclose(flh.weights, expected, atol=1e-12)

    def test_nan_loss_rejected(self):
        flh, _ = make_flh()
        with pytest.raises(ValueError):
            flh.update_weights(np.array([np.nan]))


class TestRounds:
    def test_single_round_matches_base_learner(self):
        flh, dom = make_flh(zeta=0.5)
        loss = QuadraticLoss(np.array([0.5, 0.0]), 1.0, dom)
        sole = flh.experts[0].learner.predict().copy()
        rec = flh.play_round(loss)
        assert np.allclose(rec.prediction, sole)

    def test_identical_experts_equal_meta_prediction(self):
        # experts that always agree: the weighted average must equal them
        class Constant:
            def __init__(self, point):
                self.point = point

            def predict(self):
                return self.point

            def step(self, g):
                pass

        point = np.array([0.2, -0.3])
        dom = Ball(2, 1.0)
        flh = Flh(0.5, lambda birth: Constant(point))
        rng = np.random.default_rng(3)
        for _ in range(30):
            c = rng.uniform(-0.5, 0.5, size=2)
            rec = flh.play_round(QuadraticLoss(c, 1.0, dom))
            assert np.allclose(rec.prediction, point, atol=1e-12)

    def test_fifty_rounds_match_reference_implementation(self):
        # from-scratch reimplementation of the meta update and OGD recursion
        rng = np.random.default_rng(9)
        zeta, h, radius = 0.8, 2.0, 1.0
        centers = [rng.uniform(-0.8, 0.8, size=2) for _ in range(50)]
        dom = Ball(2, radius)

        flh, _ = make_flh(zeta=zeta, dim=2, radius=radius, curvature=h)
        main_weights, main_preds = [], []
        for c in centers:
            rec = flh.play_round(QuadraticLoss(c, h, dom))
            main_weights.append(rec.expert_weights)
            main_preds.append(rec.prediction)

        # reference: explicit lists, direct exponentials, no shift
        def project(x):
            n = np.linalg.norm(x)
            return x if n <= radius else x * (radius / n)

        iterates = [np.zeros(2)]
        clocks = [1]
        weights = [1.0]
        for t, c in enumerate(centers, start=1):
            w = np.array(weights)
            ref_pred = sum(wi * xi for wi, xi in zip(w, iterates))
            assert np.allclose(ref_pred, main_preds[t - 1], atol=1e-12)
            assert np.allclose(w, main_weights[t - 1], atol=1e-12)
            losses = np.array([0.5 * h * np.sum((x - c) ** 2) for x in iterates])
            for i in range(len(iterates)):
                g = h * (iterates[i] - c)
                iterates[i] = project(iterates[i] - g / (h * clocks[i]))
                clocks[i] += 1
            hat = w * np.exp(-zeta * losses)
            hat = hat / hat.sum()
            weights = list(hat * (1 - 1 / (t + 1))) + [1 / (t + 1)]
            iterates.append(np.zeros(2))
            clocks.append(1)

    def test_weights_stay_on_simplex(self):
        for pruning in ("none", "aflh"):
            flh, dom = make_flh(zeta=0.3, pruning=pruning)
            rng = np.random.default_rng(11)
            for _ in range(120):
                flh.play_round(QuadraticLoss(rng.uniform(-0.5, 0.5, size=2), 1.0, dom))
                w = flh.weights
                assert np.all(w >= 0)
                assert abs(w.sum() - 1.0) <= 1e-9

    def test_aflh_pool_matches_schedule(self):
        flh, dom = make_flh(zeta=0.3, pruning="aflh")
        rng = np.random.default_rng(13)
        for t in range(1, 200):
            assert set(flh.births) == alive_births(t)
            flh.play_round(QuadraticLoss(rng.uniform(-0.5, 0.5, size=2), 1.0, dom))


class TestMetaRegret:
    def _run(self, pruning, env):
        flh = Flh(
            env.certificate.exp_concavity,
            lambda birth: OgdLearner(env.domain, env.losses[0].curvature),
            pruning=pruning,
        )
        return np.array([flh.play_round(loss).meta_loss for loss in env.losses])

    def test_aflh_within_logarithmic_factor_of_flh(self):
        # interval regret of the pruned variant stays within 3x + ln(T)/zeta
        horizon = 256
        env = generate_environment(
            "piecewise-constant-drift", horizon, 3, 21, 8.0, switches=6
        )
        zeta = env.certificate.exp_concavity
        played_full = self._run("none", env)
        played_pruned = self._run("aflh", env)
        centers = env.comparators.points
        for r, length in [(1, 64), (65, 64), (129, 128), (1, 256), (33, 32)]:
            s = r + length - 1
            fixed = env.domain.project(centers[r - 1 : s].mean(axis=0))
            ir_full = interval_regret(env.losses, played_full, (r, s), fixed)
            ir_pruned = interval_regret(env.losses, played_pruned, (r, s), fixed)
            bound = 3.0 * max(ir_full, 0.0) + np.log(horizon) / zeta
            assert ir_pruned <= bound + 1e-9

    def test_deterministic_replay(self):
        env1 = generate_environment("random-walk-drift", 80, 2, 33, 2.0)
        env2 = generate_environment("random-walk-drift", 80, 2, 33, 2.0)
        a = self._run("aflh", env1)
        b = self._run("aflh", env2)
        assert np.array_equal(a, b)
