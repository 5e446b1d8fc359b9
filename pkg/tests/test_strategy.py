import random
from fractions import Fraction as F

import pytest

from bidcharge import (
    ADVERSARIES,
    Arena,
    BiddingMechanism,
    Configuration,
    Objective,
    ThresholdStrategy,
    ThresholdVector,
    Verdict,
    buchi_threshold,
    certify_invariant,
    derive_action,
    limit_threshold,
    load_fixture,
    simulate,
    threshold_levels,
)
from bidcharge.core import Phase
from bidcharge.strategy import explore_adversary_tree, threshold_bid

RICHMAN = BiddingMechanism.richman()


@pytest.fixture
def detour():
    return load_fixture("budget_detour")


def test_bid_formula_richman_and_poorman():
    assert threshold_bid(F(3, 4), F(5, 8), 0) == F(1, 16)
    # poorman: gap / (gap + 1)
    assert threshold_bid(F(1, 2), F(0), 1) == F(1, 3)


class TestDeriveAction:
    def test_player_one_from_level_three(self, detour):
        level3 = threshold_levels(detour.arena, RICHMAN, detour.objective, 1, 3)[3]
        act = derive_action(level3, Configuration("a", F(7, 10), Phase.POST), RICHMAN, 1, detour.arena)
        assert act.bid == F(1, 16) and act.target == "a"

    def test_player_two_from_limit(self, detour):
        f2 = limit_threshold(detour.arena, RICHMAN, detour.objective, 2)
        act = derive_action(f2, Configuration("b", F(1, 5), Phase.POST), RICHMAN, 2, detour.arena)
        assert act.bid == F(1, 4) and act.target == "c"

    def test_flat_successors_bid_nothing(self, detour):
        flat = ThresholdVector(1, detour.arena.vertices, tuple(F(1, 2) for _ in detour.arena.vertices))
        act = derive_action(flat, Configuration("c", F(1, 2), Phase.POST), RICHMAN, 1, detour.arena)
        assert act.bid == 0

    def test_bid_clipped_to_budget(self, detour):
        f = limit_threshold(detour.arena, RICHMAN, detour.objective, 1)
        act = derive_action(f, Configuration("c", F(1, 10), Phase.POST), RICHMAN, 1, detour.arena)
        assert act.bid == F(1, 10)


class TestLevelIndexed:
    def test_target_depends_on_budget_band(self, detour):
        strat = ThresholdStrategy.reach_levels(detour.arena, RICHMAN, detour.objective, 6)
        # b carries no charge, so pre- and post-charge budgets agree
        for budget, target in ((F(4, 5), "c"), (F(1, 2), "a")):
            pre, post = Configuration("b", budget), Configuration("b", budget, Phase.POST)
            assert strat.act(pre, post).target == target

    def test_level_choice(self, detour):
        strat = ThresholdStrategy.reach_levels(detour.arena, RICHMAN, detour.objective, 6)
        assert strat.level_for("a", F(1, 10)) == 4
        assert strat.level_for("d", F(0)) is None
        assert strat.level_for("d", F(1, 100)) == 0

    def test_exhaustive_opponent_loses_within_four_steps(self, detour):
        strat = ThresholdStrategy.reach_levels(detour.arena, RICHMAN, detour.objective, 6)
        leaves = explore_adversary_tree(
            detour.arena, RICHMAN, detour.objective, strat, Configuration("a", F(1, 10)), depth=4
        )
        assert leaves and all(rec.verdict is Verdict.P1_WIN for rec in leaves)
        assert max(len(rec.steps) for rec in leaves) <= 4


class TestSimulate:
    @pytest.mark.parametrize("name", list(ADVERSARIES))
    def test_player_two_traps_token(self, detour, name):
        f2 = limit_threshold(detour.arena, RICHMAN, detour.objective, 2, exact=False)
        f1 = f2.complement()
        me = ThresholdStrategy.from_limit(f2, detour.arena, RICHMAN)
        adv = ADVERSARIES[name](1, f1, detour.arena)
        rec = simulate(detour.arena, RICHMAN, detour.objective, adv, me, Configuration("b", 0.2), 50, seed=3)
        assert rec.verdict is Verdict.P2_WIN
        assert rec.final.vertex == "e"

    def test_step_limit_zero_truncates(self, detour):
        f = limit_threshold(detour.arena, RICHMAN, detour.objective, 1)
        s = ThresholdStrategy.from_limit(f, detour.arena, RICHMAN)
        rec = simulate(detour.arena, RICHMAN, detour.objective, s, s, Configuration("a", F(1, 2)), 0)
        assert rec.verdict is Verdict.TRUNCATED and rec.steps == []

    def test_seeded_runs_repeat(self, detour):
        f = limit_threshold(detour.arena, RICHMAN, detour.objective, 1, exact=False)
        me = ThresholdStrategy.from_limit(f, detour.arena, RICHMAN)
        adv = ADVERSARIES["uniform-random"](2, f, detour.arena)
        runs = [
            simulate(detour.arena, RICHMAN, detour.objective, me, adv, Configuration("b", 0.3), 30, rng=random.Random(9)).to_json()
            for _ in range(2)
        ]
        assert runs[0] == runs[1]

    def test_record_is_consistent_with_one_step_semantics(self, detour):
        from bidcharge import charge_and_normalize, resolve_bids

        f = limit_threshold(detour.arena, RICHMAN, detour.objective, 1, exact=False)
        me = ThresholdStrategy.from_limit(f, detour.arena, RICHMAN)
        adv = ADVERSARIES["eps-undercut"](2, f, detour.arena)
        rec = simulate(detour.arena, RICHMAN, detour.objective, me, adv, Configuration("b", 0.3), 30)
        for step, nxt in zip(rec.steps, rec.steps[1:] + [None]):
            assert charge_and_normalize(step.pre, detour.arena) == step.post
            after = resolve_bids(step.post, step.action1, step.action2, RICHMAN, detour.arena)
            assert after == (nxt.pre if nxt else rec.final)

    def test_illegal_strategy_reported(self, detour):
        from bidcharge.core import Action
        from bidcharge.errors import IllegalMove

        class Cheater:
            def act(self, pre, post, rng=None, opponent=None):
                return Action(0, "e")

        f = limit_threshold(detour.arena, RICHMAN, detour.objective, 1)
        me = ThresholdStrategy.from_limit(f, detour.arena, RICHMAN)
        with pytest.raises(IllegalMove) as err:
            simulate(detour.arena, RICHMAN, detour.objective, me, Cheater(), Configuration("a", F(1, 2)), 5)
        assert err.value.player == 2


class TestCertifyInvariant:
    def test_detour_player_one(self, detour):
        f = limit_threshold(detour.arena, RICHMAN, detour.objective, 1)
        rep = certify_invariant(detour.arena, RICHMAN, f, 1, trials=100)
        assert rep.ok, rep.summary()

    def test_safety_player_keeps_out(self):
        p = load_fixture("charged_safety")
        f2 = limit_threshold(p.arena, RICHMAN, p.objective, 2)
        rep = certify_invariant(p.arena, RICHMAN, f2, 2, trials=100)
        assert rep.ok and "t" not in rep.visited

    def test_corrupted_vector_caught(self, detour):
        f = limit_threshold(detour.arena, RICHMAN, detour.objective, 1)
        bad = f.with_values({"b": f["b"] - F(1, 5)})
        rep = certify_invariant(detour.arena, RICHMAN, bad, 1, trials=100)
        assert rep.violations
        first = rep.violations[0]
        assert first.verdict is Verdict.INVARIANT_VIOLATION and first.violation_step is not None

    def test_buchi_two_phase(self):
        # from p the token reaches x, which splits between a loop through y and a sink
        arena = Arena.from_successors(
            {"p": ["p", "x"], "x": ["w", "sink"], "w": ["y"], "y": ["w"], "sink": ["sink"]},
            {"p": (1, 0)},
        )
        g = buchi_threshold(arena, RICHMAN, {"y"}, 1, exact=False)
        assert g["x"] == pytest.approx(0.5) and g["p"] == 0
        strat = ThresholdStrategy.buchi_two_phase(arena, RICHMAN, g, {"y"})
        rep = certify_invariant(arena, RICHMAN, g, 1, trials=100, strategy=strat)
        assert rep.ok, rep.summary()

    def test_player_two_tiny_budget_keeps_precision(self):
        # Player 1 is charged on every visit to x and can never reach goal, so
        # Player 2's share shrinks geometrically but never reaches 0
        arena = Arena.from_successors({"x": ["x", "sink"], "sink": ["sink"], "goal": ["goal"]}, {"x": (2, 0)})
        f2 = limit_threshold(arena, RICHMAN, Objective.reach({"goal"}), 2)
        assert f2["x"] == 0
        rep = certify_invariant(arena, RICHMAN, f2, 2, trials=20, step_limit=60)
        assert rep.ok, rep.summary()
        assert "x" in rep.visited
