from fractions import Fraction as F

import pytest

from bidcharge import Arena, BiddingMechanism, ExactnessFallbackWarning, buchi_threshold, limit_threshold, load_fixture
from bidcharge.errors import MissingVariable, NonRichmanMILPUnsupported
from bidcharge.export import (
    LinearConstraint,
    ModelDocument,
    big_m,
    check_model_residual,
    emit,
    emit_lp,
    emit_smt,
    export_buchi_bilevel,
    export_reach_etr,
    export_reach_milp,
    ident,
    parse,
)

RICHMAN = BiddingMechanism.richman()


def h_values(f):
    return {f"h_{ident(v)}": x for v, x in f.as_dict().items()}


def solved(name):
    p = load_fixture(name)
    return p, limit_threshold(p.arena, p.mechanism, p.objective, 1)


class TestMILP:
    def test_detour_shape(self):
        p = load_fixture("budget_detour")
        m = export_reach_milp(p.arena, p.objective.vertices, RICHMAN)
        assert m.big_m > max(p.arena.total_factor(v) for v in p.arena.vertices)
        names = set(m.variables)
        for v in p.arena.vertices:
            assert {f"h_{v}", f"hp_{v}", f"hm_{v}"} <= names
            for w in p.arena.successors(v):
                assert {f"b_{v}_{w}", f"c_{v}_{w}"} <= names
        binaries = [n for n, var in m.variables.items() if var.kind == "binary"]
        selectors = sum(2 * len(p.arena.successors(v)) for v in p.arena.vertices)
        clamp_binaries = 2 * (len(p.arena) - len(p.objective.vertices))
        assert len(binaries) == selectors + clamp_binaries

    def test_limit_satisfies_and_perturbation_violates(self):
        p, f = solved("budget_detour")
        m = export_reach_milp(p.arena, p.objective.vertices, RICHMAN)
        assert check_model_residual(m, h_values(f)).ok
        bumped = h_values(f)
        bumped["h_b"] += F(1, 10)
        rep = check_model_residual(m, bumped)
        assert not rep.ok
        assert "ceil_b" in {name for name, _ in rep.violated}

    def test_both_fixed_points_feasible_greatest_has_larger_objective(self):
        p, f = solved("nonunique_fixpoint")
        m = export_reach_milp(p.arena, p.objective.vertices, RICHMAN)
        zero = {f"h_{v}": F(0) for v in p.arena.vertices}
        assert check_model_residual(m, h_values(f)).ok
        assert check_model_residual(m, zero).ok
        objective = m.blocks[0].objective
        value = lambda env: sum(c * env[v] for v, c in objective)  # noqa: E731
        assert value(h_values(f)) > value(zero)

    def test_single_target_vertex(self):
        arena = Arena.from_successors({"t": ["t"]})
        m = export_reach_milp(arena, {"t"}, RICHMAN)
        assert check_model_residual(m, {"h_t": 0}).ok
        assert not check_model_residual(m, {"h_t": 1}).ok

    def test_rejects_taxed_mechanisms(self):
        p = load_fixture("poorman_two_step")
        with pytest.raises(NonRichmanMILPUnsupported):
            export_reach_milp(p.arena, p.objective.vertices, p.mechanism)

    def test_lp_text(self):
        p = load_fixture("budget_detour")
        text = emit_lp(export_reach_milp(p.arena, p.objective.vertices, RICHMAN))
        assert text.startswith("\\ kind: MILP")
        for section in ("Maximize", "Subject To", "Bounds", "Binaries", "End"):
            assert f"\n{section}\n" in text or text.endswith(f"{section}\n")

    def test_big_m_strictly_above_factors(self):
        arena = Arena.from_successors({"x": ["x"]}, {"x": (F(3, 2), 1)})
        assert big_m(arena) > arena.total_factor("x")


class TestETR:
    def test_poorman_values_satisfy(self):
        p, f = solved("poorman_two_step")
        m = export_reach_etr(p.arena, p.objective.vertices, p.mechanism)
        assert m.logic == "QF_NRA"
        assert check_model_residual(m, h_values(f)).ok

    def test_all_targets_force_zero(self):
        arena = Arena.from_successors({"x": ["y"], "y": ["x"]})
        m = export_reach_etr(arena, {"x", "y"}, RICHMAN)
        assert check_model_residual(m, {"h_x": 0, "h_y": 0}).ok
        assert not check_model_residual(m, {"h_x": F(1, 2), "h_y": 0}).ok

    def test_saturated_branch(self):
        p, f = solved("charged_safety")
        assert f.as_dict() == {"a": 1, "b": F(3, 8), "t": 0}
        m = export_reach_etr(p.arena, p.objective.vertices, RICHMAN)
        assert check_model_residual(m, h_values(f)).ok

    def test_query(self):
        p, f = solved("budget_detour")
        m = export_reach_etr(p.arena, p.objective.vertices, RICHMAN, query="c")
        rep = check_model_residual(m, h_values(f))
        assert [name for name, _ in rep.violated] == ["query"]

    def test_taxman(self):
        p = load_fixture("budget_detour")
        mech = BiddingMechanism.taxman(F(1, 3))
        f = limit_threshold(p.arena, mech, p.objective, 1)
        assert f.exact
        assert check_model_residual(export_reach_etr(p.arena, p.objective.vertices, mech), h_values(f)).ok


class TestBuchiDocument:
    def test_everything_accepting(self):
        p = load_fixture("budget_detour")
        m = export_buchi_bilevel(p.arena, set(p.arena.vertices), RICHMAN)
        zero = {f"h_{v}": F(0) for v in p.arena.vertices}
        assert check_model_residual(m, zero).ok
        assert [b.sense for b in m.blocks] == ["min", "max"]

    def test_absorbing_target(self):
        p = load_fixture("budget_detour")
        g = buchi_threshold(p.arena, RICHMAN, {"d"}, 1)
        assert check_model_residual(export_buchi_bilevel(p.arena, {"d"}, RICHMAN), h_values(g)).ok

    def test_recurrent(self):
        p = load_fixture("charged_safety_recurrent")
        # the levels approach 1 with denominators 8^k, outgrowing the exact bit budget
        with pytest.warns(ExactnessFallbackWarning):
            g = buchi_threshold(p.arena, RICHMAN, {"t"}, 1)
        assert set(g.values) == {1}
        assert check_model_residual(export_buchi_bilevel(p.arena, {"t"}, RICHMAN), h_values(g)).ok

    def test_taxed_is_quantified(self):
        p = load_fixture("budget_detour")
        mech = BiddingMechanism.taxman(F(1, 3))
        m = export_buchi_bilevel(p.arena, {"d"}, mech)
        assert m.logic == "NRA" and not m.blocks
        g = buchi_threshold(p.arena, mech, {"d"}, 1)
        assert g.exact
        rep = check_model_residual(m, h_values(g))
        assert rep.ok and rep.unchecked == ["extremal"]
        assert "(forall (" in emit_smt(m)


class TestRoundTrip:
    @pytest.mark.parametrize(
        "build",
        [
            lambda p: export_reach_milp(p.arena, p.objective.vertices, RICHMAN),
            lambda p: export_reach_etr(p.arena, p.objective.vertices, BiddingMechanism.taxman(F(2, 7)), "b"),
            lambda p: export_buchi_bilevel(p.arena, {"d", "e"}, RICHMAN),
            lambda p: export_buchi_bilevel(p.arena, {"d"}, BiddingMechanism.poorman(), "a"),
        ],
        ids=["milp", "etr", "bilevel", "quantified"],
    )
    def test_structure_survives(self, build):
        m = build(load_fixture("budget_detour"))
        again = parse(emit(m))
        assert again.structure() == m.structure()
        assert emit(again) == emit(m)

    def test_awkward_vertex_names(self):
        arena = Arena.from_successors({"v-1": ["a b", "v-1"], "a b": ["a b"]}, {"v-1": (F(1, 2), 0)})
        for m in (export_reach_milp(arena, {"a b"}, RICHMAN), export_reach_etr(arena, {"a b"}, RICHMAN)):
            assert parse(emit(m)).structure() == m.structure()


class TestResidualChecker:
    def test_missing_variable(self):
        p = load_fixture("budget_detour")
        m = export_reach_milp(p.arena, p.objective.vertices, RICHMAN)
        with pytest.raises(MissingVariable):
            check_model_residual(m, {"h_a": 0})

    def test_empty_model_vacuous(self):
        rep = check_model_residual(ModelDocument("MILP", {}), {})
        assert rep.ok and not rep.satisfied

    def test_constraints_normalised(self):
        c = LinearConstraint.make("c", [("x", F(1, 2)), ("y", F(1, 3))], "<=", F(1, 6))
        assert c.coeffs == (("x", 3), ("y", 2)) and c.rhs == 1
        assert c.slack({"x": F(0), "y": F(1, 2)}) == 0
