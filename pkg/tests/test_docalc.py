import itertools

import numpy as np
import pytest

from dtcausal.docalc import (BackdoorError, IdentificationError, backdoor_estimand,
                             identify, rule_applicable)
from dtcausal.estimands import (Prob, ScmTables, evaluate_estimand,
                                is_observational, parse_query, render)
from dtcausal.regimes import augment
from dtcausal.scm import (DiscreteScm, bow_pair, do_joint, exact_joint,
                          observational_joint, random_scm)
from dtcausal import fixtures

from oracles import random_dag

P = lambda t, o=(), d=(): Prob(frozenset(t), frozenset(o), frozenset(d))


class TestRuleApplicable:
    def test_rule2_exchange_when_unconfounded(self, chain_id):
        check = rule_applicable(chain_id, 2, set(), {"Y"}, {"X"})
        assert check.holds
        assert "F_X" in str(check.statement)

    def test_rule3_drops_ineffective_action(self, reversed_id):
        assert rule_applicable(reversed_id, 3, set(), {"Y"}, {"X"}).holds

    def test_rule2_blocked_by_confounding(self, confounded_id):
        assert not rule_applicable(confounded_id, 2, set(), {"Y"}, {"T"}).holds

    def test_disjointness_enforced(self, chain_id):
        with pytest.raises(IdentificationError):
            rule_applicable(chain_id, 1, {"X"}, {"Y"}, {"X"})

    def test_missing_regime_node(self, confounded_id):
        from dtcausal.regimes import RegimeError
        with pytest.raises(RegimeError):
            rule_applicable(confounded_id, 2, set(), {"T"}, {"Y"})

    def test_rule1_redundancy_on_augmented_graphs(self):
        # wherever rule 1 is admitted, the same rewrite is reachable by
        # un-exchanging with rule 2 and then deleting with rule 3
        for seed in range(40):
            rng = np.random.default_rng(seed)
            g = random_dag(rng, 4, 0.5)
            id_ = augment(g, g.nodes)
            for x, y, z in itertools.permutations(sorted(g.nodes), 3):
                w = set(g.nodes) - {x, y, z}
                if rule_applicable(id_, 1, {x}, {y}, {z}, w).holds:
                    assert rule_applicable(id_, 2, {x}, {y}, {z}, w).holds
                    assert rule_applicable(id_, 3, {x}, {y}, {z}, w).holds


class TestRuleSoundness:
    """Admitted rewrites preserve the evaluated probability (small sweep;
    the hundred-model version runs in the acceptance suite)."""

    def test_rules_preserve_probabilities(self):
        checked = 0
        for seed in range(10):
            m = random_scm(n_nodes=4, max_states=2, edge_density=0.5, seed=seed)
            m = m.with_regimes(sorted(m.diagram.stochastic_nodes))
            checked += check_rules_numerically(m, max_w=1)
        assert checked > 50


def check_rules_numerically(m: DiscreteScm, max_w: int = 1, eps: float = 1e-10) -> int:
    """Verify every admitted singleton rewrite on this model; returns count."""
    nodes = sorted(m.diagram.stochastic_nodes)
    tables = ScmTables(m)
    checked = 0
    for y, z, x in itertools.permutations(nodes, 3):
        rest = [n for n in nodes if n not in (y, z, x)]
        w_choices = [frozenset()] + [frozenset({r}) for r in rest[:max_w]]
        for w in w_choices:
            for rule in (1, 2, 3):
                for xs in (frozenset(), frozenset({x})):
                    check = rule_applicable(m.diagram, rule, xs, {y}, {z}, w)
                    if not check.holds:
                        continue
                    checked += 1
                    _assert_rule_equality(m, tables, rule, xs, y, z, w, eps)
    return checked


def _assert_rule_equality(m, tables, rule, xs, y, z, w, eps):
    space = m.space
    for x_vals in space.configurations(sorted(xs)):
        do_x = dict(zip(sorted(xs), x_vals))
        t_x = tables.for_interventions(do_x)
        for z_val in space.states(z):
            t_xz = tables.for_interventions({**do_x, z: z_val})
            for w_vals in space.configurations(sorted(w)):
                given_w = dict(zip(sorted(w), w_vals))
                for y_val in space.states(y):
                    if rule == 1:
                        if t_x.event_mass({**given_w, z: z_val}) <= 0 \
                                or t_x.event_mass(given_w) <= 0:
                            continue
                        lhs = t_x.prob({y: y_val}, {**given_w, z: z_val})
                        rhs = t_x.prob({y: y_val}, given_w)
                    elif rule == 2:
                        if t_xz.event_mass(given_w) <= 0 \
                                or t_x.event_mass({**given_w, z: z_val}) <= 0:
                            continue
                        lhs = t_xz.prob({y: y_val}, given_w)
                        rhs = t_x.prob({y: y_val}, {**given_w, z: z_val})
                    else:
                        if t_xz.event_mass(given_w) <= 0 or t_x.event_mass(given_w) <= 0:
                            continue
                        lhs = t_xz.prob({y: y_val}, given_w)
                        rhs = t_x.prob({y: y_val}, given_w)
                    assert abs(lhs - rhs) <= eps, \
                        (rule, xs, y, z, w, y_val, z_val, x_vals, w_vals, lhs, rhs)


class TestBackdoor:
    def test_fig8_adjustment(self, confounded_id):
        e = backdoor_estimand(confounded_id, "T", "Y", {"U"})
        assert render(e, {"T": "1", "Y": "1"}) == \
            "sum_{U} P(U=u) P(Y=1 | T=1, U=u)"
        assert is_observational(e)

    def test_empty_set_collapses(self, chain_id):
        e = backdoor_estimand(chain_id, "X", "Y", set())
        assert render(e) == "P(Y | X)"

    def test_mediator_rejected(self):
        from dtcausal.graphs import Dag
        diagram = augment(Dag.build([("T", "M"), ("M", "Y")]), ["T"])
        with pytest.raises(BackdoorError) as err:
            backdoor_estimand(diagram, "T", "Y", {"M"})
        assert "F_T" in str(err.value.statement)

    def test_matches_oracle_on_random_models(self):
        for seed in range(15):
            m = fixtures.confounded_scm(seed=seed, u_states=3)
            obs = observational_joint(m)
            e = backdoor_estimand(m.diagram, "T", "Y", {"U"})
            for t_val in ("0", "1"):
                got = evaluate_estimand(e, obs, {"T": t_val, "Y": "1"})
                want = do_joint(m, {"T": t_val}).prob({"Y": "1"})
                assert got == pytest.approx(want, abs=1e-10)


class TestIdentify:
    def test_unconfounded_query(self, chain_id):
        result = identify(chain_id, P("Y", (), "X"))
        assert result.found and render(result.estimand) == "P(Y | X)"

    def test_ineffective_treatment(self, reversed_id):
        result = identify(reversed_id, P("Y", (), "X"))
        assert result.found and render(result.estimand) == "P(Y)"

    def test_backdoor_found_through_search(self, confounded_id):
        result = identify(confounded_id, P("Y", (), "T"))
        assert result.found
        assert render(result.estimand) == "sum_{U} P(U=u) P(Y | T, U=u)"
        kinds = [s.kind for s in result.steps]
        assert kinds == ["extend", "rule2", "rule3"]

    def test_bow_is_not_found(self):
        diagram, _, _ = bow_pair()
        result = identify(diagram, P("Y", (), "X"), depth=6)
        assert not result.found and not result.truncated

    def test_identified_value_matches_oracle(self):
        for seed in range(10):
            m = fixtures.confounded_scm(seed=seed)
            result = identify(m.diagram, P("Y", (), "T"))
            assert result.found
            got = evaluate_estimand(result.estimand, observational_joint(m),
                                    {"T": "1", "Y": "1"})
            want = do_joint(m, {"T": "1"}).prob({"Y": "1"})
            assert got == pytest.approx(want, abs=1e-10)

    def test_depth_must_be_positive(self, chain_id):
        with pytest.raises(IdentificationError):
            identify(chain_id, P("Y", (), "X"), depth=0)

    def test_latent_variables_cannot_be_queried(self):
        diagram, _, _ = bow_pair()
        with pytest.raises(IdentificationError, match="latent"):
            identify(diagram, P("U", (), "X"))

    def test_ace_from_identified_terms(self):
        # assemble the treated-minus-control contrast from the estimand
        m = fixtures.confounded_scm(seed=21)
        result = identify(m.diagram, P("Y", (), "T"))
        obs = observational_joint(m)

        def mean_under(t_val):
            return sum(float(y) * evaluate_estimand(result.estimand, obs,
                                                    {"T": t_val, "Y": y})
                       for y in m.space.states("Y"))

        got = mean_under("1") - mean_under("0")
        want = do_joint(m, {"T": "1"}).expectation("Y") \
            - do_joint(m, {"T": "0"}).expectation("Y")
        assert got == pytest.approx(want, abs=1e-10)
