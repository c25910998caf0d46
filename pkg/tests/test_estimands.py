import numpy as np
import pytest

from dtcausal.estimands import (Const, EstimandError, Prob, Product, Quotient,
                                ScmTables, SingleTable, Sum, evaluate_estimand,
                                is_observational, normalize, parse_query,
                                render, variables)
from dtcausal.scm import do_joint, observational_joint
from dtcausal.tables import ZeroProbabilityError
from dtcausal import fixtures

P = lambda t, o=(), d=(): Prob(frozenset(t), frozenset(o), frozenset(d))


class TestParseQuery:
    def test_simple_do(self):
        q, values = parse_query("P(Y=1 | do(X=1))")
        assert q == P("Y", (), "X")
        assert values == {"Y": "1", "X": "1"}

    def test_mixed_conditioners(self):
        q, values = parse_query("P(Y | do(X), Z)")
        assert q == P("Y", "Z", "X")
        assert values == {}

    def test_multi_variable_do(self):
        q, values = parse_query("P(Y | do(X=0, W=1))")
        assert q.do == {"X", "W"} and values == {"X": "0", "W": "1"}

    def test_rejects_garbage(self):
        with pytest.raises(EstimandError):
            parse_query("Y given X")
        with pytest.raises(EstimandError):
            parse_query("P( | X)")

    def test_conflicting_values(self):
        with pytest.raises(EstimandError, match="conflicting"):
            parse_query("P(Y=1 | Y=0)")


class TestRender:
    def test_backdoor_shape(self):
        e = Sum("U", Product((P("Y", ("U", "X")), P("U"))))
        assert render(e, {"Y": "1", "X": "1"}) == "sum_{U} P(Y=1 | U=u, X=1) P(U=u)"

    def test_unvalued_variables_stay_bare(self):
        assert render(P("Y", "X")) == "P(Y | X)"
        assert render(P("Y", (), "X")) == "P(Y | do(X))"

    def test_normalize_hoists_sums_and_sorts(self):
        inner = Product((P("U"), Sum("W", Product((P("Y", ("W",)), P("W"))))))
        normal = normalize(inner)
        assert isinstance(normal, Sum) and normal.var == "W"
        assert render(normalize(inner)) == render(normalize(normal))

    def test_normalize_does_not_capture(self):
        # the summed variable appears in a sibling: hoisting must not happen
        e = Product((P("U", ("W",)), Sum("W", Product((P("Y", ("W",)), P("W"))))))
        normal = normalize(e)
        assert isinstance(normal, Product)


class TestEvaluation:
    def test_constant(self):
        m = fixtures.confounded_scm(seed=3)
        assert evaluate_estimand(Const(1.0), observational_joint(m), {}) == 1.0

    def test_prob_delegates_to_query(self):
        m = fixtures.confounded_scm(seed=3)
        t = observational_joint(m)
        e = P("Y", ("T",))
        got = evaluate_estimand(e, t, {"Y": "1", "T": "1"})
        assert got == pytest.approx(t.prob({"Y": "1"}, {"T": "1"}))

    def test_backdoor_sum_equals_oracle(self):
        m = fixtures.confounded_scm(seed=3)
        t = observational_joint(m)
        e = Sum("U", Product((P("Y", ("U", "T")), P("U"))))
        got = evaluate_estimand(e, t, {"Y": "1", "T": "1"})
        want = do_joint(m, {"T": "1"}).prob({"Y": "1"})
        assert got == pytest.approx(want, abs=1e-12)

    def test_interventional_terms_need_the_oracle(self):
        m = fixtures.confounded_scm(seed=3)
        e = P("Y", (), "T")
        with pytest.raises(EstimandError, match="observational"):
            evaluate_estimand(e, observational_joint(m), {"Y": "1", "T": "1"})
        got = evaluate_estimand(e, ScmTables(m), {"Y": "1", "T": "1"})
        assert got == pytest.approx(do_joint(m, {"T": "1"}).prob({"Y": "1"}))

    def test_missing_binding_is_an_error(self):
        m = fixtures.confounded_scm(seed=3)
        with pytest.raises(EstimandError, match="no value bound"):
            evaluate_estimand(P("Y"), observational_joint(m), {})

    def test_quotient_by_zero(self):
        m = fixtures.confounded_scm(seed=3)
        e = Quotient(Const(1.0), Const(0.0))
        with pytest.raises(ZeroProbabilityError):
            evaluate_estimand(e, observational_joint(m), {})

    def test_sum_binds_locally(self):
        m = fixtures.confounded_scm(seed=3)
        t = observational_joint(m)
        e = Sum("U", P("U"))
        assert evaluate_estimand(e, t, {}) == pytest.approx(1.0)


class TestStructure:
    def test_variables_collects_bound_and_free(self):
        e = Sum("U", Product((P("Y", ("U",), ("X",)), P("U"))))
        assert variables(e) == {"U", "X", "Y"}

    def test_is_observational(self):
        assert is_observational(P("Y", ("X",)))
        assert not is_observational(Sum("U", Product((P("Y", ("U",), ("X",)), P("U")))))

    def test_slots_must_be_disjoint(self):
        with pytest.raises(EstimandError):
            Prob(frozenset({"Y"}), frozenset({"Y"}), frozenset())
