import numpy as np
import pytest

from dtcausal.graphs import Dag
from dtcausal.regimes import InfluenceDiagram
from dtcausal.scm import (DiscreteScm, FunctionalNode, GaussianTwoArmModel,
                          ScmError, bow_pair, do_joint, ese_induced_dt,
                          exact_joint, linear_gaussian_iv, observational_joint,
                          random_scm)
from dtcausal.statements import Universe, ci_holds_numeric, local_markov_statements
from dtcausal.tables import Cpt, StateSpace, TableError, conditional_independent
from dtcausal import fixtures


class TestExactJoint:
    def test_intervention_is_a_point_mass(self, chain_id):
        space = StateSpace({"X": ["0", "1"], "Y": ["0", "1"]})
        m = DiscreteScm(chain_id, space, {
            "X": Cpt("X", (), np.array([[0.6, 0.4]])),
            "Y": Cpt("Y", ("X",), np.array([[0.8, 0.2], [0.3, 0.7]])),
        })
        t = exact_joint(m, {"F_X": "1"})
        assert t.prob({"X": "1"}) == 1.0
        assert t.prob({"Y": "1"}) == pytest.approx(0.7)

    def test_idle_reproduces_cpt_product(self):
        m = fixtures.confounded_scm(seed=4)
        t1 = exact_joint(m, {})
        t2 = exact_joint(m, {"F_T": "idle"})
        assert np.array_equal(t1.cells, t2.cells)

    def test_confounded_interventional_differs_from_conditional(self):
        m = fixtures.confounded_scm(seed=4)
        obs = observational_joint(m)
        do1 = do_joint(m, {"T": "1"})
        assert do1.prob({"Y": "1"}) != pytest.approx(obs.prob({"Y": "1"}, {"T": "1"}),
                                                     abs=1e-6)

    def test_unknown_regime_node_or_value(self):
        m = fixtures.confounded_scm(seed=4)
        with pytest.raises(ScmError):
            exact_joint(m, {"T": "1"})
        with pytest.raises(ScmError):
            exact_joint(m, {"F_T": "7"})

    def test_noise_marginals_stable_across_regimes(self):
        # exogenous root distributions are untouched by any intervention
        m = fixtures.confounded_scm(seed=9)
        idle = observational_joint(m).marginal(["U"]).cells
        for value in ("0", "1"):
            under_do = do_joint(m, {"T": value}).marginal(["U"]).cells
            assert np.allclose(idle, under_do, atol=1e-15)


class TestRandomScm:
    def test_deterministic_given_seed(self):
        a, b = random_scm(seed=5), random_scm(seed=5)
        assert a.base_dag() == b.base_dag()
        for v in a.diagram.stochastic_nodes:
            assert np.array_equal(a.induced_cpt(v).rows, b.induced_cpt(v).rows)

    def test_zero_density_means_mutual_independence(self):
        m = random_scm(n_nodes=3, edge_density=0.0, seed=2)
        t = observational_joint(m)
        assert conditional_independent(t, ["X1"], ["X2", "X3"], [], 1e-12)

    def test_local_markov_statements_hold(self):
        for seed in range(6):
            m = random_scm(n_nodes=4, max_states=3, edge_density=0.5, seed=seed)
            g = m.base_dag()
            t = observational_joint(m)
            uni = Universe({n: "stochastic" for n in g.nodes})
            for s in local_markov_statements(g, uni):
                assert ci_holds_numeric(t, s, eps=1e-10)


class TestFunctionalNodes:
    def test_induced_cpt_marginalises_noise(self):
        space = StateSpace({"X": ["0", "1"], "Y": ["0", "1"]})
        node = FunctionalNode("Y", ("X",), ("u0", "u1"), (0.25, 0.75),
                              lambda pa, u: "1" if (pa["X"] == "1") != (u == "u1") else "0")
        cpt = node.to_cpt(space)
        assert np.allclose(cpt.rows, [[0.25, 0.75], [0.75, 0.25]])

    def test_same_induced_cpts_same_joints_every_regime(self):
        # different exogenous couplings, identical conditional laws
        space = StateSpace({"X": ["0", "1"], "Y": ["0", "1"]})
        dag = Dag.build([("X", "Y"), ("F_X", "X")])
        diagram = InfluenceDiagram(dag, frozenset({"F_X"}))
        x = Cpt("X", (), np.array([[0.5, 0.5]]))
        copy_noise = FunctionalNode("Y", ("X",), ("0", "1"), (0.5, 0.5),
                                    lambda pa, u: u)
        flip_noise = FunctionalNode("Y", ("X",), ("0", "1"), (0.5, 0.5),
                                    lambda pa, u: u if pa["X"] == "0" else
                                    ("1" if u == "0" else "0"))
        m1 = DiscreteScm(diagram, space, {"X": x, "Y": copy_noise})
        m2 = DiscreteScm(diagram, space, {"X": x, "Y": flip_noise})
        for regime in ({}, {"F_X": "0"}, {"F_X": "1"}):
            t1, t2 = exact_joint(m1, regime), exact_joint(m2, regime)
            assert np.allclose(t1.cells, t2.cells, atol=1e-15)

    def test_function_must_produce_known_states(self):
        space = StateSpace({"X": ["0", "1"]})
        node = FunctionalNode("X", (), ("u",), (1.0,), lambda pa, u: "nope")
        with pytest.raises(ScmError, match="unknown state"):
            node.to_cpt(space)


class TestSamplingAgainstEnumeration:
    def test_frequencies_match(self):
        m = fixtures.confounded_scm(seed=12)
        t = observational_joint(m)
        n = 50_000
        d = t.sample(n, seed=3)
        counts = {}
        for row in d.rows:
            counts[row] = counts.get(row, 0) + 1
        for idx in np.ndindex(t.cells.shape):
            config = tuple(t.space.states(v)[i] for v, i in zip(t.variables, idx))
            p = float(t.cells[idx])
            sigma = np.sqrt(n * p * (1 - p))
            assert abs(counts.get(config, 0) - n * p) <= 3 * sigma + 1


class TestGaussianTwoArm:
    def test_validation(self):
        with pytest.raises(ScmError):
            GaussianTwoArmModel(0, 1, 0.0)
        with pytest.raises(ScmError):
            GaussianTwoArmModel(0, 1, 1.0, rho=1.5)

    def test_arm_distributions_ignore_the_coupling(self):
        params = []
        for rho in (-1.0, -0.5, 0.0, 0.5, 1.0):
            p0, p1, _ = ese_induced_dt(GaussianTwoArmModel(0.0, 1.0, 2.0, rho))
            params.append((p0, p1))
        assert all(p == params[0] for p in params)

    def test_unit_effect_variance_tracks_the_coupling(self):
        _, _, ice = ese_induced_dt(GaussianTwoArmModel(0.0, 1.0, 2.0, rho=1.0))
        assert ice.variance == 0.0
        _, _, ice = ese_induced_dt(GaussianTwoArmModel(0.0, 1.0, 2.0, rho=0.0))
        assert ice.variance == pytest.approx(4.0)

    def test_shift_preserves_the_contrast(self):
        m = GaussianTwoArmModel(0.0, 1.0, 1.0)
        assert m.shifted(3.5).ace == m.ace


class TestLinearGaussianIv:
    def test_exact_covariance_ratio(self):
        m = linear_gaussian_iv(beta=2.0)
        assert m.cov_yz / m.cov_xz == pytest.approx(2.0, abs=1e-12)

    def test_ols_matches_only_without_confounding(self):
        clean = linear_gaussian_iv(beta=2.0, confounding=0.0)
        assert clean.ols_slope == pytest.approx(2.0, abs=1e-12)
        confounded = linear_gaussian_iv(beta=2.0, confounding=1.0)
        assert confounded.ols_slope != pytest.approx(2.0, abs=1e-3)

    def test_degenerate_flag(self):
        assert linear_gaussian_iv(beta=2.0, instrument_strength=0.0).degenerate

    def test_sampler_is_seeded(self):
        m = linear_gaussian_iv(beta=2.0)
        d1, d2 = m.sample(100, seed=4), m.sample(100, seed=4)
        assert np.array_equal(d1["Y"], d2["Y"])


class TestBowPair:
    def test_identical_observables_different_interventions(self):
        _, a, b = bow_pair()
        oa = observational_joint(a).marginal(["X", "Y"])
        ob = observational_joint(b).marginal(["X", "Y"])
        assert np.max(np.abs(oa.cells - ob.cells)) <= 1e-12
        gap = abs(do_joint(a, {"X": "1"}).prob({"Y": "1"})
                  - do_joint(b, {"X": "1"}).prob({"Y": "1"}))
        assert gap >= 0.1
