"""Ground-truth generators: discrete structural models and Gaussian specials.

A DiscreteScm couples an influence diagram with one mechanism per
stochastic node, either a CPT or a structural function driven by an
independent finite noise term.  ``exact_joint`` enumerates the joint
distribution under any regime assignment (interventions become point
masses via surgery), which is what every oracle comparison in the test
suite is built on: interventional truth is always computed by
surgery-then-enumeration, never by sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .graphs import Dag
from .regimes import InfluenceDiagram, RegimeError, as_diagram, augment
from .tables import (Cpt, JointTable, StateSpace, TableError, joint_from_cpts)

IDLE = "idle"


class ScmError(ValueError):
    """Malformed structural model or regime assignment."""


@dataclass(frozen=True)
class FunctionalNode:
    """child = fn(parent values, noise value) with an independent noise term."""

    child: str
    parents: tuple[str, ...]
    noise_states: tuple[str, ...]
    noise_probs: tuple[float, ...]
    fn: Callable[[Mapping[str, str], str], str] = field(compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "parents", tuple(self.parents))
        object.__setattr__(self, "noise_states", tuple(self.noise_states))
        probs = tuple(float(p) for p in self.noise_probs)
        if len(probs) != len(self.noise_states):
            raise ScmError(f"{self.child}: noise states/probabilities mismatch")
        if any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-9:
            raise ScmError(f"{self.child}: noise distribution is not a distribution")
        object.__setattr__(self, "noise_probs", probs)

    def to_cpt(self, space: StateSpace) -> Cpt:
        """Marginalise the noise: the conditional law the function induces."""
        states = space.states(self.child)
        configs = list(space.configurations(self.parents))
        rows = np.zeros((len(configs), len(states)))
        for i, config in enumerate(configs):
            assignment = dict(zip(self.parents, config))
            for noise, p in zip(self.noise_states, self.noise_probs):
                value = self.fn(assignment, noise)
                if value not in states:
                    raise ScmError(f"{self.child}: function produced unknown state {value!r}")
                rows[i, states.index(value)] += p
        return Cpt(self.child, self.parents, rows)


@dataclass(frozen=True, eq=False)
class DiscreteScm:
    """Finite-state structural model, executable under any regime."""

    diagram: InfluenceDiagram
    space: StateSpace
    mechanisms: Mapping[str, object] = field(compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "mechanisms", dict(self.mechanisms))
        missing = sorted(self.diagram.stochastic_nodes - set(self.mechanisms))
        if missing:
            raise ScmError(f"no mechanism for {missing[0]}")
        for v in sorted(self.mechanisms):
            if v not in self.diagram.stochastic_nodes:
                raise ScmError(f"mechanism for non-stochastic node {v}")
            mech = self.mechanisms[v]
            if mech.child != v:
                raise ScmError(f"mechanism filed under {v} declares child {mech.child}")
            if frozenset(mech.parents) != self.diagram.stochastic_parents(v):
                raise ScmError(
                    f"mechanism parents {sorted(mech.parents)} of {v} do not match "
                    f"graph parents {sorted(self.diagram.stochastic_parents(v))}")
            if v not in self.space:
                raise ScmError(f"no state declaration for {v}")

    def induced_cpt(self, v: str) -> Cpt:
        mech = self.mechanisms[v]
        return mech if isinstance(mech, Cpt) else mech.to_cpt(self.space)

    def base_dag(self) -> Dag:
        return self.diagram.without_regimes()

    def with_regimes(self, targets: Iterable[str]) -> "DiscreteScm":
        return DiscreteScm(augment(self.diagram, targets), self.space, self.mechanisms)


def _strategy_kernels(value, m: DiscreteScm):
    kernels = value.stage_kernels(m.space)  # duck-typed: strategies.Strategy
    out = {}
    for treatment, history, table in kernels:
        configs = list(m.space.configurations(history))
        states = m.space.states(treatment)
        rows = np.zeros((len(configs), len(states)))
        for i, config in enumerate(configs):
            dist = table(dict(zip(history, config)))
            for s, p in dist.items():
                rows[i, states.index(s)] = p
        out[treatment] = Cpt(treatment, tuple(history), rows)
    return out


def exact_joint(m: DiscreteScm, regime: Mapping[str, object] | None = None) -> JointTable:
    """Enumerate the joint over stochastic nodes under a regime assignment.

    Keys are regime node names; a value is ``"idle"``, a state of the
    (single) target, or a strategy object for a multi-target node.
    Intervened nodes become parentless point masses; everything else
    keeps its mechanism.
    """
    regime = dict(regime or {})
    replacements: dict[str, Cpt] = {}
    for node, value in regime.items():
        if node not in m.diagram.regime_nodes:
            raise ScmError(f"{node!r} is not a regime node")
        if value == IDLE:
            continue
        targets = sorted(m.diagram.targets(node))
        if isinstance(value, str):
            if len(targets) != 1:
                raise ScmError(f"{node} targets {targets}; a single state value is ambiguous")
            (target,) = targets
            if value not in m.space.states(target):
                raise ScmError(f"{value!r} is not a state of {target}")
            replacements[target] = Cpt.point_mass(target, m.space, value)
        else:
            for treatment, cpt in _strategy_kernels(value, m).items():
                if treatment not in targets:
                    raise ScmError(f"strategy sets {treatment}, not a target of {node}")
                replacements[treatment] = cpt
    variables = sorted(m.diagram.stochastic_nodes)
    cpts: dict[str, Cpt] = {}
    edges = set()
    for v in variables:
        cpt = replacements[v] if v in replacements else m.induced_cpt(v)
        cpts[v] = cpt
        edges.update((p, v) for p in cpt.parents)
    dag = Dag(frozenset(variables), frozenset(edges))
    return joint_from_cpts(dag, cpts, m.space)


def do_joint(m: DiscreteScm, interventions: Mapping[str, str]) -> JointTable:
    """Sugar: point interventions keyed by target variable."""
    regime = {}
    for target, value in interventions.items():
        f = m.diagram.regime_parent(target)
        if f is None:
            raise RegimeError(f"{target} has no regime node")
        regime[f] = value
    return exact_joint(m, regime)


def observational_joint(m: DiscreteScm) -> JointTable:
    return exact_joint(m, {})


def random_scm(n_nodes: int = 4, max_states: int = 3, edge_density: float = 0.4,
               seed: int = 0) -> DiscreteScm:
    """Random DAG + symmetric-Dirichlet CPTs; deterministic for a fixed seed."""
    if n_nodes <= 0 or max_states < 2:
        raise ScmError("need at least one node and two states")
    rng = np.random.default_rng(seed)
    names = [f"X{i + 1}" for i in range(n_nodes)]
    cards = {v: int(rng.integers(2, max_states + 1)) for v in names}
    space = StateSpace({v: [str(i) for i in range(cards[v])] for v in names})
    edges = set()
    for i in range(n_nodes):
        for j in range(i + 1, n_nodes):
            if rng.random() < edge_density:
                edges.add((names[i], names[j]))
    dag = Dag(frozenset(names), frozenset(edges))
    cpts = {}
    for v in names:
        parents = tuple(sorted(dag.parents(v)))
        n_rows = int(np.prod([cards[p] for p in parents])) if parents else 1
        rows = rng.dirichlet(np.ones(cards[v]), size=n_rows)
        cpts[v] = Cpt(v, parents, rows)
    return DiscreteScm(InfluenceDiagram(dag), space, cpts)


@dataclass(frozen=True)
class IceMoments:
    """Mean and variance of the unit-level effect implied by a coupled-error model."""
    mean: float
    variance: float


@dataclass(frozen=True)
class GaussianTwoArmModel:
    """Two-arm normal response with optionally coupled potential errors.

    The observable content is the pair of arm distributions
    N(mu0, sigma2) and N(mu1, sigma2); the error correlation ``rho``
    couples the two errors per unit but never reaches the data.
    """

    mu0: float
    mu1: float
    sigma2: float
    rho: float = 1.0

    def __post_init__(self) -> None:
        if self.sigma2 <= 0:
            raise ScmError("variance must be positive")
        if not -1.0 <= self.rho <= 1.0:
            raise ScmError("correlation must lie in [-1, 1]")

    @property
    def ace(self) -> float:
        return self.mu1 - self.mu0

    def error_covariance(self) -> np.ndarray:
        return np.array([[self.sigma2, self.rho * self.sigma2],
                         [self.rho * self.sigma2, self.sigma2]])

    def shifted(self, gamma: float) -> "GaussianTwoArmModel":
        """Shift both arm means; the mean contrast is unchanged."""
        return GaussianTwoArmModel(self.mu0 + gamma, self.mu1 + gamma, self.sigma2, self.rho)

    def sample_arms(self, n0: int, n1: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
        rng = np.random.default_rng(seed)
        sd = math.sqrt(self.sigma2)
        return (rng.normal(self.mu0, sd, size=n0), rng.normal(self.mu1, sd, size=n1))


def ese_induced_dt(m: GaussianTwoArmModel):
    """Arm distributions induced by the coupled-error construction, plus
    the moments of the per-unit effect.

    The arm parameters come from the marginals of the bivariate error,
    so they cannot depend on the coupling; the per-unit effect variance
    2(1-rho)sigma2 does, which is exactly the part no data can reach.
    """
    cov = m.error_covariance()
    p0 = (m.mu0, float(cov[0, 0]))
    p1 = (m.mu1, float(cov[1, 1]))
    ice_var = float(cov[0, 0] + cov[1, 1] - 2.0 * cov[0, 1])
    return p0, p1, IceMoments(m.mu1 - m.mu0, ice_var)


@dataclass(frozen=True)
class LinearGaussianIv:
    """X = a·Z + b·U + noise, Y = beta·X + c·U + noise, all noises standard normal."""

    beta: float
    a: float = 1.0   # instrument -> treatment strength
    b: float = 1.0   # confounder -> treatment strength
    c: float = 1.0   # confounder -> response strength

    @property
    def degenerate(self) -> bool:
        """Instrument irrelevant: the covariance ratio is undefined."""
        return self.a == 0.0

    # closed-form second moments of the generating equations
    @property
    def cov_xz(self) -> float:
        return self.a

    @property
    def cov_yz(self) -> float:
        return self.beta * self.a

    @property
    def var_x(self) -> float:
        return self.a ** 2 + self.b ** 2 + 1.0

    @property
    def cov_xy(self) -> float:
        return self.beta * self.var_x + self.c * self.b

    @property
    def ols_slope(self) -> float:
        return self.cov_xy / self.var_x

    def sample(self, n: int, seed: int) -> dict[str, np.ndarray]:
        rng = np.random.default_rng(seed)
        z = rng.standard_normal(n)
        u = rng.standard_normal(n)
        x = self.a * z + self.b * u + rng.standard_normal(n)
        y = self.beta * x + self.c * u + rng.standard_normal(n)
        return {"Z": z, "U": u, "X": x, "Y": y}


def linear_gaussian_iv(beta: float = 2.0, instrument_strength: float = 1.0,
                       confounding: float = 1.0) -> LinearGaussianIv:
    if not all(math.isfinite(v) for v in (beta, instrument_strength, confounding)):
        raise ScmError("model coefficients must be finite")
    return LinearGaussianIv(beta, instrument_strength, confounding, confounding)


def bow_pair() -> tuple[InfluenceDiagram, DiscreteScm, DiscreteScm]:
    """Two SCMs on the bow graph (latent U -> X -> Y, U -> Y) with identical
    observational (X, Y) joints but different response to setting X."""
    dag = Dag.build([("U", "X"), ("U", "Y"), ("X", "Y"), ("F_X", "X")])
    diagram = InfluenceDiagram(dag, regime_nodes=frozenset({"F_X"}),
                               latent=frozenset({"U"}))
    space = StateSpace({"U": ["0", "1"], "X": ["0", "1"], "Y": ["0", "1"]})
    u_cpt = Cpt("U", (), np.array([[0.5, 0.5]]))
    x_cpt = Cpt.from_rows("X", ["U"], space, {("0",): [1.0, 0.0], ("1",): [0.0, 1.0]})
    y_xor = Cpt.from_rows("Y", ["U", "X"], space, {
        ("0", "0"): [1.0, 0.0], ("0", "1"): [0.0, 1.0],
        ("1", "0"): [0.0, 1.0], ("1", "1"): [1.0, 0.0]})
    y_zero = Cpt.from_rows("Y", ["U", "X"], space, {
        ("0", "0"): [1.0, 0.0], ("0", "1"): [1.0, 0.0],
        ("1", "0"): [1.0, 0.0], ("1", "1"): [1.0, 0.0]})
    scm_a = DiscreteScm(diagram, space, {"U": u_cpt, "X": x_cpt, "Y": y_xor})
    scm_b = DiscreteScm(diagram, space, {"U": u_cpt, "X": x_cpt, "Y": y_zero})
    return diagram, scm_a, scm_b
