"""Worked example diagrams and models used across docs, CLI demos and tests."""

from __future__ import annotations

import numpy as np

from .graphs import Dag
from .regimes import InfluenceDiagram, augment
from .scm import DiscreteScm
from .tables import Cpt, StateSpace


def chain_xy() -> InfluenceDiagram:
    """X causes Y, intervention indicator on X: the no-confounding picture."""
    return augment(Dag.build([("X", "Y")]), ["X"])


def reversed_xy() -> InfluenceDiagram:
    """Y causes X: setting X cannot move Y, but conditioning on X couples them."""
    return augment(Dag.build([("Y", "X")]), ["X"])


def collider_square() -> Dag:
    """Five nodes, two colliders: A -> C <- B, C -> E <- D."""
    return Dag.build([("A", "C"), ("B", "C"), ("C", "E"), ("D", "E")])


def confounded_treatment() -> InfluenceDiagram:
    """U -> T -> Y with U -> Y: the sufficient-covariate picture."""
    return augment(Dag.build([("U", "T"), ("U", "Y"), ("T", "Y")]), ["T"])


def covariate_reduction() -> InfluenceDiagram:
    """U -> V -> T -> Y, U -> Y, with V a deterministic reduction of U."""
    base = augment(Dag.build([("U", "V"), ("V", "T"), ("T", "Y"), ("U", "Y")]), ["T"])
    return InfluenceDiagram(base.dag, base.regime_nodes,
                            deterministic=frozenset({"V"}), latent=base.latent)


def instrument_diagram() -> InfluenceDiagram:
    """Z -> X <- U -> Y <- X with a regime indicator on X."""
    return augment(Dag.build([("Z", "X"), ("U", "X"), ("U", "Y"), ("X", "Y")]), ["X"])


def two_stage_diagram() -> InfluenceDiagram:
    """Covariate/treatment stages L1,T1,L2,T2 -> Y; sigma points at both treatments."""
    edges = [("L1", "T1"), ("L1", "L2"), ("L1", "T2"), ("L1", "Y"),
             ("T1", "L2"), ("T1", "T2"), ("T1", "Y"),
             ("L2", "T2"), ("L2", "Y"), ("T2", "Y"),
             ("sigma", "T1"), ("sigma", "T2")]
    return InfluenceDiagram(Dag.build(edges), regime_nodes=frozenset({"sigma"}))


def confounded_scm(seed: int = 7, u_states: int = 2) -> DiscreteScm:
    """A random instance of the sufficient-covariate structure with binary T, Y."""
    rng = np.random.default_rng(seed)
    space = StateSpace({"U": [str(i) for i in range(u_states)],
                        "T": ["0", "1"], "Y": ["0", "1"]})
    u = Cpt("U", (), rng.dirichlet(np.ones(u_states)).reshape(1, -1))
    t = Cpt("T", ("U",), rng.dirichlet(np.ones(2), size=u_states))
    y = Cpt("Y", ("T", "U"), rng.dirichlet(np.ones(2), size=2 * u_states))
    return DiscreteScm(confounded_treatment(), space, {"U": u, "T": t, "Y": y})


def two_stage_scm(seed: int = 11, edge_drop: float = 0.0) -> DiscreteScm:
    """Random binary two-stage model on the sequentially-ignorable diagram.

    ``edge_drop`` removes each optional inter-stage edge with that
    probability (the mandatory stage ordering always remains).
    """
    rng = np.random.default_rng(seed)
    edges = {("L1", "T1"), ("T1", "L2"), ("L2", "T2"), ("T2", "Y")}
    optional = [("L1", "L2"), ("L1", "T2"), ("L1", "Y"), ("T1", "T2"),
                ("T1", "Y"), ("L2", "Y")]
    for e in optional:
        if rng.random() >= edge_drop:
            edges.add(e)
    edges.add(("sigma", "T1"))
    edges.add(("sigma", "T2"))
    diagram = InfluenceDiagram(Dag.build(sorted(edges)), regime_nodes=frozenset({"sigma"}))
    space = StateSpace({v: ["0", "1"] for v in ("L1", "T1", "L2", "T2", "Y")})
    mechanisms = {}
    for v in ("L1", "T1", "L2", "T2", "Y"):
        parents = tuple(sorted(diagram.stochastic_parents(v)))
        n_rows = 2 ** len(parents)
        mechanisms[v] = Cpt(v, parents, rng.dirichlet(np.ones(2), size=n_rows))
    return DiscreteScm(diagram, space, mechanisms)


def evidence_example() -> tuple[Dag, dict[str, str]]:
    """A fully specified twelve-node evidence-style DAG for moralisation demos.

    Stands in for the partially described case-analysis example: a crime
    indicator drives several noisy measurements, with identity links
    between latent sources and typed traces.
    """
    edges = [
        ("Offender", "AtScene"), ("Offender", "LeftFibres"),
        ("NumCulprits", "AtScene"), ("NumCulprits", "BloodSource"),
        ("AtScene", "LeftFibres"), ("AtScene", "BloodSource"),
        ("JumperOwner", "FibreType"), ("LeftFibres", "FibreType"),
        ("BloodSource", "BloodType"), ("BloodSource", "SprayPattern"),
        ("VictimGroup", "BloodType"), ("LabError", "BloodType"),
        ("LabError", "FibreType"),
    ]
    query = {"left": "BloodSource,SprayPattern", "right": "JumperOwner,FibreType",
             "given": "LeftFibres,NumCulprits"}
    return Dag.build(edges), query
