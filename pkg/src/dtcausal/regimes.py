"""Influence diagrams: DAGs mixing stochastic nodes with regime indicators.

A regime indicator is a non-stochastic root node F_v whose children are
the variables it can set; conditioning on "an intervention happened" is
realised as graph surgery (all other arrows into the intervened node
are removed).  The named causal conditions from the identification
theory (no confounding, sufficient covariate, treatment-sufficient
reduction, instrumental-variable structure, sequential ignorability)
are all checkable d-separation predicates on these diagrams.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .graphs import Dag, GraphError, d_separated
from .statements import Universe


class RegimeError(ValueError):
    """Missing or malformed regime structure for the requested check."""


@dataclass(frozen=True)
class InfluenceDiagram:
    """A DAG plus the set of nodes that are regime indicators.

    Regime nodes have no parents, only stochastic children, and a
    stochastic node has at most one regime parent.  A plain
    intervention indicator has exactly one child (its target); a
    strategy indicator may point at several treatment nodes.

    ``deterministic`` marks stochastic nodes that are declared to be
    functions of their parents; ``latent`` marks stochastic nodes that
    are not observable (identification may not mention them).
    """

    dag: Dag
    regime_nodes: frozenset[str] = frozenset()
    deterministic: frozenset[str] = frozenset()
    latent: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "regime_nodes", frozenset(self.regime_nodes))
        object.__setattr__(self, "deterministic", frozenset(self.deterministic))
        object.__setattr__(self, "latent", frozenset(self.latent))
        for f in self.regime_nodes:
            if f not in self.dag.nodes:
                raise RegimeError(f"regime node {f!r} is not in the graph")
            if self.dag.parents(f):
                raise RegimeError(f"regime node {f} must not have parents")
            kids = self.dag.children(f)
            if not kids:
                raise RegimeError(f"regime node {f} has no target")
            bad = kids & self.regime_nodes
            if bad:
                raise RegimeError(f"regime node {f} points at regime node {sorted(bad)[0]}")
        for v in self.stochastic_nodes:
            rp = [p for p in self.dag.parents(v) if p in self.regime_nodes]
            if len(rp) > 1:
                raise RegimeError(f"{v} has more than one regime parent: {sorted(rp)}")
        for name, marked in (("deterministic", self.deterministic), ("latent", self.latent)):
            stray = marked - self.stochastic_nodes
            if stray:
                raise RegimeError(f"{name} flag on non-stochastic node {sorted(stray)[0]}")

    @property
    def stochastic_nodes(self) -> frozenset[str]:
        return self.dag.nodes - self.regime_nodes

    @property
    def observable_nodes(self) -> frozenset[str]:
        return self.stochastic_nodes - self.latent

    def is_regime(self, node: str) -> bool:
        return node in self.regime_nodes

    def targets(self, regime_node: str) -> frozenset[str]:
        if regime_node not in self.regime_nodes:
            raise RegimeError(f"{regime_node!r} is not a regime node")
        return self.dag.children(regime_node)

    def regime_parent(self, node: str) -> str | None:
        for p in self.dag.parents(node):
            if p in self.regime_nodes:
                return p
        return None

    def require_regime_parent(self, node: str) -> str:
        f = self.regime_parent(node)
        if f is None:
            raise RegimeError(f"{node} has no regime node")
        return f

    def stochastic_parents(self, node: str) -> frozenset[str]:
        return self.dag.parents(node) - self.regime_nodes

    def universe(self) -> Universe:
        return Universe({n: "regime" if n in self.regime_nodes else "stochastic"
                         for n in self.dag.nodes})

    def without_regimes(self) -> Dag:
        """Drop every regime node, recovering the underlying DAG exactly."""
        return self.dag.subgraph(self.stochastic_nodes)


def as_diagram(g: Dag | InfluenceDiagram) -> InfluenceDiagram:
    if isinstance(g, InfluenceDiagram):
        return g
    return InfluenceDiagram(g)


def augment(g: Dag | InfluenceDiagram, targets: Iterable[str]) -> InfluenceDiagram:
    """Attach a fresh indicator F_<v> -> v for every target."""
    base = as_diagram(g)
    targets = sorted(set(targets))
    nodes = set(base.dag.nodes)
    edges = set(base.dag.edges)
    regime = set(base.regime_nodes)
    for v in targets:
        if v not in base.stochastic_nodes:
            raise RegimeError(f"cannot augment {v!r}: not a stochastic node")
        if base.regime_parent(v) is not None:
            raise RegimeError(f"{v} already has regime node {base.regime_parent(v)}")
        name = f"F_{v}"
        if name in nodes:
            raise RegimeError(f"augmenting {v} collides with existing node {name}")
        nodes.add(name)
        edges.add((name, v))
        regime.add(name)
    return InfluenceDiagram(Dag(frozenset(nodes), frozenset(edges)), frozenset(regime),
                            base.deterministic, base.latent)


def surgery(id_: InfluenceDiagram, intervened: Iterable[str]) -> InfluenceDiagram:
    """Delete all arrows into the intervened nodes except from their regime nodes."""
    intervened = set(intervened)
    for v in intervened:
        id_.require_regime_parent(v)
    edges = frozenset(
        (a, b) for a, b in id_.dag.edges
        if b not in intervened or a in id_.regime_nodes
    )
    return InfluenceDiagram(Dag(id_.dag.nodes, edges), id_.regime_nodes,
                            id_.deterministic, id_.latent)


def check_no_confounding(id_: InfluenceDiagram, t: str, y: str) -> bool:
    """Does the response stay independent of the regime indicator given treatment?"""
    f = id_.require_regime_parent(t)
    return d_separated(id_.dag, {y}, {f}, {t})


def check_sufficient_covariate(id_: InfluenceDiagram, t: str, y: str,
                               u: Iterable[str]) -> bool:
    """u is regime-independent and removes residual confounding of t on y."""
    f = id_.require_regime_parent(t)
    u = frozenset(u)
    if u & {t, y}:
        raise RegimeError("covariate set must not contain the treatment or response")
    if u and not d_separated(id_.dag, u, {f}, frozenset()):
        return False
    return d_separated(id_.dag, {y}, {f}, u | {t})


def check_treatment_sufficient_reduction(id_: InfluenceDiagram, t: str,
                                         u: Iterable[str], v: str) -> bool:
    """Treatment choice depends on u only through the reduction v = f(u)."""
    f = id_.require_regime_parent(t)
    u = frozenset(u)
    if v not in id_.deterministic:
        raise RegimeError(f"{v} is not declared deterministic")
    if not id_.stochastic_parents(v) <= u:
        raise RegimeError(f"{v} is not a function of {sorted(u)} alone")
    return d_separated(id_.dag, {t}, u, {v, f})


def check_iv_assumptions(id_: InfluenceDiagram, z: str, x: str, u: str, y: str) -> bool:
    """Instrument structure: relevance, exclusion, exogeneity, and u sufficient.

    Relevance is checked as z-x adjacency only; whether the adjacency
    carries actual dependence is a faithfulness assumption that cannot
    be read off the graph.
    """
    f = id_.require_regime_parent(x)
    for n in (z, u, y):
        if n not in id_.stochastic_nodes:
            raise RegimeError(f"{n!r} is not a stochastic node")
    if not (id_.dag.has_edge(z, x) or id_.dag.has_edge(x, z)):
        return False
    if not d_separated(id_.dag, {u}, {z}, {f}):
        return False
    if not d_separated(id_.dag, {y}, {z}, {x, u, f}):
        return False
    return check_sufficient_covariate(id_, x, y, {u})


def check_sequential_ignorability(id_: InfluenceDiagram, ls: Sequence[str],
                                  ts: Sequence[str], y: str) -> bool:
    """Stage-wise absence of residual confounding under a strategy indicator.

    Requires one regime node pointing at every treatment; covariates and
    treatments must alternate consistently with the graph's topology.
    The k-stage pattern: L_j ⫫ σ given the earlier (L, T) pairs, and
    finally Y ⫫ σ given all of them.
    """
    ls, ts = list(ls), list(ts)
    if len(ls) != len(ts) or not ts:
        raise RegimeError("need one covariate per treatment stage")
    sigma = strategy_node(id_, ts)
    sequence = [v for pair in zip(ls, ts) for v in pair] + [y]
    if len(set(sequence)) != len(sequence):
        raise RegimeError("covariates, treatments and response must be distinct")
    order = {v: i for i, v in enumerate(sequence)}
    for a, b in id_.dag.edges:
        if a in order and b in order and order[a] > order[b]:
            raise GraphError(f"stage ordering contradicts edge {a} -> {b}")
    history: list[str] = []
    for l, t in zip(ls, ts):
        if not d_separated(id_.dag, {l}, {sigma}, frozenset(history)):
            return False
        history += [l, t]
    return d_separated(id_.dag, {y}, {sigma}, frozenset(history))


def strategy_node(id_: InfluenceDiagram, ts: Sequence[str]) -> str:
    """The regime node with edges into every treatment in ``ts``."""
    hits = sorted(f for f in id_.regime_nodes if set(ts) <= id_.targets(f))
    if not hits:
        raise RegimeError(f"no regime node covers all treatments {sorted(ts)}")
    return hits[0]
