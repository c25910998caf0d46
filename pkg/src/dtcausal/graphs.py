"""Directed acyclic graphs and the purely graphical separation machinery.

Separation between node sets is decided on the moralised ancestral
subgraph: restrict to the queried nodes and their ancestors, marry
unmarried parents of a common child, drop arrowheads, delete the
conditioning nodes, and test reachability.  Everything here is a pure
function over immutable graph values, so results can be cached and
queries run concurrently.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator

_NAME = re.compile(r"^\w+$")


class GraphError(ValueError):
    """Malformed graph, or a query over undeclared variables."""


def _as_name(name: str) -> str:
    if not isinstance(name, str) or not _NAME.match(name):
        raise GraphError(f"invalid variable name: {name!r}")
    return name


@dataclass(frozen=True)
class Dag:
    """An immutable directed acyclic graph over named variables.

    Node identity is by name only.  Construction validates names,
    edge endpoints, self-loops and acyclicity; every operation below
    returns a new value.
    """

    nodes: frozenset[str]
    edges: frozenset[tuple[str, str]]
    _parents: dict = field(init=False, repr=False, compare=False, hash=False)
    _children: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", frozenset(_as_name(n) for n in self.nodes))
        object.__setattr__(self, "edges", frozenset((str(a), str(b)) for a, b in self.edges))
        parents: dict[str, set[str]] = {n: set() for n in self.nodes}
        children: dict[str, set[str]] = {n: set() for n in self.nodes}
        for a, b in self.edges:
            if a == b:
                raise GraphError(f"self-loop on {a}")
            if a not in self.nodes or b not in self.nodes:
                raise GraphError(f"edge {a} -> {b} uses an undeclared node")
            parents[b].add(a)
            children[a].add(b)
        object.__setattr__(self, "_parents", {n: frozenset(v) for n, v in parents.items()})
        object.__setattr__(self, "_children", {n: frozenset(v) for n, v in children.items()})
        self.topological_order()  # raises on cycles

    @classmethod
    def build(cls, edges: Iterable[tuple[str, str]] = (), nodes: Iterable[str] = ()) -> "Dag":
        """Construct from edges, declaring endpoint nodes implicitly."""
        edges = tuple(edges)
        all_nodes = set(nodes)
        for a, b in edges:
            all_nodes.add(a)
            all_nodes.add(b)
        return cls(frozenset(all_nodes), frozenset(edges))

    def parents(self, node: str) -> frozenset[str]:
        self._require(node)
        return self._parents[node]

    def children(self, node: str) -> frozenset[str]:
        self._require(node)
        return self._children[node]

    def ancestors(self, sources: Iterable[str]) -> frozenset[str]:
        """Reflexive-transitive closure of the parent relation."""
        pending = deque(self._require(n) for n in sources)
        seen: set[str] = set()
        while pending:
            node = pending.popleft()
            if node in seen:
                continue
            seen.add(node)
            pending.extend(self._parents[node])
        return frozenset(seen)

    def descendants(self, sources: Iterable[str]) -> frozenset[str]:
        """Reflexive-transitive closure of the child relation."""
        pending = deque(self._require(n) for n in sources)
        seen: set[str] = set()
        while pending:
            node = pending.popleft()
            if node in seen:
                continue
            seen.add(node)
            pending.extend(self._children[node])
        return frozenset(seen)

    def topological_order(self) -> tuple[str, ...]:
        """Kahn's algorithm with lexicographic tie-breaking."""
        indeg = {n: len(self._parents[n]) for n in self.nodes}
        ready = sorted(n for n, d in indeg.items() if d == 0)
        order: list[str] = []
        while ready:
            node = ready.pop(0)
            order.append(node)
            grew = False
            for child in self._children[node]:
                indeg[child] -= 1
                if indeg[child] == 0:
                    ready.append(child)
                    grew = True
            if grew:
                ready.sort()
        if len(order) != len(self.nodes):
            cycle = sorted(n for n, d in indeg.items() if d > 0 and n not in order)
            raise GraphError(f"graph is cyclic (involves {', '.join(cycle)})")
        return tuple(order)

    def subgraph(self, keep: Iterable[str]) -> "Dag":
        keep = frozenset(self._require(n) for n in keep)
        return Dag(keep, frozenset((a, b) for a, b in self.edges if a in keep and b in keep))

    def has_edge(self, a: str, b: str) -> bool:
        return (a, b) in self.edges

    def sorted_nodes(self) -> tuple[str, ...]:
        return tuple(sorted(self.nodes))

    def sorted_edges(self) -> tuple[tuple[str, str], ...]:
        return tuple(sorted(self.edges))

    def _require(self, node: str) -> str:
        if node not in self.nodes:
            raise GraphError(f"unknown variable: {node!r}")
        return node


@dataclass(frozen=True)
class UndirectedGraph:
    """An immutable undirected graph; edges stored as sorted pairs."""

    nodes: frozenset[str]
    edges: frozenset[tuple[str, str]]

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", frozenset(_as_name(n) for n in self.nodes))
        canon = set()
        for a, b in self.edges:
            if a == b:
                raise GraphError(f"self-loop on {a}")
            if a not in self.nodes or b not in self.nodes:
                raise GraphError(f"edge {a} -- {b} uses an undeclared node")
            canon.add((a, b) if a < b else (b, a))
        object.__setattr__(self, "edges", frozenset(canon))

    def neighbors(self, node: str) -> frozenset[str]:
        if node not in self.nodes:
            raise GraphError(f"unknown variable: {node!r}")
        out = set()
        for a, b in self.edges:
            if a == node:
                out.add(b)
            elif b == node:
                out.add(a)
        return frozenset(out)

    def adjacency(self) -> dict[str, set[str]]:
        adj: dict[str, set[str]] = {n: set() for n in self.nodes}
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return adj

    def sorted_edges(self) -> tuple[tuple[str, str], ...]:
        return tuple(sorted(self.edges))


def ancestral_subgraph(g: Dag, s: Iterable[str]) -> Dag:
    """Induced subgraph on ``s`` and all its ancestors (a node is its own ancestor)."""
    return g.subgraph(g.ancestors(s))


def moralize(g: Dag) -> UndirectedGraph:
    """Marry unmarried parents of every common child, then drop arrowheads."""
    edges: set[tuple[str, str]] = set()
    for a, b in g.edges:
        edges.add((a, b) if a < b else (b, a))
    for child in g.nodes:
        ps = sorted(g.parents(child))
        for i, a in enumerate(ps):
            for b in ps[i + 1:]:
                if not g.has_edge(a, b) and not g.has_edge(b, a):
                    edges.add((a, b))
    return UndirectedGraph(g.nodes, frozenset(edges))


def skeleton(g: Dag) -> UndirectedGraph:
    """The same adjacencies with orientation forgotten."""
    return UndirectedGraph(g.nodes, frozenset(tuple(sorted(e)) for e in g.edges))


def immoralities(g: Dag) -> frozenset[tuple[str, str, str]]:
    """All triples (a, b, c) with a -> c <- b, a and b non-adjacent, a < b."""
    found = set()
    for c in g.nodes:
        ps = sorted(g.parents(c))
        for i, a in enumerate(ps):
            for b in ps[i + 1:]:
                if not g.has_edge(a, b) and not g.has_edge(b, a):
                    found.add((a, b, c))
    return frozenset(found)


def markov_equivalent(g1: Dag, g2: Dag) -> bool:
    """Same skeleton and same immoralities; requires equal node sets."""
    if g1.nodes != g2.nodes:
        raise GraphError("node sets differ")
    return skeleton(g1) == skeleton(g2) and immoralities(g1) == immoralities(g2)


def _separation_sets(g: Dag, a: Iterable[str], b: Iterable[str], c: Iterable[str]):
    a, b, c = frozenset(a), frozenset(b), frozenset(c)
    for s in (a, b, c):
        for n in s:
            g._require(n)
    if not a or not b:
        raise GraphError("both endpoint sets must be nonempty")
    if a & b or a & c or b & c:
        raise GraphError("endpoint and conditioning sets must be pairwise disjoint")
    return a, b, c


def d_separated(g: Dag, a: Iterable[str], b: Iterable[str], c: Iterable[str]) -> bool:
    """Moralisation criterion: does ``c`` block every path from ``a`` to ``b``?

    Forms the ancestral subgraph of a ∪ b ∪ c, moralises it, deletes the
    nodes of ``c``, and checks that no ``a``-node can reach a ``b``-node.
    Symmetric in ``a`` and ``b``.
    """
    a, b, c = _separation_sets(g, a, b, c)
    moral = moralize(ancestral_subgraph(g, a | b | c))
    adj = moral.adjacency()
    pending = deque(a)
    seen: set[str] = set(c)  # conditioning nodes are deleted: never expanded
    while pending:
        node = pending.popleft()
        if node in seen:
            continue
        if node in b:
            return False
        seen.add(node)
        pending.extend(n for n in adj.get(node, ()) if n not in seen)
    return True
