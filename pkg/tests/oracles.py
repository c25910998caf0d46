"""Independent test oracles.

The path-blocking d-separation here is the alternative formulation of
the separation criterion: enumerate simple undirected paths and check
each for a blocking triple (non-collider in the conditioning set, or a
collider none of whose descendants is conditioned).  It shares no code
with the moralisation route in the package, which is the point.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

from dtcausal.graphs import Dag


def dsep_paths(g: Dag, a, b, c) -> bool:
    """Path-blocking d-separation between node sets."""
    a, b, c = frozenset(a), frozenset(b), frozenset(c)
    adj: dict[str, set[str]] = {n: set() for n in g.nodes}
    for u, v in g.edges:
        adj[u].add(v)
        adj[v].add(u)
    cond_closure = {n for n in g.nodes if g.descendants([n]) & c}

    def blocked(path: list[str]) -> bool:
        for i in range(1, len(path) - 1):
            prev, mid, nxt = path[i - 1], path[i], path[i + 1]
            collider = g.has_edge(prev, mid) and g.has_edge(nxt, mid)
            if collider:
                if mid not in cond_closure:
                    return True
            elif mid in c:
                return True
        return False

    def active_path_exists(start: str) -> bool:
        stack = [[start]]
        while stack:
            path = stack.pop()
            node = path[-1]
            if node in b and not blocked(path):
                return True
            for nxt in sorted(adj[node]):
                if nxt not in path:
                    stack.append(path + [nxt])
        return False

    return not any(active_path_exists(x) for x in sorted(a))


def all_dags(labels: tuple[str, ...]):
    """Every labelled DAG on the given nodes."""
    pairs = list(itertools.combinations(labels, 2))
    for choice in itertools.product((0, 1, 2), repeat=len(pairs)):
        edges = []
        for (u, v), kind in zip(pairs, choice):
            if kind == 1:
                edges.append((u, v))
            elif kind == 2:
                edges.append((v, u))
        try:
            yield Dag(frozenset(labels), frozenset(edges))
        except ValueError:
            continue


def disjoint_triples(labels: tuple[str, ...]):
    """All (a, b, c) with a, b nonempty and a, b, c pairwise disjoint."""
    for assignment in itertools.product((None, "a", "b", "c"), repeat=len(labels)):
        a = frozenset(l for l, s in zip(labels, assignment) if s == "a")
        b = frozenset(l for l, s in zip(labels, assignment) if s == "b")
        c = frozenset(l for l, s in zip(labels, assignment) if s == "c")
        if a and b:
            yield a, b, c


@lru_cache(maxsize=None)
def dag_universe(labels: tuple[str, ...]) -> tuple[Dag, ...]:
    return tuple(all_dags(labels))


@lru_cache(maxsize=None)
def triple_universe(labels: tuple[str, ...]) -> tuple:
    return tuple(disjoint_triples(labels))


def separation_relation(g: Dag, dsep) -> frozenset:
    """The full separation relation, canonicalised so that (a, b) order
    does not matter."""
    labels = tuple(sorted(g.nodes))
    out = set()
    for a, b, c in triple_universe(labels):
        if dsep(g, a, b, c):
            key = (a, b) if sorted(a) <= sorted(b) else (b, a)
            out.add((key[0], key[1], c))
    return frozenset(out)


@lru_cache(maxsize=None)
def relation_map(labels: tuple[str, ...], algo: str = "moral"):
    """Full separation relation per DAG on ``labels``, computed once."""
    from dtcausal.graphs import d_separated
    dsep = d_separated if algo == "moral" else dsep_paths
    return {g: separation_relation(g, dsep) for g in dag_universe(labels)}


def random_dag(rng, n: int, p: float, prefix: str = "N") -> Dag:
    names = [f"{prefix}{i + 1}" for i in range(n)]
    order = list(names)
    rng.shuffle(order)
    edges = set()
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                edges.add((order[i], order[j]))
    return Dag(frozenset(names), frozenset(edges))


def random_sets(rng, nodes, max_cond: int = 3):
    """One random disjoint (a, b, c) triple with a, b nonempty."""
    pool = sorted(nodes)
    rng.shuffle(pool)
    a = frozenset(pool[:1])
    b = frozenset(pool[1:2])
    rest = pool[2:]
    k = int(rng.integers(0, min(max_cond, len(rest)) + 1))
    c = frozenset(rest[:k])
    return a, b, c
