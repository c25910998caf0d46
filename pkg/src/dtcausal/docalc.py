"""Rule-based reduction of interventional queries to observational form.

The three rewrite rules are precondition-checked against the influence
diagram: each one requires a separation statement to hold on the graph
after surgery on the interventions that remain in the term.  The
identification search composes admitted rewrites with the extension of
the conversation (summing a fresh variable in and out) until no term
mentions an intervention, or a depth bound stops it.  A NotFound result
never claims non-identifiability, only that the bounded search failed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .estimands import (Estimand, EstimandError, Prob, Product, Sum,
                        is_observational, normalize, render, replace_term,
                        terms, variables)
from .graphs import d_separated
from .regimes import InfluenceDiagram, RegimeError, surgery
from .statements import CiStatement

DEFAULT_DEPTH = 6
DEFAULT_NODE_BUDGET = 50_000


class IdentificationError(ValueError):
    """Bad inputs to a rule check or to the search."""


class BackdoorError(IdentificationError):
    """A back-door precondition failed; carries the failing statement."""

    def __init__(self, message: str, statement: CiStatement):
        super().__init__(message)
        self.statement = statement


@dataclass(frozen=True)
class RuleCheck:
    """Outcome of one rule precondition: the statement tested and where."""

    rule: int
    holds: bool
    statement: CiStatement
    graph_note: str

    def __bool__(self) -> bool:
        return self.holds


def _f_nodes(id_: InfluenceDiagram, xs: Iterable[str]) -> frozenset[str]:
    return frozenset(id_.require_regime_parent(v) for v in xs)


def rule_applicable(id_: InfluenceDiagram, rule: int, x: Iterable[str],
                    y: Iterable[str], z: Iterable[str],
                    w: Iterable[str] = ()) -> RuleCheck:
    """Check one rule's separation precondition on the surgered diagram.

    x: interventions kept; z: the set inserted/deleted/exchanged;
    y: response set; w: additional observed conditioners.  Rules 2 and 3
    test y against the regime indicators of z, left in the graph as
    ordinary nodes; rule 1 tests y against z itself.
    """
    x, y, z, w = map(frozenset, (x, y, z, w))
    if rule not in (1, 2, 3):
        raise IdentificationError(f"no such rule: {rule}")
    sets = [x, y, z, w]
    for i, s in enumerate(sets):
        for s2 in sets[i + 1:]:
            if s & s2:
                raise IdentificationError("rule sets must be pairwise disjoint")
    if not y or not z:
        raise IdentificationError("rules need nonempty y and z sets")
    cut = surgery(id_, x)
    fx = _f_nodes(id_, x)
    given = x | w | fx
    if rule == 1:
        other: frozenset[str] = z
    else:
        other = _f_nodes(id_, z)
        if rule == 2:
            given = given | z
    holds = d_separated(cut.dag, y, other, given)
    stmt = CiStatement(y, other, given)
    note = f"surgery on {{{','.join(sorted(x))}}}" if x else "no surgery"
    return RuleCheck(rule, holds, stmt, note)


def backdoor_estimand(id_: InfluenceDiagram, x: str, y: str,
                      z: Iterable[str]) -> Estimand:
    """Adjustment formula sum_z P(y | z, x) P(z), precondition-checked.

    Requires z independent of the regime indicator, and no residual
    confounding of y given (x, z).  With empty z this collapses to
    P(y | x).  Raises BackdoorError naming the failing statement.
    """
    z = frozenset(z)
    f = id_.require_regime_parent(x)
    if z & {x, y}:
        raise IdentificationError("adjustment set must not contain x or y")
    if z and not d_separated(id_.dag, z, {f}, frozenset()):
        raise BackdoorError("adjustment set is not regime-independent",
                            CiStatement(z, frozenset({f}), frozenset()))
    if not d_separated(id_.dag, {y}, {f}, z | {x}):
        raise BackdoorError("residual confounding after adjustment",
                            CiStatement(frozenset({y}), frozenset({f}), z | {x}))
    if not z:
        return Prob(frozenset({y}), frozenset({x}))
    e: Estimand = Product((Prob(frozenset({y}), z | {x}), Prob(z)))
    for var in sorted(z, reverse=True):
        e = Sum(var, e)
    return normalize(e)


@dataclass(frozen=True)
class SearchStep:
    """One admitted move of the identification search."""

    kind: str                 # "rule1" | "rule2" | "rule3" | "extend"
    before: Prob
    after: Estimand
    check: RuleCheck | None = None

    def describe(self) -> str:
        action = {
            "rule1": "drop observation(s) by rule 1",
            "rule2": "exchange action for observation by rule 2",
            "rule3": "drop action(s) by rule 3",
            "extend": "extend the conversation",
        }[self.kind]
        text = f"{action}: {render(self.before)} -> {render(self.after)}"
        if self.check is not None:
            text += f"  [{self.check.statement} on {self.check.graph_note}]"
        return text


@dataclass
class IdentifyResult:
    estimand: Estimand | None
    steps: tuple[SearchStep, ...] = ()
    explored: int = 0
    frontier: int = 0
    truncated: bool = False

    @property
    def found(self) -> bool:
        return self.estimand is not None


def _subsets(s: frozenset[str]) -> list[frozenset[str]]:
    out: list[frozenset[str]] = [frozenset()]
    for v in sorted(s):
        out += [prev | {v} for prev in out]
    return [o for o in out if o]


def _moves(id_: InfluenceDiagram, e: Estimand, observable: frozenset[str]):
    """Admitted successor expressions, in deterministic order."""
    seen_terms: set[Prob] = set()
    used = variables(e)
    for term in terms(e):
        if term in seen_terms:
            continue
        seen_terms.add(term)
        for z in _subsets(term.do):
            check = rule_applicable(id_, 2, term.do - z, term.target, z, term.obs)
            if check:
                after = Prob(term.target, term.obs | z, term.do - z)
                yield SearchStep("rule2", term, after, check), replace_term(e, term, after)
            check = rule_applicable(id_, 3, term.do - z, term.target, z, term.obs)
            if check:
                after = Prob(term.target, term.obs, term.do - z)
                yield SearchStep("rule3", term, after, check), replace_term(e, term, after)
        for z in _subsets(term.obs):
            check = rule_applicable(id_, 1, term.do, term.target, z, term.obs - z)
            if check:
                after = Prob(term.target, term.obs - z, term.do)
                yield SearchStep("rule1", term, after, check), replace_term(e, term, after)
        if term.do:
            fresh = sorted(observable - used)
            for v in fresh:
                after = Sum(v, Product((Prob(term.target, term.obs | {v}, term.do),
                                        Prob(frozenset({v}), term.obs, term.do))))
                yield SearchStep("extend", term, after, None), replace_term(e, term, after)


def identify(id_: InfluenceDiagram, query: Prob, depth: int = DEFAULT_DEPTH,
             node_budget: int = DEFAULT_NODE_BUDGET) -> IdentifyResult:
    """Breadth-first search for an observational rewrite of the query.

    Estimands may only mention observable variables; rule preconditions
    see the whole diagram, latent nodes included.  The shallowest
    rewrite wins, ties broken by move enumeration order, so results are
    deterministic.  Returns NotFound (estimand None) with the frontier
    size when the bound or budget is exhausted.
    """
    if depth <= 0:
        raise IdentificationError("search depth must be positive")
    for v in query.target | query.obs | query.do:
        if v not in id_.stochastic_nodes:
            raise IdentificationError(f"query variable {v!r} is not a stochastic node")
        if v in id_.latent:
            raise IdentificationError(f"query variable {v!r} is latent")
    for v in query.do:
        id_.require_regime_parent(v)
    observable = frozenset(id_.observable_nodes)
    start: Estimand = query
    if is_observational(start):
        return IdentifyResult(normalize(start), (), 1, 0)
    seen = {start}
    frontier: list[tuple[Estimand, tuple[SearchStep, ...]]] = [(start, ())]
    explored = 1
    truncated = False
    for _ in range(depth):
        nxt: list[tuple[Estimand, tuple[SearchStep, ...]]] = []
        for e, steps in frontier:
            for step, e2 in _moves(id_, e, observable):
                if e2 in seen:
                    continue
                if explored >= node_budget:
                    truncated = True
                    break
                seen.add(e2)
                explored += 1
                if is_observational(e2):
                    return IdentifyResult(normalize(e2), steps + (step,), explored, len(nxt))
                nxt.append((e2, steps + (step,)))
            if truncated:
                break
        frontier = nxt
        if truncated or not frontier:
            break
    return IdentifyResult(None, (), explored, len(frontier), truncated)
