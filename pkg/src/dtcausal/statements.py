"""Conditional-independence statements as data, and the axiom calculus.

Statements are triples of variable sets (left ⫫ right | given).  The
five axioms (symmetry, triviality, decomposition, weak union,
contraction) act as rewrite rules; ``closure`` saturates a premise set
under them, keeping a derivation trace per discovered statement.

Non-stochastic (regime) variables may appear anywhere except the left
slot of a statement that is put forward as a conclusion; intermediate
statements of a derivation are allowed to break that rule, so the
closure filters its output but not its working set.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .tables import JointTable, conditional_independent

DEFAULT_CLOSURE_BOUND = 10_000

AXIOMS = ("P1", "P2", "P3", "P4", "P5")


class StatementError(ValueError):
    """Malformed statement, undeclared variable, or axiom shape mismatch."""


class Universe:
    """Declared variables with their stochastic/regime kinds."""

    def __init__(self, kinds: Mapping[str, str]):
        self._kinds: dict[str, str] = {}
        for var, kind in kinds.items():
            if kind not in ("stochastic", "regime"):
                raise StatementError(f"bad kind {kind!r} for {var}")
            self._kinds[str(var)] = kind
        self._names = tuple(sorted(self._kinds))

    @property
    def variables(self) -> tuple[str, ...]:
        return self._names

    def __contains__(self, var: str) -> bool:
        return var in self._kinds

    def is_regime(self, var: str) -> bool:
        if var not in self._kinds:
            raise StatementError(f"undeclared variable: {var!r}")
        return self._kinds[var] == "regime"

    def regime_variables(self) -> frozenset[str]:
        return frozenset(v for v, k in self._kinds.items() if k == "regime")


@dataclass(frozen=True)
class CiStatement:
    """left ⫫ right | given, each a set of variable names.

    The constructor only requires nonempty left and right: axiom
    conclusions such as X ⫫ Y | X are representable, and
    :func:`is_well_formed` is the strict check.
    """

    left: frozenset[str]
    right: frozenset[str]
    given: frozenset[str]

    def __post_init__(self) -> None:
        object.__setattr__(self, "left", frozenset(self.left))
        object.__setattr__(self, "right", frozenset(self.right))
        object.__setattr__(self, "given", frozenset(self.given))
        if not self.left or not self.right:
            raise StatementError("left and right sets must be nonempty")

    @classmethod
    def of(cls, left, right, given=()) -> "CiStatement":
        one = lambda x: (x,) if isinstance(x, str) else x
        return cls(frozenset(one(left)), frozenset(one(right)), frozenset(one(given)))

    def swap(self) -> "CiStatement":
        return CiStatement(self.right, self.left, self.given)

    def variables(self) -> frozenset[str]:
        return self.left | self.right | self.given

    def is_disjoint(self) -> bool:
        return not (self.left & self.right or self.left & self.given or self.right & self.given)

    def reduced(self) -> "CiStatement | None":
        """Drop conditioned variables from both sides; None if trivial."""
        left = self.left - self.given
        right = self.right - self.given
        if not left or not right:
            return None
        return CiStatement(left, right, self.given)

    def __str__(self) -> str:
        fmt = lambda s: ",".join(sorted(s))
        text = f"{fmt(self.left)} _||_ {fmt(self.right)}"
        if self.given:
            text += f" | {fmt(self.given)}"
        return text


_STMT = re.compile(r"^(?P<left>[^|_]+)_\|\|_(?P<rest>.+)$")


def parse_statement(text: str) -> CiStatement:
    """Parse ``A,B _||_ C | D,E`` (the conditioning part is optional)."""
    m = _STMT.match(text.strip())
    if not m:
        raise StatementError(f"cannot parse statement: {text!r}")
    rest = m.group("rest")
    if "|" in rest:
        right_txt, given_txt = rest.split("|", 1)
    else:
        right_txt, given_txt = rest, ""
    split = lambda t: frozenset(v.strip() for v in t.split(",") if v.strip())
    left, right, given = split(m.group("left")), split(right_txt), split(given_txt)
    if not left or not right:
        raise StatementError(f"statement needs nonempty sides: {text!r}")
    return CiStatement(left, right, given)


def is_well_formed(s: CiStatement, universe: Universe) -> bool:
    """Disjoint sets and a purely stochastic left slot."""
    for v in s.variables():
        if v not in universe:
            raise StatementError(f"undeclared variable: {v!r}")
    if not s.is_disjoint():
        return False
    return not any(universe.is_regime(v) for v in s.left)


def apply_axiom(tag: str, premises: Sequence[CiStatement],
                w: Iterable[str] | None = None) -> CiStatement:
    """Apply one axiom and return its conclusion exactly as stated.

    P1 swaps the sides; P2 (no real premise: the single statement only
    supplies the variable sets) yields X ⫫ Y | X; P3 narrows the right
    side to ``w``; P4 moves ``w`` into the conditioning set; P5
    contracts two premises.  ``w`` must be a subset of the premise's
    right-hand set for P3/P4.
    """
    w = None if w is None else frozenset(w)
    if tag == "P1":
        (s,) = _shape(tag, premises, 1)
        return s.swap()
    if tag == "P2":
        (s,) = _shape(tag, premises, 1)
        return CiStatement(s.left, s.right, s.left)
    if tag in ("P3", "P4"):
        (s,) = _shape(tag, premises, 1)
        if w is None or not w:
            raise StatementError(f"{tag} needs a nonempty subset parameter")
        if not w <= s.right:
            raise StatementError(f"{tag}: {sorted(w)} is not a subset of the right-hand set")
        if tag == "P3":
            return CiStatement(s.left, w, s.given)
        return CiStatement(s.left, s.right, w | s.given)
    if tag == "P5":
        s1, s2 = _shape(tag, premises, 2)
        if s1.left != s2.left:
            raise StatementError("P5: premises must share the left set")
        if s2.given != s1.given | s1.right:
            raise StatementError("P5: second premise must condition on the first's right and given sets")
        return CiStatement(s1.left, s1.right | s2.right, s1.given)
    raise StatementError(f"unknown axiom tag: {tag!r}")


def _shape(tag, premises, n):
    if len(premises) != n:
        raise StatementError(f"{tag} takes {n} premise(s), got {len(premises)}")
    return premises


@dataclass(frozen=True)
class DerivationStep:
    statement: CiStatement
    rule: str                      # "premise" or an axiom tag
    premises: tuple[int, ...]      # indices of earlier steps
    w: frozenset[str] | None = None


@dataclass(frozen=True)
class Derivation:
    conclusion: CiStatement
    steps: tuple[DerivationStep, ...]


class ClosureResult:
    """Fixed point (or truncation) of axiom application over a universe."""

    def __init__(self, statements: frozenset[CiStatement], truncated: bool,
                 _origins: dict, _universe: Universe):
        self.statements = statements
        self.truncated = truncated
        self._origins = _origins
        self._universe = _universe

    def __contains__(self, s: CiStatement) -> bool:
        return s in self.statements

    def __len__(self) -> int:
        return len(self.statements)

    def derivation(self, s: CiStatement) -> Derivation:
        if s not in self._origins:
            raise StatementError(f"statement was not derived: {s}")
        order: list[CiStatement] = []
        index: dict[CiStatement, int] = {}

        def visit(stmt: CiStatement) -> int:
            if stmt in index:
                return index[stmt]
            rule, parents, w = self._origins[stmt]
            parent_ids = tuple(visit(p) for p in parents)
            index[stmt] = len(order)
            order.append(stmt)
            steps.append(DerivationStep(stmt, rule, parent_ids, w))
            return index[stmt]

        steps: list[DerivationStep] = []
        visit(s)
        return Derivation(s, tuple(steps))


def closure(premises: Iterable[CiStatement], universe: Universe,
            bound: int = DEFAULT_CLOSURE_BOUND) -> ClosureResult:
    """Saturate premises under P1-P5, restricted to the declared universe.

    Set algebra runs on bitmasks for speed.  The returned statement set
    is filtered to conclusions with a stochastic left slot (the
    well-formedness discipline for emission); intermediate statements
    stay available to ``derivation``.  ``truncated`` flags an early stop
    at ``bound`` statements.
    """
    if bound <= 0:
        raise StatementError("closure bound must be positive")
    names = universe.variables
    pos = {v: i for i, v in enumerate(names)}
    regime_mask = 0
    for v in names:
        if universe.is_regime(v):
            regime_mask |= 1 << pos[v]

    def to_mask(s: frozenset[str]) -> int:
        m = 0
        for v in s:
            if v not in pos:
                raise StatementError(f"undeclared variable: {v!r}")
            m |= 1 << pos[v]
        return m

    def to_set(m: int) -> frozenset[str]:
        return frozenset(names[i] for i in range(len(names)) if m >> i & 1)

    origins: dict[tuple[int, int, int], tuple] = {}
    queue: deque[tuple[int, int, int]] = deque()
    truncated = False

    def add(stmt: tuple[int, int, int], origin: tuple) -> None:
        nonlocal truncated
        if stmt in origins:
            return
        if len(origins) >= bound:
            truncated = True
            return
        origins[stmt] = origin
        queue.append(stmt)
        by_left_given.setdefault((stmt[0], stmt[2]), []).append(stmt)
        by_left_union.setdefault((stmt[0], stmt[1] | stmt[2]), []).append(stmt)

    by_left_given: dict[tuple[int, int], list] = {}
    by_left_union: dict[tuple[int, int], list] = {}

    for s in sorted(premises, key=str):
        add((to_mask(s.left), to_mask(s.right), to_mask(s.given)), ("premise", (), None))

    # P2 seeds: X ⫫ Y | X for every pair of disjoint nonempty sets
    full = (1 << len(names)) - 1
    for x in range(1, full + 1):
        rest = full & ~x
        y = rest
        while y:
            add((x, y, x), ("P2", (), None))
            y = (y - 1) & rest
        if truncated:
            break

    def submasks(m: int):
        sub = m
        while sub:
            yield sub
            sub = (sub - 1) & m

    while queue and not truncated:
        l, r, g = stmt = queue.popleft()
        add((r, l, g), ("P1", (stmt,), None))
        for w in submasks(r):
            if w != r:
                add((l, w, g), ("P3", (stmt,), w))
            add((l, r, g | w), ("P4", (stmt,), w))
        # P5 with stmt as the first premise: partner has left l, given g|r
        for other in tuple(by_left_given.get((l, g | r), ())):
            add((l, r | other[1], g), ("P5", (stmt, other), None))
        # P5 with stmt as the second premise: partner has left l, right|given == g
        for other in tuple(by_left_union.get((l, g), ())):
            add((l, other[1] | r, other[2]), ("P5", (other, stmt), None))

    def make(stmt: tuple[int, int, int]) -> CiStatement:
        return CiStatement(to_set(stmt[0]), to_set(stmt[1]), to_set(stmt[2]))

    emitted = frozenset(make(s) for s in origins if s[0] and not s[0] & regime_mask)
    traced: dict[CiStatement, tuple] = {}
    for stmt, (rule, parents, w) in origins.items():
        traced[make(stmt)] = (rule, tuple(make(p) for p in parents),
                              None if w is None else to_set(w))
    return ClosureResult(emitted, truncated, traced, universe)


def ci_holds_numeric(t: JointTable, s: CiStatement, eps: float = 1e-10) -> bool:
    """Check a (stochastic, disjoint) statement numerically on an exact joint."""
    if not s.is_disjoint():
        raise StatementError(f"numeric check needs disjoint sets: {s}")
    for v in s.variables():
        if v not in t.variables:
            raise StatementError(f"variable {v!r} not in table")
    return conditional_independent(t, s.left, s.right, s.given, eps)


def local_markov_statements(dag, universe: Universe | None = None) -> list[CiStatement]:
    """Per-node statements: node ⫫ non-descendants | parents (nonempty sides only)."""
    out = []
    for v in sorted(dag.nodes):
        nd = dag.nodes - dag.descendants([v]) - dag.parents(v)
        if nd:
            out.append(CiStatement(frozenset([v]), nd, dag.parents(v)))
    return out
