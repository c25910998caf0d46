"""Exact finite joint distributions and regime-tagged datasets.

Joint tables are dense numpy arrays with one axis per variable, axes
ordered by sorted variable name.  They are the oracle substrate: all
conditional-independence checks, estimand evaluations and ground-truth
comparisons in this package reduce to exact arithmetic on these tables.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .graphs import Dag, GraphError

MAX_CELLS = 2 ** 24
ROW_SUM_TOL = 1e-9
MASS_TOL = 1e-12

_LABEL = re.compile(r"^\S+$")


class TableError(ValueError):
    """Malformed state space, CPT or table construction."""


class TableSizeError(TableError):
    """A requested joint would exceed the cell-count guard."""


class ZeroProbabilityError(ValueError):
    """Conditioning on an event of probability zero (positivity failure)."""


class StateSpace:
    """Ordered state labels per variable; labels are whitespace-free tokens."""

    def __init__(self, states: Mapping[str, Sequence[str]]):
        self._states: dict[str, tuple[str, ...]] = {}
        for var, labels in states.items():
            labels = tuple(str(s) for s in labels)
            if not labels:
                raise TableError(f"variable {var} has no states")
            if len(set(labels)) != len(labels):
                raise TableError(f"duplicate state labels for {var}")
            for s in labels:
                if not _LABEL.match(s):
                    raise TableError(f"invalid state label {s!r} for {var}")
            self._states[str(var)] = labels

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(sorted(self._states))

    def __contains__(self, var: str) -> bool:
        return var in self._states

    def states(self, var: str) -> tuple[str, ...]:
        try:
            return self._states[var]
        except KeyError:
            raise TableError(f"unknown variable: {var!r}") from None

    def card(self, var: str) -> int:
        return len(self.states(var))

    def index(self, var: str, label: str) -> int:
        try:
            return self.states(var).index(label)
        except ValueError:
            raise TableError(f"unknown state {label!r} for {var}") from None

    def restrict(self, keep: Iterable[str]) -> "StateSpace":
        return StateSpace({v: self.states(v) for v in keep})

    def merge(self, other: "StateSpace") -> "StateSpace":
        merged = dict(self._states)
        for v in other._states:
            if v in merged and merged[v] != other._states[v]:
                raise TableError(f"conflicting state declarations for {v}")
            merged[v] = other._states[v]
        return StateSpace(merged)

    def configurations(self, variables: Sequence[str]) -> Iterable[tuple[str, ...]]:
        """All value tuples for ``variables``, last variable varying fastest."""
        return itertools.product(*(self.states(v) for v in variables))

    def __eq__(self, other) -> bool:
        return isinstance(other, StateSpace) and self._states == other._states

    def __repr__(self) -> str:
        return f"StateSpace({self._states!r})"


@dataclass(frozen=True)
class Cpt:
    """Conditional probability table for one child given its ordered parents.

    ``rows[i]`` is the child distribution for the i-th parent
    configuration, configurations enumerated in lexicographic order of
    the declared state lists (last parent varying fastest).  That order
    is the file and in-memory contract.
    """

    child: str
    parents: tuple[str, ...]
    rows: np.ndarray = field(compare=False)

    def __post_init__(self) -> None:
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2:
            raise TableError(f"cpt for {self.child}: rows must be a 2-d array")
        if np.any(rows < 0):
            raise TableError(f"cpt for {self.child}: negative probability")
        bad = np.abs(rows.sum(axis=1) - 1.0) > ROW_SUM_TOL
        if np.any(bad):
            raise TableError(f"cpt for {self.child}: row {int(np.argmax(bad))} does not sum to 1")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "parents", tuple(self.parents))

    def row_index(self, space: StateSpace, assignment: Mapping[str, str]) -> int:
        idx = 0
        for p in self.parents:
            idx = idx * space.card(p) + space.index(p, assignment[p])
        return idx

    def row(self, space: StateSpace, assignment: Mapping[str, str]) -> np.ndarray:
        return self.rows[self.row_index(space, assignment)]

    @classmethod
    def from_rows(cls, child: str, parents: Sequence[str], space: StateSpace,
                  rows: Mapping[tuple[str, ...], Sequence[float]]) -> "Cpt":
        """Build from a {parent-config: child distribution} mapping."""
        parents = tuple(parents)
        configs = list(space.configurations(parents))
        positions = {c: i for i, c in enumerate(configs)}
        table = np.zeros((len(configs), space.card(child)))
        seen = set()
        for config, probs in rows.items():
            config = tuple(str(v) for v in config)
            if config not in positions:
                raise TableError(f"cpt for {child}: unknown parent configuration {config}")
            if config in seen:
                raise TableError(f"cpt for {child}: duplicate row {config}")
            seen.add(config)
            table[positions[config]] = np.asarray(probs, dtype=float)
        missing = [c for c in configs if c not in seen]
        if missing:
            raise TableError(f"cpt for {child}: missing row for {missing[0]}")
        return cls(child, parents, table)

    @classmethod
    def point_mass(cls, child: str, space: StateSpace, value: str) -> "Cpt":
        row = np.zeros((1, space.card(child)))
        row[0, space.index(child, value)] = 1.0
        return cls(child, (), row)


class JointTable:
    """Exact joint probability table over finitely many variables."""

    def __init__(self, space: StateSpace, cells: np.ndarray, variables: Sequence[str] | None = None):
        variables = tuple(sorted(variables if variables is not None else space.variables))
        space = space.restrict(variables)
        shape = tuple(space.card(v) for v in variables)
        cells = np.asarray(cells, dtype=float).reshape(shape)
        if cells.size > MAX_CELLS:
            raise TableSizeError(f"joint would have {cells.size} cells (limit {MAX_CELLS})")
        if np.any(cells < 0):
            raise TableError("negative cell probability")
        if abs(float(cells.sum()) - 1.0) > MASS_TOL:
            raise TableError(f"total mass {cells.sum()!r} is not 1")
        self.space = space
        self.variables = variables
        self.cells = cells

    def _axes(self, vars_: Iterable[str]) -> tuple[int, ...]:
        return tuple(self.variables.index(v) for v in vars_)

    def _check_known(self, vars_: Iterable[str]) -> None:
        for v in vars_:
            if v not in self.variables:
                raise TableError(f"variable {v!r} not in table")

    def marginal(self, keep: Iterable[str]) -> "JointTable":
        keep = sorted(set(keep))
        self._check_known(keep)
        drop = self._axes(v for v in self.variables if v not in keep)
        return JointTable(self.space.restrict(keep), self.cells.sum(axis=drop), keep)

    def event_mass(self, assignment: Mapping[str, str]) -> float:
        """Marginal probability of a partial assignment."""
        self._check_known(assignment)
        idx = tuple(
            self.space.index(v, assignment[v]) if v in assignment else slice(None)
            for v in self.variables
        )
        return float(self.cells[idx].sum())

    def condition(self, assignment: Mapping[str, str]) -> "JointTable":
        """Exact conditional table over the remaining variables."""
        self._check_known(assignment)
        mass = self.event_mass(assignment)
        if mass <= 0.0:
            raise ZeroProbabilityError(f"conditioning event has probability zero: {dict(assignment)}")
        idx = tuple(
            self.space.index(v, assignment[v]) if v in assignment else slice(None)
            for v in self.variables
        )
        remaining = [v for v in self.variables if v not in assignment]
        if not remaining:
            raise TableError("conditioning on every variable leaves no table")
        return JointTable(self.space.restrict(remaining), self.cells[idx] / mass, remaining)

    def query(self, target: Iterable[str], given: Mapping[str, str] | None = None) -> np.ndarray:
        """Conditional distribution of ``target``; axes in sorted target order."""
        target = sorted(set(target))
        if not target:
            raise TableError("empty query target")
        given = dict(given or {})
        overlap = set(target) & set(given)
        if overlap:
            raise TableError(f"query target overlaps conditioners: {sorted(overlap)}")
        table = self.condition(given) if given else self
        return table.marginal(target).cells

    def prob(self, target: Mapping[str, str], given: Mapping[str, str] | None = None) -> float:
        """P(target | given), both partial assignments."""
        given = dict(given or {})
        denom = self.event_mass(given) if given else 1.0
        if denom <= 0.0:
            raise ZeroProbabilityError(f"conditioning event has probability zero: {given}")
        num = self.event_mass({**given, **target})
        return num / denom

    def expectation(self, var: str, given: Mapping[str, str] | None = None) -> float:
        """Mean of a numerically-coded variable, optionally conditional."""
        dist = self.query([var], given)
        values = numeric_labels(self.space.states(var), var)
        return float(np.dot(values, dist))

    def extend_with_function(self, name: str, states: Sequence[str],
                             fn: Callable[[Mapping[str, str]], str]) -> "JointTable":
        """Add a deterministic variable computed cell-wise from the others."""
        if name in self.variables:
            raise TableError(f"variable {name!r} already present")
        new_space = self.space.merge(StateSpace({name: states}))
        new_vars = sorted(self.variables + (name,))
        shape = tuple(new_space.card(v) for v in new_vars)
        cells = np.zeros(shape)
        pos = new_vars.index(name)
        for idx in np.ndindex(self.cells.shape):
            assignment = {v: self.space.states(v)[i] for v, i in zip(self.variables, idx)}
            k = new_space.index(name, fn(assignment))
            cells[idx[:pos] + (k,) + idx[pos:]] = self.cells[idx]
        return JointTable(new_space, cells, new_vars)

    def sample(self, n: int, seed: int, regime: str = "idle") -> "RegimeDataset":
        """I.i.d. draws; deterministic for a fixed seed."""
        if n < 0:
            raise TableError("sample size must be nonnegative")
        rng = np.random.default_rng(seed)
        flat = self.cells.reshape(-1)
        draws = rng.choice(flat.size, size=n, p=flat)
        rows = []
        for d in draws:
            idx = np.unravel_index(int(d), self.cells.shape)
            rows.append(tuple(self.space.states(v)[i] for v, i in zip(self.variables, idx)))
        return RegimeDataset(self.variables, rows, [regime] * n)


def numeric_labels(labels: Sequence[str], var: str) -> np.ndarray:
    """Parse state labels as numbers; mean-based estimands require this."""
    try:
        return np.array([float(s) for s in labels])
    except ValueError:
        bad = next(s for s in labels if not _is_number(s))
        raise TableError(f"state {bad!r} of {var} is not numeric") from None


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def joint_from_cpts(g: Dag, cpts: Mapping[str, Cpt], space: StateSpace) -> JointTable:
    """Product of per-node CPT entries, exactly as the factorisation reads."""
    missing = sorted(g.nodes - set(cpts))
    if missing:
        raise TableError(f"missing cpt for {missing[0]}")
    for node in g.nodes:
        cpt = cpts[node]
        if cpt.child != node:
            raise TableError(f"cpt filed under {node} declares child {cpt.child}")
        if frozenset(cpt.parents) != g.parents(node):
            raise TableError(
                f"cpt parents {sorted(cpt.parents)} of {node} do not match "
                f"graph parents {sorted(g.parents(node))}")
    variables = tuple(sorted(g.nodes))
    shape = tuple(space.card(v) for v in variables)
    size = 1
    for k in shape:
        size *= k
        if size > MAX_CELLS:
            raise TableSizeError(f"joint would exceed {MAX_CELLS} cells")
    cells = np.ones(shape)
    for node in variables:
        cpt = cpts[node]
        involved = cpt.parents + (node,)
        arr = cpt.rows.reshape(tuple(space.card(v) for v in involved))
        # permute the (parents..., child) axes into sorted joint order
        order = np.argsort([variables.index(v) for v in involved])
        arr = np.transpose(arr, tuple(order))
        expanded = tuple(space.card(v) if v in involved else 1 for v in variables)
        cells = cells * arr.reshape(expanded)
    return JointTable(space.restrict(variables), cells, variables)


def conditional_independent(t: JointTable, a: Iterable[str], b: Iterable[str],
                            c: Iterable[str], eps: float = 1e-10) -> bool:
    """Numeric CI check: |P(a|b,c) - P(a|c)| <= eps wherever P(b,c) > 0."""
    a, b, c = sorted(set(a)), sorted(set(b)), sorted(set(c))
    if not a or not b:
        raise TableError("both independence sets must be nonempty")
    if set(a) & set(b) or set(a) & set(c) or set(b) & set(c):
        raise TableError("independence sets must be pairwise disjoint")
    t._check_known(a + b + c)
    m = t.marginal(a + b + c)
    # transpose to (a..., b..., c...) blocks
    order = m._axes(a) + m._axes(b) + m._axes(c)
    p_abc = np.transpose(m.cells, order)
    la, lb = len(a), len(b)
    a_axes = tuple(range(la))
    b_axes = tuple(range(la, la + lb))
    p_bc = p_abc.sum(axis=a_axes, keepdims=True)
    p_ac = p_abc.sum(axis=b_axes, keepdims=True)
    p_c = p_ac.sum(axis=a_axes, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        lhs = np.where(p_bc > 0, p_abc / p_bc, 0.0)
        rhs = np.where(p_c > 0, p_ac / p_c, 0.0)
        diff = np.abs(lhs - np.broadcast_to(rhs, lhs.shape))
    mask = np.broadcast_to(p_bc > 0, lhs.shape)
    return bool(np.all(diff[mask] <= eps))


@dataclass
class RegimeDataset:
    """Rows of categorical assignments, each tagged with its generating regime.

    Tags are ``idle`` or comma-joined ``F_<var>=<state>`` entries naming
    the intervened variables and the values they were set to.
    """

    columns: tuple[str, ...]
    rows: list[tuple[str, ...]]
    regimes: list[str]

    def __post_init__(self) -> None:
        self.columns = tuple(self.columns)
        self.rows = [tuple(str(v) for v in r) for r in self.rows]
        self.regimes = [str(t) for t in self.regimes]
        if len(self.rows) != len(self.regimes):
            raise TableError("row/regime tag count mismatch")
        for r in self.rows:
            if len(r) != len(self.columns):
                raise TableError(f"row width {len(r)} does not match header {len(self.columns)}")
        for tag in self.regimes:
            parse_regime_tag(tag)  # validates the format

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str, rows: Iterable[int] | None = None) -> list[str]:
        try:
            j = self.columns.index(name)
        except ValueError:
            raise TableError(f"unknown column: {name!r}") from None
        idx = range(len(self.rows)) if rows is None else rows
        return [self.rows[i][j] for i in idx]

    def numeric_column(self, name: str, rows: Iterable[int] | None = None) -> np.ndarray:
        return numeric_labels(self.column(name, rows), name)

    def rows_for(self, tag: str) -> list[int]:
        want = parse_regime_tag(tag)
        return [i for i, t in enumerate(self.regimes) if parse_regime_tag(t) == want]

    def idle_rows(self) -> list[int]:
        return self.rows_for("idle")


def parse_regime_tag(tag: str) -> frozenset[tuple[str, str]]:
    """Normalise a regime tag to an intervention set; ``idle`` maps to the empty set."""
    tag = tag.strip()
    if tag == "idle":
        return frozenset()
    parts = [p.strip() for p in tag.split(",") if p.strip()]
    out = set()
    for part in parts:
        m = re.match(r"^F_(\w+)=(\S+)$", part)
        if not m:
            raise TableError(f"bad regime tag {tag!r} (expected idle or F_<var>=<state>)")
        out.add((m.group(1), m.group(2)))
    if not out:
        raise TableError(f"bad regime tag {tag!r}")
    return frozenset(out)


def format_regime_tag(interventions: Mapping[str, str] | Iterable[tuple[str, str]]) -> str:
    items = sorted(dict(interventions).items())
    if not items:
        return "idle"
    return ",".join(f"F_{v}={s}" for v, s in items)
