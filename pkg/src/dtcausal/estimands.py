"""Symbolic estimands: probability expression trees and their evaluation.

A leaf term P(target | observed, intervened) names variable sets only;
concrete state values live in a separate assignment, with one value per
variable in scope (query-supplied for free variables, enumerated for
variables bound by a Sum).  A tree is observational when no term
carries intervened conditioners; only such trees can be evaluated from
a single passively-collected table.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Union

from .tables import JointTable, ZeroProbabilityError


class EstimandError(ValueError):
    """Malformed expression, query text, or missing value binding."""


@dataclass(frozen=True)
class Prob:
    """P(target | obs, do): every slot is a set of variable names."""

    target: frozenset[str]
    obs: frozenset[str] = frozenset()
    do: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        t, o, d = (frozenset(self.target), frozenset(self.obs), frozenset(self.do))
        object.__setattr__(self, "target", t)
        object.__setattr__(self, "obs", o)
        object.__setattr__(self, "do", d)
        if not t:
            raise EstimandError("probability term needs a target")
        if t & o or t & d or o & d:
            raise EstimandError("term slots must be disjoint")


@dataclass(frozen=True)
class Sum:
    var: str
    body: "Estimand"


@dataclass(frozen=True)
class Product:
    factors: tuple["Estimand", ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "factors", tuple(self.factors))
        if len(self.factors) < 2:
            raise EstimandError("product needs at least two factors")


@dataclass(frozen=True)
class Quotient:
    numerator: "Estimand"
    denominator: "Estimand"


@dataclass(frozen=True)
class Const:
    value: float


Estimand = Union[Prob, Sum, Product, Quotient, Const]


def terms(e: Estimand) -> list[Prob]:
    """All probability leaves, left to right."""
    if isinstance(e, Prob):
        return [e]
    if isinstance(e, Sum):
        return terms(e.body)
    if isinstance(e, Product):
        return [t for f in e.factors for t in terms(f)]
    if isinstance(e, Quotient):
        return terms(e.numerator) + terms(e.denominator)
    return []


def variables(e: Estimand) -> frozenset[str]:
    """Every variable mentioned anywhere, bound or free."""
    if isinstance(e, Prob):
        return e.target | e.obs | e.do
    if isinstance(e, Sum):
        return variables(e.body) | {e.var}
    if isinstance(e, Product):
        return frozenset().union(*(variables(f) for f in e.factors))
    if isinstance(e, Quotient):
        return variables(e.numerator) | variables(e.denominator)
    return frozenset()


def is_observational(e: Estimand) -> bool:
    return all(not t.do for t in terms(e))


def _replace(e: Estimand, old: Prob, new: Estimand) -> tuple[Estimand, bool]:
    """Swap the first occurrence of ``old``; returns (tree, replaced?)."""
    if isinstance(e, Prob):
        return (new, True) if e == old else (e, False)
    if isinstance(e, Sum):
        body, done = _replace(e.body, old, new)
        return Sum(e.var, body), done
    if isinstance(e, Product):
        out, done = [], False
        for f in e.factors:
            if done:
                out.append(f)
            else:
                f2, done = _replace(f, old, new)
                out.append(f2)
        return Product(tuple(out)), done
    if isinstance(e, Quotient):
        num, done = _replace(e.numerator, old, new)
        if done:
            return Quotient(num, e.denominator), True
        den, done = _replace(e.denominator, old, new)
        return Quotient(e.numerator, den), done
    return e, False


def replace_term(e: Estimand, old: Prob, new: Estimand) -> Estimand:
    out, done = _replace(e, old, new)
    if not done:
        raise EstimandError("term to replace not found")
    return out


def normalize(e: Estimand) -> Estimand:
    """Stable normal form: sums hoisted outermost where safe, flattened
    products with sorted factors.  Golden-file output depends on this."""
    if isinstance(e, Sum):
        return Sum(e.var, normalize(e.body))
    if isinstance(e, Quotient):
        return Quotient(normalize(e.numerator), normalize(e.denominator))
    if isinstance(e, Product):
        factors = []
        for f in (normalize(f) for f in e.factors):
            if isinstance(f, Product):
                factors.extend(f.factors)
            else:
                factors.append(f)
        # hoist a summed factor when its bound variable is absent elsewhere
        for i, f in enumerate(factors):
            if isinstance(f, Sum):
                rest = factors[:i] + factors[i + 1:]
                if all(f.var not in variables(r) for r in rest):
                    inner = [f.body] + rest
                    return normalize(Sum(f.var, inner[0] if len(inner) == 1 else Product(tuple(inner))))
        factors.sort(key=render)
        return Product(tuple(factors)) if len(factors) > 1 else factors[0]
    return e


def render(e: Estimand, values: Mapping[str, str] | None = None,
           bound: frozenset[str] = frozenset()) -> str:
    """Deterministic text form; values fill in ``V=v`` where known."""
    values = dict(values or {})

    def atom(v: str) -> str:
        if v in values:
            return f"{v}={values[v]}"
        if v in bound:
            return f"{v}={v.lower()}"
        return v

    if isinstance(e, Prob):
        inside = ",".join(atom(v) for v in sorted(e.target))
        conds = [atom(v) for v in sorted(e.obs)]
        conds += [f"do({atom(v)})" for v in sorted(e.do)]
        return f"P({inside} | {', '.join(conds)})" if conds else f"P({inside})"
    if isinstance(e, Sum):
        return f"sum_{{{e.var}}} {render(e.body, values, bound | {e.var})}"
    if isinstance(e, Product):
        return " ".join(_wrap(f, values, bound) for f in e.factors)
    if isinstance(e, Quotient):
        return f"{_wrap(e.numerator, values, bound)} / {_wrap(e.denominator, values, bound)}"
    if isinstance(e, Const):
        return repr(e.value)
    raise EstimandError(f"not an estimand: {e!r}")


def _wrap(e: Estimand, values, bound) -> str:
    text = render(e, values, bound)
    return f"({text})" if isinstance(e, (Sum, Product, Quotient)) else text


_QUERY = re.compile(r"^\s*P\s*\((?P<inside>.*)\)\s*$", re.DOTALL)
_ITEM = re.compile(r"^(?P<var>\w+)\s*(?:=\s*(?P<val>\S+))?$")


def parse_query(text: str) -> tuple[Prob, dict[str, str]]:
    """Parse ``P(Y=1 | do(X=1), Z)`` into a term and its value bindings."""
    m = _QUERY.match(text)
    if not m:
        raise EstimandError(f"cannot parse query: {text!r}")
    inside = m.group("inside")
    head, _, tail = inside.partition("|")
    values: dict[str, str] = {}

    def read_item(item: str) -> str:
        im = _ITEM.match(item.strip())
        if not im:
            raise EstimandError(f"cannot parse query item: {item!r}")
        var, val = im.group("var"), im.group("val")
        if val is not None:
            if values.get(var, val) != val:
                raise EstimandError(f"conflicting values for {var}")
            values[var] = val
        return var

    target = frozenset(read_item(i) for i in _split_commas(head) if i.strip())
    obs: set[str] = set()
    do: set[str] = set()
    for item in _split_commas(tail):
        item = item.strip()
        if not item:
            continue
        dm = re.match(r"^do\s*\((?P<body>.*)\)$", item)
        if dm:
            do.update(read_item(i) for i in _split_commas(dm.group("body")) if i.strip())
        else:
            obs.add(read_item(item))
    if not target:
        raise EstimandError(f"query has no target: {text!r}")
    return Prob(target, frozenset(obs), frozenset(do)), values


def _split_commas(text: str) -> list[str]:
    """Split on commas not inside parentheses."""
    out, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            out.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    out.append("".join(cur))
    return out


class TableProvider:
    """Resolve regime-specific joints for estimand evaluation."""

    def for_interventions(self, interventions: Mapping[str, str]) -> JointTable:
        raise NotImplementedError

    def states(self, var: str) -> tuple[str, ...]:
        return self.for_interventions({}).space.states(var)


class SingleTable(TableProvider):
    """Observational mode: only the idle regime is available."""

    def __init__(self, table: JointTable):
        self.table = table

    def for_interventions(self, interventions: Mapping[str, str]) -> JointTable:
        if interventions:
            raise EstimandError(
                f"interventional term {dict(interventions)} cannot be evaluated "
                "from observational data alone")
        return self.table


class ScmTables(TableProvider):
    """Oracle mode: enumerate (and cache) the joint for any regime."""

    def __init__(self, model):
        from .scm import do_joint, observational_joint  # local: avoid cycle
        self._model = model
        self._do_joint = do_joint
        self._obs = observational_joint
        self._cache: dict[frozenset, JointTable] = {}

    def for_interventions(self, interventions: Mapping[str, str]) -> JointTable:
        key = frozenset(interventions.items())
        if key not in self._cache:
            self._cache[key] = (self._do_joint(self._model, dict(key))
                                if key else self._obs(self._model))
        return self._cache[key]


def evaluate_estimand(e: Estimand, tables: TableProvider | JointTable,
                      values: Mapping[str, str]) -> float:
    """Exact arithmetic over table queries.

    ``values`` must bind every free variable of the expression; Sum
    nodes bind their own.  Interventional terms are resolved through
    the provider (oracle mode); a bare JointTable is idle-regime only.
    """
    if isinstance(tables, JointTable):
        tables = SingleTable(tables)
    return _eval(e, tables, dict(values))


def _eval(e: Estimand, tables: TableProvider, env: dict[str, str]) -> float:
    if isinstance(e, Const):
        return float(e.value)
    if isinstance(e, Prob):
        try:
            target = {v: env[v] for v in e.target}
            given = {v: env[v] for v in e.obs}
            do = {v: env[v] for v in e.do}
        except KeyError as missing:
            raise EstimandError(f"no value bound for variable {missing.args[0]!r}") from None
        table = tables.for_interventions(do)
        return table.prob(target, given)
    if isinstance(e, Sum):
        total = 0.0
        outer = env.get(e.var)
        for state in tables.states(e.var):
            env[e.var] = state
            total += _eval(e.body, tables, env)
        if outer is None:
            env.pop(e.var, None)
        else:
            env[e.var] = outer
        return total
    if isinstance(e, Product):
        out = 1.0
        for f in e.factors:
            out *= _eval(f, tables, env)
        return out
    if isinstance(e, Quotient):
        den = _eval(e.denominator, tables, env)
        if den == 0.0:
            raise ZeroProbabilityError("estimand denominator is zero")
        return _eval(e.numerator, tables, env) / den
    raise EstimandError(f"not an estimand: {e!r}")
