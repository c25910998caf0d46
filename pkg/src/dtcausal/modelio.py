"""Line-oriented text formats: graphs, models, datasets, strategies, statements.

Every parser reports errors with 1-based line numbers; every writer
emits a deterministic, re-parseable rendering (nodes and edges sorted),
so round-tripping is byte-stable.
"""

from __future__ import annotations

import re

from .graphs import Dag, GraphError
from .regimes import InfluenceDiagram, RegimeError
from .scm import DiscreteScm
from .statements import CiStatement, parse_statement
from .strategies import Stage, Strategy, StrategyError
from .tables import Cpt, RegimeDataset, StateSpace, TableError


class ParseError(ValueError):
    """Input text error; carries the offending line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def _content_lines(text: str):
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield i, line


# ---------------------------------------------------------------------------
# graph files

_NODE = re.compile(r"^node\s+(?P<name>\w+)(?P<flags>(\s+\S+)*)$")
_EDGE = re.compile(r"^edge\s+(?P<src>\w+)\s*->\s*(?P<dst>\w+)$")


def parse_graph(text: str) -> tuple[str, Dag | InfluenceDiagram]:
    """Parse the graph format: dag/node/edge lines, # comments.

    Node flags: ``regime`` (optionally ``target=X``, which implies the
    edge), ``latent``, ``deterministic``.  Duplicate declarations are
    errors.  Returns a plain Dag when no flags are used.
    """
    name = None
    nodes: dict[str, int] = {}
    edges: dict[tuple[str, str], int] = {}
    regime: set[str] = set()
    latent: set[str] = set()
    deterministic: set[str] = set()
    for i, line in _content_lines(text):
        if line.startswith("dag"):
            parts = line.split()
            if len(parts) != 2:
                raise ParseError(i, "expected: dag <name>")
            if name is not None:
                raise ParseError(i, "duplicate dag header")
            name = parts[1]
            continue
        m = _NODE.match(line)
        if m:
            node = m.group("name")
            if node in nodes:
                raise ParseError(i, f"duplicate node declaration: {node}")
            nodes[node] = i
            for flag in m.group("flags").split():
                if flag == "regime":
                    regime.add(node)
                elif flag == "latent":
                    latent.add(node)
                elif flag == "deterministic":
                    deterministic.add(node)
                elif flag.startswith("target="):
                    target = flag.split("=", 1)[1]
                    if (node, target) in edges:
                        raise ParseError(i, f"duplicate edge declaration: {node} -> {target}")
                    edges[(node, target)] = i
                else:
                    raise ParseError(i, f"unknown node flag: {flag!r}")
            continue
        m = _EDGE.match(line)
        if m:
            pair = (m.group("src"), m.group("dst"))
            if pair in edges:
                raise ParseError(i, f"duplicate edge declaration: {pair[0]} -> {pair[1]}")
            edges[pair] = i
            continue
        raise ParseError(i, f"cannot parse: {line!r}")
    for (a, b), i in sorted(edges.items(), key=lambda kv: kv[1]):
        for endpoint in (a, b):
            if endpoint not in nodes:
                raise ParseError(i, f"edge endpoint {endpoint!r} is not a declared node")
    try:
        dag = Dag(frozenset(nodes), frozenset(edges))
        if regime or latent or deterministic:
            graph: Dag | InfluenceDiagram = InfluenceDiagram(
                dag, frozenset(regime), frozenset(deterministic), frozenset(latent))
        else:
            graph = dag
    except (GraphError, RegimeError) as exc:
        raise ParseError(0, str(exc)) from exc
    return name or "g", graph


def write_graph(graph: Dag | InfluenceDiagram, name: str = "g") -> str:
    if isinstance(graph, InfluenceDiagram):
        dag = graph.dag
        flags = {}
        for n in graph.regime_nodes:
            flags.setdefault(n, []).append("regime")
        for n in graph.latent:
            flags.setdefault(n, []).append("latent")
        for n in graph.deterministic:
            flags.setdefault(n, []).append("deterministic")
    else:
        dag, flags = graph, {}
    lines = [f"dag {name}"]
    for n in dag.sorted_nodes():
        suffix = (" " + " ".join(flags[n])) if n in flags else ""
        lines.append(f"node {n}{suffix}")
    for a, b in dag.sorted_edges():
        lines.append(f"edge {a} -> {b}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# model files

_VAR = re.compile(r"^var\s+(?P<name>\w+)\s*\{\s*states\s*=\s*(?P<states>[^{}]+?)\s*\}$")
_CPT_OPEN = re.compile(r"^cpt\s+(?P<child>\w+)\s*(\|\s*(?P<parents>[\w\s]+?)\s*)?\{$")
_ROW = re.compile(r"^row\s*(?P<config>[^:]*):(?P<probs>.+)$")
_REGIME = re.compile(r"^regime\s+(?P<name>\w+)\s*->\s*(?P<targets>[\w\s]+)$")


def _expand_inline_cpts(lines):
    """Allow whole cpt blocks on one line: split the braced body on 'row'."""
    for i, line in lines:
        m = re.match(r"^(cpt\b[^{]*)\{(?P<body>.+)\}$", line)
        if m and m.group("body").strip():
            yield i, m.group(1).strip() + " {"
            for part in re.split(r"(?=\brow\b)", m.group("body")):
                if part.strip():
                    yield i, part.strip()
            yield i, "}"
        else:
            yield i, line


def parse_model(text: str) -> DiscreteScm:
    """Parse var/cpt/regime declarations into a structural model."""
    states: dict[str, list[str]] = {}
    cpts: dict[str, tuple[int, tuple[str, ...], dict]] = {}
    regimes: dict[str, list[str]] = {}
    latent: set[str] = set()
    lines = list(_expand_inline_cpts(_content_lines(text)))
    k = 0
    while k < len(lines):
        i, line = lines[k]
        k += 1
        m = _VAR.match(line)
        if m:
            name = m.group("name")
            if name in states:
                raise ParseError(i, f"duplicate var declaration: {name}")
            states[name] = m.group("states").split()
            continue
        m = _REGIME.match(line)
        if m:
            name = m.group("name")
            if name in regimes:
                raise ParseError(i, f"duplicate regime declaration: {name}")
            regimes[name] = m.group("targets").split()
            continue
        if line.startswith("latent"):
            parts = line.split()
            if len(parts) != 2:
                raise ParseError(i, "expected: latent <var>")
            latent.add(parts[1])
            continue
        m = _CPT_OPEN.match(line)
        if m:
            child = m.group("child")
            if child in cpts:
                raise ParseError(i, f"duplicate cpt for {child}")
            parents = tuple((m.group("parents") or "").split())
            rows: dict[tuple[str, ...], list[float]] = {}
            closed = False
            while k < len(lines):
                j, body = lines[k]
                k += 1
                if body == "}":
                    closed = True
                    break
                rm = _ROW.match(body)
                if not rm:
                    raise ParseError(j, f"expected a row or '}}', got: {body!r}")
                config = tuple(rm.group("config").split())
                if len(config) != len(parents):
                    raise ParseError(j, f"row names {len(config)} parent values, cpt has {len(parents)}")
                if config in rows:
                    raise ParseError(j, f"duplicate row {config}")
                try:
                    rows[config] = [float(p) for p in rm.group("probs").split()]
                except ValueError:
                    raise ParseError(j, "probabilities must be numbers") from None
            if not closed:
                raise ParseError(i, f"cpt {child} is never closed")
            cpts[child] = (i, parents, rows)
            continue
        raise ParseError(i, f"cannot parse: {line!r}")
    space = StateSpace(states)
    edges: set[tuple[str, str]] = set()
    mechanisms: dict[str, Cpt] = {}
    for child, (i, parents, rows) in sorted(cpts.items()):
        for p in parents:
            if p not in states:
                raise ParseError(i, f"cpt parent {p!r} is not a declared var")
            edges.add((p, child))
        if child not in states:
            raise ParseError(i, f"cpt child {child!r} is not a declared var")
        try:
            mechanisms[child] = Cpt.from_rows(child, parents, space, rows)
        except TableError as exc:
            raise ParseError(i, str(exc)) from exc
    nodes = set(states)
    for f, targets in sorted(regimes.items()):
        nodes.add(f)
        for t in targets:
            if t not in states:
                raise ParseError(0, f"regime target {t!r} is not a declared var")
            edges.add((f, t))
    missing = sorted(set(states) - set(mechanisms))
    if missing:
        raise ParseError(0, f"var {missing[0]} has no cpt")
    try:
        diagram = InfluenceDiagram(Dag(frozenset(nodes), frozenset(edges)),
                                   frozenset(regimes), latent=frozenset(latent))
        return DiscreteScm(diagram, space, mechanisms)
    except (GraphError, RegimeError, TableError, ValueError) as exc:
        raise ParseError(0, str(exc)) from exc


def write_model(m: DiscreteScm) -> str:
    lines: list[str] = []
    for v in m.space.variables:
        lines.append(f"var {v} {{ states = {' '.join(m.space.states(v))} }}")
    for f in sorted(m.diagram.regime_nodes):
        lines.append(f"regime {f} -> {' '.join(sorted(m.diagram.targets(f)))}")
    for v in sorted(m.diagram.latent):
        lines.append(f"latent {v}")
    for v in m.space.variables:
        cpt = m.induced_cpt(v)
        head = f"cpt {v}"
        if cpt.parents:
            head += " | " + " ".join(cpt.parents)
        lines.append(head + " {")
        for config, row in zip(m.space.configurations(cpt.parents), cpt.rows):
            probs = " ".join(f"{p:.17g}" for p in row)
            prefix = " ".join(config)
            lines.append(f"  row {prefix} : {probs}" if prefix else f"  row : {probs}")
        lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# data files

REGIME_COLUMN = "__regime__"


def parse_dataset(text: str) -> RegimeDataset:
    """Delimited text: header row, one categorical value per cell, optional
    __regime__ column.  Tab-separated canonically; falls back to commas."""
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise ParseError(1, "empty dataset")
    delim = "\t" if "\t" in lines[0] else ","
    header = [h.strip() for h in lines[0].split(delim)]
    if len(set(header)) != len(header):
        raise ParseError(1, "duplicate column names")
    regime_at = header.index(REGIME_COLUMN) if REGIME_COLUMN in header else None
    columns = tuple(h for h in header if h != REGIME_COLUMN)
    rows: list[tuple[str, ...]] = []
    regimes: list[str] = []
    for i, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        cells = [c.strip() for c in raw.split(delim)]
        if len(cells) != len(header):
            raise ParseError(i, f"row has {len(cells)} cells, header has {len(header)}")
        if regime_at is None:
            regimes.append("idle")
        else:
            regimes.append(cells[regime_at])
            cells = cells[:regime_at] + cells[regime_at + 1:]
        rows.append(tuple(cells))
    try:
        return RegimeDataset(columns, rows, regimes)
    except TableError as exc:
        raise ParseError(0, str(exc)) from exc


def write_dataset(d: RegimeDataset) -> str:
    header = "\t".join(d.columns + (REGIME_COLUMN,))
    lines = [header]
    for row, tag in zip(d.rows, d.regimes):
        lines.append("\t".join(row + (tag,)))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# strategy files

_RULE = re.compile(r"^rule\s+(?P<treatment>\w+)\s*(\|(?P<conds>[^:]*))?:(?P<outcome>.+)$")
_COND = re.compile(r"^(?P<var>\w+)=(?P<val>\S+)$")


def parse_strategy(text: str) -> Strategy:
    """Parse stage rules, one per line.

    ``rule T2 | L1=a T1=b L2=c : T2=d`` for a deterministic choice, and
    ``... : T2=d p=0.5 / T2=e p=0.5`` for a randomised one.  Stages are
    ordered by first appearance; every rule of one treatment must
    condition on the same history variables.
    """
    per_treatment: dict[str, tuple[tuple[str, ...], dict]] = {}
    order: list[str] = []
    for i, line in _content_lines(text):
        m = _RULE.match(line)
        if not m:
            raise ParseError(i, f"cannot parse rule: {line!r}")
        treatment = m.group("treatment")
        conds = []
        for item in (m.group("conds") or "").split():
            cm = _COND.match(item)
            if not cm:
                raise ParseError(i, f"bad history condition: {item!r}")
            conds.append((cm.group("var"), cm.group("val")))
        history = tuple(v for v, _ in conds)
        config = tuple(v for _, v in conds)
        dist: dict[str, float] = {}
        for branch in m.group("outcome").split("/"):
            parts = branch.split()
            if not parts:
                raise ParseError(i, "empty outcome branch")
            om = _COND.match(parts[0])
            if not om or om.group("var") != treatment:
                raise ParseError(i, f"outcome must set {treatment}: {branch.strip()!r}")
            p = 1.0
            for extra in parts[1:]:
                pm = re.match(r"^p=(?P<p>[\d.eE+-]+)$", extra)
                if not pm:
                    raise ParseError(i, f"bad outcome annotation: {extra!r}")
                p = float(pm.group("p"))
            if om.group("val") in dist:
                raise ParseError(i, f"duplicate outcome {om.group('val')!r}")
            dist[om.group("val")] = p
        if treatment not in per_treatment:
            per_treatment[treatment] = (history, {})
            order.append(treatment)
        expected_history, rules = per_treatment[treatment]
        if history != expected_history:
            raise ParseError(i, f"history {list(history)} differs from earlier rules "
                                f"for {treatment} ({list(expected_history)})")
        if config in rules:
            raise ParseError(i, f"duplicate rule for {treatment} at {config}")
        rules[config] = dist
    if not order:
        raise ParseError(0, "strategy file declares no rules")
    try:
        stages = tuple(Stage.from_mapping(t, per_treatment[t][0], per_treatment[t][1])
                       for t in order)
        return Strategy(stages)
    except StrategyError as exc:
        raise ParseError(0, str(exc)) from exc


def write_strategy(s: Strategy) -> str:
    lines = []
    for stage in s.stages:
        for config, dist in stage.rules:
            conds = " ".join(f"{v}={val}" for v, val in zip(stage.history, config))
            outcome = " / ".join(
                f"{stage.treatment}={state}" + ("" if p == 1.0 else f" p={p:g}")
                for state, p in dist)
            middle = f" | {conds} " if conds else " "
            lines.append(f"rule {stage.treatment}{middle}: {outcome}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# statement files

def parse_statements(text: str) -> list[CiStatement]:
    out = []
    for i, line in _content_lines(text):
        try:
            out.append(parse_statement(line))
        except ValueError as exc:
            raise ParseError(i, str(exc)) from exc
    return out
