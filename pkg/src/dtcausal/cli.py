"""Command-line entry point: one binary, subcommand per operation.

Exit codes: 0 success, 1 domain outcome the caller must handle
(precondition failure, not identified, weak instrument, positivity),
2 malformed input.  Output is deterministic for fixed inputs and seeds;
``--format records`` switches to line-oriented key=value output.
Commands with a ``--report-dir`` also write a TSV record file and
matplotlib figures there.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import docalc, estimators, modelio, strategies
from .estimands import EstimandError, parse_query, render
from .graphs import (GraphError, d_separated, markov_equivalent, moralize,
                     ancestral_subgraph, immoralities, skeleton)
from .regimes import (InfluenceDiagram, RegimeError, as_diagram, augment,
                      check_no_confounding, check_iv_assumptions)
from .scm import ScmError, exact_joint
from .statements import (StatementError, closure, is_well_formed,
                         parse_statement)
from .tables import (TableError, ZeroProbabilityError, format_regime_tag,
                     parse_regime_tag)

DOMAIN_ERRORS = (RegimeError, ZeroProbabilityError, estimators.EstimationError,
                 strategies.IgnorabilityError, strategies.PositivityViolation,
                 docalc.IdentificationError)
INPUT_ERRORS = (modelio.ParseError, GraphError, TableError, StatementError,
                EstimandError, ScmError, strategies.StrategyError, OSError)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DOMAIN_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except INPUT_ERRORS as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dtcausal", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("dsep", help="separation query on a graph")
    p.add_argument("statement", help='e.g. "A _||_ C | B"')
    p.add_argument("--graph", required=True)
    _common(p)
    p.set_defaults(func=cmd_dsep)

    p = sub.add_parser("moralize", help="moralised (ancestral) graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--restrict", help="comma-separated nodes: moralise their ancestral subgraph")
    _common(p)
    p.set_defaults(func=cmd_moralize)

    p = sub.add_parser("equiv", help="Markov equivalence of two graphs")
    p.add_argument("--graph", required=True)
    p.add_argument("--other", required=True)
    _common(p)
    p.set_defaults(func=cmd_equiv)

    p = sub.add_parser("augment", help="attach intervention indicators")
    p.add_argument("--graph", required=True)
    p.add_argument("--targets", help="comma-separated; default: every stochastic node")
    _common(p)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("identify", help="reduce an interventional query to observational form")
    p.add_argument("--graph", required=True)
    p.add_argument("--query", required=True, help='e.g. "P(Y | do(X))"')
    p.add_argument("--depth", type=int, default=docalc.DEFAULT_DEPTH)
    _common(p)
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("estimate", help="run an estimator on a dataset")
    p.add_argument("kind", choices=["ace", "ett", "iv", "propensity", "sce"])
    p.add_argument("--data", required=True)
    p.add_argument("--graph", help="optional diagram; used to verify preconditions")
    p.add_argument("--treatment", default="T")
    p.add_argument("--outcome", default="Y")
    p.add_argument("--adjust", help="comma-separated covariates")
    p.add_argument("--instrument")
    p.add_argument("--confounder", help="for iv + --graph: the latent covariate node")
    p.add_argument("--treated", default="1")
    p.add_argument("--control", default="0")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--report-dir")
    _common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="sample a regime-tagged dataset from a model")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--regime", default="idle", help='e.g. idle or F_X=1[,F_Z=0]')
    p.add_argument("--do", help="shorthand: X=1[,Z=0]")
    p.add_argument("--out", help="dataset file to write (default: stdout)")
    p.add_argument("--report-dir")
    _common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gformula", help="consequence of a dynamic strategy")
    p.add_argument("--model", required=True)
    p.add_argument("--strategy", required=True)
    p.add_argument("--outcome", default="Y")
    p.add_argument("--covariates", help="one per stage, comma-separated (for the gate)")
    p.add_argument("--force", action="store_true",
                   help="skip the sequential-ignorability gate")
    p.add_argument("--report-dir")
    _common(p)
    p.set_defaults(func=cmd_gformula)

    p = sub.add_parser("axioms", help="closure of premises under the CI axioms")
    p.add_argument("--premises", required=True, help="file of statements")
    p.add_argument("--graph", required=True, help="declares the variable universe")
    p.add_argument("--bound", type=int, default=10_000)
    p.add_argument("--trace", action="store_true", help="print derivations")
    _common(p)
    p.set_defaults(func=cmd_axioms)
    return parser


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=["text", "records"], default="text")


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _load_graph(path: str) -> tuple[str, InfluenceDiagram]:
    name, graph = modelio.parse_graph(_read(path))
    return name, as_diagram(graph)


def _emit(args, pairs: list[tuple[str, str]], text_lines: list[str]) -> None:
    if args.format == "records":
        for k, v in pairs:
            print(f"{k}={v}")
    else:
        for line in text_lines:
            print(line)


def _split_csv(value: str | None) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()] if value else []


# ---------------------------------------------------------------------------

def cmd_dsep(args) -> int:
    _, diagram = _load_graph(args.graph)
    s = parse_statement(args.statement)
    sep = d_separated(diagram.dag, s.left, s.right, s.given)
    moral = moralize(ancestral_subgraph(diagram.dag, s.variables()))
    verdict = "SEPARATED" if sep else "CONNECTED"
    edges = [f"{a} -- {b}" for a, b in moral.sorted_edges()]
    _emit(args,
          [("separated", str(sep).lower()), ("statement", str(s))]
          + [("moral_edge", e) for e in edges],
          [f"{verdict}: {s}", "moralised ancestral graph:"] + [f"  {e}" for e in edges])
    return 0


def cmd_moralize(args) -> int:
    _, diagram = _load_graph(args.graph)
    dag = diagram.dag
    if args.restrict:
        dag = ancestral_subgraph(dag, _split_csv(args.restrict))
    moral = moralize(dag)
    edges = [f"{a} -- {b}" for a, b in moral.sorted_edges()]
    _emit(args,
          [("node", n) for n in sorted(moral.nodes)] + [("edge", e) for e in edges],
          [f"nodes: {' '.join(sorted(moral.nodes))}"] + edges)
    return 0


def cmd_equiv(args) -> int:
    _, d1 = _load_graph(args.graph)
    _, d2 = _load_graph(args.other)
    eq = markov_equivalent(d1.dag, d2.dag)
    sk1, sk2 = skeleton(d1.dag), skeleton(d2.dag)
    im1, im2 = immoralities(d1.dag), immoralities(d2.dag)
    lines = ["EQUIVALENT" if eq else "NOT EQUIVALENT"]
    if sk1 != sk2:
        lines.append("skeletons differ")
    if im1 != im2:
        lines.append(f"immoralities differ: {sorted(im1 ^ im2)}")
    _emit(args, [("equivalent", str(eq).lower())], lines)
    return 0


def cmd_augment(args) -> int:
    name, graph = modelio.parse_graph(_read(args.graph))
    diagram = as_diagram(graph)
    targets = _split_csv(args.targets) or sorted(
        v for v in diagram.stochastic_nodes if diagram.regime_parent(v) is None)
    out = augment(diagram, targets)
    sys.stdout.write(modelio.write_graph(out, name))
    return 0


def cmd_identify(args) -> int:
    _, diagram = _load_graph(args.graph)
    query, values = parse_query(args.query)
    result = docalc.identify(diagram, query, depth=args.depth)
    if not result.found:
        _emit(args,
              [("identified", "false"), ("explored", str(result.explored)),
               ("frontier", str(result.frontier)),
               ("truncated", str(result.truncated).lower())],
              [f"NOT IDENTIFIED by bounded search (depth {args.depth}, "
               f"{result.explored} expressions explored, frontier {result.frontier})"])
        return 1
    text = render(result.estimand, values)
    pairs = [("identified", "true"), ("estimand", text)]
    pairs += [(f"step{i + 1}", step.describe()) for i, step in enumerate(result.steps)]
    lines = [text, "derivation:"] + [f"  {i + 1}. {s.describe()}"
                                     for i, s in enumerate(result.steps)]
    _emit(args, pairs, lines)
    return 0


# ---------------------------------------------------------------------------

def cmd_estimate(args) -> int:
    data = modelio.parse_dataset(_read(args.data))
    diagram = _load_graph(args.graph)[1] if args.graph else None
    t, y = args.treatment, args.outcome
    adjust = _split_csv(args.adjust)
    kw = dict(treated=args.treated, control=args.control)
    pairs: list[tuple[str, str]]
    if args.kind == "ace":
        if adjust:
            _check(diagram and _backdoor_ok(diagram, t, y, adjust),
                   diagram, "back-door preconditions fail on the supplied graph")
            value = estimators.ace_backdoor(data, t, y, adjust, **kw)
            label = f"ace (back-door on {','.join(adjust)})"
        else:
            _check(diagram is None or check_no_confounding(diagram, t, y),
                   diagram, "graph shows confounding; supply --adjust")
            value = estimators.ace_no_confounding(data, t, y, **kw)
            label = "ace (no confounding assumed)"
        pairs = [("estimate", "ace"), ("value", _fmt(value))]
        lines = [f"{label}: {_fmt(value)}"]
        figs = {"effect": ([label], [value])}
    elif args.kind == "ett":
        value = estimators.ett(data, t, y, **kw)
        pairs = [("estimate", "ett"), ("value", _fmt(value))]
        lines = [f"ett: {_fmt(value)}"]
        figs = {"effect": (["ett"], [value])}
    elif args.kind == "iv":
        if not args.instrument:
            raise estimators.EstimationError("iv needs --instrument")
        if diagram is not None and args.confounder:
            _check(check_iv_assumptions(diagram, args.instrument, t, args.confounder, y),
                   diagram, "instrument assumptions fail on the supplied graph")
        est = estimators.iv_beta(data, args.instrument, t, y)
        pairs = [("estimate", "iv"), ("beta", _fmt(est.beta)),
                 ("cov_yz", _fmt(est.cov_yz)), ("cov_xz", _fmt(est.cov_xz))]
        if est.se is not None:
            pairs.append(("se", _fmt(est.se)))
        lines = [f"beta: {_fmt(est.beta)}   cov(Y,Z)={_fmt(est.cov_yz)}  "
                 f"cov(X,Z)={_fmt(est.cov_xz)}"
                 + (f"  se={_fmt(est.se)}" if est.se is not None else "")]
        figs = {"iv": (["cov(Y,Z)", "cov(X,Z)", "beta"],
                       [est.cov_yz, est.cov_xz, est.beta])}
    elif args.kind == "propensity":
        if not adjust:
            raise estimators.EstimationError("propensity needs --adjust")
        rep = estimators.propensity(data, t, adjust, **kw)
        pairs = [("estimate", "propensity"), ("pi", _fmt(rep.pi)),
                 ("balanced", str(rep.balanced).lower())]
        lines = [f"pi: {_fmt(rep.pi)}", f"{'u-config':<20}{'lambda':>12}{'score':>12}"]
        labels, values = [], []
        for config in sorted(rep.score):
            key = ",".join(config)
            pairs.append((f"score[{key}]", _fmt(rep.score[config])))
            lines.append(f"{key:<20}{_fmt(rep.likelihood_ratio[config]):>12}"
                         f"{_fmt(rep.score[config]):>12}")
            labels.append(key)
            values.append(rep.score[config])
        figs = {"propensity": (labels, values)}
    else:  # sce
        if not adjust:
            raise estimators.EstimationError("sce needs --adjust")
        strata = estimators.sce(data, t, y, adjust, **kw)
        pairs = [("estimate", "sce")]
        lines = [f"{'stratum':<20}{'effect':>12}"]
        labels, values = [], []
        for config in sorted(strata.effects):
            key = ",".join(config)
            pairs.append((f"effect[{key}]", _fmt(strata.effects[config])))
            lines.append(f"{key:<20}{_fmt(strata.effects[config]):>12}")
            labels.append(key)
            values.append(strata.effects[config])
        for config in sorted(strata.flagged):
            pairs.append((f"flagged[{','.join(config)}]", "empty-arm"))
            lines.append(f"{','.join(config):<20}{'(empty arm)':>12}")
        figs = {"sce": (labels, values)}
    _emit(args, pairs, lines)
    if args.report_dir:
        _write_report(args.report_dir, f"estimate_{args.kind}", pairs, figs)
    return 0


def _check(ok, diagram, message: str) -> None:
    if diagram is not None and not ok:
        raise RegimeError(message)


def _backdoor_ok(diagram, t, y, adjust) -> bool:
    try:
        docalc.backdoor_estimand(diagram, t, y, adjust)
        return True
    except docalc.BackdoorError:
        return False


def _fmt(v: float) -> str:
    return f"{v:.10g}"


def cmd_simulate(args) -> int:
    m = modelio.parse_model(_read(args.model))
    if args.do:
        interventions = {}
        for item in _split_csv(args.do):
            var, _, val = item.partition("=")
            if not val:
                raise ScmError(f"bad --do item {item!r}")
            interventions[var] = val
        tag = format_regime_tag(interventions)
    else:
        tag = args.regime
    assignment = {}
    for target, value in sorted(parse_regime_tag(tag)):
        f = m.diagram.regime_parent(target)
        if f is None:
            raise RegimeError(f"{target} has no regime node in the model")
        assignment[f] = value
    table = exact_joint(m, assignment)
    data = table.sample(args.n, args.seed, regime=tag if assignment else "idle")
    out_text = modelio.write_dataset(data)
    if args.out:
        Path(args.out).write_text(out_text, encoding="utf-8")
        print(f"wrote {len(data)} rows to {args.out}")
    else:
        sys.stdout.write(out_text)
    if args.report_dir:
        labels, emp, exact = _cell_frequencies(table, data)
        pairs = [("rows", str(len(data))), ("regime", tag), ("seed", str(args.seed))]
        pairs += [(f"p[{l}]", _fmt(e)) for l, e in zip(labels, exact)]
        _write_report(args.report_dir, "simulate", pairs,
                      {"frequencies": (labels, emp, exact)})
    return 0


def _cell_frequencies(table, data):
    labels, emp, exact = [], [], []
    counts: dict[tuple[str, ...], int] = {}
    for row in data.rows:
        counts[row] = counts.get(row, 0) + 1
    import numpy as np
    for idx in np.ndindex(table.cells.shape):
        config = tuple(table.space.states(v)[i] for v, i in zip(table.variables, idx))
        labels.append(",".join(config))
        exact.append(float(table.cells[idx]))
        emp.append(counts.get(config, 0) / max(len(data), 1))
    return labels, emp, exact


def cmd_gformula(args) -> int:
    m = modelio.parse_model(_read(args.model))
    strategy = modelio.parse_strategy(_read(args.strategy))
    covariates = _split_csv(args.covariates) or None
    result = strategies.g_consequence(m, strategy, args.outcome,
                                      covariates=covariates, force=args.force)
    pairs = [("consequence", _fmt(result.value)),
             ("history_vars", ",".join(result.history_vars))]
    lines = [f"consequence E({args.outcome} | strategy): {_fmt(result.value)}",
             f"history weights over ({', '.join(result.history_vars)}):"]
    labels, weights = [], []
    for config in sorted(result.weights):
        if result.weights[config] <= 0:
            continue
        key = ",".join(config)
        pairs.append((f"weight[{key}]", _fmt(result.weights[config])))
        lines.append(f"  {key:<20}{_fmt(result.weights[config]):>14}")
        labels.append(key)
        weights.append(result.weights[config])
    _emit(args, pairs, lines)
    if args.report_dir:
        _write_report(args.report_dir, "gformula", pairs,
                      {"weights": (labels, weights)})
    return 0


def cmd_axioms(args) -> int:
    _, diagram = _load_graph(args.graph)
    universe = diagram.universe()
    premises = modelio.parse_statements(_read(args.premises))
    for s in premises:
        if not is_well_formed(s, universe):
            raise StatementError(f"premise is not well-formed: {s}")
    result = closure(premises, universe, bound=args.bound)
    emitted = sorted(result.statements, key=str)
    pairs = [("count", str(len(emitted))),
             ("truncated", str(result.truncated).lower())]
    pairs += [("statement", str(s)) for s in emitted]
    lines = [f"{len(emitted)} statements"
             + (" (truncated)" if result.truncated else "")]
    lines += [f"  {s}" for s in emitted]
    if args.trace and args.format == "text":
        lines.append("derivations:")
        for s in emitted:
            deriv = result.derivation(s)
            chain = "; ".join(
                f"[{k}] {step.rule}" + (f"({','.join(map(str, step.premises))})"
                                        if step.premises else "")
                + f" -> {step.statement}"
                for k, step in enumerate(deriv.steps))
            lines.append(f"  {s}:  {chain}")
    _emit(args, pairs, lines)
    return 0


# ---------------------------------------------------------------------------

def _write_report(report_dir: str, stem: str, pairs, figures) -> None:
    from . import plotting
    out = Path(report_dir)
    out.mkdir(parents=True, exist_ok=True)
    tsv = out / f"{stem}.tsv"
    tsv.write_text("key\tvalue\n" + "".join(f"{k}\t{v}\n" for k, v in pairs),
                   encoding="utf-8")
    for name, payload in figures.items():
        if len(payload) == 3:
            labels, emp, exact = payload
            fig = plotting.frequency_figure(labels, emp, exact, f"{stem}: {name}")
        else:
            labels, values = payload
            if not labels:
                continue
            fig = plotting.bar_figure(labels, values, f"{stem}: {name}", name)
        plotting.save_figure(fig, out / f"{stem}_{name}.png")
    print(f"report written to {out}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
