"""Dynamic treatment strategies and their observational evaluation.

A strategy fixes, for every treatment stage, a kernel from the realised
history to a distribution over the treatment's states.  Its consequence
(the expected response were the strategy imposed) factorises into
strategy terms and observational conditionals; the evaluation here
plugs idle-regime conditionals into that factorisation, gated on the
sequential-ignorability check unless the caller forces it.  The same
strategy object can also be executed inside a structural model, which
is how both paths get cross-checked.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .regimes import InfluenceDiagram, RegimeError, check_sequential_ignorability
from .scm import DiscreteScm, exact_joint, observational_joint
from .tables import JointTable, StateSpace

STRATEGY_SWEEP_GUARD = 10 ** 6


class StrategyError(ValueError):
    """Malformed strategy: bad kernel, uncovered history, inconsistent stages."""


class IgnorabilityError(ValueError):
    """Sequential ignorability failed (or could not be checked) and no override."""


class PositivityViolation(ValueError):
    """A strategy-reachable history has observational probability zero."""

    def __init__(self, history: Mapping[str, str]):
        super().__init__(f"history {dict(history)} is reachable under the strategy "
                         "but unobserved in the idle regime")
        self.history = dict(history)


@dataclass(frozen=True)
class Stage:
    """One treatment with the history variables its rule may consult.

    ``rules`` maps each history configuration (a value tuple aligned
    with ``history``) to a distribution over the treatment's states.
    """

    treatment: str
    history: tuple[str, ...]
    rules: tuple[tuple[tuple[str, ...], tuple[tuple[str, float], ...]], ...]

    def kernel(self, config: tuple[str, ...]) -> dict[str, float]:
        for cfg, dist in self.rules:
            if cfg == config:
                return dict(dist)
        raise StrategyError(f"no rule for {self.treatment} at history "
                            f"{dict(zip(self.history, config))}")

    @classmethod
    def from_mapping(cls, treatment: str, history: Sequence[str],
                     rules: Mapping[Sequence[str], Mapping[str, float] | str]) -> "Stage":
        packed = []
        for cfg in sorted(tuple(c) for c in rules):
            dist = rules[cfg] if cfg in rules else rules[tuple(cfg)]
            if isinstance(dist, str):
                dist = {dist: 1.0}
            total = sum(dist.values())
            if any(p < 0 for p in dist.values()) or abs(total - 1.0) > 1e-9:
                raise StrategyError(f"rule for {treatment} at {cfg} is not a distribution")
            packed.append((tuple(cfg), tuple(sorted(dist.items()))))
        return cls(treatment, tuple(history), tuple(packed))


@dataclass(frozen=True)
class Strategy:
    stages: tuple[Stage, ...]

    def __post_init__(self) -> None:
        if not self.stages:
            raise StrategyError("strategy has no stages")
        seen: set[str] = set()
        for stage in self.stages:
            if stage.treatment in seen:
                raise StrategyError(f"duplicate stage for {stage.treatment}")
            seen.add(stage.treatment)

    @property
    def treatments(self) -> tuple[str, ...]:
        return tuple(s.treatment for s in self.stages)

    def stage_for(self, treatment: str) -> Stage:
        for s in self.stages:
            if s.treatment == treatment:
                return s
        raise StrategyError(f"no stage for {treatment}")

    def stage_kernels(self, space: StateSpace):
        """(treatment, history, config -> distribution) triples; the hook the
        structural-model enumerator uses to impose this strategy."""
        out = []
        for stage in self.stages:
            def table(assignment: Mapping[str, str], _stage=stage) -> dict[str, float]:
                return _stage.kernel(tuple(assignment[v] for v in _stage.history))
            out.append((stage.treatment, stage.history, table))
        return out

    def temporal_order(self) -> list[tuple[str, str]]:
        """("covariate"|"treatment", variable) pairs in stage order."""
        order: list[tuple[str, str]] = []
        seen: set[str] = set()
        for stage in self.stages:
            for v in stage.history:
                if v not in seen and v not in self.treatments:
                    order.append(("covariate", v))
                    seen.add(v)
            order.append(("treatment", stage.treatment))
            seen.add(stage.treatment)
        return order

    def stage_covariates(self) -> list[str]:
        """The new covariate each stage consults ('' when it consults none)."""
        out: list[str] = []
        seen: set[str] = set()
        for stage in self.stages:
            new = [v for v in stage.history if v not in seen and v not in self.treatments]
            if len(new) > 1:
                raise StrategyError(f"stage {stage.treatment} introduces several "
                                    f"covariates {new}; expected at most one")
            out.append(new[0] if new else "")
            seen.update(stage.history)
            seen.add(stage.treatment)
        return out


def static_strategy(assignments: Mapping[str, str]) -> Strategy:
    """A strategy that ignores all covariates and always sets fixed values."""
    stages = tuple(Stage(t, (), (((), ((v, 1.0),)),)) for t, v in assignments.items())
    return Strategy(stages)


@dataclass
class Consequence:
    """Expected response under the strategy, with per-history diagnostics."""

    value: float
    history_vars: tuple[str, ...]
    weights: dict[tuple[str, ...], float]


def g_consequence(model, strategy: Strategy, outcome: str,
                  covariates: Sequence[str] | None = None,
                  diagram: InfluenceDiagram | None = None,
                  force: bool = False, method: str = "recursion") -> Consequence:
    """Expected outcome were the strategy imposed, from idle-regime terms.

    ``model`` is a DiscreteScm (diagram known, joint enumerated) or an
    observational JointTable (pass ``diagram`` for the ignorability
    gate, or ``force=True``).  ``covariates`` fixes the factorisation:
    one covariate ahead of each treatment stage (default: whatever each
    stage's rule newly consults).  They matter even when the rules
    ignore them -- a static strategy still integrates over them.
    ``method`` picks the backward recursion or the direct sum over
    histories; both are exact and agree.  Positivity failures name the
    offending history.
    """
    if isinstance(model, DiscreteScm):
        table = observational_joint(model)
        diagram = diagram or model.diagram
    elif isinstance(model, JointTable):
        table = model
    else:
        raise StrategyError(f"cannot evaluate against {type(model).__name__}")
    if method not in ("recursion", "sum"):
        raise StrategyError(f"unknown method {method!r}")
    ls = list(covariates) if covariates is not None else strategy.stage_covariates()
    if len(ls) > len(strategy.stages):
        raise StrategyError("more covariates than treatment stages")
    ls += [""] * (len(strategy.stages) - len(ls))
    _gate(ls, strategy, outcome, diagram, force)
    order: list[tuple[str, str]] = []
    known: set[str] = set()
    for l, stage in zip(ls, strategy.stages):
        if l:
            order.append(("covariate", l))
            known.add(l)
        stray = [v for v in stage.history if v not in known]
        if stray:
            raise StrategyError(f"rule for {stage.treatment} consults {stray} "
                                "before any such covariate stage")
        order.append(("treatment", stage.treatment))
        known.add(stage.treatment)
    history_vars = tuple(v for _, v in order)
    weights: dict[tuple[str, ...], float] = {}
    value = _evaluate(table, strategy, outcome, order, weights,
                      recursive=(method == "recursion"))
    return Consequence(value, history_vars, weights)


def _gate(ls, strategy, outcome, diagram, force) -> None:
    if force:
        return
    if diagram is None:
        raise IgnorabilityError("no diagram to check sequential ignorability on; "
                                "pass force=True to override")
    ts = list(strategy.treatments)
    if "" in ls:
        raise IgnorabilityError("cannot align one covariate per stage for the "
                                "ignorability check; pass covariates= or force=True")
    if not check_sequential_ignorability(diagram, ls, ts, outcome):
        raise IgnorabilityError("sequential ignorability fails on the diagram; "
                                "pass force=True to override")


def _evaluate(table, strategy, outcome, order, weights, recursive) -> float:
    def step(prefix: dict[str, str], k: int, weight: float) -> float:
        if k == len(order):
            weights[tuple(prefix[v] for _, v in order)] = weight
            if table.event_mass(prefix) <= 0:
                raise PositivityViolation(prefix)
            return table.expectation(outcome, prefix)
        kind, var = order[k]
        total = 0.0
        if kind == "treatment":
            stage = strategy.stage_for(var)
            kernel = stage.kernel(tuple(prefix[v] for v in stage.history))
            for state, p in sorted(kernel.items()):
                if p > 0:
                    total += p * step({**prefix, var: state}, k + 1, weight * p)
        else:
            if table.event_mass(prefix) <= 0:
                raise PositivityViolation(prefix)
            dist = table.query([var], prefix)
            for state, p in zip(table.space.states(var), dist):
                if p > 0:
                    total += float(p) * step({**prefix, var: state}, k + 1, weight * float(p))
        return total

    if recursive:
        return step({}, 0, 1.0)
    return _direct_sum(table, strategy, outcome, order, weights)


def _direct_sum(table, strategy, outcome, order, weights) -> float:
    """Plain sum over full histories of weight x conditional outcome mean."""
    total = 0.0
    history_vars = [v for _, v in order]
    for config in table.space.configurations(history_vars):
        prefix: dict[str, str] = {}
        w = 1.0
        for (kind, var), state in zip(order, config):
            if w == 0.0:
                break
            if kind == "treatment":
                stage = strategy.stage_for(var)
                w *= stage.kernel(tuple(prefix[v] for v in stage.history)).get(state, 0.0)
            else:
                if table.event_mass(prefix) <= 0:
                    raise PositivityViolation(prefix)
                w *= table.prob({var: state}, prefix)
            prefix[var] = state
        weights[config] = w
        if w == 0.0:
            continue
        if table.event_mass(prefix) <= 0:
            raise PositivityViolation(prefix)
        total += w * table.expectation(outcome, prefix)
    return total


def impose_strategy(m: DiscreteScm, strategy: Strategy) -> JointTable:
    """Execute the strategy inside the model: the oracle for g-computation."""
    sigma = None
    for f in sorted(m.diagram.regime_nodes):
        if set(strategy.treatments) <= m.diagram.targets(f):
            sigma = f
            break
    if sigma is None:
        raise RegimeError(f"no regime node covers treatments {list(strategy.treatments)}")
    return exact_joint(m, {sigma: strategy})


def enumerate_strategies(space: StateSpace,
                         stages: Sequence[tuple[str, Sequence[str]]]) -> list[Strategy]:
    """All deterministic strategies over the stage specification, in a
    stable lexicographic order.  Guarded against combinatorial blowups."""
    total = 1
    for treatment, history in stages:
        n_hist = 1
        for v in history:
            n_hist *= space.card(v)
        total *= space.card(treatment) ** n_hist
        if total > STRATEGY_SWEEP_GUARD:
            raise StrategyError(f"sweep of {total} strategies exceeds the guard")
    out: list[Strategy] = []

    def build(idx: int, chosen: list[Stage]) -> None:
        if idx == len(stages):
            out.append(Strategy(tuple(chosen)))
            return
        treatment, history = stages[idx]
        configs = list(space.configurations(list(history)))
        options = space.states(treatment)

        def assign(c: int, rules: list) -> None:
            if c == len(configs):
                chosen.append(Stage(treatment, tuple(history), tuple(rules)))
                build(idx + 1, chosen)
                chosen.pop()
                return
            for state in options:
                rules.append((configs[c], ((state, 1.0),)))
                assign(c + 1, rules)
                rules.pop()

        assign(0, [])

    build(0, [])
    return out
