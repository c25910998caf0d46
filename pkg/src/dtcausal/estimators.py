"""Data-facing estimators for the named causal quantities.

Every estimator accepts either a RegimeDataset (empirical plug-in) or
exact JointTables (oracle mode, what the acceptance suite uses); the
arithmetic is identical, only the underlying conditional means differ.
Responses must carry numeric state labels for anything mean-based.
Positivity failures are hard errors by default.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import stats as scipy_stats

from .tables import (JointTable, RegimeDataset, format_regime_tag, numeric_labels,
                     parse_regime_tag)

IV_RELATIVE_THRESHOLD = 1e-6


class EstimationError(ValueError):
    """Bad inputs: unknown columns, non-numeric outcomes, degenerate arms."""


class PositivityError(EstimationError):
    """A required cell or arm is empty (or has probability zero)."""


class WeakInstrumentError(EstimationError):
    """|cov(X, Z)| below the configured threshold."""


# ---------------------------------------------------------------------------
# a common facade over datasets and exact tables

class _Source:
    """Conditional means and masses for one regime's data or table."""

    def mean(self, y: str, given: Mapping[str, str]) -> float:
        raise NotImplementedError

    def mass(self, assignment: Mapping[str, str]) -> float:
        raise NotImplementedError

    def configurations(self, variables: Sequence[str]) -> list[tuple[str, ...]]:
        raise NotImplementedError


class _TableSource(_Source):
    def __init__(self, table: JointTable):
        self.table = table

    def mean(self, y, given):
        if self.table.event_mass(given) <= 0:
            raise PositivityError(f"conditioning event has probability zero: {dict(given)}")
        return self.table.expectation(y, given)

    def mass(self, assignment):
        return self.table.event_mass(assignment)

    def configurations(self, variables):
        return list(self.table.space.configurations(variables))


class _DataSource(_Source):
    def __init__(self, data: RegimeDataset, rows: list[int]):
        self.data = data
        self.rows = rows

    def _select(self, given: Mapping[str, str]) -> list[int]:
        cols = {v: self.data.columns.index(v) for v in given}
        return [i for i in self.rows
                if all(self.data.rows[i][j] == val for v, val in given.items()
                       for j in (cols[v],))]

    def mean(self, y, given):
        idx = self._select(given)
        if not idx:
            raise PositivityError(f"no rows with {dict(given)}")
        return float(np.mean(self.data.numeric_column(y, idx)))

    def mass(self, assignment):
        if not self.rows:
            return 0.0
        return len(self._select(assignment)) / len(self.rows)

    def configurations(self, variables):
        seen = sorted({tuple(self.data.rows[i][self.data.columns.index(v)] for v in variables)
                       for i in self.rows})
        return seen


def _idle_source(d) -> _Source:
    if isinstance(d, JointTable):
        return _TableSource(d)
    if isinstance(d, RegimeDataset):
        rows = d.idle_rows()
        if not rows:
            raise EstimationError("dataset has no idle-regime rows")
        return _DataSource(d, rows)
    if isinstance(d, Mapping):
        return _regime_source(d, "idle")
    raise EstimationError(f"cannot estimate from {type(d).__name__}")


def _regime_source(d, tag: str) -> _Source:
    if isinstance(d, Mapping):
        want = parse_regime_tag(tag)
        for key, table in d.items():
            if parse_regime_tag(key) == want:
                return _TableSource(table)
        raise EstimationError(f"no table supplied for regime {tag!r}")
    if isinstance(d, RegimeDataset):
        rows = d.rows_for(tag)
        if not rows:
            raise PositivityError(f"dataset has no rows under regime {tag!r}")
        return _DataSource(d, rows)
    raise EstimationError(f"cannot take regime {tag!r} from {type(d).__name__}")


# ---------------------------------------------------------------------------
# average causal effect

def ace_no_confounding(d, t: str, y: str, treated: str = "1", control: str = "0") -> float:
    """Difference of idle-regime arm means; valid when nothing confounds t."""
    src = _idle_source(d)
    for arm in (treated, control):
        if src.mass({t: arm}) <= 0:
            raise PositivityError(f"arm {t}={arm} is absent")
    return src.mean(y, {t: treated}) - src.mean(y, {t: control})


@dataclass
class StratumEffects:
    """Per-stratum mean differences, with empty strata flagged."""

    covariates: tuple[str, ...]
    effects: dict[tuple[str, ...], float]
    weights: dict[tuple[str, ...], float]
    flagged: set[tuple[str, ...]] = field(default_factory=set)

    def __call__(self, config: tuple[str, ...] | str) -> float:
        if isinstance(config, str):
            config = (config,)
        if config in self.flagged:
            raise PositivityError(f"stratum {config} lacks a treatment arm")
        return self.effects[config]


def sce(d, t: str, y: str, u: Iterable[str], treated: str = "1",
        control: str = "0") -> StratumEffects:
    """Stratum-specific effect of treatment given the covariates u.

    Computed from idle-regime conditionals; strata where an arm is
    missing are flagged rather than fabricated.
    """
    u = tuple(sorted(set(u)))
    src = _idle_source(d)
    if not u:
        value = ace_no_confounding(d, t, y, treated, control)
        return StratumEffects((), {(): value}, {(): 1.0})
    effects: dict[tuple[str, ...], float] = {}
    weights: dict[tuple[str, ...], float] = {}
    flagged: set[tuple[str, ...]] = set()
    for config in src.configurations(u):
        given = dict(zip(u, config))
        weight = src.mass(given)
        if weight <= 0:
            continue
        weights[config] = weight
        if src.mass({**given, t: treated}) <= 0 or src.mass({**given, t: control}) <= 0:
            flagged.add(config)
            continue
        effects[config] = src.mean(y, {**given, t: treated}) - src.mean(y, {**given, t: control})
    return StratumEffects(u, effects, weights, flagged)


def ace_backdoor(d, t: str, y: str, z: Iterable[str], treated: str = "1",
                 control: str = "0", drop_empty: bool = False) -> float:
    """Back-door-adjusted effect: stratum effects averaged over the stratum law.

    This is, term for term, the average of ``sce`` over the idle
    distribution of z, so the adjustment identity against the stratum
    effects holds exactly on the same data.
    """
    strata = sce(d, t, y, z, treated, control)
    if strata.flagged:
        if not drop_empty:
            worst = sorted(strata.flagged)[0]
            raise PositivityError(f"adjustment cell {dict(zip(strata.covariates, worst))} "
                                  f"lacks a treatment arm")
        warnings.warn(f"dropping {len(strata.flagged)} empty adjustment cell(s)",
                      stacklevel=2)
    total = sum(strata.weights[c] for c in strata.effects)
    if total <= 0:
        raise PositivityError("no usable adjustment cells")
    return sum(strata.weights[c] * strata.effects[c] for c in sorted(strata.effects)) / total


# ---------------------------------------------------------------------------
# effect of treatment on the treated

def ett(d, t: str, y: str, treated: str = "1", control: str = "0") -> float:
    """(E(Y | idle) - E(Y | F_t = control)) / P(T = treated | idle).

    Needs idle rows and rows (or a table) under the control-setting
    regime; no covariate observations are required.
    """
    idle = _idle_source(d)
    held = _regime_source(d, format_regime_tag({t: control}))
    p_treated = idle.mass({t: treated})
    if p_treated <= 0:
        raise PositivityError(f"nobody is treated ({t}={treated}) in the idle regime")
    return (idle.mean(y, {}) - held.mean(y, {})) / p_treated


def ett_from_strata(d, t: str, y: str, u: Iterable[str], treated: str = "1",
                    control: str = "0") -> float:
    """Stratum form of the treated effect: E over P(u | T=treated) of the
    per-stratum effect.  Agrees with the ratio form whenever u is a
    sufficient covariate; kept separate so the two routes stay independent."""
    u = tuple(sorted(set(u)))
    strata = sce(d, t, y, u, treated, control)
    if strata.flagged:
        worst = sorted(strata.flagged)[0]
        raise PositivityError(f"stratum {dict(zip(u, worst))} lacks a treatment arm")
    src = _idle_source(d)
    p_treated = src.mass({t: treated})
    if p_treated <= 0:
        raise PositivityError(f"nobody is treated ({t}={treated}) in the idle regime")
    total = 0.0
    for config, effect in sorted(strata.effects.items()):
        given = dict(zip(u, config))
        total += (src.mass({**given, t: treated}) / p_treated) * effect
    return total


# ---------------------------------------------------------------------------
# propensity

@dataclass
class PropensityReport:
    """Marginal treatment rate, per-stratum likelihood ratios, and scores.

    ``score`` is computed from the likelihood-ratio formula
    pi*L / (1 - pi + pi*L), so that identity is exact by construction;
    it coincides with the direct conditional P(T=treated | u).
    """

    treatment: str
    covariates: tuple[str, ...]
    pi: float
    likelihood_ratio: dict[tuple[str, ...], float]
    score: dict[tuple[str, ...], float]
    balanced: bool
    max_balance_gap: float


def propensity(d, t: str, u: Iterable[str], treated: str = "1", control: str = "0",
               eps: float = 1e-10) -> PropensityReport:
    """Propensity scores over u-strata plus a balancing check.

    The balancing check verifies numerically that u carries no further
    information about treatment once the score is known (exact-table
    inputs only; for datasets it is skipped as vacuous at finite n).
    """
    u = tuple(sorted(set(u)))
    if not u:
        raise EstimationError("propensity needs a nonempty covariate set")
    src = _idle_source(d)
    pi = src.mass({t: treated})
    if pi <= 0.0 or pi >= 1.0 or src.mass({t: control}) <= 0.0:
        raise EstimationError(f"degenerate treatment rate pi={pi}")
    ratio: dict[tuple[str, ...], float] = {}
    score: dict[tuple[str, ...], float] = {}
    for config in src.configurations(u):
        given = dict(zip(u, config))
        p_u = src.mass(given)
        if p_u <= 0:
            continue
        q1 = src.mass({**given, t: treated}) / pi
        q0 = src.mass({**given, t: control}) / src.mass({t: control})
        if q0 == 0.0:
            ratio[config] = math.inf
            score[config] = 1.0
            continue
        lam = q1 / q0
        ratio[config] = lam
        score[config] = pi * lam / (1.0 - pi + pi * lam)
    balanced, gap = _balance_check(d, t, u, score, eps)
    return PropensityReport(t, u, pi, ratio, score, balanced, gap)


def _balance_check(d, t, u, score, eps):
    if not isinstance(d, JointTable):
        return True, 0.0
    labels = {config: f"s{i}" for i, config in enumerate(sorted(score))}

    def fn(assignment):
        return labels[tuple(assignment[v] for v in u)]

    extended = d.extend_with_function("__score__", sorted(set(labels.values())), fn)
    gap = _max_ci_gap(extended, list(u), [t], ["__score__"])
    return gap <= eps, gap


def _max_ci_gap(table: JointTable, a, b, c) -> float:
    """Largest |P(a|b,c) - P(a|c)| over positive-probability cells."""
    worst = 0.0
    m = table.marginal(sorted(set(a) | set(b) | set(c)))
    for config in m.space.configurations(sorted(set(b) | set(c))):
        given = dict(zip(sorted(set(b) | set(c)), config))
        if m.event_mass(given) <= 0:
            continue
        c_given = {v: given[v] for v in c}
        lhs = m.query(a, given)
        rhs = m.query(a, c_given)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


# ---------------------------------------------------------------------------
# instrumental variable

@dataclass
class IvEstimate:
    beta: float
    cov_yz: float
    cov_xz: float
    n: int | None = None
    se: float | None = None


def iv_beta(d, z: str = "Z", x: str = "X", y: str = "Y",
            rel_threshold: float = IV_RELATIVE_THRESHOLD) -> IvEstimate:
    """Covariance-ratio slope cov(Y,Z)/cov(X,Z).

    Accepts a RegimeDataset/array mapping (sample covariances, with a
    delta-method standard error), an exact JointTable, or any object
    exposing closed-form ``cov_yz``/``cov_xz`` moments.  Refuses weak
    instruments: |cov(X,Z)| must exceed rel_threshold * sd(X) * sd(Z).
    """
    if hasattr(d, "cov_yz") and hasattr(d, "cov_xz"):
        cov_yz, cov_xz = float(d.cov_yz), float(d.cov_xz)
        var_x = float(getattr(d, "var_x", 1.0))
        var_z = float(getattr(d, "var_z", 1.0))
        _require_strength(cov_xz, var_x, var_z, rel_threshold)
        return IvEstimate(cov_yz / cov_xz, cov_yz, cov_xz)
    if isinstance(d, JointTable):
        return _iv_from_moments(*_table_moments(d, z, x, y), rel_threshold)
    zv, xv, yv = _columns(d, z, x, y)
    n = len(zv)
    if n < 3:
        raise EstimationError("need at least 3 observations")
    cov = np.cov(np.vstack([zv, xv, yv]), ddof=1)
    cov_xz, cov_yz = cov[0, 1], cov[0, 2]
    _require_strength(cov_xz, cov[1, 1], cov[0, 0], rel_threshold)
    beta = cov_yz / cov_xz
    resid = (yv - yv.mean()) - beta * (xv - xv.mean())
    zc = zv - zv.mean()
    denom = abs(float(np.sum((xv - xv.mean()) * zc)))
    se = math.sqrt(float(np.sum(resid ** 2 * zc ** 2))) / denom
    return IvEstimate(float(beta), float(cov_yz), float(cov_xz), n, se)


def _columns(d, *names):
    if isinstance(d, RegimeDataset):
        idx = d.idle_rows() or None
        return tuple(d.numeric_column(v, idx) for v in names)
    if isinstance(d, Mapping):
        return tuple(np.asarray(d[v], dtype=float) for v in names)
    raise EstimationError(f"cannot take columns from {type(d).__name__}")


def _table_values(table: JointTable, v: str) -> np.ndarray:
    return numeric_labels(table.space.states(v), v)


def _table_moments(table: JointTable, z, x, y):
    m = table.marginal([x, y, z])
    vals = {v: _table_values(m, v) for v in (x, y, z)}
    grids = np.meshgrid(*(vals[v] for v in m.variables), indexing="ij")
    arr = {v: g for v, g in zip(m.variables, grids)}
    p = m.cells
    mean = {v: float((arr[v] * p).sum()) for v in m.variables}
    cov = lambda aa, bb: float(((arr[aa] - mean[aa]) * (arr[bb] - mean[bb]) * p).sum())
    return cov(y, z), cov(x, z), cov(x, x), cov(z, z)


def _iv_from_moments(cov_yz, cov_xz, var_x, var_z, rel_threshold):
    _require_strength(cov_xz, var_x, var_z, rel_threshold)
    return IvEstimate(cov_yz / cov_xz, cov_yz, cov_xz)


def _require_strength(cov_xz, var_x, var_z, rel_threshold):
    floor = rel_threshold * math.sqrt(max(var_x, 0.0)) * math.sqrt(max(var_z, 0.0))
    if abs(cov_xz) <= floor:
        raise WeakInstrumentError(
            f"|cov(X,Z)| = {abs(cov_xz):.3g} is below the threshold {floor:.3g}")


# ---------------------------------------------------------------------------
# two-arm normal contrast

@dataclass
class TwoArmSummary:
    delta: float
    mean0: float
    mean1: float
    pooled_variance: float
    se: float
    df: int
    alpha: float
    ci_low: float
    ci_high: float
    n0: int
    n1: int

    def covers(self, value: float) -> bool:
        return self.ci_low <= value <= self.ci_high


def two_arm_contrast(d, t: str = "T", y: str = "Y", alpha: float = 0.05,
                     treated: str = "1", control: str = "0") -> TwoArmSummary:
    """Mean difference with a pooled-variance Student-t interval."""
    if isinstance(d, tuple) and len(d) == 2:
        y0, y1 = (np.asarray(a, dtype=float) for a in d)
    else:
        if not isinstance(d, RegimeDataset):
            raise EstimationError("two_arm_contrast needs a dataset or a pair of arrays")
        tj = d.columns.index(t) if t in d.columns else None
        if tj is None:
            raise EstimationError(f"unknown column: {t!r}")
        rows0 = [i for i, r in enumerate(d.rows) if r[tj] == control]
        rows1 = [i for i, r in enumerate(d.rows) if r[tj] == treated]
        y0 = d.numeric_column(y, rows0)
        y1 = d.numeric_column(y, rows1)
    n0, n1 = len(y0), len(y1)
    if n0 < 2 or n1 < 2:
        raise EstimationError("each arm needs at least two observations")
    m0, m1 = float(y0.mean()), float(y1.mean())
    pooled = float(((y0 - m0) ** 2).sum() + ((y1 - m1) ** 2).sum()) / (n0 + n1 - 2)
    se = math.sqrt(pooled * (1.0 / n0 + 1.0 / n1))
    df = n0 + n1 - 2
    delta = m1 - m0
    quantile = float(scipy_stats.t.ppf(1.0 - alpha / 2.0, df))
    return TwoArmSummary(delta, m0, m1, pooled, se, df, alpha,
                         delta - quantile * se, delta + quantile * se, n0, n1)
