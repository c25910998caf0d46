"""Influence diagrams with regime indicators: graphical separation,
conditional-independence calculus, do-calculus identification, and
regime-aware estimation checked against an exact enumeration oracle."""

from .graphs import (Dag, GraphError, UndirectedGraph, ancestral_subgraph,
                     d_separated, immoralities, markov_equivalent, moralize,
                     skeleton)
from .statements import (CiStatement, Derivation, StatementError, Universe,
                         apply_axiom, ci_holds_numeric, closure,
                         is_well_formed, local_markov_statements,
                         parse_statement)
from .regimes import (InfluenceDiagram, RegimeError, augment,
                      check_iv_assumptions, check_no_confounding,
                      check_sequential_ignorability,
                      check_sufficient_covariate,
                      check_treatment_sufficient_reduction, surgery)
from .tables import (Cpt, JointTable, RegimeDataset, StateSpace, TableError,
                     TableSizeError, ZeroProbabilityError,
                     conditional_independent, format_regime_tag,
                     joint_from_cpts, parse_regime_tag)
from .estimands import (Const, Estimand, EstimandError, Prob, Product,
                        Quotient, ScmTables, SingleTable, Sum,
                        evaluate_estimand, is_observational, normalize,
                        parse_query, render)
from .docalc import (BackdoorError, IdentificationError, IdentifyResult,
                     RuleCheck, backdoor_estimand, identify, rule_applicable)
from .estimators import (EstimationError, IvEstimate, PositivityError,
                         PropensityReport, StratumEffects, TwoArmSummary,
                         WeakInstrumentError, ace_backdoor,
                         ace_no_confounding, ett, iv_beta, propensity, sce,
                         two_arm_contrast)
from .scm import (DiscreteScm, FunctionalNode, GaussianTwoArmModel,
                  IceMoments, LinearGaussianIv, ScmError, bow_pair, do_joint,
                  ese_induced_dt, exact_joint, linear_gaussian_iv,
                  observational_joint, random_scm)
from .strategies import (Consequence, IgnorabilityError, PositivityViolation,
                         Stage, Strategy, StrategyError, enumerate_strategies,
                         g_consequence, impose_strategy, static_strategy)

__version__ = "0.1.0"
