"""Exception types shared across the package.

Every error raised on a user-facing code path derives from RiskplanError so
callers (and the CLI) can distinguish bad input from bugs.
"""

from __future__ import annotations


class RiskplanError(Exception):
    """Base class for all errors raised by this package."""


class DomainSyntaxError(RiskplanError):
    """Malformed domain/problem text. Carries the offending position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, col {column}: {message}")
        self.line = line
        self.column = column


class DomainValidationError(RiskplanError):
    """Structurally valid text with inconsistent content (bad distribution,
    duplicate operator, cyclic clause set, ...)."""


class GroundingError(RiskplanError):
    """Schema instantiation failed (unknown type, empty type, arity clash)."""


class PlanGraphError(RiskplanError):
    """Illegal plan-graph manipulation."""


class WouldCreateCycle(PlanGraphError):
    """Adding the link would make the ordering relation cyclic."""


class IgnoranceNotFromStart(PlanGraphError):
    """Ignorance links may only originate at the start step."""


class IncompletePlan(PlanGraphError):
    """Extraction was asked for a branch that still has open flaws."""


class OverlappingGoalContexts(PlanGraphError):
    """Two goal steps have compatible contexts; branch masses would
    double-count."""


class ModelError(RiskplanError):
    """Probability model misuse."""


class UnknownVariable(ModelError):
    """A label or query names a variable that is not in the network."""


class InconsistentLabels(ModelError):
    """A label set assigns two different outcomes to one variable."""


class ZeroProbabilityContext(ModelError):
    """Conditioning on a context of probability zero."""


class LabelWithoutDistribution(ModelError):
    """The independence model met a label whose step carries no
    distribution."""


class MissingInfluenceVariable(ModelError):
    """A conditional step declares an influence that no clause or literal
    covers."""


class MissingCptRow(ModelError):
    """A distribution table lacks a row for some influence assignment."""


class OutcomeSpaceMismatch(ModelError):
    """Observation outcomes do not line up with the observed variable's
    outcome space."""


class MalformedPlan(RiskplanError):
    """A serialized plan could not be decoded."""


class PlanningFailure(RiskplanError):
    """No plan reaches the required success mass within the node budget.

    Carries the best bound seen so the caller can report how close the
    search got.
    """

    def __init__(self, message: str, best_bound=None, stats=None):
        super().__init__(message)
        self.best_bound = best_bound
        self.stats = stats or {}
