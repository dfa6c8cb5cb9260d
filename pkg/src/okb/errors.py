"""Exception types shared across the engine.

Every error raised on a public surface derives from OkbError so callers can
catch one base. Mutations are rejected, never silently repaired.
"""

from __future__ import annotations


class OkbError(Exception):
    """Base class for all engine errors."""


# --- knowledge base ---------------------------------------------------------

class DuplicateName(OkbError):
    pass


class CycleDetected(OkbError):
    pass


class DisjointWithAncestor(OkbError):
    pass


class RangeViolation(OkbError):
    pass


class FunctionalityViolation(OkbError):
    pass


class UnknownClass(OkbError):
    pass


class UnknownProperty(OkbError):
    pass


class NotARole(OkbError):
    pass


class IncompatibleHolder(OkbError):
    pass


class ImmutableSnapshot(OkbError):
    pass


class DisjointnessViolation(OkbError):
    def __init__(self, individual, classes):
        self.individual = individual
        self.classes = classes
        super().__init__(
            f"individual {getattr(individual, 'id', individual)} carries disjoint "
            f"classes {sorted(c.name for c in classes)}"
        )


# --- query language ---------------------------------------------------------

class QuerySyntaxError(OkbError):
    """Parse failure; carries the offending position and what was expected."""

    def __init__(self, position: int, expected: str, found: str = ""):
        self.position = position
        self.expected = expected
        self.found = found
        msg = f"at position {position}: expected {expected}"
        if found:
            msg += f", found {found!r}"
        super().__init__(msg)


class UnknownAttribute(OkbError):
    pass


class TypeMismatch(OkbError):
    pass


class UniquenessViolation(OkbError):
    """`the` matched zero or more than one row."""

    def __init__(self, count: int):
        self.count = count
        super().__init__(f"'the' requires exactly one result, got {count}")


class OracleTooLarge(OkbError):
    pass


# --- rule trees -------------------------------------------------------------

class ConditionEvaluationError(OkbError):
    def __init__(self, rule_id: str, cause: Exception):
        self.rule_id = rule_id
        self.cause = cause
        super().__init__(f"rule {rule_id}: {cause}")


class ExpertConditionRejected(OkbError):
    """The supplied condition does not differentiate case from cornerstone."""

    def __init__(self, reason: str, true_on_case: bool, true_on_cornerstone):
        self.reason = reason
        self.true_on_case = true_on_case
        self.true_on_cornerstone = true_on_cornerstone
        super().__init__(
            f"{reason} (true on case: {true_on_case}, "
            f"true on cornerstone: {true_on_cornerstone})"
        )


class ExpertAborted(OkbError):
    pass


class FixpointNotReached(OkbError):
    def __init__(self, iterations: int):
        self.iterations = iterations
        super().__init__(f"no fixpoint after {iterations} iterations")


class ModuleParseError(OkbError):
    def __init__(self, line: int, cause: str):
        self.line = line
        self.cause = cause
        super().__init__(f"line {line}: {cause}")


class UnknownTargetType(OkbError):
    pass


# --- ontology import --------------------------------------------------------

class UnresolvedReference(OkbError):
    pass


class InconsistentDisjointness(OkbError):
    pass


class UnsupportedConstruct(OkbError):
    pass


class NotSymmetricTransitive(OkbError):
    pass


# --- persistence ------------------------------------------------------------

class UnmappableKind(OkbError):
    pass


class StoreError(OkbError):
    pass


class SchemaMismatch(OkbError):
    pass


class UnknownDiscriminator(OkbError):
    pass


# --- bench / service --------------------------------------------------------

class BackendDisagreement(OkbError):
    def __init__(self, query_name: str, diff_sample):
        self.query_name = query_name
        self.diff_sample = diff_sample
        super().__init__(f"query {query_name}: backends disagree, e.g. {diff_sample}")


class BindError(OkbError):
    pass


class ConfigError(OkbError):
    pass
