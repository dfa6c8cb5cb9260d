from .ast import (
    AggregateCompare,
    And,
    Attr,
    ClassRef,
    Compare,
    Contains,
    EntityRef,
    Exists,
    ForAll,
    Index,
    Lit,
    Not,
    Or,
    Path,
    Query,
    ResultSet,
    Variable,
    ast_equal,
    conjuncts_of,
    enumerable_vars,
    free_vars,
    normalize_to_ucq,
    ucq_query,
)
from .evaluate import Evaluator, evaluate
from .oracle import brute_force_oracle
from .parser import parse_condition, parse_query
from .printer import print_condition, print_query

__all__ = [
    "AggregateCompare", "And", "Attr", "ClassRef", "Compare", "Contains",
    "EntityRef", "Exists", "ForAll", "Index", "Lit", "Not", "Or", "Path",
    "Query", "ResultSet", "Variable", "ast_equal", "conjuncts_of",
    "enumerable_vars", "free_vars", "normalize_to_ucq", "ucq_query",
    "Evaluator", "evaluate", "brute_force_oracle",
    "parse_condition", "parse_query", "print_condition", "print_query",
]
