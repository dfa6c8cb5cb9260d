"""Abstract syntax of the entity query language.

A query is ``processor(descriptor.where(conditions))``. Descriptor variables
draw their candidates from a class extension, an explicit value list, or a
path evaluated under the current binding (used by quantifiers that range
over another entity's property values).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

COMPARE_OPS = ("==", "!=", "<", "<=", ">", ">=")
PROCESSORS = ("a", "an", "the", "count", "sum")


@dataclass(frozen=True)
class ClassRef:
    """Reference to a class by name; resolved against a registry when one exists."""

    name: str


@dataclass(frozen=True)
class EntityRef:
    """Reference to an individual by id or IRI (written ``@ref`` in query text)."""

    ref: str


@dataclass(frozen=True)
class Lit:
    value: object  # int | float | str | bool | ClassRef | EntityRef


@dataclass(frozen=True)
class Attr:
    name: str


@dataclass(frozen=True)
class Index:
    i: int


@dataclass(eq=False)
class Variable:
    id: str
    type: Optional[object] = None  # ClassDef or ClassRef
    explicit_domain: Optional[tuple] = None
    domain_path: Optional["Path"] = None

    def __hash__(self):
        return hash(self.id)


@dataclass(frozen=True)
class Path:
    root: Variable
    steps: tuple = ()

    def child(self, step) -> "Path":
        return Path(self.root, self.steps + (step,))


Operand = Union[Path, Lit]


@dataclass(frozen=True)
class Compare:
    lhs: Operand
    op: str
    rhs: Operand


@dataclass(frozen=True)
class Contains:
    collection: Path
    element: Operand


@dataclass(frozen=True)
class Exists:
    var: Variable
    cond: "Condition"


@dataclass(frozen=True)
class ForAll:
    var: Variable
    cond: "Condition"


@dataclass(frozen=True)
class Not:
    cond: "Condition"


@dataclass(frozen=True)
class Or:
    conds: tuple


@dataclass(frozen=True)
class And:
    conds: tuple


@dataclass(frozen=True)
class AggregateCompare:
    """count/sum over a path, compared with a literal.

    ``qual_var``/``qual_cond`` restrict the counted elements (qualified
    cardinality); both are None for the plain form.
    """

    agg: str  # "count" | "sum"
    path: Path
    op: str
    literal: Lit
    qual_var: Optional[Variable] = None
    qual_cond: Optional["Condition"] = None


Condition = Union[Compare, Contains, Exists, ForAll, Not, Or, And, AggregateCompare]

TRUE = And(())


@dataclass(eq=False)
class Query:
    processor: str  # one of PROCESSORS
    descriptor: str  # "entity" | "set_of"
    variables: tuple = ()
    where: Condition = TRUE
    sum_path: Optional[Path] = None

    def __post_init__(self):
        if self.processor not in PROCESSORS:
            raise ValueError(f"bad processor {self.processor!r}")
        if self.descriptor == "entity" and len(self.variables) != 1:
            raise ValueError("entity() takes exactly one variable")


@dataclass
class ResultSet:
    columns: tuple
    rows: list = field(default_factory=list)

    def scalar(self):
        if len(self.rows) != 1 or len(self.rows[0]) != 1:
            raise ValueError("result is not a single value")
        return self.rows[0][0]


# --- structural helpers ------------------------------------------------------


def free_vars(cond) -> set:
    """Ids of variables referenced by cond, minus its own quantified ones."""
    out: set = set()
    _collect_free(cond, out)
    return out


def _collect_free(node, out: set):
    if isinstance(node, Path):
        out.add(node.root.id)
        if node.root.domain_path is not None:
            _collect_free(node.root.domain_path, out)
    elif isinstance(node, Lit):
        pass
    elif isinstance(node, Compare):
        _collect_free(node.lhs, out)
        _collect_free(node.rhs, out)
    elif isinstance(node, Contains):
        _collect_free(node.collection, out)
        _collect_free(node.element, out)
    elif isinstance(node, (Exists, ForAll)):
        inner: set = set()
        _collect_free(node.cond, inner)
        if node.var.domain_path is not None:
            _collect_free(node.var.domain_path, inner)
        inner.discard(node.var.id)
        out |= inner
    elif isinstance(node, Not):
        _collect_free(node.cond, out)
    elif isinstance(node, (Or, And)):
        for c in node.conds:
            _collect_free(c, out)
    elif isinstance(node, AggregateCompare):
        _collect_free(node.path, out)
        if node.qual_cond is not None:
            inner = set()
            _collect_free(node.qual_cond, inner)
            inner.discard(node.qual_var.id)
            out |= inner
    else:
        raise TypeError(f"not a condition node: {node!r}")


def enumerable_vars(cond) -> set:
    """Free var ids that top-level enumeration must bind.

    Vars occurring only under Not are closed by negation-as-failure and are
    excluded; quantified vars are bound by their quantifier.
    """
    out: set = set()
    if isinstance(cond, Not):
        return out
    if isinstance(cond, (Or, And)):
        for c in cond.conds:
            out |= enumerable_vars(c)
        return out
    return free_vars(cond)


def conjuncts_of(cond) -> list:
    if isinstance(cond, And):
        out = []
        for c in cond.conds:
            out.extend(conjuncts_of(c))
        return out
    return [cond]


def normalize_to_ucq(cond) -> list:
    """Flatten the positive And/Or tree into a union of conjunct lists."""
    if isinstance(cond, And):
        branches = [[]]
        for c in cond.conds:
            sub = normalize_to_ucq(c)
            branches = [b + s for b in branches for s in sub]
        return branches
    if isinstance(cond, Or):
        out = []
        for c in cond.conds:
            out.extend(normalize_to_ucq(c))
        return out
    return [[cond]]


def ucq_query(query: Query) -> Query:
    """Rewrite the where clause to an explicit union of conjunctive queries."""
    branches = normalize_to_ucq(query.where)
    where = Or(tuple(And(tuple(b)) for b in branches)) if len(branches) > 1 else And(
        tuple(branches[0])
    )
    return Query(
        processor=query.processor,
        descriptor=query.descriptor,
        variables=query.variables,
        where=where,
        sum_path=query.sum_path,
    )


def ast_equal(a, b) -> bool:
    """Structural equality; variables compare by id, type name and domain."""
    if isinstance(a, Query) and isinstance(b, Query):
        return (
            a.processor == b.processor
            and a.descriptor == b.descriptor
            and len(a.variables) == len(b.variables)
            and all(_var_equal(x, y) for x, y in zip(a.variables, b.variables))
            and ast_equal(a.where, b.where)
            and _opt_equal(a.sum_path, b.sum_path)
        )
    if isinstance(a, Variable) or isinstance(b, Variable):
        return isinstance(a, Variable) and isinstance(b, Variable) and _var_equal(a, b)
    if isinstance(a, Path) and isinstance(b, Path):
        return _var_equal(a.root, b.root) and a.steps == b.steps
    if type(a) is not type(b):
        return False
    if isinstance(a, (Lit, Compare, Contains, Attr, Index)):
        if isinstance(a, Compare):
            return a.op == b.op and ast_equal(a.lhs, b.lhs) and ast_equal(a.rhs, b.rhs)
        if isinstance(a, Contains):
            return ast_equal(a.collection, b.collection) and ast_equal(a.element, b.element)
        return a == b
    if isinstance(a, (Exists, ForAll)):
        return _var_equal(a.var, b.var) and ast_equal(a.cond, b.cond)
    if isinstance(a, Not):
        return ast_equal(a.cond, b.cond)
    if isinstance(a, (Or, And)):
        return len(a.conds) == len(b.conds) and all(
            ast_equal(x, y) for x, y in zip(a.conds, b.conds)
        )
    if isinstance(a, AggregateCompare):
        return (
            a.agg == b.agg
            and a.op == b.op
            and ast_equal(a.path, b.path)
            and a.literal == b.literal
            and _opt_equal_var(a.qual_var, b.qual_var)
            and (
                a.qual_cond is None
                and b.qual_cond is None
                or (a.qual_cond is not None and b.qual_cond is not None
                    and ast_equal(a.qual_cond, b.qual_cond))
            )
        )
    return a == b


def _type_name(t) -> Optional[str]:
    if t is None:
        return None
    return getattr(t, "name", str(t))


def _var_equal(a: Variable, b: Variable) -> bool:
    if a.id != b.id or _type_name(a.type) != _type_name(b.type):
        return False
    if (a.explicit_domain is None) != (b.explicit_domain is None):
        return False
    if a.explicit_domain is not None and list(a.explicit_domain) != list(b.explicit_domain):
        return False
    if (a.domain_path is None) != (b.domain_path is None):
        return False
    if a.domain_path is not None and not ast_equal(a.domain_path, b.domain_path):
        return False
    return True


def _opt_equal(a, b) -> bool:
    if a is None and b is None:
        return True
    return a is not None and b is not None and ast_equal(a, b)


def _opt_equal_var(a, b) -> bool:
    if a is None and b is None:
        return True
    return a is not None and b is not None and _var_equal(a, b)
