"""Canonical textual form of queries; parse(print(q)) is structurally q.

Variables that carry their own candidate set but are not introduced by the
descriptor or a quantifier print an inline declaration (``g:Gadget`` or
``x in [...]``) at their first occurrence, which is where the parser
declares them again.
"""

from __future__ import annotations

import json

from ..kb import Individual
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
    Lit,
    Not,
    Or,
    Path,
    Query,
    Variable,
)

_IDENT_OK = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_")


def print_literal(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, ClassRef):
        return value.name
    if isinstance(value, EntityRef):
        ref = value.ref
        return f"@{ref}" if ref and set(ref) <= _IDENT_OK else f"@{json.dumps(ref)}"
    if isinstance(value, Individual):
        return f"@{value.id}"
    raise TypeError(f"unprintable literal {value!r}")


def _has_source(var: Variable) -> bool:
    return (
        var.type is not None
        or var.explicit_domain is not None
        or var.domain_path is not None
    )


class _Printer:
    def __init__(self, declared=()):
        self.scope = set(declared)

    def vardecl(self, var: Variable) -> str:
        self.scope.add(var.id)
        if var.type is not None:
            return f"{var.id}:{getattr(var.type, 'name', var.type)}"
        if var.explicit_domain is not None:
            lits = ", ".join(print_literal(v) for v in var.explicit_domain)
            return f"{var.id} in [{lits}]"
        if var.domain_path is not None:
            return f"{var.id} in {self.path(var.domain_path)}"
        return var.id

    def path(self, path: Path) -> str:
        root = path.root
        if root.id in self.scope or not _has_source(root):
            parts = [root.id]
        else:
            parts = [self.vardecl(root)]
        for step in path.steps:
            if isinstance(step, Attr):
                parts.append(f".{step.name}")
            else:
                parts.append(f"[{step.i}]")
        return "".join(parts)

    def operand(self, op) -> str:
        if isinstance(op, Lit):
            return print_literal(op.value)
        return self.path(op)

    def cond(self, cond) -> str:
        if isinstance(cond, Compare):
            return f"{self.operand(cond.lhs)} {cond.op} {self.operand(cond.rhs)}"
        if isinstance(cond, Contains):
            return f"contains({self.path(cond.collection)}, {self.operand(cond.element)})"
        if isinstance(cond, Exists):
            return f"exists({self.vardecl(cond.var)}, {self.cond(cond.cond)})"
        if isinstance(cond, ForAll):
            return f"for_all({self.vardecl(cond.var)}, {self.cond(cond.cond)})"
        if isinstance(cond, Not):
            return f"not({self.cond(cond.cond)})"
        if isinstance(cond, Or):
            return f"or({', '.join(self.cond(c) for c in cond.conds)})"
        if isinstance(cond, And):
            return f"and({', '.join(self.cond(c) for c in cond.conds)})"
        if isinstance(cond, AggregateCompare):
            if cond.qual_var is not None:
                self.scope.add(cond.qual_var.id)
                body = (
                    f"{cond.qual_var.id} in {self.path(cond.path)} "
                    f"where {self.cond(cond.qual_cond)}"
                )
                self.scope.discard(cond.qual_var.id)
            else:
                body = self.path(cond.path)
            return f"{cond.agg}({body}) {cond.op} {print_literal(cond.literal.value)}"
        raise TypeError(f"not a condition: {cond!r}")

    def query(self, query: Query) -> str:
        decls = ", ".join(self.vardecl(v) for v in query.variables)
        desc = f"{query.descriptor}({decls})"
        if isinstance(query.where, And) and not query.where.conds:
            where = ""
        elif isinstance(query.where, And):
            where = f".where({', '.join(self.cond(c) for c in query.where.conds)})"
        else:
            where = f".where({self.cond(query.where)})"
        if query.processor == "sum":
            return f"sum({desc}{where}, {self.path(query.sum_path)})"
        return f"{query.processor}({desc}{where})"


def print_query(query: Query) -> str:
    return _Printer().query(query)


def print_condition(cond, declared=()) -> str:
    """Render one condition; vars without a candidate source print bare."""
    return _Printer(declared).cond(cond)


def print_path(path: Path) -> str:
    return _Printer({path.root.id}).path(path)


def print_vardecl(var: Variable) -> str:
    return _Printer().vardecl(var)
