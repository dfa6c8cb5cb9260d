"""Independent test oracle: full cross-product enumeration.

No join ordering, no generators, no candidate-set pruning beyond the
definitions themselves. Shares only the value semantics (path walking,
comparison rules) with the evaluator; everything about enumeration is
written separately so the two can disagree when one of them is wrong.
"""

from __future__ import annotations

from ..errors import OracleTooLarge, TypeMismatch
from .ast import (
    AggregateCompare,
    And,
    Compare,
    Contains,
    Exists,
    ForAll,
    Not,
    Or,
    Query,
    ResultSet,
    enumerable_vars,
    free_vars,
)
from .evaluate import collect_variables, finish
from .values import (
    compare_values,
    resolve_operand,
    resolve_path,
    scalar_of,
    value_key,
    values_equal,
)

CAP = 10**6


class _Naive:
    def __init__(self, kb, cap=CAP):
        self.kb = kb
        self.cap = cap
        self.visited = 0
        self.vars: dict = {}

    def candidates(self, var, binding):
        if var.explicit_domain is not None:
            return [self._deref(v) for v in var.explicit_domain]
        if var.domain_path is not None:
            out, seen = [], set()
            for v in resolve_path(var.domain_path, binding):
                k = value_key(v)
                if k not in seen:
                    seen.add(k)
                    out.append(v)
            return out
        name = getattr(var.type, "name", var.type)
        return self.kb.extension_of(self.kb.get_class(name), include_roles=True)

    def _deref(self, v):
        from .ast import EntityRef

        if isinstance(v, EntityRef) and self.kb is not None:
            ind = self.kb.individuals.get(v.ref)
            if ind is not None:
                return ind
            for cand in self.kb.individuals.values():
                if cand.iri == v.ref:
                    return cand
        return v

    def product(self, var_ids, binding, local=None):
        """Recursive cross product, dependency order, counting combinations."""
        if local is None:
            local = {}
        if not var_ids:
            self.visited += 1
            if self.visited > self.cap:
                raise OracleTooLarge(f"more than {self.cap} combinations")
            yield binding
            return
        # pick any variable whose domain is already resolvable
        for i, vid in enumerate(var_ids):
            var = local.get(vid) or self.vars[vid]
            if var.domain_path is None or all(
                fv in binding for fv in free_vars(var.domain_path)
            ):
                rest = var_ids[:i] + var_ids[i + 1 :]
                for val in self.candidates(var, binding):
                    nb = dict(binding)
                    nb[vid] = val
                    yield from self.product(rest, nb, local)
                return
        raise TypeMismatch(f"cannot order variables {var_ids}")

    def sat(self, cond, binding) -> bool:
        from .evaluate import collect_variables

        unbound = tuple(sorted(enumerable_vars(cond) - set(binding)))
        local = collect_variables(cond, {})
        for b in self.product(unbound, binding, local):
            if self.holds(cond, b):
                return True
        return False

    def holds(self, cond, binding) -> bool:
        if isinstance(cond, Compare):
            lhs = scalar_of(resolve_operand(cond.lhs, binding), "comparison operand")
            rhs = scalar_of(resolve_operand(cond.rhs, binding), "comparison operand")
            if lhs is None or rhs is None:
                return False
            return compare_values(lhs, cond.op, rhs)
        if isinstance(cond, Contains):
            elem = scalar_of(resolve_operand(cond.element, binding), "contains element")
            if elem is None:
                return False
            return any(
                values_equal(v, elem) for v in resolve_path(cond.collection, binding)
            )
        if isinstance(cond, And):
            unbound = tuple(sorted(enumerable_vars(cond) - set(binding)))
            if unbound:
                return self.sat(cond, binding)
            return all(self.holds(c, binding) for c in cond.conds)
        if isinstance(cond, Or):
            return any(self.sat(c, binding) for c in cond.conds)
        if isinstance(cond, Not):
            return not self.sat(cond.cond, binding)
        if isinstance(cond, Exists):
            nb = dict(binding)
            for val in self.candidates(cond.var, binding):
                nb[cond.var.id] = val
                if self.sat(cond.cond, nb):
                    return True
            return False
        if isinstance(cond, ForAll):
            nb = dict(binding)
            for val in self.candidates(cond.var, binding):
                nb[cond.var.id] = val
                if not self.sat(cond.cond, nb):
                    return False
            return True
        if isinstance(cond, AggregateCompare):
            vals = resolve_path(cond.path, binding)
            if cond.qual_var is not None:
                nb = dict(binding)
                kept = []
                for v in vals:
                    nb[cond.qual_var.id] = v
                    if self.sat(cond.qual_cond, nb):
                        kept.append(v)
                vals = kept
            if cond.agg == "count":
                measure = len(vals)
            else:
                measure = 0
                for v in vals:
                    if isinstance(v, bool) or not isinstance(v, (int, float)):
                        raise TypeMismatch(f"sum over non-numeric value {v!r}")
                    measure += v
            return compare_values(measure, cond.op, cond.literal.value)
        raise TypeError(f"not a condition: {cond!r}")


def brute_force_oracle(query: Query, kb, cap: int = CAP) -> ResultSet:
    naive = _Naive(kb, cap)
    naive.vars = collect_variables(query, {})
    desc_ids = tuple(v.id for v in query.variables)
    goal = set(desc_ids) | enumerable_vars(query.where)

    # pre-flight size estimate over statically sized domains
    est = 1
    for vid in goal:
        var = naive.vars[vid]
        if var.domain_path is None:
            est *= max(1, len(naive.candidates(var, {})))
    if est > cap:
        raise OracleTooLarge(f"estimated {est} combinations exceeds {cap}")

    rows, seen = [], set()
    for b in naive.product(tuple(sorted(goal)), {}):
        if naive.holds(query.where, b):
            row = tuple(b[d] for d in desc_ids)
            key = tuple(value_key(v) for v in row)
            if key not in seen:
                seen.add(key)
                rows.append(row)
    return finish(rows, query)
