"""Query evaluation over knowledge-base snapshots.

Strategy: normalize the where clause to a union of conjunctive queries,
then solve each branch by backtracking enumeration. Conjuncts are tested as
soon as their outer variables are bound; contains() joins generate bindings
from the collection instead of scanning the element's candidate set; when a
variable must be enumerated, the one with the smallest candidate set is
picked first. Correctness never depends on this ordering (the brute-force
oracle enforces that in tests).

Negation is negation-as-failure: Not(c) holds iff c has no satisfying
extension of its unbound variables under the current partial binding.
ForAll ranges over the variable's own candidate set and is vacuously true
when that set is empty.
"""

from __future__ import annotations

from ..errors import TypeMismatch, UniquenessViolation, UnknownClass
from .ast import (
    AggregateCompare,
    And,
    Compare,
    Contains,
    Exists,
    ForAll,
    Lit,
    Not,
    Or,
    Path,
    Query,
    ResultSet,
    Variable,
    enumerable_vars,
    free_vars,
    normalize_to_ucq,
)
from .values import (
    compare_values,
    resolve_operand,
    resolve_path,
    scalar_of,
    value_key,
    values_equal,
)


def collect_variables(node, out: dict) -> dict:
    """Index every variable reachable from an AST node by id."""
    if isinstance(node, Query):
        for v in node.variables:
            collect_variables(v, out)
        collect_variables(node.where, out)
        if node.sum_path is not None:
            collect_variables(node.sum_path, out)
    elif isinstance(node, Variable):
        out.setdefault(node.id, node)
        if node.domain_path is not None:
            collect_variables(node.domain_path, out)
    elif isinstance(node, Path):
        collect_variables(node.root, out)
    elif isinstance(node, Compare):
        collect_variables(node.lhs, out)
        collect_variables(node.rhs, out)
    elif isinstance(node, Contains):
        collect_variables(node.collection, out)
        collect_variables(node.element, out)
    elif isinstance(node, (Exists, ForAll)):
        collect_variables(node.var, out)
        collect_variables(node.cond, out)
    elif isinstance(node, Not):
        collect_variables(node.cond, out)
    elif isinstance(node, (Or, And)):
        for c in node.conds:
            collect_variables(c, out)
    elif isinstance(node, AggregateCompare):
        collect_variables(node.path, out)
        if node.qual_var is not None:
            collect_variables(node.qual_var, out)
        if node.qual_cond is not None:
            collect_variables(node.qual_cond, out)
    return out


class Evaluator:
    """Pure function of (query, snapshot); holds only per-call caches."""

    def __init__(self, kb=None):
        self.kb = kb
        self._ext_cache: dict = {}
        self._key_cache: dict = {}
        self._fv_cache: dict = {}
        self.vars: dict = {}

    def _free(self, cond) -> set:
        key = id(cond)
        got = self._fv_cache.get(key)
        if got is None:
            got = self._fv_cache[key] = free_vars(cond)
        return got

    # -- candidate sets ---------------------------------------------------

    def candidates(self, var: Variable, binding: dict) -> list:
        if var.explicit_domain is not None:
            return [self._deref(v) for v in var.explicit_domain]
        if var.domain_path is not None:
            seen, out = set(), []
            for v in resolve_path(var.domain_path, binding):
                k = value_key(v)
                if k not in seen:
                    seen.add(k)
                    out.append(v)
            return out
        if var.type is not None:
            name = getattr(var.type, "name", var.type)
            if name not in self._ext_cache:
                if self.kb is None:
                    raise UnknownClass(
                        f"variable {var.id!r} is typed but no knowledge base is attached"
                    )
                cls = self.kb.get_class(name)
                self._ext_cache[name] = self.kb.extension_of(cls, include_roles=True)
            return self._ext_cache[name]
        raise TypeMismatch(f"variable {var.id!r} has no candidate source")

    def _bindable(self, var: Variable, binding: dict) -> bool:
        if var.domain_path is None:
            return True
        return all(fv in binding for fv in free_vars(var.domain_path))

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

    # -- solving ------------------------------------------------------------

    def solve(self, conjuncts: list, goal_ids: tuple, binding: dict, local=None):
        """Yield extensions of binding over goal_ids satisfying all conjuncts."""
        if local is None:
            local = collect_variables(And(tuple(conjuncts)), {})
        remaining = []
        for c in conjuncts:
            if self._ready(c, binding, goal_ids):
                if not self.holds(c, binding):
                    return
            else:
                remaining.append(c)
        unbound = [g for g in goal_ids if g not in binding]
        if not unbound:
            yield dict(binding)
            return

        gen = self._pick_generator(remaining, binding, unbound)
        if gen is not None:
            idx, cond = gen
            rest = remaining[:idx] + remaining[idx + 1 :]
            var = cond.element.root
            cand_keys = self._candidate_keys(var, binding)
            emitted = set()
            for v in resolve_path(cond.collection, binding):
                k = value_key(v)
                if k in emitted or (cand_keys is not None and k not in cand_keys):
                    continue
                emitted.add(k)
                nb = dict(binding)
                nb[var.id] = v
                yield from self.solve(rest, goal_ids, nb, local)
            return

        var = self._pick_variable(remaining, binding, unbound, local)
        for val in self.candidates(var, binding):
            nb = dict(binding)
            nb[var.id] = val
            yield from self.solve(remaining, goal_ids, nb, local)

    def _ready(self, cond, binding: dict, goal_ids) -> bool:
        # a conjunct is testable once every free var this solve call will
        # ever bind is bound; vars outside goal_ids are NAF-internal
        return all(fv in binding for fv in self._free(cond) if fv in goal_ids)

    def _pick_generator(self, remaining, binding, unbound):
        for i, c in enumerate(remaining):
            if (
                isinstance(c, Contains)
                and isinstance(c.element, Path)
                and not c.element.steps
                and c.element.root.id in unbound
                and all(fv in binding for fv in self._free(c.collection))
            ):
                return i, c
        return None

    def _pick_variable(self, remaining, binding, unbound, local) -> Variable:
        best, best_key = None, None
        for g in unbound:
            var = local.get(g) or self.vars[g]
            if not self._bindable(var, binding):
                continue
            occurs = any(g in self._free(c) for c in remaining)
            size = len(self.candidates(var, binding)) if var.domain_path is None else 0
            key = (not occurs, size)
            if best_key is None or key < best_key:
                best, best_key = var, key
        if best is None:
            raise TypeMismatch(
                f"cannot order variables {unbound}: circular domain dependency"
            )
        return best

    def _candidate_keys(self, var: Variable, binding: dict):
        """Membership filter for generated bindings; None means unrestricted
        only if the variable genuinely has no candidate source."""
        if var.domain_path is None and var.id in self._key_cache:
            return self._key_cache[var.id]
        try:
            cands = self.candidates(var, binding)
        except TypeMismatch:
            keys = None
        else:
            keys = {value_key(v) for v in cands}
        if var.domain_path is None:
            self._key_cache[var.id] = keys
        return keys

    # -- boolean tests ------------------------------------------------------

    def holds(self, cond, binding: dict) -> bool:
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
        if isinstance(cond, Exists):
            if cond.var.id in enumerable_vars(cond.cond):
                # positive occurrence: the solver enumerates it (and can use
                # contains() joins); candidate-set membership still applies
                return self.satisfiable(cond.cond, binding)
            # the var occurs only under Not: enumerate it here, outside the
            # negation, or satisfiable() would scope it too narrowly
            nb = dict(binding)
            for val in self.candidates(cond.var, binding):
                nb[cond.var.id] = val
                if self.satisfiable(cond.cond, nb):
                    return True
            return False
        if isinstance(cond, ForAll):
            nb = dict(binding)
            for val in self.candidates(cond.var, binding):
                nb[cond.var.id] = val
                if not self.satisfiable(cond.cond, nb):
                    return False
            return True
        if isinstance(cond, Not):
            return not self.satisfiable(cond.cond, binding)
        if isinstance(cond, (And, Or)):
            return self.satisfiable(cond, binding)
        if isinstance(cond, AggregateCompare):
            return self._aggregate(cond, binding)
        raise TypeError(f"not a condition: {cond!r}")

    def satisfiable(self, cond, binding: dict) -> bool:
        """True iff some extension of binding over cond's unbound variables
        satisfies cond (the existential closure used by NAF and Exists)."""
        for branch in normalize_to_ucq(cond):
            goal = set()
            for c in branch:
                goal |= enumerable_vars(c)
            goal -= set(binding)
            for _ in self.solve(branch, tuple(sorted(goal)), binding):
                return True
        return False

    def _aggregate(self, cond: AggregateCompare, binding: dict) -> bool:
        vals = resolve_path(cond.path, binding)
        if cond.qual_var is not None:
            kept = []
            nb = dict(binding)
            for v in vals:
                nb[cond.qual_var.id] = v
                if self.satisfiable(cond.qual_cond, nb):
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


def evaluate(query: Query, kb) -> ResultSet:
    ev = Evaluator(kb)
    ev.vars = collect_variables(query, {})
    desc_ids = tuple(v.id for v in query.variables)
    rows, seen = [], set()
    for branch in normalize_to_ucq(query.where):
        goal = set(desc_ids)
        for c in branch:
            goal |= enumerable_vars(c)
        for b in ev.solve(branch, tuple(sorted(goal)), {}):
            row = tuple(b[d] for d in desc_ids)
            key = tuple(value_key(v) for v in row)
            if key not in seen:
                seen.add(key)
                rows.append(row)
    return finish(rows, query)


def finish(rows: list, query: Query) -> ResultSet:
    """Apply the result processor to the deduplicated row set."""
    desc_ids = tuple(v.id for v in query.variables)
    if query.processor in ("a", "an"):
        return ResultSet(desc_ids, rows)
    if query.processor == "the":
        if len(rows) != 1:
            raise UniquenessViolation(len(rows))
        return ResultSet(desc_ids, rows)
    if query.processor == "count":
        return ResultSet(("count",), [(len(rows),)])
    # sum folds the stated path over each result row
    total = 0
    for row in rows:
        binding = dict(zip(desc_ids, row))
        v = scalar_of(resolve_path(query.sum_path, binding), "sum path")
        if v is None:
            continue
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise TypeMismatch(f"sum over non-numeric value {v!r}")
        total += v
    return ResultSet(("sum",), [(total,)])
