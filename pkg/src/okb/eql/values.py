"""Runtime value access: attribute resolution, path walking, comparisons.

Shared by the evaluator, the brute-force oracle and the rule engine so that
all three agree on what a path means; the enumeration strategies on top of
it stay independent.
"""

from __future__ import annotations

from ..errors import TypeMismatch
from ..kb import Individual
from .ast import Attr, ClassRef, EntityRef, Index, Lit, Path

_PSEUDO = ("id", "iri", "types")


def type_name(value) -> str:
    name = getattr(value, "name", None)
    if name is not None and not isinstance(value, str):
        return name
    return value if isinstance(value, str) else str(value)


def attr_values(obj, name: str) -> list:
    """All values of an attribute, as a list; empty when nothing is asserted.

    Raises TypeMismatch when the object cannot carry the attribute at all
    (unknown name on a typed individual, attribute access on a scalar).
    """
    if isinstance(obj, Individual):
        if name == "id":
            return [obj.id]
        if name == "iri":
            return [obj.iri] if obj.iri is not None else []
        if name == "types":
            return sorted(obj.type_closure(include_roles=True), key=lambda c: c.name)
        if name in obj.assertions:
            return list(obj.assertions[name])
        kb = obj._kb
        if kb is not None:
            if name in kb.properties:
                return []
            for cls in obj.type_closure(include_roles=True):
                if any(spec.name == name for spec in cls.attributes):
                    return []
            raise TypeMismatch(f"{obj.id} has no attribute {name!r}")
        return []
    # duck-typed ephemeral values (rule-engine cases, conclusion values)
    getter = getattr(obj, "attr_values", None)
    if getter is not None:
        return getter(name)
    if isinstance(obj, dict):
        if name not in obj:
            return []
        return _as_list(obj[name])
    if isinstance(obj, (int, float, str, bool)) or obj is None:
        raise TypeMismatch(f"cannot access {name!r} on scalar {obj!r}")
    if hasattr(obj, name):
        return _as_list(getattr(obj, name))
    return []


def _as_list(v) -> list:
    if v is None:
        return []
    if isinstance(v, (list, tuple)):
        return list(v)
    return [v]


def resolve_path(path: Path, binding: dict) -> list:
    """Walk a path from a bound root; collection steps flatten."""
    if path.root.id not in binding:
        raise TypeMismatch(f"variable {path.root.id!r} is unbound")
    current = [binding[path.root.id]]
    for step in path.steps:
        if isinstance(step, Attr):
            nxt = []
            for v in current:
                nxt.extend(attr_values(v, step.name))
            current = nxt
        elif isinstance(step, Index):
            current = [current[step.i]] if 0 <= step.i < len(current) else []
        else:
            raise TypeError(f"bad step {step!r}")
    return current


def resolve_operand(op, binding: dict) -> list:
    if isinstance(op, Lit):
        return [op.value]
    return resolve_path(op, binding)


def value_key(v):
    """Hashable identity of a runtime value, for row dedup and set compares."""
    if isinstance(v, Individual):
        return ("entity", v.id)
    if isinstance(v, ClassRef):
        return ("type", v.name)
    if isinstance(v, EntityRef):
        return ("entity-ref", v.ref)
    if isinstance(v, bool):
        return ("bool", v)
    if isinstance(v, (int, float)):
        return ("num", float(v))
    if isinstance(v, str):
        return ("str", v)
    kind = getattr(v, "value_kind", None)
    if kind is not None:
        return kind()
    return ("obj", id(v))


def values_equal(a, b) -> bool:
    ta, tb = _eq_kind(a), _eq_kind(b)
    if ta == "type" or tb == "type":
        # class references match typed values and plain names by name
        if ta in ("type", "str") and tb in ("type", "str"):
            return type_name(a) == type_name(b)
        return False
    if ta == "entity" and tb == "entity-ref" or ta == "entity-ref" and tb == "entity":
        ent, ref = (a, b) if ta == "entity" else (b, a)
        return ref.ref in (getattr(ent, "iri", None), getattr(ent, "id", None))
    if ta != tb:
        return False
    if ta == "entity":
        return value_key(a) == value_key(b)
    if ta == "num":
        return float(a) == float(b)
    return a == b


def _eq_kind(v) -> str:
    if isinstance(v, Individual):
        return "entity"
    if isinstance(v, (ClassRef,)) or _is_classdef(v):
        return "type"
    if isinstance(v, EntityRef):
        return "entity-ref"
    if isinstance(v, bool):
        return "bool"
    if isinstance(v, (int, float)):
        return "num"
    if isinstance(v, str):
        return "str"
    return "entity"  # cases, conclusion values: identity semantics


def _is_classdef(v) -> bool:
    from ..kb import ClassDef

    return isinstance(v, ClassDef)


def compare_values(a, op: str, b) -> bool:
    """Comparison used by Compare conditions: fail fast on incomparable
    runtime kinds. Membership tests use values_equal directly, which is
    permissive (a heterogeneous collection simply does not contain it)."""
    ka, kb_ = _eq_kind(a), _eq_kind(b)
    if op in ("==", "!="):
        both_typeish = ka in ("type", "str") and kb_ in ("type", "str")
        if ka != kb_ and not both_typeish and not _entity_pair(a, b):
            raise TypeMismatch(f"cannot compare {a!r} with {b!r}")
        eq = values_equal(a, b)
        return eq if op == "==" else not eq
    if ka != kb_ or ka not in ("num", "str"):
        raise TypeMismatch(f"cannot order {a!r} {op} {b!r}")
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    raise ValueError(f"bad operator {op!r}")


def _entity_pair(a, b) -> bool:
    kinds = {_eq_kind(a), _eq_kind(b)}
    return kinds <= {"entity", "entity-ref"}


def scalar_of(values: list, what: str):
    """Unwrap a single-valued path result; absent -> None, many -> error."""
    if not values:
        return None
    if len(values) > 1:
        raise TypeMismatch(
            f"{what} yields {len(values)} values; use contains() or an aggregate"
        )
    return values[0]
