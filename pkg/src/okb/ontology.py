"""Ontology ingestion and materialization.

A document is plain JSON with four top-level keys:

    classes:     [{name, superclasses, disjoint_with, role_for?, equivalent_to?,
                   attributes?: [{name, range, cardinality, ordered}]}]
    properties:  [{name, kind, domain, range, characteristics, inverse_of?,
                   super_properties?}]
    axioms:      [{class, expr: <restriction>}]
    individuals: [{iri, types, assertions: {prop: [value | {"ref": iri}]}}]

Restriction expressions nest as JSON objects keyed by construct, e.g.
``{"intersection_of": [{"class": "Student"}, {"max_qualified_cardinality":
{"n": 1, "property": "takesCourse", "expr": {"class": "Course"}}}]}``.

Terminology import compiles every axiom into a query-language predicate over
a candidate variable. Loading individuals installs declared types (role
classes become bindings on an identity entity). Materialization forward
chains property semantics to a fixpoint, leaving properties that are both
symmetric and transitive to a connected-components pass, then classifies
individuals against the compiled axioms.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .eql.ast import (
    AggregateCompare,
    And,
    Attr,
    ClassRef,
    Contains,
    EntityRef,
    Exists,
    ForAll,
    Lit,
    Or,
    Path,
    Variable,
)
from .eql.evaluate import Evaluator
from .errors import (
    DisjointWithAncestor,
    FixpointNotReached,
    InconsistentDisjointness,
    NotSymmetricTransitive,
    UnresolvedReference,
    UnsupportedConstruct,
)
from .kb import (
    SCALAR_BY_NAME,
    AttributeSpec,
    ClassDef,
    Individual,
    KnowledgeBase,
    PropertyDef,
    ScalarKind,
)

RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"


# --- restriction expressions ---------------------------------------------------


@dataclass(frozen=True)
class ClassExpr:
    name: str


@dataclass(frozen=True)
class IntersectionOf:
    parts: tuple


@dataclass(frozen=True)
class UnionOf:
    parts: tuple


@dataclass(frozen=True)
class SomeValuesFrom:
    prop: str
    expr: object


@dataclass(frozen=True)
class AllValuesFrom:
    prop: str
    expr: object


@dataclass(frozen=True)
class HasValue:
    prop: str
    value: object  # scalar or EntityRef


@dataclass(frozen=True)
class MinQualifiedCardinality:
    n: int
    prop: str
    expr: object


@dataclass(frozen=True)
class MaxQualifiedCardinality:
    n: int
    prop: str
    expr: object


def parse_restriction(node) -> object:
    if not isinstance(node, dict) or len(node) != 1:
        raise UnsupportedConstruct(f"not a restriction expression: {node!r}")
    key, body = next(iter(node.items()))
    if key == "class":
        return ClassExpr(body)
    if key == "intersection_of":
        return IntersectionOf(tuple(parse_restriction(p) for p in body))
    if key == "union_of":
        return UnionOf(tuple(parse_restriction(p) for p in body))
    if key == "some_values_from":
        return SomeValuesFrom(body["property"], parse_restriction(body["expr"]))
    if key == "all_values_from":
        return AllValuesFrom(body["property"], parse_restriction(body["expr"]))
    if key == "has_value":
        value = EntityRef(body["iri"]) if "iri" in body else body["value"]
        return HasValue(body["property"], value)
    if key in ("min_qualified_cardinality", "max_qualified_cardinality"):
        n = int(body["n"])
        if n < 0:
            raise UnsupportedConstruct("cardinality bound must be nonnegative")
        cls = MinQualifiedCardinality if key.startswith("min") else MaxQualifiedCardinality
        return cls(n, body["property"], parse_restriction(body["expr"]))
    raise UnsupportedConstruct(f"unknown construct {key!r}")


@dataclass
class CompiledAxiom:
    var: Variable
    condition: object
    source: object = None  # the restriction it was compiled from


def compile_axiom(expr, kb: KnowledgeBase, var: Variable = None) -> CompiledAxiom:
    """Turn a restriction into a predicate over a candidate variable."""
    if isinstance(expr, dict):
        expr = parse_restriction(expr)
    var = var or Variable("candidate")
    counter = [0]

    def fresh() -> str:
        counter[0] += 1
        return f"v{counter[0]}"

    def compile_on(e, root: Variable):
        if isinstance(e, ClassExpr):
            if e.name not in kb.classes:
                raise UnresolvedReference(f"axiom references unknown class {e.name!r}")
            return Contains(Path(root, (Attr("types"),)), Lit(ClassRef(e.name)))
        if isinstance(e, IntersectionOf):
            return And(tuple(compile_on(p, root) for p in e.parts))
        if isinstance(e, UnionOf):
            return Or(tuple(compile_on(p, root) for p in e.parts))
        if isinstance(e, (SomeValuesFrom, AllValuesFrom)):
            _need_property(kb, e.prop)
            v = Variable(fresh(), domain_path=Path(root, (Attr(e.prop),)))
            inner = compile_on(e.expr, v)
            return Exists(v, inner) if isinstance(e, SomeValuesFrom) else ForAll(v, inner)
        if isinstance(e, HasValue):
            _need_property(kb, e.prop)
            return Contains(Path(root, (Attr(e.prop),)), Lit(e.value))
        if isinstance(e, (MinQualifiedCardinality, MaxQualifiedCardinality)):
            _need_property(kb, e.prop)
            if isinstance(e, MinQualifiedCardinality) and e.n == 0:
                return And(())  # at least zero of anything always holds
            v = Variable(fresh())
            qual = compile_on(e.expr, v)
            op = ">=" if isinstance(e, MinQualifiedCardinality) else "<="
            return AggregateCompare(
                "count", Path(root, (Attr(e.prop),)), op, Lit(e.n), v, qual
            )
        raise UnsupportedConstruct(f"cannot compile {e!r}")

    return CompiledAxiom(var, compile_on(expr, var), expr)


def interpret_restriction(expr, value, kb: KnowledgeBase) -> bool:
    """Direct recursive semantics of a restriction; the compile oracle."""
    if isinstance(expr, dict):
        expr = parse_restriction(expr)
    if isinstance(expr, ClassExpr):
        if not isinstance(value, Individual):
            return False
        return kb.get_class(expr.name) in value.type_closure(include_roles=True)
    if isinstance(expr, IntersectionOf):
        return all(interpret_restriction(p, value, kb) for p in expr.parts)
    if isinstance(expr, UnionOf):
        return any(interpret_restriction(p, value, kb) for p in expr.parts)
    values = value.values(expr.prop) if isinstance(value, Individual) else []
    if isinstance(expr, SomeValuesFrom):
        return any(interpret_restriction(expr.expr, v, kb) for v in values)
    if isinstance(expr, AllValuesFrom):
        return all(interpret_restriction(expr.expr, v, kb) for v in values)
    if isinstance(expr, HasValue):
        return any(_has_value_match(v, expr.value) for v in values)
    if isinstance(expr, MinQualifiedCardinality):
        return sum(1 for v in values if interpret_restriction(expr.expr, v, kb)) >= expr.n
    if isinstance(expr, MaxQualifiedCardinality):
        return sum(1 for v in values if interpret_restriction(expr.expr, v, kb)) <= expr.n
    raise UnsupportedConstruct(f"cannot interpret {expr!r}")


def _has_value_match(v, expected) -> bool:
    if isinstance(expected, EntityRef):
        return isinstance(v, Individual) and expected.ref in (v.iri, v.id)
    if isinstance(v, Individual):
        return False
    if isinstance(v, bool) != isinstance(expected, bool):
        return False
    return v == expected


def _need_property(kb, name):
    if name not in kb.properties:
        raise UnresolvedReference(f"axiom references unknown property {name!r}")


# --- terminology import ---------------------------------------------------------


def import_tbox(doc: dict, kb: KnowledgeBase) -> list:
    """Register classes and properties, then compile and attach axioms."""
    created = []
    entries = list(doc.get("classes", []))
    aliases = []
    pending = []
    for entry in entries:
        eq = entry.get("equivalent_to")
        if isinstance(eq, dict) and set(eq) == {"class"}:
            aliases.append((entry["name"], eq["class"]))
        else:
            pending.append(entry)

    # classes in dependency order over superclasses
    while pending:
        progressed = False
        rest = []
        for entry in pending:
            supers = list(entry.get("superclasses", []))
            eq = entry.get("equivalent_to")
            if eq is not None:
                supers += [
                    p["class"]
                    for p in eq.get("intersection_of", [])
                    if isinstance(p, dict) and set(p) == {"class"}
                ]
            if all(s in kb.classes for s in supers):
                cls = kb.define_class(
                    entry["name"],
                    superclasses=supers,
                    iri=entry.get("iri"),
                )
                created.append(cls)
                progressed = True
            else:
                rest.append(entry)
        if not progressed:
            missing = sorted({s for e in rest for s in e.get("superclasses", [])
                              if s not in kb.classes})
            raise UnresolvedReference(f"unresolved superclasses: {missing}")
        pending = rest

    for name, target in aliases:
        if target not in kb.classes:
            raise UnresolvedReference(f"equivalent class {target!r} not defined")
        kb.classes[name] = kb.get_class(target)  # ClassRef equivalence collapses

    # attributes, roles and disjointness once every class exists
    for entry in entries:
        if entry["name"] not in kb.classes:
            continue
        cls = kb.get_class(entry["name"])
        for spec in entry.get("attributes", []):
            kb.add_attribute(
                cls,
                AttributeSpec(
                    spec["name"],
                    spec["range"],
                    spec.get("cardinality", "one"),
                    spec.get("ordered", False),
                ),
            )
        if entry.get("role_for"):
            if entry["role_for"] not in kb.classes:
                raise UnresolvedReference(f"role_for {entry['role_for']!r} unknown")
            kb.convert_to_role(cls, entry["role_for"])
    for entry in entries:
        for other in entry.get("disjoint_with", []):
            if other not in kb.classes:
                raise UnresolvedReference(f"disjoint class {other!r} unknown")
            try:
                if kb.get_class(other) not in kb.get_class(entry["name"]).disjoint_with:
                    kb.declare_disjoint(entry["name"], other)
            except DisjointWithAncestor as e:
                raise InconsistentDisjointness(str(e)) from e

    # properties, then inverse/super links
    for spec in doc.get("properties", []):
        if spec["domain"] not in kb.classes:
            raise UnresolvedReference(f"property domain {spec['domain']!r} unknown")
        rng = spec["range"]
        if spec["kind"] == "object" and rng not in kb.classes:
            raise UnresolvedReference(f"property range {rng!r} unknown")
        prop = kb.define_property(
            spec["name"],
            spec["kind"],
            spec["domain"],
            rng,
            characteristics=spec.get("characteristics", []),
            iri=spec.get("iri"),
        )
        created.append(prop)
    for spec in doc.get("properties", []):
        if spec.get("inverse_of"):
            kb.link_inverse(spec["name"], spec["inverse_of"])
        if spec.get("super_properties"):
            kb.set_super_properties(spec["name"], spec["super_properties"])

    # axioms: class-level equivalences plus the explicit axiom list
    sources = kb.meta.setdefault("axiom_sources", {})
    for entry in entries:
        eq = entry.get("equivalent_to")
        if eq is not None and set(eq) != {"class"}:
            axiom = compile_axiom(eq, kb)
            kb.set_axiom(entry["name"], axiom)
            sources[entry["name"]] = eq
    for item in doc.get("axioms", []):
        if item["class"] not in kb.classes:
            raise UnresolvedReference(f"axiom class {item['class']!r} unknown")
        axiom = compile_axiom(item["expr"], kb)
        kb.set_axiom(item["class"], axiom)
        sources[item["class"]] = item["expr"]
    return created


# --- assertional import ----------------------------------------------------------


def import_abox(doc: dict, kb: KnowledgeBase) -> int:
    """Create individuals with declared types and assertions; returns count."""
    entries = list(doc.get("individuals", []))
    by_iri: dict[str, Individual] = {
        ind.iri: ind for ind in kb.individuals.values() if ind.iri
    }
    subjects = []
    count = 0
    for entry in entries:
        iri = entry.get("iri")
        types = [_resolve_type(kb, t) for t in entry.get("types", [])]
        _imply_roles(kb, types)
        existing = by_iri.get(iri) if iri is not None else None
        if existing is not None:
            for cls in types:  # merge onto the known identity
                if cls.is_role:
                    kb.add_declared_type(existing, cls.role_for)
                    kb.bind_role(existing, cls)
                else:
                    kb.add_declared_type(existing, cls)
            subjects.append(existing)
            continue
        ind = kb.add_individual(types, iri=iri)
        if iri:
            by_iri[iri] = ind
        subjects.append(ind)
        count += 1
    for entry, subject in zip(entries, subjects):
        for prop, values in entry.get("assertions", {}).items():
            if not isinstance(values, list):
                values = [values]
            for value in values:
                if isinstance(value, dict) and "ref" in value:
                    target = by_iri.get(value["ref"])
                    if target is None:
                        raise UnresolvedReference(
                            f"assertion {prop} of {entry.get('iri')}: "
                            f"no individual {value['ref']!r}"
                        )
                    value = target
                kb.assert_property(subject, prop, value)
    return count


def _resolve_type(kb, name) -> ClassDef:
    if name not in kb.classes:
        raise UnresolvedReference(f"individual declares unknown class {name!r}")
    return kb.get_class(name)


def _imply_roles(kb, types: list) -> None:
    """Non-disjoint sibling classes co-declared on one individual become
    roles of their shared direct superclass (explicit role_for wins)."""
    plain = [c for c in types if not c.is_role]
    for i, a in enumerate(plain):
        for b in plain[i + 1 :]:
            if a in b.closure or b in a.closure or b in a.disjoint_with:
                continue
            shared = set(a.superclasses) & set(b.superclasses)
            shared = {s for s in shared if not s.is_role}
            if not shared:
                continue
            identity = sorted(shared, key=lambda c: c.name)[0]
            for cls in (a, b):
                if not cls.is_role:
                    kb.convert_to_role(cls, identity)


# --- materialization ---------------------------------------------------------------

RULE_KINDS = (
    "subproperty",
    "inverse",
    "symmetric",
    "transitive",
    "domain_typing",
    "range_typing",
    "wcc_closure",
    "classification",
)


@dataclass
class MaterializationReport:
    counts: dict = field(default_factory=lambda: {k: 0 for k in RULE_KINDS})
    passes: int = 0
    statements_before: int = 0
    statements_after: int = 0

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def statement_count(kb: KnowledgeBase) -> int:
    """Declared plus inferred statements: type declarations, role bindings
    and property assertions."""
    n = 0
    for ind in kb.individuals.values():
        n += len(ind.declared_types) + len(ind.inferred_types)
        n += len(ind.role_bindings)
        n += sum(len(v) for v in ind.assertions.values())
    return n


def _infer_type(kb, ind, cls) -> int:
    """Add an inferred type (role binding for role classes); returns the
    number of new statements."""
    added = 0
    if cls.is_role:
        if cls.role_for not in ind.type_closure(include_roles=False):
            if kb.add_inferred_type(ind, cls.role_for):
                added += 1
        if ind.binding_for(cls) is None:
            kb.bind_role(ind, cls)
            added += 1
        return added
    if cls in ind.type_closure(include_roles=False):
        return 0
    return 1 if kb.add_inferred_type(ind, cls) else 0


def materialize(kb: KnowledgeBase, max_passes: int = 1000) -> MaterializationReport:
    """Forward chain property semantics to a fixpoint, close the deferred
    symmetric-transitive properties via connected components, classify."""
    report = MaterializationReport()
    report.statements_before = statement_count(kb)
    counts = report.counts

    deferred = [p for p in kb.properties.values() if p.symmetric and p.transitive]

    for outer in range(1, max_passes + 1):
        report.passes = outer
        changed = 0
        changed += _chain_pass(kb, counts, max_passes)
        for prop in deferred:
            n = close_symmetric_transitive(kb, prop)
            counts["wcc_closure"] += n
            changed += n
        if changed == 0:
            break
    else:
        raise FixpointNotReached(max_passes)

    counts["classification"] += classify_individuals(kb)
    report.statements_after = statement_count(kb)
    return report


def _chain_pass(kb, counts, max_passes: int) -> int:
    """Inner fixpoint over the on-time rules; returns statements added."""
    total = 0
    for _ in range(max_passes):
        added = 0
        for prop in list(kb.properties.values()):
            sym_trans = prop.symmetric and prop.transitive
            inverse = prop.inverse_of
            for ind in list(kb.individuals.values()):
                values = list(ind.values(prop.name))
                if not values:
                    continue
                added += _count_new(
                    counts, "domain_typing", _infer_type(kb, ind, prop.domain)
                )
                for v in values:
                    for sp in prop.super_properties:
                        added += _count_new(
                            counts, "subproperty",
                            0 if kb.assert_property(ind, sp, v) is None else 1,
                        )
                    if not isinstance(v, Individual):
                        continue
                    if isinstance(prop.range, ClassDef):
                        added += _count_new(
                            counts, "range_typing", _infer_type(kb, v, prop.range)
                        )
                    if inverse is not None:
                        added += _count_new(
                            counts, "inverse",
                            0 if kb.assert_property(v, inverse, ind) is None else 1,
                        )
                    if sym_trans:
                        continue  # closed separately by components
                    if prop.symmetric:
                        added += _count_new(
                            counts, "symmetric",
                            0 if kb.assert_property(v, prop, ind) is None else 1,
                        )
                    if prop.transitive:
                        for w in list(v.values(prop.name)):
                            added += _count_new(
                                counts, "transitive",
                                0 if kb.assert_property(ind, prop, w) is None else 1,
                            )
        total += added
        if added == 0:
            return total
    raise FixpointNotReached(max_passes)


def _count_new(counts, kind, n) -> int:
    counts[kind] += n
    return n


def close_symmetric_transitive(kb: KnowledgeBase, prop) -> int:
    """Union-find the asserted edges viewed undirected; assert every ordered
    pair of distinct members per component (self-pairs only when the
    property is declared reflexive). Returns assertions added."""
    prop = kb.get_property(prop)
    if not (prop.symmetric and prop.transitive):
        raise NotSymmetricTransitive(f"{prop.name!r} is not symmetric-transitive")

    parent: dict[str, str] = {}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: str, b: str) -> None:
        parent.setdefault(a, a)
        parent.setdefault(b, b)
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra

    order = {ind_id: i for i, ind_id in enumerate(kb.individuals)}
    for ind in kb.individuals.values():
        for v in ind.values(prop.name):
            if isinstance(v, Individual):
                union(ind.id, v.id)

    components: dict[str, list] = {}
    for node in parent:
        components.setdefault(find(node), []).append(node)

    added = 0
    for root in sorted(components, key=lambda r: order[r]):
        members = sorted(components[root], key=lambda n: order[n])
        for a_id in members:
            a = kb.individuals[a_id]
            for b_id in members:
                if a_id == b_id and not prop.reflexive:
                    continue
                b = kb.individuals[b_id]
                if kb.assert_property(a, prop, b) is not None:
                    added += 1
    return added


def naive_symmetric_transitive_fixpoint(kb: KnowledgeBase, prop) -> int:
    """Oracle twin of close_symmetric_transitive: apply the symmetry and
    transitivity rules until stable. The transitivity step skips (x, x)
    unless the property is reflexive, mirroring the closure's self-pair
    policy."""
    prop = kb.get_property(prop)
    if not (prop.symmetric and prop.transitive):
        raise NotSymmetricTransitive(f"{prop.name!r} is not symmetric-transitive")
    added = 0
    while True:
        step = 0
        for ind in list(kb.individuals.values()):
            for v in list(ind.values(prop.name)):
                if not isinstance(v, Individual):
                    continue
                if kb.assert_property(v, prop, ind) is not None:
                    step += 1
                for w in list(v.values(prop.name)):
                    if w is ind and not prop.reflexive:
                        continue
                    if kb.assert_property(ind, prop, w) is not None:
                        step += 1
        if step == 0:
            return added
        added += step


def classify_individuals(kb: KnowledgeBase) -> int:
    """Evaluate compiled axioms to a fixpoint, adding inferred types and
    role bindings; returns the number of statements added."""
    seen = set()
    axiom_classes = []
    for cls in kb.classes.values():
        if cls.axiom is not None and id(cls) not in seen:
            seen.add(id(cls))
            axiom_classes.append(cls)
    total = 0
    for _ in range(len(kb.classes) + 1):
        changed = 0
        for cls in axiom_classes:
            axiom = cls.axiom
            candidates = (
                kb.extension_of(cls.superclasses[0], include_roles=True)
                if cls.superclasses
                else list(kb.individuals.values())
            )
            for ind in candidates:
                if cls in ind.type_closure(include_roles=True):
                    continue
                if Evaluator(kb).holds(axiom.condition, {axiom.var.id: ind}):
                    changed += _infer_type(kb, ind, cls)
        total += changed
        if changed == 0:
            return total
    raise FixpointNotReached(len(kb.classes) + 1)


# --- N-Triples subset -------------------------------------------------------------

_NT_LINE = re.compile(
    r"^<([^>]*)>\s+<([^>]*)>\s+(?:<([^>]*)>|\"((?:[^\"\\]|\\.)*)\""
    r"(\^\^<[^>]*integer>)?|(-?\d+))\s*\.$"
)


def local_name(iri: str) -> str:
    if "#" in iri:
        return iri.rsplit("#", 1)[1]
    return iri.rstrip("/").rsplit("/", 1)[-1]


def parse_ntriples(text: str) -> dict:
    """Translate an N-Triples subset (IRIs, plain and integer literals) into
    the individuals section of a document."""
    individuals: dict[str, dict] = {}

    def entry(iri: str) -> dict:
        return individuals.setdefault(iri, {"iri": iri, "types": [], "assertions": {}})

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _NT_LINE.match(line)
        if not m:
            raise UnresolvedReference(f"line {lineno}: not in the N-Triples subset")
        subj, pred, obj_iri, obj_str, int_tag, obj_int = m.groups()
        e = entry(subj)
        if pred == RDF_TYPE or local_name(pred) == "type":
            e["types"].append(local_name(obj_iri))
            continue
        key = local_name(pred)
        values = e["assertions"].setdefault(key, [])
        if obj_iri is not None:
            entry(obj_iri)  # referenced individuals exist even if typeless
            values.append({"ref": obj_iri})
        elif obj_int is not None:
            values.append(int(obj_int))
        elif int_tag is not None:
            values.append(int(obj_str))
        else:
            values.append(obj_str.replace('\\"', '"').replace("\\\\", "\\"))
    return {"individuals": list(individuals.values())}


# --- knowledge-base state files ---------------------------------------------------


def save_state(kb: KnowledgeBase) -> dict:
    """Full dump: terminology, axiom sources, individuals with inferred
    types and role bindings. load_state inverts it, preserving ids."""
    classes = []
    primary: dict[int, str] = {}
    for name, cls in kb.classes.items():
        if id(cls) in primary:
            classes.append({"name": name, "equivalent_to": {"class": primary[id(cls)]}})
            continue
        primary[id(cls)] = name
        entry = {"name": name}
        if cls.superclasses:
            entry["superclasses"] = [s.name for s in cls.superclasses]
        if cls.disjoint_with:
            entry["disjoint_with"] = sorted(d.name for d in cls.disjoint_with)
        if cls.role_for is not None:
            entry["role_for"] = cls.role_for.name
        if cls.iri:
            entry["iri"] = cls.iri
        if cls.attributes:
            entry["attributes"] = [
                {
                    "name": a.name,
                    "range": a.range.value if isinstance(a.range, ScalarKind)
                    else a.range.name,
                    "cardinality": a.cardinality,
                    "ordered": a.ordered,
                }
                for a in cls.attributes
            ]
        classes.append(entry)
    properties = []
    for prop in kb.properties.values():
        entry = {
            "name": prop.name,
            "kind": prop.kind,
            "domain": prop.domain.name,
            "range": prop.range.value if isinstance(prop.range, ScalarKind)
            else prop.range.name,
        }
        if prop.characteristics:
            entry["characteristics"] = sorted(prop.characteristics)
        if prop.inverse_of is not None:
            entry["inverse_of"] = prop.inverse_of.name
        if prop.super_properties:
            entry["super_properties"] = [s.name for s in prop.super_properties]
        if prop.iri:
            entry["iri"] = prop.iri
        properties.append(entry)
    axioms = [
        {"class": name, "expr": expr}
        for name, expr in kb.meta.get("axiom_sources", {}).items()
    ]
    individuals = []
    for ind in kb.individuals.values():
        entry = {
            "id": ind.id,
            "types": sorted(c.name for c in ind.declared_types),
        }
        if ind.iri:
            entry["iri"] = ind.iri
        if ind.inferred_types:
            entry["inferred_types"] = sorted(c.name for c in ind.inferred_types)
        if ind.role_bindings:
            entry["roles"] = sorted(b.role_class.name for b in ind.role_bindings)
        if ind.assertions:
            entry["assertions"] = {
                name: [
                    {"ref_id": v.id} if isinstance(v, Individual) else v
                    for v in values
                ]
                for name, values in ind.assertions.items()
            }
        individuals.append(entry)
    return {
        "classes": classes,
        "properties": properties,
        "axioms": axioms,
        "individuals": individuals,
    }


def load_state(doc: dict) -> KnowledgeBase:
    kb = KnowledgeBase()
    import_tbox(
        {k: doc.get(k, []) for k in ("classes", "properties", "axioms")}, kb
    )
    max_id = 0
    for entry in doc.get("individuals", []):
        ind = Individual(id=entry["id"], iri=entry.get("iri"), _kb=kb)
        kb.individuals[ind.id] = ind
        if entry["id"].startswith("i") and entry["id"][1:].isdigit():
            max_id = max(max_id, int(entry["id"][1:]))
        for name in entry.get("types", []):
            ind.declared_types.add(kb.get_class(name))
        for name in entry.get("inferred_types", []):
            ind.inferred_types.add(kb.get_class(name))
    kb._id_counter = iter(range(max_id + 1, 10**12))
    for entry in doc.get("individuals", []):
        ind = kb.individuals[entry["id"]]
        for name in entry.get("roles", []):
            kb.bind_role(ind, name)
        for prop, values in entry.get("assertions", {}).items():
            for value in values:
                if isinstance(value, dict) and "ref_id" in value:
                    value = kb.individuals[value["ref_id"]]
                kb.assert_property(ind, prop, value)
    return kb


def resolve_ntriples_names(doc: dict, kb: KnowledgeBase) -> dict:
    """Map IRI-carrying predicates/classes onto registered local names."""
    by_iri_cls = {c.iri: c.name for c in kb.classes.values() if c.iri}
    by_iri_prop = {p.iri: p.name for p in kb.properties.values() if p.iri}
    for entry in doc.get("individuals", []):
        entry["types"] = [by_iri_cls.get(t, t) for t in entry.get("types", [])]
        entry["assertions"] = {
            by_iri_prop.get(k, k): v for k, v in entry.get("assertions", {}).items()
        }
    return doc
