"""Typed object-graph knowledge base.

Classes and properties form the terminology; individuals carry declared and
inferred types plus a property->values multimap. Overlapping membership is
modeled with role bindings (composition, not inheritance): a role class
references its identity class through ``role_for`` and holders acquire the
role via ``bind_role``.

Mutations are serialized through a single writer and bump a monotone
generation counter. ``snapshot()`` produces an immutable copy that later
mutations can never reach, so query evaluation is safe to run concurrently
on shared snapshots.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from .errors import (
    CycleDetected,
    DisjointnessViolation,
    DisjointWithAncestor,
    DuplicateName,
    FunctionalityViolation,
    ImmutableSnapshot,
    IncompatibleHolder,
    NotARole,
    RangeViolation,
    UnknownClass,
    UnknownProperty,
)


class ScalarKind(enum.Enum):
    BOOLEAN = "boolean"
    INTEGER = "integer"
    DECIMAL = "decimal"
    STRING = "string"

    def matches(self, value) -> bool:
        # bool first: it is a subclass of int
        if self is ScalarKind.BOOLEAN:
            return isinstance(value, bool)
        if isinstance(value, bool):
            return False
        if self is ScalarKind.INTEGER:
            return isinstance(value, int)
        if self is ScalarKind.DECIMAL:
            return isinstance(value, (int, float))
        return isinstance(value, str)


SCALAR_BY_NAME = {k.value: k for k in ScalarKind}

Range = Union["ClassDef", ScalarKind]


@dataclass(eq=False)
class AttributeSpec:
    """Structural attribute of a class: scalar or object valued, one or many."""

    name: str
    range: Range
    cardinality: str = "one"  # "one" | "many"
    ordered: bool = False

    def __post_init__(self):
        if self.cardinality not in ("one", "many"):
            raise ValueError(f"bad cardinality {self.cardinality!r}")


@dataclass(eq=False)
class ClassDef:
    name: str
    iri: Optional[str] = None
    superclasses: tuple = ()
    disjoint_with: set = field(default_factory=set)
    role_for: Optional["ClassDef"] = None
    axiom: Optional[object] = None  # compiled query condition, attached by importers
    attributes: list = field(default_factory=list)
    # reflexive-transitive superclass closure, fixed at definition time
    _closure: frozenset = field(default_factory=frozenset, repr=False)

    def __hash__(self):
        return id(self)

    @property
    def closure(self) -> frozenset:
        return self._closure

    @property
    def is_role(self) -> bool:
        return self.role_for is not None

    def is_subclass_of(self, other: "ClassDef") -> bool:
        return other in self._closure

    def attribute(self, name: str) -> Optional[AttributeSpec]:
        for cls in self._closure:
            for spec in cls.attributes:
                if spec.name == name:
                    return spec
        return None


@dataclass(eq=False)
class PropertyDef:
    name: str
    kind: str  # "object" | "data"
    domain: ClassDef
    range: Range
    characteristics: frozenset = frozenset()
    inverse_of: Optional["PropertyDef"] = None
    super_properties: tuple = ()
    iri: Optional[str] = None

    def __hash__(self):
        return id(self)

    @property
    def transitive(self) -> bool:
        return "transitive" in self.characteristics

    @property
    def symmetric(self) -> bool:
        return "symmetric" in self.characteristics

    @property
    def functional(self) -> bool:
        return "functional" in self.characteristics

    @property
    def reflexive(self) -> bool:
        return "reflexive" in self.characteristics


@dataclass(eq=False)
class RoleBinding:
    holder: "Individual"
    role_class: ClassDef
    # extra assertions attached directly to the binding (rarely used; the
    # computed role_state view below folds in holder assertions)
    local_state: dict = field(default_factory=dict)

    def __hash__(self):
        return id(self)

    @property
    def role_state(self) -> dict:
        """Holder assertions local to the role: properties whose domain lies
        in the role-class closure but not in the identity class."""
        state = dict(self.local_state)
        kb = self.holder._kb
        if kb is None:
            return state
        role_only = self.role_class.closure - self.role_class.role_for.closure
        for name, values in self.holder.assertions.items():
            prop = kb.properties.get(name)
            if prop is not None and prop.domain in role_only:
                state[name] = list(values)
        return state


@dataclass(eq=False)
class Individual:
    id: str
    iri: Optional[str] = None
    declared_types: set = field(default_factory=set)
    inferred_types: set = field(default_factory=set)
    assertions: dict = field(default_factory=dict)  # slot name -> list of values
    role_bindings: list = field(default_factory=list)
    _kb: Optional["KnowledgeBase"] = field(default=None, repr=False)

    def __hash__(self):
        return id(self)

    @property
    def types(self) -> set:
        return self.declared_types | self.inferred_types

    def type_closure(self, include_roles: bool = True) -> set:
        out = set()
        for c in self.declared_types | self.inferred_types:
            out |= c.closure
        if include_roles:
            for b in self.role_bindings:
                out |= b.role_class.closure
        return out

    def values(self, slot: str) -> list:
        return self.assertions.get(slot, [])

    def binding_for(self, role_class: ClassDef) -> Optional[RoleBinding]:
        for b in self.role_bindings:
            if b.role_class is role_class:
                return b
        return None


@dataclass(frozen=True)
class AssertionId:
    subject: str
    slot: str
    index: int


def _as_name(ref) -> str:
    return ref.name if isinstance(ref, (ClassDef, PropertyDef)) else ref


class KnowledgeBase:
    """Registries plus the single-writer mutation surface."""

    def __init__(self):
        self.classes: dict[str, ClassDef] = {}
        self.properties: dict[str, PropertyDef] = {}
        self.individuals: dict[str, Individual] = {}
        self.generation = 0
        self.meta: dict = {}  # importer bookkeeping (axiom sources etc.)
        self._id_counter = itertools.count(1)
        self._readonly = False

    # -- plumbing -------------------------------------------------------

    def _bump(self):
        self._check_writable()
        self.generation += 1

    def _check_writable(self):
        if self._readonly:
            raise ImmutableSnapshot("snapshot views reject mutation")

    def get_class(self, ref) -> ClassDef:
        if isinstance(ref, ClassDef):
            return ref
        cls = self.classes.get(ref)
        if cls is None:
            raise UnknownClass(f"unknown class {ref!r}")
        return cls

    def get_property(self, ref) -> PropertyDef:
        if isinstance(ref, PropertyDef):
            return ref
        prop = self.properties.get(ref)
        if prop is None:
            raise UnknownProperty(f"unknown property {ref!r}")
        return prop

    # -- terminology ------------------------------------------------------

    def define_class(
        self,
        name: str,
        superclasses: Iterable = (),
        disjoint_with: Iterable = (),
        role_for=None,
        attributes: Iterable[AttributeSpec] = (),
        iri: Optional[str] = None,
    ) -> ClassDef:
        self._check_writable()
        if name in self.classes:
            raise DuplicateName(f"class {name!r} already defined")
        supers = []
        for ref in superclasses:
            if _as_name(ref) == name:
                raise CycleDetected(f"class {name!r} cannot subclass itself")
            supers.append(self.get_class(ref))

        closure = {cls for s in supers for cls in s.closure}
        # supers are pre-existing nodes, so a cycle can only appear through
        # an alias of the class under definition
        if any(c.name == name for c in closure):
            raise CycleDetected(f"superclass chain of {name!r} loops back")

        disjoints = {self.get_class(ref) for ref in disjoint_with}
        for d in disjoints:
            if d.name == name or d in closure:
                raise DisjointWithAncestor(
                    f"{name!r} cannot be disjoint with itself or ancestor {d.name!r}"
                )

        role_target = None
        if role_for is not None:
            role_target = self.get_class(role_for)
            if role_target.is_role:
                raise NotARole(f"role_for of {name!r} must reference a non-role class")

        cls = ClassDef(
            name=name,
            iri=iri,
            superclasses=tuple(supers),
            role_for=role_target,
            attributes=list(attributes),
        )
        cls._closure = frozenset(closure | {cls})
        for spec in cls.attributes:
            if isinstance(spec.range, str):
                spec.range = SCALAR_BY_NAME.get(spec.range) or self.get_class(spec.range)
        for d in disjoints:
            cls.disjoint_with.add(d)
            d.disjoint_with.add(cls)
        self.classes[name] = cls
        self._bump()
        return cls

    def define_property(
        self,
        name: str,
        kind: str,
        domain,
        range,
        characteristics: Iterable[str] = (),
        inverse_of=None,
        super_properties: Iterable = (),
        iri: Optional[str] = None,
    ) -> PropertyDef:
        self._check_writable()
        if name in self.properties:
            raise DuplicateName(f"property {name!r} already defined")
        if kind not in ("object", "data"):
            raise ValueError(f"bad property kind {kind!r}")
        chars = frozenset(characteristics)
        if kind == "data":
            if inverse_of is not None:
                raise RangeViolation(f"data property {name!r} cannot have an inverse")
            if chars & {"transitive", "symmetric"}:
                raise RangeViolation(
                    f"data property {name!r} cannot be transitive or symmetric"
                )
            rng = SCALAR_BY_NAME[range] if isinstance(range, str) else range
            if not isinstance(rng, ScalarKind):
                raise RangeViolation(f"data property {name!r} needs a scalar range")
        else:
            rng = self.get_class(range)
        prop = PropertyDef(
            name=name,
            kind=kind,
            domain=self.get_class(domain),
            range=rng,
            characteristics=chars,
            super_properties=tuple(self.get_property(p) for p in super_properties),
            iri=iri,
        )
        if inverse_of is not None:
            inv = self.get_property(inverse_of)
            prop.inverse_of = inv
            inv.inverse_of = prop  # keep the relation symmetric
        self.properties[name] = prop
        self._bump()
        return prop

    def set_axiom(self, cls, condition) -> None:
        self._check_writable()
        self.get_class(cls).axiom = condition
        self._bump()

    def declare_disjoint(self, a, b) -> None:
        """Record disjointness after definition (ontology-import path)."""
        self._check_writable()
        a, b = self.get_class(a), self.get_class(b)
        if a is b or a in b.closure or b in a.closure:
            raise DisjointWithAncestor(
                f"{a.name!r} and {b.name!r} are related by subclassing"
            )
        a.disjoint_with.add(b)
        b.disjoint_with.add(a)
        self._bump()

    def add_attribute(self, cls, spec: AttributeSpec) -> AttributeSpec:
        self._check_writable()
        cls = self.get_class(cls)
        if isinstance(spec.range, str):
            spec.range = SCALAR_BY_NAME.get(spec.range) or self.get_class(spec.range)
        cls.attributes.append(spec)
        self._bump()
        return spec

    def link_inverse(self, p, q) -> None:
        self._check_writable()
        p, q = self.get_property(p), self.get_property(q)
        p.inverse_of = q
        q.inverse_of = p
        self._bump()

    def set_super_properties(self, p, supers) -> None:
        self._check_writable()
        p = self.get_property(p)
        p.super_properties = tuple(self.get_property(s) for s in supers)
        self._bump()

    def convert_to_role(self, cls, identity) -> ClassDef:
        """Retroactively mark a class as a role of the identity class."""
        self._check_writable()
        cls, identity = self.get_class(cls), self.get_class(identity)
        if identity.is_role:
            raise NotARole(f"identity class {identity.name!r} is itself a role")
        cls.role_for = identity
        self._bump()
        return cls

    # -- individuals ------------------------------------------------------

    def add_individual(self, types: Iterable = (), iri: Optional[str] = None) -> Individual:
        self._check_writable()
        ind = Individual(id=f"i{next(self._id_counter)}", iri=iri, _kb=self)
        self.individuals[ind.id] = ind
        roles = []
        try:
            for ref in types:
                cls = self.get_class(ref)
                if cls.is_role:
                    roles.append(cls)
                    ind.declared_types.add(cls.role_for)
                else:
                    ind.declared_types.add(cls)
            self._check_disjointness(ind)
        except Exception:
            del self.individuals[ind.id]
            raise
        self._bump()
        for cls in roles:
            self.bind_role(ind, cls)
        return ind

    def assert_property(self, subject: Individual, prop, value) -> Optional[AssertionId]:
        """Append one assertion; idempotent for set-semantics slots.

        Returns None when the assertion was already present.
        """
        self._check_writable()
        if subject.id not in self.individuals or self.individuals[subject.id] is not subject:
            raise UnknownProperty(f"subject {subject.id!r} is not registered here")
        slot, name = self._resolve_slot(subject, prop)
        self._check_value(slot, name, value)
        values = subject.assertions.setdefault(name, [])

        ordered = isinstance(slot, AttributeSpec) and slot.ordered
        if not ordered and any(_same_value(v, value) for v in values):
            return None  # set semantics: duplicate assertion is a no-op

        if _slot_functional(slot) and values:
            raise FunctionalityViolation(
                f"{name!r} is single-valued; {subject.id} already has {values[0]!r}"
            )
        values.append(value)
        self._bump()
        return AssertionId(subject.id, name, len(values) - 1)

    def retract_property(self, subject: Individual, prop, value) -> bool:
        self._check_writable()
        slot, name = self._resolve_slot(subject, prop)
        values = subject.assertions.get(name, [])
        for i, v in enumerate(values):
            if _same_value(v, value):
                del values[i]
                if not values:
                    del subject.assertions[name]
                self._bump()
                return True
        return False

    def _resolve_slot(self, subject: Individual, prop):
        if isinstance(prop, PropertyDef):
            return prop, prop.name
        if isinstance(prop, AttributeSpec):
            return prop, prop.name
        name = prop
        if name in self.properties:
            return self.properties[name], name
        for cls in subject.type_closure(include_roles=True):
            for spec in cls.attributes:
                if spec.name == name:
                    return spec, name
        raise UnknownProperty(f"no property or attribute {name!r} for {subject.id}")

    def _check_value(self, slot, name: str, value) -> None:
        rng = slot.range
        if isinstance(rng, ScalarKind):
            if not rng.matches(value):
                raise RangeViolation(
                    f"{name!r} expects {rng.value}, got {type(value).__name__}"
                )
        else:
            # object-valued: require an entity; the range class itself is
            # inferred by materialization, not enforced here
            if not isinstance(value, Individual):
                raise RangeViolation(f"{name!r} expects an entity, got {value!r}")

    def add_declared_type(self, ind: Individual, cls) -> bool:
        self._check_writable()
        cls = self.get_class(cls)
        if cls in ind.declared_types:
            return False
        ind.declared_types.add(cls)
        try:
            self._check_disjointness(ind)
        except DisjointnessViolation:
            ind.declared_types.discard(cls)
            raise
        self._bump()
        return True

    def add_inferred_type(self, ind: Individual, cls) -> bool:
        self._check_writable()
        cls = self.get_class(cls)
        if cls in ind.declared_types or cls in ind.inferred_types:
            return False
        ind.inferred_types.add(cls)
        try:
            self._check_disjointness(ind)
        except DisjointnessViolation:
            ind.inferred_types.discard(cls)
            raise
        self._bump()
        return True

    def _check_disjointness(self, ind: Individual) -> None:
        closure = ind.type_closure(include_roles=True)
        for c in closure:
            bad = c.disjoint_with & closure
            if bad:
                raise DisjointnessViolation(ind, {c} | bad)

    # -- roles ------------------------------------------------------------

    def bind_role(self, holder: Individual, role_class) -> RoleBinding:
        self._check_writable()
        role_class = self.get_class(role_class)
        if not role_class.is_role:
            raise NotARole(f"{role_class.name!r} has no role_for")
        if role_class.role_for not in holder.type_closure(include_roles=False):
            raise IncompatibleHolder(
                f"{holder.id} is no {role_class.role_for.name}, cannot take "
                f"role {role_class.name}"
            )
        existing = holder.binding_for(role_class)
        if existing is not None:
            return existing
        binding = RoleBinding(holder=holder, role_class=role_class)
        holder.role_bindings.append(binding)
        try:
            self._check_disjointness(holder)
        except DisjointnessViolation:
            holder.role_bindings.remove(binding)
            raise
        self._bump()
        return binding

    def unbind_role(self, holder: Individual, role_class) -> bool:
        """Retract a role binding. Previously materialized inferences stay."""
        self._check_writable()
        role_class = self.get_class(role_class)
        binding = holder.binding_for(role_class)
        if binding is None:
            return False
        holder.role_bindings.remove(binding)
        self._bump()
        return True

    # -- reads --------------------------------------------------------------

    def extension_of(self, cls, include_roles: bool = False) -> list:
        """All individuals whose expanded types contain cls, registration order."""
        cls = self.get_class(cls)
        out = []
        for ind in self.individuals.values():
            if cls in ind.type_closure(include_roles=False):
                out.append(ind)
            elif include_roles and any(
                cls in b.role_class.closure for b in ind.role_bindings
            ):
                out.append(ind)
        return out

    def snapshot(self) -> "KnowledgeBase":
        """Immutable copy at the current generation; shares class/property defs."""
        snap = KnowledgeBase()
        snap.classes = dict(self.classes)
        snap.properties = dict(self.properties)
        snap.meta = dict(self.meta)
        snap.generation = self.generation
        copies = {}
        for ind in self.individuals.values():
            c = Individual(
                id=ind.id,
                iri=ind.iri,
                declared_types=set(ind.declared_types),
                inferred_types=set(ind.inferred_types),
                _kb=snap,
            )
            copies[ind.id] = c
            snap.individuals[ind.id] = c
        for ind in self.individuals.values():
            c = copies[ind.id]
            for name, values in ind.assertions.items():
                c.assertions[name] = [
                    copies[v.id] if isinstance(v, Individual) else v for v in values
                ]
            for b in ind.role_bindings:
                c.role_bindings.append(
                    RoleBinding(
                        holder=c,
                        role_class=b.role_class,
                        local_state=dict(b.local_state),
                    )
                )
        snap._readonly = True
        return snap


def _slot_functional(slot) -> bool:
    if isinstance(slot, PropertyDef):
        return slot.functional
    return slot.cardinality == "one"


def _same_value(a, b) -> bool:
    if isinstance(a, Individual) or isinstance(b, Individual):
        return a is b
    if isinstance(a, bool) != isinstance(b, bool):
        return False
    return a == b
