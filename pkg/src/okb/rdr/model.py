"""Rule-tree data model: rules, trees, multi-tree collections, cases, traces.

Trees come in two kinds. Single-conclusion trees walk except/alternative
children and the deepest fired rule wins; multi-conclusion trees let every
fired top-level rule contribute unless one of its refinement children fires
(a Stop child suppresses the contribution entirely).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..eql.values import value_key


class _Stop:
    """Sentinel conclusion: suppress the parent rule's contribution."""

    def __repr__(self):
        return "STOP"


STOP = _Stop()


@dataclass(eq=False)
class Case:
    """Ephemeral structured value with the same attribute-path access as a
    knowledge-base individual; conclusions are asserted onto its attrs."""

    types: list = field(default_factory=list)
    attrs: dict = field(default_factory=dict)
    name: Optional[str] = None

    def attr_values(self, attr: str) -> list:
        if attr == "types":
            return list(self.types)
        v = self.attrs.get(attr, [])
        return list(v) if isinstance(v, (list, tuple)) else [v]

    def clone(self) -> "Case":
        return Case(
            types=list(self.types),
            attrs={k: list(v) if isinstance(v, (list, tuple)) else [v]
                   for k, v in self.attrs.items()},
            name=self.name,
        )

    def value_kind(self):
        return ("case", id(self))

    def __repr__(self):
        label = self.name or "case"
        return f"<{label}:{','.join(self.types)}>"


@dataclass(eq=False)
class ConclusionValue:
    """A concrete inferred value: constructed type plus field values."""

    type_name: str
    fields: dict = field(default_factory=dict)

    def attr_values(self, attr: str) -> list:
        if attr == "types":
            return [self.type_name]
        if attr in self.fields:
            v = self.fields[attr]
            return list(v) if isinstance(v, (list, tuple)) else [v]
        return []

    def key(self):
        return (
            self.type_name,
            tuple(sorted((k, value_key(v)) for k, v in self.fields.items())),
        )

    def value_kind(self):
        return ("conclusion",) + self.key()

    def __eq__(self, other):
        return isinstance(other, ConclusionValue) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        inner = ", ".join(f"{k}={v!r}" for k, v in self.fields.items())
        return f"{self.type_name}({inner})"


@dataclass(eq=False)
class ConclusionExpr:
    """Template for a conclusion: field expressions over the case variable."""

    type_name: str
    fields: dict = field(default_factory=dict)  # name -> Path | Lit


@dataclass(frozen=True)
class Target:
    attribute: str
    type_name: str
    mutually_exclusive: bool


@dataclass(eq=False)
class Rule:
    id: str
    condition: object = None  # query condition over the case var; None = always true
    condition_text: str = "true"
    conclusion: object = None  # ConclusionExpr | STOP | None (root default)
    except_child: Optional["Rule"] = None
    alternative_child: Optional["Rule"] = None
    refinement_children: list = field(default_factory=list)
    cornerstone: Optional[Case] = None
    cornerstone_conclusion: object = None
    suppressed_conclusion: object = None  # for Stop rules: the value they block


@dataclass(eq=False)
class RuleTree:
    kind: str  # "sc" | "mc"
    target: Target
    root: Rule = None
    _counter: int = 0

    def __post_init__(self):
        if self.kind not in ("sc", "mc"):
            raise ValueError(f"bad tree kind {self.kind!r}")
        if self.root is None:
            self.root = Rule(id="r0")

    def next_id(self) -> str:
        self._counter += 1
        return f"r{self._counter}"

    def note_loaded_id(self, rule_id: str) -> None:
        if rule_id.startswith("r") and rule_id[1:].isdigit():
            self._counter = max(self._counter, int(rule_id[1:]))

    def rules(self) -> list:
        """Pre-order rule list: node, except subtree, refinements, alt chain."""
        out = []

        def walk(rule):
            if rule is None:
                return
            out.append(rule)
            walk(rule.except_child)
            for child in rule.refinement_children:
                walk(child)
            walk(rule.alternative_child)

        walk(self.root)
        return out

    def rule_by_id(self, rule_id: str) -> Optional[Rule]:
        for r in self.rules():
            if r.id == rule_id:
                return r
        return None


@dataclass(eq=False)
class GRDR:
    """Multiple rule trees evaluated to a joint fixpoint; keyed by target."""

    trees: dict = field(default_factory=dict)  # attribute -> RuleTree
    max_iterations: int = 100

    def add_tree(self, tree: RuleTree) -> RuleTree:
        self.trees[tree.target.attribute] = tree
        return tree


@dataclass(eq=False)
class CaseQuery:
    case: object
    attribute: str
    type_name: str
    mutually_exclusive: bool = True
    ground_truth: object = None  # ConclusionValue | list | None


@dataclass
class TraceEntry:
    rule_id: str
    fired: bool
    conclusion: object = None  # value this rule contributed, if any
    path: tuple = ()
    target: Optional[str] = None
    pass_no: Optional[int] = None


@dataclass
class Trace:
    entries: list = field(default_factory=list)

    def conclusions(self) -> list:
        """Replay: the values contributed by fired rules, in order."""
        return [e.conclusion for e in self.entries if e.conclusion is not None]

    def fired_rule_ids(self) -> list:
        return [e.rule_id for e in self.entries if e.fired]


@dataclass
class FitReport:
    changed: bool
    rule_id: Optional[str] = None
    attached_to: Optional[str] = None
    slot: Optional[str] = None
    verification: dict = field(default_factory=dict)
    reports: list = field(default_factory=list)  # sub-reports for multi-fix fits


def as_case(obj) -> Case:
    """Working copy used by the fixpoint loop; conclusions land on the copy."""
    if isinstance(obj, Case):
        return obj.clone()
    from ..kb import Individual

    if isinstance(obj, Individual):
        return _individual_to_case(obj, {})
    if isinstance(obj, dict):
        return Case(
            types=list(obj.get("types", [])),
            attrs={
                k: list(v) if isinstance(v, (list, tuple)) else [v]
                for k, v in obj.items()
                if k != "types"
            },
        )
    raise TypeError(f"cannot treat {obj!r} as a case")


def case_to_json(value):
    """Nested attribute maps with type tags; inverse of case_from_json."""
    if isinstance(value, Case):
        return {
            "types": list(value.types),
            "name": value.name,
            "attrs": {
                k: [case_to_json(v) for v in vs] for k, vs in value.attrs.items()
            },
        }
    if isinstance(value, ConclusionValue):
        return {
            "$conclusion": {
                "type": value.type_name,
                "fields": {k: case_to_json(v) for k, v in value.fields.items()},
            }
        }
    if isinstance(value, (int, float, str, bool)) or value is None:
        return value
    raise TypeError(f"cannot serialize case value {value!r}")


def case_from_json(node):
    if isinstance(node, dict) and "$conclusion" in node:
        body = node["$conclusion"]
        return ConclusionValue(
            body["type"], {k: case_from_json(v) for k, v in body["fields"].items()}
        )
    if isinstance(node, dict):
        return Case(
            types=list(node.get("types", [])),
            name=node.get("name"),
            attrs={
                k: [case_from_json(v) for v in (vs if isinstance(vs, list) else [vs])]
                for k, vs in node.get("attrs", {}).items()
            },
        )
    return node


def _individual_to_case(ind, memo: dict) -> Case:
    if ind.id in memo:
        return memo[ind.id]
    case = Case(types=sorted(c.name for c in ind.type_closure(include_roles=True)),
                name=ind.iri or ind.id)
    memo[ind.id] = case
    from ..kb import Individual

    for attr, values in ind.assertions.items():
        case.attrs[attr] = [
            _individual_to_case(v, memo) if isinstance(v, Individual) else v
            for v in values
        ]
    return case
