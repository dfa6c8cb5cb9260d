"""Portable rule-module format: save and load trees as structured text.

Modules carry everything needed to classify (structure, conditions,
conclusions) and nothing tied to the fitting engine; a loaded module
executes without it. One rule per line, pre-order, nesting expressed via
parent/slot references:

    format_version=1
    kind=sc
    target=container_type
    type=PhysicalObject
    mutually_exclusive=true

    rule r0 when true conclude NONE
    rule r1 parent=r0 slot=except when contains(case.child.types, Handle) conclude Drawer{container=case.parent}
    rule r2 parent=r1 slot=except when case.parent.size > 1 conclude Door{body=case.parent}

A grdr module wraps several ``tree ...`` sections under one header.
"""

from __future__ import annotations

import re

from ..eql.parser import _Parser, parse_condition
from ..eql.printer import _Printer
from ..errors import ModuleParseError, UnknownTargetType
from .engine import CASE_VAR, case_variable
from .model import GRDR, STOP, ConclusionExpr, Rule, RuleTree, Target

_RULE_RE = re.compile(
    r"^rule (\S+)(?: parent=(\S+) slot=(except|alt|refine))? when (.*) conclude (.*)$"
)
_TREE_RE = re.compile(
    r"^tree kind=(\S+) target=(\S+) type=(\S+) mutually_exclusive=(true|false)$"
)


def print_conclusion(expr) -> str:
    if expr is STOP:
        return "STOP"
    if expr is None:
        return "NONE"
    pr = _Printer({CASE_VAR})
    inner = ", ".join(f"{k}={pr.operand(v)}" for k, v in expr.fields.items())
    return f"{expr.type_name}{{{inner}}}"


def parse_conclusion(text: str, kb=None):
    text = text.strip()
    if text == "STOP":
        return STOP
    if text == "NONE":
        return None
    p = _Parser(text, kb)
    p.scope = {CASE_VAR: case_variable()}
    name = p.expect("ident").value
    p.expect("{")
    fields = {}
    if p.peek().kind != "}":
        while True:
            fname = p.expect("ident").value
            p.expect("=")
            fields[fname] = p.parse_operand()
            if p.peek().kind == ",":
                p.next()
                continue
            break
    p.expect("}")
    p.expect("eof")
    return ConclusionExpr(name, fields)


# --- saving --------------------------------------------------------------------


def _tree_header(tree: RuleTree) -> list:
    flag = "true" if tree.target.mutually_exclusive else "false"
    return [
        f"kind={tree.kind}",
        f"target={tree.target.attribute}",
        f"type={tree.target.type_name}",
        f"mutually_exclusive={flag}",
    ]


def _rule_lines(tree: RuleTree) -> list:
    lines = []

    def walk(rule: Rule, parent, slot):
        head = f"rule {rule.id}"
        if parent is not None:
            head += f" parent={parent.id} slot={slot}"
        head += f" when {rule.condition_text} conclude {print_conclusion(rule.conclusion)}"
        lines.append(head)
        if rule.except_child is not None:
            walk(rule.except_child, rule, "except")
        for child in rule.refinement_children:
            walk(child, rule, "refine")
        if rule.alternative_child is not None:
            walk(rule.alternative_child, rule, "alt")

    walk(tree.root, None, None)
    return lines


def save_rule_module(obj) -> str:
    """Emit the portable text form of a tree or a grdr collection."""
    if isinstance(obj, RuleTree):
        lines = ["format_version=1"] + _tree_header(obj) + [""] + _rule_lines(obj)
        return "\n".join(lines) + "\n"
    if isinstance(obj, GRDR):
        lines = ["format_version=1", "kind=grdr", f"max_iterations={obj.max_iterations}"]
        for tree in obj.trees.values():
            lines.append("")
            flag = "true" if tree.target.mutually_exclusive else "false"
            lines.append(
                f"tree kind={tree.kind} target={tree.target.attribute} "
                f"type={tree.target.type_name} mutually_exclusive={flag}"
            )
            lines.extend(_rule_lines(tree))
        return "\n".join(lines) + "\n"
    raise TypeError(f"cannot serialize {obj!r}")


# --- loading --------------------------------------------------------------------


def load_rule_module(text: str, kb=None):
    """Rebuild a tree or grdr from module text; executable by classify alone."""
    lines = text.splitlines()
    header = {}
    i = 0
    while i < len(lines):
        line = lines[i].strip()
        if not line or line.startswith("rule ") or line.startswith("tree "):
            break
        if "=" not in line:
            raise ModuleParseError(i + 1, f"expected key=value header, got {line!r}")
        key, _, value = line.partition("=")
        header[key.strip()] = value.strip()
        i += 1

    if header.get("format_version") != "1":
        raise ModuleParseError(1, "missing or unsupported format_version")
    kind = header.get("kind")
    if kind in ("sc", "mc"):
        tree = _new_tree(kind, header.get("target"), header.get("type"),
                         header.get("mutually_exclusive"), 1)
        _load_rules(tree, lines, i, len(lines), kb)
        return tree
    if kind == "grdr":
        grdr = GRDR(max_iterations=int(header.get("max_iterations", "100")))
        while i < len(lines):
            line = lines[i].strip()
            if not line:
                i += 1
                continue
            m = _TREE_RE.match(line)
            if not m:
                raise ModuleParseError(i + 1, f"expected a tree section, got {line!r}")
            tree = _new_tree(m.group(1), m.group(2), m.group(3), m.group(4), i + 1)
            end = i + 1
            while end < len(lines) and not lines[end].strip().startswith("tree "):
                end += 1
            _load_rules(tree, lines, i + 1, end, kb)
            grdr.add_tree(tree)
            i = end
        return grdr
    raise UnknownTargetType(f"unknown module kind {kind!r}")


def _new_tree(kind, target, type_name, exclusive, lineno) -> RuleTree:
    if kind not in ("sc", "mc"):
        raise UnknownTargetType(f"unknown tree kind {kind!r}")
    if not target or not type_name:
        raise UnknownTargetType("module header lacks target or type")
    tree = RuleTree(
        kind=kind,
        target=Target(target, type_name, exclusive == "true"),
    )
    tree.root = None  # replaced by the module's own root rule
    return tree


def _load_rules(tree: RuleTree, lines, start, end, kb) -> None:
    by_id = {}
    for lineno in range(start, end):
        line = lines[lineno].strip()
        if not line or line.startswith("#"):
            continue
        m = _RULE_RE.match(line)
        if not m:
            raise ModuleParseError(lineno + 1, f"malformed rule line: {line!r}")
        rule_id, parent_id, slot, cond_text, conc_text = m.groups()
        if rule_id in by_id:
            raise ModuleParseError(lineno + 1, f"duplicate rule id {rule_id!r}")
        cond_text = cond_text.strip()
        try:
            # symbolic parse: modules execute without a class registry
            condition = (
                None
                if cond_text == "true"
                else parse_condition(cond_text, {CASE_VAR: case_variable()})
            )
            conclusion = parse_conclusion(conc_text)
        except Exception as e:
            raise ModuleParseError(lineno + 1, str(e)) from e
        rule = Rule(
            id=rule_id,
            condition=condition,
            condition_text=cond_text,
            conclusion=conclusion,
        )
        by_id[rule_id] = rule
        tree.note_loaded_id(rule_id)
        if parent_id is None:
            if tree.root is not None:
                raise ModuleParseError(lineno + 1, "second parentless rule")
            tree.root = rule
            continue
        parent = by_id.get(parent_id)
        if parent is None:
            raise ModuleParseError(lineno + 1, f"unknown parent {parent_id!r}")
        if slot == "except":
            if parent.except_child is not None:
                raise ModuleParseError(lineno + 1, f"{parent_id} already has an except child")
            parent.except_child = rule
        elif slot == "alt":
            if parent.alternative_child is not None:
                raise ModuleParseError(lineno + 1, f"{parent_id} already has an alternative")
            parent.alternative_child = rule
        else:
            parent.refinement_children.append(rule)
    if tree.root is None:
        raise ModuleParseError(start + 1, "module has no root rule")
