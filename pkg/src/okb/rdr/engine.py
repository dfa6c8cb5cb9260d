"""Classification, conflict-driven fitting and the multi-tree fixpoint."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..eql.ast import Lit, Path, Variable
from ..eql.evaluate import Evaluator
from ..eql.parser import parse_condition
from ..eql.values import resolve_path, scalar_of
from ..errors import (
    ConditionEvaluationError,
    ExpertAborted,
    ExpertConditionRejected,
    FixpointNotReached,
)
from .model import (
    STOP,
    Case,
    CaseQuery,
    ConclusionExpr,
    ConclusionValue,
    FitReport,
    GRDR,
    Rule,
    RuleTree,
    Target,
    Trace,
    TraceEntry,
    as_case,
)

CASE_VAR = "case"


def case_variable() -> Variable:
    return Variable(CASE_VAR)


def rule_fires(rule: Rule, case, kb=None) -> bool:
    if rule.condition is None:
        return True
    try:
        return Evaluator(kb).holds(rule.condition, {CASE_VAR: case})
    except Exception as e:  # surfaced with the offending rule attached
        raise ConditionEvaluationError(rule.id, e) from e


def instantiate(expr: ConclusionExpr, case, kb=None) -> ConclusionValue:
    fields = {}
    for name, fexpr in expr.fields.items():
        if isinstance(fexpr, Lit):
            fields[name] = fexpr.value
        else:
            fields[name] = scalar_of(
                resolve_path(fexpr, {CASE_VAR: case}), f"conclusion field {name!r}"
            )
    return ConclusionValue(expr.type_name, fields)


# --- classification ----------------------------------------------------------


def classify(tree: RuleTree, case, kb=None):
    """Run one tree over a case; returns (conclusions, trace)."""
    if tree.kind == "sc":
        return _classify_sc(tree, case, kb)
    return _classify_mc(tree, case, kb)


def _classify_sc(tree, case, kb):
    trace = Trace()
    node, path = tree.root, ()
    last_fired, last_entry = None, None
    while node is not None:
        fired = rule_fires(node, case, kb)
        entry = TraceEntry(node.id, fired, path=path, target=tree.target.attribute)
        trace.entries.append(entry)
        if fired:
            last_fired, last_entry = node, entry
            node, path = node.except_child, path + ("except",)
        else:
            node, path = node.alternative_child, path + ("alt",)
    conclusions = []
    if last_fired is not None and isinstance(last_fired.conclusion, ConclusionExpr):
        value = instantiate(last_fired.conclusion, case, kb)
        last_entry.conclusion = value
        conclusions.append(value)
    return conclusions, trace


def _classify_mc(tree, case, kb):
    trace = Trace()
    trace.entries.append(
        TraceEntry(tree.root.id, True, path=(), target=tree.target.attribute)
    )
    conclusions = []
    for child in tree.root.refinement_children:
        _mc_walk(tree, child, case, kb, ("refine",), trace, conclusions)
    unique = []
    for v in conclusions:
        if v not in unique:
            unique.append(v)
    return unique, trace


def _mc_walk(tree, rule, case, kb, path, trace, conclusions) -> bool:
    fired = rule_fires(rule, case, kb)
    entry = TraceEntry(rule.id, fired, path=path, target=tree.target.attribute)
    trace.entries.append(entry)
    if not fired:
        return False
    for child in rule.refinement_children:
        if _mc_walk(tree, child, case, kb, path + ("refine",), trace, conclusions):
            return True  # the fired refinement replaces this rule's conclusion
    if isinstance(rule.conclusion, ConclusionExpr):
        value = instantiate(rule.conclusion, case, kb)
        entry.conclusion = value
        conclusions.append(value)
    return True


# --- experts ------------------------------------------------------------------


@dataclass
class ExpertRequest:
    kind: str  # "new_rule" | "refinement"
    case: object
    target: Target
    fired_rule: Optional[Rule] = None
    cornerstone: Optional[object] = None
    wrong_conclusion: object = None
    expected_conclusion: object = None


@dataclass
class ExpertAnswer:
    condition_text: str
    conclusion_text: Optional[str] = None  # "STOP" or TypeName{...}; None reuses expected


class Expert:
    """Callback surface: given a conflict, supply a differentiating condition."""

    def prompt(self, request: ExpertRequest) -> ExpertAnswer:
        raise NotImplementedError


class ScriptedExpert(Expert):
    def __init__(self, answers):
        self.answers = list(answers)

    def prompt(self, request: ExpertRequest) -> ExpertAnswer:
        if not self.answers:
            raise ExpertAborted("scripted expert ran out of answers")
        nxt = self.answers.pop(0)
        if isinstance(nxt, ExpertAnswer):
            return nxt
        if isinstance(nxt, tuple):
            return ExpertAnswer(*nxt)
        return ExpertAnswer(nxt)


class ConsoleExpert(Expert):
    """Interactive terminal prompt; empty condition input aborts the fit."""

    def __init__(self, input_fn=input, print_fn=print):
        self.input_fn = input_fn
        self.print_fn = print_fn

    def prompt(self, request: ExpertRequest) -> ExpertAnswer:
        p = self.print_fn
        p(f"--- {request.kind} for target {request.target.attribute} "
          f"({request.target.type_name}) ---")
        p(f"case: {request.case!r}")
        if request.fired_rule is not None:
            p(f"fired rule {request.fired_rule.id}: "
              f"{request.fired_rule.condition_text}")
        if request.cornerstone is not None:
            p(f"cornerstone: {request.cornerstone!r}")
        if request.wrong_conclusion is not None:
            p(f"wrong conclusion: {request.wrong_conclusion!r}")
        if request.expected_conclusion is not None:
            p(f"expected: {request.expected_conclusion!r}")
        condition = self.input_fn(
            "condition (true on case"
            + (", false on cornerstone" if request.cornerstone is not None else "")
            + "): "
        ).strip()
        if not condition:
            raise ExpertAborted("no condition entered")
        conclusion = self.input_fn(
            "conclusion (TypeName{field=expr,...} or STOP, empty = expected): "
        ).strip()
        return ExpertAnswer(condition, conclusion or None)


# --- fitting ------------------------------------------------------------------


def _normalize_text(text: str) -> str:
    return " ".join(text.split())


def _parse_cond(text: str, kb=None):
    # rule conditions stay symbolic: class names resolve by name at
    # evaluation time, so modules execute against any case shape
    return parse_condition(text, {CASE_VAR: case_variable()}, kb=None)


def _verify_condition(cond, case, cornerstone, kb):
    true_on_case = Evaluator(kb).holds(cond, {CASE_VAR: case})
    true_on_cornerstone = None
    if cornerstone is not None:
        true_on_cornerstone = Evaluator(kb).holds(cond, {CASE_VAR: cornerstone})
    if not true_on_case:
        raise ExpertConditionRejected(
            "condition is not true on the case", true_on_case, true_on_cornerstone
        )
    if true_on_cornerstone:
        raise ExpertConditionRejected(
            "condition does not differentiate: it also holds on the cornerstone",
            true_on_case,
            true_on_cornerstone,
        )
    return {"true_on_case": true_on_case, "true_on_cornerstone": true_on_cornerstone}


def _conclusion_from_answer(answer: ExpertAnswer, expected, case, kb):
    from .module_io import parse_conclusion

    if answer.conclusion_text is None:
        if isinstance(expected, ConclusionValue):
            # literal fields reproducing the expected value
            return ConclusionExpr(
                expected.type_name, {k: Lit(v) for k, v in expected.fields.items()}
            )
        raise ExpertAborted("expert gave no conclusion and none can be derived")
    expr = parse_conclusion(answer.conclusion_text)
    if expr is STOP or expr is None:
        return expr
    if isinstance(expected, ConclusionValue):
        produced = instantiate(expr, case, kb)
        if produced != expected:
            raise ExpertConditionRejected(
                f"conclusion produces {produced!r}, expected {expected!r}", True, None
            )
    return expr


def _want_list(cq: CaseQuery) -> list:
    if cq.ground_truth is None:
        return []
    if isinstance(cq.ground_truth, (list, tuple, set)):
        return list(cq.ground_truth)
    return [cq.ground_truth]


def fit_case(tree: RuleTree, cq: CaseQuery, expert: Expert, kb=None) -> FitReport:
    """Classify; on a wrong conclusion, acquire a differentiating rule.

    New rules are verified true-on-case and, when refining a fired rule,
    false on that rule's cornerstone; the case becomes the new cornerstone.
    """
    if tree.kind == "sc":
        return _fit_sc(tree, cq, expert, kb)
    return _fit_mc(tree, cq, expert, kb)


def _fit_sc(tree, cq, expert, kb):
    want = _want_list(cq)
    want_value = want[0] if want else None
    conclusions, trace = classify(tree, cq.case, kb)
    got = conclusions[0] if conclusions else None
    if got == want_value:
        return FitReport(changed=False)

    fired = None
    for entry in trace.entries:
        if entry.fired:
            fired = tree.rule_by_id(entry.rule_id)
    is_root = fired is tree.root

    request = ExpertRequest(
        kind="new_rule" if is_root else "refinement",
        case=cq.case,
        target=tree.target,
        fired_rule=None if is_root else fired,
        cornerstone=None if is_root else fired.cornerstone,
        wrong_conclusion=got,
        expected_conclusion=want_value,
    )
    answer = expert.prompt(request)
    cond_text = _normalize_text(answer.condition_text)
    cond = _parse_cond(cond_text, kb)
    verification = _verify_condition(cond, cq.case, request.cornerstone, kb)
    conclusion = _conclusion_from_answer(answer, want_value, cq.case, kb)

    rule = Rule(
        id=tree.next_id(),
        condition=cond,
        condition_text=cond_text,
        conclusion=conclusion,
        cornerstone=as_case(cq.case),
        cornerstone_conclusion=want_value,
    )
    if is_root:
        parent, slot = _sc_append_alternative(tree.root, rule)
    elif fired.except_child is None:
        fired.except_child = rule
        parent, slot = fired, "except"
    else:
        parent, slot = _sc_append_alternative(fired, rule)

    after, _ = classify(tree, cq.case, kb)
    got_after = after[0] if after else None
    if got_after != want_value:
        raise ExpertConditionRejected(
            f"after the fix the case classifies as {got_after!r}, "
            f"expected {want_value!r}",
            True,
            verification["true_on_cornerstone"],
        )
    return FitReport(True, rule.id, parent.id, slot, verification)


def _sc_append_alternative(anchor: Rule, rule: Rule):
    """Attach under anchor: its except slot if free, else the end of the
    except child's alternative chain."""
    if anchor.except_child is None:
        anchor.except_child = rule
        return anchor, "except"
    node = anchor.except_child
    while node.alternative_child is not None:
        node = node.alternative_child
    node.alternative_child = rule
    return node, "alt"


def _fit_mc(tree, cq, expert, kb):
    want = _want_list(cq)
    conclusions, trace = classify(tree, cq.case, kb)
    reports = []

    # spurious contributions: refine (or stop) the rule that made them
    for entry in list(trace.entries):
        value = entry.conclusion
        if value is None or value in want:
            continue
        contributor = tree.rule_by_id(entry.rule_id)
        request = ExpertRequest(
            kind="refinement",
            case=cq.case,
            target=tree.target,
            fired_rule=contributor,
            cornerstone=contributor.cornerstone,
            wrong_conclusion=value,
            expected_conclusion=want,
        )
        answer = expert.prompt(request)
        cond_text = _normalize_text(answer.condition_text)
        cond = _parse_cond(cond_text, kb)
        verification = _verify_condition(cond, cq.case, contributor.cornerstone, kb)
        if answer.conclusion_text is None or answer.conclusion_text.strip() == "STOP":
            conclusion = STOP
            recorded = None
        else:
            conclusion = _conclusion_from_answer(answer, None, cq.case, kb)
            recorded = instantiate(conclusion, cq.case, kb)
        rule = Rule(
            id=tree.next_id(),
            condition=cond,
            condition_text=cond_text,
            conclusion=conclusion,
            cornerstone=as_case(cq.case),
            cornerstone_conclusion=recorded,
            suppressed_conclusion=value if conclusion is STOP else None,
        )
        contributor.refinement_children.append(rule)
        reports.append(FitReport(True, rule.id, contributor.id, "refine", verification))

    # missing conclusions: new top-level rules
    produced_now, _ = classify(tree, cq.case, kb)
    for value in want:
        if value in produced_now:
            continue
        request = ExpertRequest(
            kind="new_rule",
            case=cq.case,
            target=tree.target,
            expected_conclusion=value,
        )
        answer = expert.prompt(request)
        cond_text = _normalize_text(answer.condition_text)
        cond = _parse_cond(cond_text, kb)
        verification = _verify_condition(cond, cq.case, None, kb)
        conclusion = _conclusion_from_answer(answer, value, cq.case, kb)
        rule = Rule(
            id=tree.next_id(),
            condition=cond,
            condition_text=cond_text,
            conclusion=conclusion,
            cornerstone=as_case(cq.case),
            cornerstone_conclusion=value,
        )
        tree.root.refinement_children.append(rule)
        reports.append(FitReport(True, rule.id, tree.root.id, "refine", verification))

    after, _ = classify(tree, cq.case, kb)
    if sorted(map(repr, after)) != sorted(map(repr, want)):
        raise ExpertConditionRejected(
            f"after fitting, conclusions are {after!r}, expected {want!r}", True, None
        )
    if not reports:
        return FitReport(changed=False)
    head = reports[0]
    return FitReport(True, head.rule_id, head.attached_to, head.slot,
                     head.verification, reports)


def check_cornerstones(tree: RuleTree, kb=None) -> list:
    """Past preservation: every cornerstone still gets its recorded conclusion."""
    regressions = []
    for rule in tree.rules():
        if rule.cornerstone is None:
            continue
        got, _ = classify(tree, rule.cornerstone, kb)
        if rule.suppressed_conclusion is not None:
            if rule.suppressed_conclusion in got:
                regressions.append((rule.id, "suppressed value reappeared"))
            continue
        if tree.kind == "sc":
            got_value = got[0] if got else None
            if got_value != rule.cornerstone_conclusion:
                regressions.append((rule.id, f"now classifies as {got_value!r}"))
        else:
            if rule.cornerstone_conclusion is not None and (
                rule.cornerstone_conclusion not in got
            ):
                regressions.append((rule.id, "recorded conclusion lost"))
    return regressions


# --- multi-tree fixpoint -----------------------------------------------------


@dataclass
class GrdrResult:
    conclusions: dict
    trace: Trace
    case: Case
    passes: int = 0

    def all_values(self) -> list:
        out = []
        for values in self.conclusions.values():
            out.extend(values)
        return out


def run_grdr(grdr: GRDR, case, kb=None) -> GrdrResult:
    """Classify every tree repeatedly, asserting conclusions onto the case,
    until a full pass adds nothing. Conclusions only accumulate."""
    work = as_case(case)
    trace = Trace()
    added: dict = {attr: [] for attr in grdr.trees}
    for pass_no in range(1, grdr.max_iterations + 1):
        changed = False
        for attr, tree in grdr.trees.items():
            conclusions, t = classify(tree, work, kb)
            for entry in t.entries:
                entry.pass_no = pass_no
                trace.entries.append(entry)
            for value in conclusions:
                existing = work.attrs.setdefault(attr, [])
                if value not in existing:
                    existing.append(value)
                    added[attr].append(value)
                    changed = True
        if not changed:
            return GrdrResult(added, trace, work, pass_no)
    raise FixpointNotReached(grdr.max_iterations)


def fit_grdr(grdr: GRDR, cq: CaseQuery, expert: Expert, kb=None) -> FitReport:
    """Fit the tree responsible for the case query's target, with the case
    enriched by the other trees' inferences first."""
    tree = grdr.trees.get(cq.attribute)
    if tree is None:
        kind = "sc" if cq.mutually_exclusive else "mc"
        tree = RuleTree(
            kind=kind, target=Target(cq.attribute, cq.type_name, cq.mutually_exclusive)
        )
        grdr.add_tree(tree)
    work = as_case(cq.case)
    for attr, other in grdr.trees.items():
        if attr == cq.attribute:
            continue
        values, _ = classify(other, work, kb)
        for v in values:
            existing = work.attrs.setdefault(attr, [])
            if v not in existing:
                existing.append(v)
    enriched = CaseQuery(work, cq.attribute, cq.type_name, cq.mutually_exclusive,
                         cq.ground_truth)
    return fit_case(tree, enriched, expert, kb)
