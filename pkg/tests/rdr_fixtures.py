"""Shared rule-tree fixtures: furniture and event scenarios, auto-expert
driven random fitting streams for past-preservation and round-trip checks."""

from __future__ import annotations

import random

from okb.rdr import (
    GRDR,
    Case,
    CaseQuery,
    ConclusionValue,
    Expert,
    ExpertAnswer,
    RuleTree,
    Target,
    fit_case,
)

LABELS = ("Low", "Mid", "High", "Peak")


def furniture_cases():
    drawer_case = Case(
        types=["FixedConnection"],
        attrs={
            "child": [Case(types=["Handle", "PhysicalBody"])],
            "parent": [Case(types=["PhysicalBody"], attrs={"size": [0.4]})],
        },
        name="drawer-connection",
    )
    door_case = Case(
        types=["FixedConnection"],
        attrs={
            "child": [Case(types=["Handle", "PhysicalBody"])],
            "parent": [Case(types=["PhysicalBody"], attrs={"size": [1.5]})],
        },
        name="door-connection",
    )
    return drawer_case, door_case


def event_case(acceleration: float, supported: bool = True) -> Case:
    body = Case(types=["PhysicalBody"], attrs={"acceleration": [acceleration]})
    other = Case(types=(["Support", "PhysicalBody"] if supported else ["PhysicalBody"]))
    return Case(
        types=["LossOfContactEvent", "Event"],
        attrs={"body": [body], "other_body": [other]},
        name="event",
    )


def event_grdr() -> GRDR:
    """One multi-conclusion tree chaining loss-of-support to pick-up, with a
    falling refinement guarded by gravity acceleration."""
    from okb.rdr.module_io import load_rule_module

    text = "\n".join(
        [
            "format_version=1",
            "kind=grdr",
            "max_iterations=100",
            "",
            "tree kind=mc target=inferred type=EventInference mutually_exclusive=false",
            "rule r0 when true conclude NONE",
            "rule r1 parent=r0 slot=refine when and(contains(case.types, "
            "LossOfContactEvent), contains(case.other_body.types, Support)) "
            "conclude LossOfSupportEvent{body=case.body, support=case.other_body}",
            "rule r2 parent=r1 slot=refine when exists(v in case.inferred, "
            "contains(v.types, LossOfSupportEvent)) conclude PickUpEvent{body=case.body}",
            "rule r3 parent=r2 slot=refine when case.body.acceleration == 9.81 "
            "conclude FallingEvent{body=case.body}",
        ]
    ) + "\n"
    return load_rule_module(text)


# --- random streams -----------------------------------------------------------


def random_case(rng: random.Random) -> Case:
    return Case(
        types=["Sample"],
        attrs={"f1": [rng.randint(0, 4)], "f2": [rng.randint(0, 4)]},
    )


def sc_truth(case: Case) -> ConclusionValue:
    f1 = case.attr_values("f1")[0]
    f2 = case.attr_values("f2")[0]
    if f1 >= 3:
        return ConclusionValue("High" if f2 >= 3 else "Mid", {})
    return ConclusionValue("Peak" if f1 + f2 == 0 else "Low", {})


def mc_truth(case: Case) -> list:
    f1 = case.attr_values("f1")[0]
    f2 = case.attr_values("f2")[0]
    out = []
    if f1 >= 3:
        out.append(ConclusionValue("Big", {}))
    if (f1 + f2) % 2 == 0:
        out.append(ConclusionValue("EvenSum", {}))
    return out


class AutoExpert(Expert):
    """Derives differentiating conditions mechanically from the case attrs:
    pin every attribute for new rules, pin the first attribute that differs
    from the cornerstone for refinements."""

    def prompt(self, request):
        case = request.case
        f1 = case.attr_values("f1")[0]
        f2 = case.attr_values("f2")[0]
        if request.kind == "new_rule":
            cond = f"and(case.f1 == {f1}, case.f2 == {f2})"
            return ExpertAnswer(cond, _conclude(request.expected_conclusion))
        corner = request.cornerstone
        if corner is not None:
            for attr, val in (("f1", f1), ("f2", f2)):
                if corner.attr_values(attr)[0] != val:
                    cond = f"case.{attr} == {val}"
                    break
            else:
                cond = f"and(case.f1 == {f1}, case.f2 == {f2})"
        else:
            cond = f"and(case.f1 == {f1}, case.f2 == {f2})"
        if request.expected_conclusion is None or (
            isinstance(request.expected_conclusion, list)
            and not request.expected_conclusion
        ):
            return ExpertAnswer(cond, "STOP")
        expected = request.expected_conclusion
        if isinstance(expected, list):
            return ExpertAnswer(cond, "STOP")
        return ExpertAnswer(cond, _conclude(expected))


def _conclude(value) -> str:
    return f"{value.type_name}{{}}"


def fit_random_stream(kind: str, n_cases: int, seed: int):
    """Fit a fresh tree on a random case stream; returns (tree, cases seen)."""
    rng = random.Random(seed)
    truth = sc_truth if kind == "sc" else mc_truth
    tree = RuleTree(kind=kind, target=Target("label", "Label", kind == "sc"))
    expert = AutoExpert()
    seen = []
    for _ in range(n_cases):
        case = random_case(rng)
        cq = CaseQuery(case, "label", "Label", kind == "sc", truth(case))
        fit_case(tree, cq, expert)
        seen.append(case)
    return tree, seen
