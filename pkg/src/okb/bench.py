"""Desk-scale evaluation harness.

Generates a seeded university knowledge base (roles for students and
professors, a transitive part-of chain over organizations, a
symmetric-transitive collaboration relation, cardinality-axiom classes),
runs a fixed suite of queries against both the in-memory evaluator and the
persisted store, checks that the two backends return identical entity-key
sets, and reports timings with a geometric mean.
"""

from __future__ import annotations

import json
import math
import random
import statistics
import time
from dataclasses import dataclass, field

from .eql import evaluate, parse_query
from .errors import BackendDisagreement
from .kb import Individual, KnowledgeBase
from .ontology import import_abox, import_tbox, materialize
from .orm import SqliteStore, derive_schema, save_graph


@dataclass(frozen=True)
class GenParams:
    universities: int = 1
    departments: int = 3
    students: int = 25
    professors: int = 5
    courses: int = 8
    research_groups: int = 2
    max_courses_per_student: int = 3
    peer_group: int = 4

    def validate(self):
        for name, v in self.__dict__.items():
            if v < 0:
                raise ValueError(f"{name} must be nonnegative")


PERF_PARAMS = GenParams(
    universities=1,
    departments=8,
    students=520,
    professors=40,
    courses=60,
    research_groups=2,
)


def _tbox() -> dict:
    return {
        "classes": [
            {"name": "Organization"},
            {"name": "University", "superclasses": ["Organization"]},
            {"name": "Department", "superclasses": ["Organization"]},
            {"name": "ResearchGroup", "superclasses": ["Organization"]},
            {"name": "Course"},
            {"name": "Person"},
            {"name": "Student", "superclasses": ["Person"], "role_for": "Person"},
            {"name": "Professor", "superclasses": ["Person"], "role_for": "Person"},
            {
                "name": "LeisureStudent",
                "superclasses": ["Student"],
                "role_for": "Person",
                "equivalent_to": {
                    "intersection_of": [
                        {"class": "Student"},
                        {"max_qualified_cardinality": {
                            "n": 1, "property": "takesCourse",
                            "expr": {"class": "Course"}}},
                    ]
                },
            },
            {
                "name": "BusyStudent",
                "superclasses": ["Student"],
                "role_for": "Person",
                "equivalent_to": {
                    "intersection_of": [
                        {"class": "Student"},
                        {"min_qualified_cardinality": {
                            "n": 3, "property": "takesCourse",
                            "expr": {"class": "Course"}}},
                    ]
                },
            },
        ],
        "properties": [
            {"name": "age", "kind": "data", "domain": "Person", "range": "integer",
             "characteristics": ["functional"]},
            {"name": "name", "kind": "data", "domain": "Person", "range": "string",
             "characteristics": ["functional"]},
            {"name": "scores", "kind": "data", "domain": "Student", "range": "integer"},
            {"name": "subOrganizationOf", "kind": "object", "domain": "Organization",
             "range": "Organization", "characteristics": ["transitive"]},
            {"name": "memberOf", "kind": "object", "domain": "Person",
             "range": "Organization"},
            {"name": "takesCourse", "kind": "object", "domain": "Student",
             "range": "Course"},
            {"name": "teacherOf", "kind": "object", "domain": "Professor",
             "range": "Course"},
            {"name": "taughtBy", "kind": "object", "domain": "Course",
             "range": "Professor", "inverse_of": "teacherOf"},
            {"name": "worksFor", "kind": "object", "domain": "Professor",
             "range": "Department"},
            {"name": "headOf", "kind": "object", "domain": "Professor",
             "range": "Department", "characteristics": ["functional"]},
            {"name": "advisor", "kind": "object", "domain": "Student",
             "range": "Professor"},
            {"name": "collaboratesWith", "kind": "object", "domain": "Person",
             "range": "Person", "characteristics": ["symmetric", "transitive"]},
        ],
    }


def generate_university(params: GenParams, seed: int) -> dict:
    """Deterministic document: identical (params, seed) give identical bytes."""
    params.validate()
    rng = random.Random(seed)
    doc = _tbox()
    individuals = []

    def add(iri, types, **assertions):
        individuals.append(
            {"iri": iri, "types": types,
             "assertions": {k: v for k, v in assertions.items() if v not in (None, [])}}
        )
        return iri

    ref = lambda iri: {"ref": iri}

    for u in range(params.universities):
        uni = add(f"u:u{u}", ["University"])
        for d in range(params.departments):
            dept = add(f"u:u{u}_d{d}", ["Department"],
                       subOrganizationOf=[ref(uni)])
            for g in range(params.research_groups):
                add(f"u:u{u}_d{d}_g{g}", ["ResearchGroup"],
                    subOrganizationOf=[ref(dept)])
            courses = [
                add(f"u:u{u}_d{d}_c{c}", ["Course"])
                for c in range(params.courses)
            ]
            profs = []
            for p in range(params.professors):
                teacher_courses = []
                if courses:
                    k = 1 + (p % 2)
                    start = (p * 3) % len(courses)
                    teacher_courses = [
                        courses[(start + i) % len(courses)] for i in range(k)
                    ]
                profs.append(
                    add(
                        f"u:u{u}_d{d}_p{p}", ["Professor"],
                        age=[35 + (p * 7) % 30],
                        name=[f"prof {u}-{d}-{p}"],
                        worksFor=[ref(dept)],
                        headOf=[ref(dept)] if p == 0 else [],
                        teacherOf=[ref(c) for c in dict.fromkeys(teacher_courses)],
                    )
                )
            students = []
            for s in range(params.students):
                n_courses = 0
                if courses and params.max_courses_per_student > 0:
                    n_courses = 1 + rng.randrange(params.max_courses_per_student)
                taken = rng.sample(courses, min(n_courses, len(courses)))
                students.append(
                    add(
                        f"u:u{u}_d{d}_s{s}", ["Student"],
                        age=[18 + (s % 13)],
                        name=[f"student {u}-{d}-{s}"],
                        memberOf=[ref(dept)],
                        advisor=[ref(profs[s % len(profs)])] if profs else [],
                        takesCourse=[ref(c) for c in taken],
                        scores=[40 + (s * 17) % 60, (s * 31) % 100, (s * 13) % 100],
                    )
                )
            # collaboration chains inside fixed-size peer groups; the closure
            # later relates every pair within a group
            for i in range(0, len(students) - 1):
                if (i + 1) % params.peer_group != 0:
                    add_to = individuals[-params.students + i]
                    add_to["assertions"].setdefault("collaboratesWith", []).append(
                        ref(students[i + 1])
                    )
    doc["individuals"] = individuals
    return doc


def doc_bytes(doc: dict) -> bytes:
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()


def expected_individual_count(params: GenParams) -> int:
    per_dept = 1 + params.research_groups + params.courses + params.professors \
        + params.students
    return params.universities * (1 + params.departments * per_dept)


def build_kb(doc: dict) -> KnowledgeBase:
    kb = KnowledgeBase()
    import_tbox(doc, kb)
    import_abox(doc, kb)
    return kb


# --- the query suite ------------------------------------------------------------


@dataclass
class BenchQuery:
    name: str
    text: str
    store_fn: object
    description: str = ""


def _uid(store, ctx, iri):
    return ctx["iri_pk"]["person"].get(iri) or ctx["iri_pk"]["organization"].get(iri)


class _StoreCtx:
    """Row caches and iri->pk maps for the hand-written store-side queries."""

    def __init__(self, store, schema):
        self.store = store
        self.schema = schema
        self.person = {r["id"]: r for r in store.select("person")}
        self.org = {r["id"]: r for r in store.select("organization")}
        self.course = {r["id"]: r for r in store.select("course")}
        self.student_roles = store.select("student")
        self.professor_roles = store.select("professor")
        self.takes = store.select("student_takes_course")
        self.teaches = store.select("professor_teacher_of")
        self.collab = store.select("person_collaborates_with")
        self.suborg = store.select("organization_sub_organization_of")
        self.member = store.select("person_member_of")
        self.scores = store.select("student_scores")
        self.iri = {}
        for table, rows in (("person", self.person), ("organization", self.org),
                            ("course", self.course)):
            self.iri[table] = {r["iri"]: r["id"] for r in rows.values() if r["iri"]}

    def uid(self, table, pk):
        row = {"person": self.person, "organization": self.org,
               "course": self.course}[table].get(pk)
        return row["uid"] if row else None

    def role_holders(self, kind):
        return [r for r in self.student_roles if r["kind"] == kind] if kind.endswith(
            "Student") or kind == "Student" else [
            r for r in self.professor_roles if r["kind"] == kind
        ]

    def student_courses(self, role_pk):
        return [r["target_id"] for r in self.takes if r["owner_id"] == role_pk]


def suite() -> list:
    """Fourteen analogue queries over the generated vocabulary."""
    return [
        BenchQuery(
            "Q1", "an(entity(p:Person).where(p.age == 25))",
            _q1, "person scan on a scalar attribute",
        ),
        BenchQuery(
            "Q2", "a(set_of(s:Student, c:Course).where(contains(s.takesCourse, c)))",
            _q2, "enrollment join",
        ),
        BenchQuery(
            "Q3", 'the(entity(p:Professor).where(contains(p.headOf, @"u:u0_d0")))',
            _q3, "uniqueness of a department head",
        ),
        BenchQuery(
            "Q4", "an(entity(s:LeisureStudent))",
            _q4, "axiom-inferred role membership",
        ),
        BenchQuery(
            "Q5",
            'an(entity(s:Student).where(for_all(c in s.takesCourse, '
            'contains(c.taughtBy, @"u:u0_d0_p0"))))',
            _q5, "universal quantification over own course list",
        ),
        BenchQuery(
            "Q6",
            "an(entity(p:Professor).where(not(exists(d:Department, "
            "contains(p.headOf, d)))))",
            _q6, "negation as failure",
        ),
        BenchQuery(
            "Q7",
            'an(entity(o:Organization).where(contains(o.subOrganizationOf, @"u:u0")))',
            _q7, "transitive closure over part-of",
        ),
        BenchQuery(
            "Q8",
            'an(entity(p:Person).where(contains(p.collaboratesWith, @"u:u0_d0_s0")))',
            _q8, "symmetric-transitive component membership",
        ),
        BenchQuery(
            "Q9",
            "an(entity(p:Person).where(or(p.age <= 19, count(p.teacherOf) >= 2)))",
            _q9, "union of conjunctive queries",
        ),
        BenchQuery(
            "Q10", "count(entity(s:Student).where(count(s.takesCourse) >= 2))",
            _q10, "count processor with aggregate condition",
        ),
        BenchQuery(
            "Q11",
            'sum(entity(p:Professor).where(contains(p.worksFor, @"u:u0_d0")), p.age)',
            _q11, "sum processor",
        ),
        BenchQuery(
            "Q12",
            'an(entity(s:Student).where(count(x in s.takesCourse where '
            'contains(x.taughtBy, @"u:u0_d0_p0")) >= 1))',
            _q12, "qualified cardinality in a condition",
        ),
        BenchQuery(
            "Q13", "an(entity(s:Student).where(s.scores[0] >= 70))",
            _q13, "index step into an ordered collection",
        ),
        BenchQuery(
            "Q14",
            "a(set_of(s:Student, c:Course).where(not(contains(s.takesCourse, c))))",
            _q14, "large cross product with negation",
        ),
    ]


def _q1(ctx):
    return {(r["uid"],) for r in ctx.person.values() if r.get("age") == 25}


def _q2(ctx):
    holder = {r["id"]: r["holder_id"] for r in ctx.student_roles
              if r["kind"] == "Student"}
    out = set()
    for row in ctx.takes:
        if row["owner_id"] in holder:
            out.add((ctx.uid("person", holder[row["owner_id"]]),
                     ctx.uid("course", row["target_id"])))
    return out


def _q3(ctx):
    dept = ctx.iri["organization"].get("u:u0_d0")
    return {
        (ctx.uid("person", r["holder_id"]),)
        for r in ctx.professor_roles
        if r["kind"] == "Professor" and r.get("headOf_id") == dept
        and dept is not None
    }


def _q4(ctx):
    return {
        (ctx.uid("person", r["holder_id"]),)
        for r in ctx.student_roles
        if r["kind"] == "LeisureStudent"
    }


def _q5(ctx):
    prof = ctx.iri["person"].get("u:u0_d0_p0")
    if prof is None:
        return set()
    taught = {
        r["owner_id"]
        for r in ctx.store.select("course_taught_by")
        if r["target_id"] == prof
    }
    out = set()
    for role in ctx.student_roles:
        if role["kind"] != "Student":
            continue
        courses = ctx.student_courses(role["id"])
        if all(c in taught for c in courses):
            out.add((ctx.uid("person", role["holder_id"]),))
    return out


def _q6(ctx):
    return {
        (ctx.uid("person", r["holder_id"]),)
        for r in ctx.professor_roles
        if r["kind"] == "Professor" and r.get("headOf_id") is None
    }


def _q7(ctx):
    uni = ctx.iri["organization"].get("u:u0")
    return {
        (ctx.uid("organization", r["owner_id"]),)
        for r in ctx.suborg
        if r["target_id"] == uni
    }


def _q8(ctx):
    s0 = ctx.iri["person"].get("u:u0_d0_s0")
    return {
        (ctx.uid("person", r["owner_id"]),)
        for r in ctx.collab
        if r["target_id"] == s0
    }


def _q9(ctx):
    young = {pk for pk, r in ctx.person.items() if (r.get("age") or 99) <= 19}
    busy_profs = {}
    for r in ctx.teaches:
        busy_profs[r["owner_id"]] = busy_profs.get(r["owner_id"], 0) + 1
    prolific = {
        role["holder_id"]
        for role in ctx.professor_roles
        if role["kind"] == "Professor" and busy_profs.get(role["id"], 0) >= 2
    }
    return {(ctx.uid("person", pk),) for pk in young | prolific}


def _q10(ctx):
    n = 0
    for role in ctx.student_roles:
        if role["kind"] == "Student" and len(ctx.student_courses(role["id"])) >= 2:
            n += 1
    return {(n,)}


def _q11(ctx):
    dept = ctx.iri["organization"].get("u:u0_d0")
    works = {
        r["owner_id"]
        for r in ctx.store.select("professor_works_for")
        if r["target_id"] == dept
    }
    total = 0
    for role in ctx.professor_roles:
        if role["kind"] == "Professor" and role["id"] in works:
            total += ctx.person[role["holder_id"]].get("age") or 0
    return {(total,)}


def _q12(ctx):
    prof = ctx.iri["person"].get("u:u0_d0_p0")
    if prof is None:
        return set()
    taught = {
        r["owner_id"]
        for r in ctx.store.select("course_taught_by")
        if r["target_id"] == prof
    }
    out = set()
    for role in ctx.student_roles:
        if role["kind"] != "Student":
            continue
        if sum(1 for c in ctx.student_courses(role["id"]) if c in taught) >= 1:
            out.add((ctx.uid("person", role["holder_id"]),))
    return out


def _q13(ctx):
    out = set()
    first_score = {}
    for r in sorted(ctx.scores, key=lambda r: (r["owner_id"], r["id"])):
        first_score.setdefault(r["owner_id"], r["target_value"])
    for role in ctx.student_roles:
        if role["kind"] == "Student" and first_score.get(role["id"], -1) >= 70:
            out.add((ctx.uid("person", role["holder_id"]),))
    return out


def _q14(ctx):
    holders = {r["id"]: r["holder_id"] for r in ctx.student_roles
               if r["kind"] == "Student"}
    enrolled = {
        (holders[r["owner_id"]], r["target_id"])
        for r in ctx.takes
        if r["owner_id"] in holders
    }
    out = set()
    for role_pk, holder in holders.items():
        for course_pk in ctx.course:
            if (holder, course_pk) not in enrolled:
                out.add((ctx.uid("person", holder), ctx.uid("course", course_pk)))
    return out


# --- runner -----------------------------------------------------------------------


@dataclass
class QueryResult:
    name: str
    description: str
    count: int
    eql_ms: float
    eql_std: float
    store_ms: float
    store_std: float
    agree: bool


@dataclass
class BenchReport:
    runs: int
    rows: list = field(default_factory=list)
    geometric_mean_eql: float = 0.0
    geometric_mean_store: float = 0.0

    @property
    def all_agree(self) -> bool:
        return all(r.agree for r in self.rows)

    def to_json_lines(self) -> str:
        out = []
        for r in self.rows:
            out.append(json.dumps({
                "query": r.name, "results": r.count,
                "eql_ms": round(r.eql_ms, 3), "eql_std": round(r.eql_std, 3),
                "store_ms": round(r.store_ms, 3), "store_std": round(r.store_std, 3),
                "agree": r.agree,
            }, sort_keys=True))
        out.append(json.dumps({
            "geometric_mean_eql_ms": round(self.geometric_mean_eql, 3),
            "geometric_mean_store_ms": round(self.geometric_mean_store, 3),
            "runs": self.runs,
        }, sort_keys=True))
        return "\n".join(out) + "\n"

    def to_table(self) -> str:
        head = (f"{'query':<6} {'results':>8} {'eql ms':>10} {'±':>7} "
                f"{'store ms':>10} {'±':>7}  agree")
        lines = [head, "-" * len(head)]
        for r in self.rows:
            lines.append(
                f"{r.name:<6} {r.count:>8} {r.eql_ms:>10.2f} {r.eql_std:>7.2f} "
                f"{r.store_ms:>10.2f} {r.store_std:>7.2f}  "
                f"{'yes' if r.agree else 'NO'}"
            )
        lines.append("-" * len(head))
        lines.append(
            f"geometric mean: eql {self.geometric_mean_eql:.2f} ms, "
            f"store {self.geometric_mean_store:.2f} ms over {self.runs} run(s)"
        )
        return "\n".join(lines) + "\n"


def _row_keys(result) -> set:
    keys = set()
    for row in result.rows:
        keys.add(tuple(v.id if isinstance(v, Individual) else v for v in row))
    return keys


def _evaluate_rows(parsed, snap):
    """Agreement compares row sets; a failed `the` cardinality check still
    has an underlying set worth comparing."""
    from .eql import Query
    from .errors import UniquenessViolation

    try:
        return evaluate(parsed, snap)
    except UniquenessViolation:
        relaxed = Query("an", parsed.descriptor, parsed.variables, parsed.where,
                        parsed.sum_path)
        return evaluate(relaxed, snap)


def run_suite(kb: KnowledgeBase, store, schema, queries=None, runs: int = 10,
              fail_fast: bool = False) -> BenchReport:
    """Execute every query against both backends; verify agreement."""
    queries = queries if queries is not None else suite()
    snap = kb.snapshot()
    ctx = _StoreCtx(store, schema)
    report = BenchReport(runs=runs)
    for q in queries:
        parsed = parse_query(q.text, snap)
        eql_times, store_times = [], []
        eql_keys = store_keys = None
        for _ in range(runs):
            t0 = time.perf_counter()
            eql_keys = _row_keys(_evaluate_rows(parsed, snap))
            eql_times.append((time.perf_counter() - t0) * 1000)
            t0 = time.perf_counter()
            store_keys = q.store_fn(ctx)
            store_times.append((time.perf_counter() - t0) * 1000)
        agree = eql_keys == store_keys
        if not agree and fail_fast:
            sample = list(eql_keys ^ store_keys)[:5]
            raise BackendDisagreement(q.name, sample)
        report.rows.append(
            QueryResult(
                q.name, q.description, len(eql_keys),
                statistics.fmean(eql_times), statistics.pstdev(eql_times),
                statistics.fmean(store_times), statistics.pstdev(store_times),
                agree,
            )
        )
    report.geometric_mean_eql = geometric_mean([r.eql_ms for r in report.rows])
    report.geometric_mean_store = geometric_mean([r.store_ms for r in report.rows])
    return report


def geometric_mean(values) -> float:
    if not values:
        return 0.0
    return math.exp(sum(math.log(max(v, 1e-9)) for v in values) / len(values))


def prepare(params: GenParams, seed: int):
    """Generate, import, materialize and persist in one deterministic step."""
    doc = generate_university(params, seed)
    kb = build_kb(doc)
    materialize(kb)
    schema = derive_schema(kb.classes.values(), kb.properties.values())
    store = SqliteStore(":memory:")
    store.create_schema(schema)
    save_graph(list(kb.individuals.values()), store, schema, kb)
    return kb, store, schema
