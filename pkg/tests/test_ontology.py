import itertools
import random

import pytest

from okb import KnowledgeBase
from okb.eql.evaluate import Evaluator
from okb.errors import (
    FixpointNotReached,
    InconsistentDisjointness,
    NotSymmetricTransitive,
    UnresolvedReference,
    UnsupportedConstruct,
)
from okb.ontology import (
    CompiledAxiom,
    MaterializationReport,
    classify_individuals,
    close_symmetric_transitive,
    compile_axiom,
    import_abox,
    import_tbox,
    interpret_restriction,
    materialize,
    naive_symmetric_transitive_fixpoint,
    parse_ntriples,
    parse_restriction,
    resolve_ntriples_names,
    statement_count,
)


def university_doc(students=()):
    """Minimal university terminology with the at-most-one-course axiom."""
    individuals = [{"iri": "u:c1", "types": ["Course"]},
                   {"iri": "u:c2", "types": ["Course"]}]
    for name, courses in students:
        individuals.append(
            {
                "iri": f"u:{name}",
                "types": ["Student"],
                "assertions": {"takesCourse": [{"ref": c} for c in courses]},
            }
        )
    return {
        "classes": [
            {"name": "Person"},
            {"name": "Course"},
            {"name": "Student", "superclasses": ["Person"], "role_for": "Person"},
            {
                "name": "LeisureStudent",
                "superclasses": ["Student"],
                "role_for": "Person",
                "equivalent_to": {
                    "intersection_of": [
                        {"class": "Student"},
                        {
                            "max_qualified_cardinality": {
                                "n": 1,
                                "property": "takesCourse",
                                "expr": {"class": "Course"},
                            }
                        },
                    ]
                },
            },
        ],
        "properties": [
            {
                "name": "takesCourse",
                "kind": "object",
                "domain": "Student",
                "range": "Course",
            }
        ],
        "individuals": individuals,
    }


# --- terminology import ---------------------------------------------------------


def test_role_for_marks_role_class():
    kb = KnowledgeBase()
    import_tbox(university_doc(), kb)
    student = kb.get_class("Student")
    assert student.is_role and student.role_for.name == "Person"
    assert kb.get_class("LeisureStudent").axiom is not None


def test_empty_doc_registers_nothing():
    kb = KnowledgeBase()
    created = import_tbox({}, kb)
    assert created == [] and kb.classes == {} and kb.properties == {}


def test_disjoint_siblings_stay_plain_classes():
    kb = KnowledgeBase()
    import_tbox(
        {
            "classes": [
                {"name": "Thing"},
                {"name": "Cat", "superclasses": ["Thing"], "disjoint_with": ["Dog"]},
                {"name": "Dog", "superclasses": ["Thing"]},
            ]
        },
        kb,
    )
    assert not kb.get_class("Cat").is_role
    assert not kb.get_class("Dog").is_role
    assert kb.get_class("Dog") in kb.get_class("Cat").disjoint_with


def test_unresolved_superclass_rejected():
    kb = KnowledgeBase()
    with pytest.raises(UnresolvedReference):
        import_tbox({"classes": [{"name": "A", "superclasses": ["Ghost"]}]}, kb)


def test_inconsistent_disjointness_rejected():
    kb = KnowledgeBase()
    with pytest.raises(InconsistentDisjointness):
        import_tbox(
            {
                "classes": [
                    {"name": "A"},
                    {"name": "B", "superclasses": ["A"], "disjoint_with": ["A"]},
                ]
            },
            kb,
        )


def test_equivalent_classref_collapses():
    kb = KnowledgeBase()
    import_tbox(
        {
            "classes": [
                {"name": "Human"},
                {"name": "Person", "equivalent_to": {"class": "Human"}},
            ]
        },
        kb,
    )
    assert kb.get_class("Person") is kb.get_class("Human")


# --- axiom compilation ------------------------------------------------------------


def test_leisure_student_axiom_shape():
    kb = KnowledgeBase()
    import_tbox(university_doc(), kb)
    axiom = kb.get_class("LeisureStudent").axiom
    assert isinstance(axiom, CompiledAxiom)
    from okb.eql import print_condition

    text = print_condition(axiom.condition, declared=(axiom.var.id,))
    assert text == (
        "and(contains(candidate.types, Student), "
        "count(v1 in candidate.takesCourse where "
        "contains(v1.types, Course)) <= 1)"
    )


def test_classref_compiles_to_type_membership():
    kb = KnowledgeBase()
    kb.define_class("A")
    axiom = compile_axiom({"class": "A"}, kb)
    a = kb.add_individual(["A"])
    b = kb.add_individual([])
    ev = Evaluator(kb)
    assert ev.holds(axiom.condition, {axiom.var.id: a})
    assert not ev.holds(axiom.condition, {axiom.var.id: b})


def test_unknown_construct_rejected():
    kb = KnowledgeBase()
    with pytest.raises(UnsupportedConstruct):
        compile_axiom({"has_self": {"property": "p"}}, kb)
    with pytest.raises(UnresolvedReference):
        compile_axiom({"class": "Ghost"}, kb)


def _tiny_vocab():
    kb = KnowledgeBase()
    a = kb.define_class("A")
    b = kb.define_class("B")
    kb.define_property("p", "object", a, a)
    kb.define_property("q", "object", a, a)
    return kb, a, b


_EXPRS = [
    {"class": "A"},
    {"class": "B"},
    {"union_of": [{"class": "A"}, {"class": "B"}]},
    {"intersection_of": [{"class": "A"}, {"class": "B"}]},
    {"some_values_from": {"property": "p", "expr": {"class": "B"}}},
    {"all_values_from": {"property": "p", "expr": {"class": "B"}}},
    {"some_values_from": {"property": "p",
                          "expr": {"some_values_from": {"property": "q",
                                                        "expr": {"class": "A"}}}}},
    {"all_values_from": {"property": "p",
                         "expr": {"union_of": [{"class": "A"}, {"class": "B"}]}}},
    {"min_qualified_cardinality": {"n": 1, "property": "p", "expr": {"class": "A"}}},
    {"min_qualified_cardinality": {"n": 2, "property": "p", "expr": {"class": "B"}}},
    {"max_qualified_cardinality": {"n": 0, "property": "p", "expr": {"class": "B"}}},
    {"max_qualified_cardinality": {"n": 1, "property": "p", "expr": {"class": "A"}}},
    {"min_qualified_cardinality": {"n": 0, "property": "q", "expr": {"class": "B"}}},
]


def _enumerate_tiny_kbs_two():
    """Every KB on two individuals over the A/B + p/q vocabulary."""
    type_options = [("A",), ("B",), ("A", "B")]
    pairs = [(0, 0), (0, 1), (1, 0), (1, 1)]
    for t0, t1 in itertools.product(type_options, repeat=2):
        for p_edges in itertools.chain.from_iterable(
            itertools.combinations(pairs, k) for k in range(3)
        ):
            for q_edges in itertools.chain.from_iterable(
                itertools.combinations(pairs, k) for k in range(2)
            ):
                kb, _, _ = _tiny_vocab()
                inds = [kb.add_individual(list(t0)), kb.add_individual(list(t1))]
                for s, o in p_edges:
                    kb.assert_property(inds[s], "p", inds[o])
                for s, o in q_edges:
                    kb.assert_property(inds[s], "q", inds[o])
                yield kb, inds


def test_compiled_axioms_match_direct_interpreter_exhaustively():
    compiled = {}
    checked = 0
    for kb, inds in _enumerate_tiny_kbs_two():
        for i, expr_json in enumerate(_EXPRS):
            if i not in compiled:
                compiled[i] = compile_axiom(expr_json, kb)
            axiom = compiled[i]
            for ind in inds:
                want = interpret_restriction(expr_json, ind, kb)
                got = Evaluator(kb).holds(axiom.condition, {axiom.var.id: ind})
                assert got == want, (expr_json, ind.id)
                checked += 1
    assert checked > 5000


def test_compiled_axioms_match_interpreter_on_random_triples():
    rng = random.Random(31)
    for _ in range(200):
        kb, _, _ = _tiny_vocab()
        inds = [
            kb.add_individual(rng.choice([["A"], ["B"], ["A", "B"]]))
            for _ in range(3)
        ]
        for prop in ("p", "q"):
            for s in inds:
                for o in inds:
                    if rng.random() < 0.3:
                        kb.assert_property(s, prop, o)
        expr = rng.choice(_EXPRS)
        axiom = compile_axiom(expr, kb)
        for ind in inds:
            assert Evaluator(kb).holds(axiom.condition, {axiom.var.id: ind}) == \
                interpret_restriction(expr, ind, kb)


def test_max_zero_equals_not_exists():
    # counted both ways on every 2-individual KB: <=0 of C via p is the
    # negation of having some p-value of type C
    expr = {"max_qualified_cardinality": {"n": 0, "property": "p",
                                          "expr": {"class": "B"}}}
    some = {"some_values_from": {"property": "p", "expr": {"class": "B"}}}
    for kb, inds in _enumerate_tiny_kbs_two():
        for ind in inds:
            assert interpret_restriction(expr, ind, kb) == (
                not interpret_restriction(some, ind, kb)
            )
            axiom = compile_axiom(expr, kb)
            assert Evaluator(kb).holds(axiom.condition, {axiom.var.id: ind}) == \
                interpret_restriction(expr, ind, kb)


# --- assertional import -------------------------------------------------------------


def test_abox_counts():
    kb = KnowledgeBase()
    doc = university_doc(students=[("s1", ["u:c1"]), ("s2", ["u:c1", "u:c2"]),
                                   ("s3", [])])
    import_tbox(doc, kb)
    count = import_abox(doc, kb)
    assert count == 5
    assert sum(len(v) for i in kb.individuals.values()
               for v in i.assertions.values()) == 3


def test_abox_empty():
    kb = KnowledgeBase()
    import_tbox(university_doc(), kb)
    assert import_abox({"individuals": []}, kb) == 0


def test_sibling_roles_from_shared_individual():
    kb = KnowledgeBase()
    doc = {
        "classes": [
            {"name": "Person"},
            {"name": "Student", "superclasses": ["Person"]},
            {"name": "Employee", "superclasses": ["Person"]},
        ],
        "individuals": [{"iri": "u:bob", "types": ["Student", "Employee"]}],
    }
    import_tbox(doc, kb)
    import_abox(doc, kb)
    (bob,) = kb.individuals.values()
    assert {b.role_class.name for b in bob.role_bindings} == {"Student", "Employee"}
    assert {c.name for c in bob.declared_types} == {"Person"}
    assert kb.get_class("Student").role_for.name == "Person"


def test_unresolved_assertion_target():
    kb = KnowledgeBase()
    doc = university_doc(students=[("s1", ["u:ghost"])])
    import_tbox(doc, kb)
    with pytest.raises(UnresolvedReference):
        import_abox(doc, kb)


# --- materialization ------------------------------------------------------------------


def _chain_kb(characteristics, edges, n=4):
    kb = KnowledgeBase()
    node = kb.define_class("Node")
    kb.define_property("rel", "object", node, node, characteristics=characteristics)
    inds = [kb.add_individual([node]) for _ in range(n)]
    for s, o in edges:
        kb.assert_property(inds[s], "rel", inds[o])
    return kb, inds


def test_transitive_chain_closes():
    kb, inds = _chain_kb(["transitive"], [(0, 1), (1, 2)], n=3)
    report = materialize(kb)
    assert inds[2] in inds[0].values("rel")
    assert report.counts["transitive"] == 1


def test_symmetric_edge_mirrors():
    kb, inds = _chain_kb(["symmetric"], [(0, 1)], n=2)
    report = materialize(kb)
    assert inds[0] in inds[1].values("rel")
    assert report.counts["symmetric"] == 1


def test_subproperty_and_inverse_propagate():
    kb = KnowledgeBase()
    node = kb.define_class("Node")
    broad = kb.define_property("connected", "object", node, node)
    kb.define_property("linked", "object", node, node, super_properties=[broad])
    fwd = kb.define_property("parentOf", "object", node, node)
    kb.define_property("childOf", "object", node, node, inverse_of=fwd)
    a, b = kb.add_individual([node]), kb.add_individual([node])
    kb.assert_property(a, "linked", b)
    kb.assert_property(a, "parentOf", b)
    report = materialize(kb)
    assert b in a.values("connected")
    assert a in b.values("childOf")
    assert report.counts["subproperty"] == 1
    assert report.counts["inverse"] == 1


def test_domain_and_range_typing():
    kb = KnowledgeBase()
    person = kb.define_class("Person")
    course = kb.define_class("Course")
    student = kb.define_class("Student", superclasses=[person], role_for=person)
    kb.define_property("takesCourse", "object", student, course)
    x = kb.add_individual([])
    y = kb.add_individual([])
    kb.assert_property(x, "takesCourse", y)
    materialize(kb)
    assert x.binding_for(student) is not None  # role domain creates a binding
    assert person in x.inferred_types
    assert course in y.inferred_types


def test_wcc_closure_three_node_chain():
    kb, inds = _chain_kb(["symmetric", "transitive"], [(0, 1), (1, 2)], n=3)
    added = close_symmetric_transitive(kb, "rel")
    # component {a,b,c}: six ordered pairs of distinct members, two existed
    assert added == 4
    pairs = {
        (s.id, o.id) for s in kb.individuals.values() for o in s.values("rel")
    }
    assert len(pairs) == 6
    assert all(s != o for s, o in pairs)


def test_wcc_closure_no_edges():
    kb, _ = _chain_kb(["symmetric", "transitive"], [], n=3)
    assert close_symmetric_transitive(kb, "rel") == 0


def test_wcc_closure_respects_components():
    kb, inds = _chain_kb(["symmetric", "transitive"], [(0, 1), (2, 3)], n=4)
    close_symmetric_transitive(kb, "rel")
    assert inds[2] not in inds[0].values("rel")
    assert inds[3] not in inds[1].values("rel")


def test_wcc_requires_symmetric_transitive():
    kb, _ = _chain_kb(["transitive"], [(0, 1)], n=2)
    with pytest.raises(NotSymmetricTransitive):
        close_symmetric_transitive(kb, "rel")


def _random_graph_kbs(seed, trials, reflexive=False):
    rng = random.Random(seed)
    for _ in range(trials):
        n = rng.randint(2, 50)
        chars = ["symmetric", "transitive"] + (["reflexive"] if reflexive else [])
        edges = set()
        for _ in range(rng.randint(0, min(200, n * 3))):
            edges.add((rng.randrange(n), rng.randrange(n)))
        yield _chain_kb(chars, sorted(edges), n=n)


def _edge_set(kb):
    return {
        (s.id, o.id) for s in kb.individuals.values() for o in s.values("rel")
    }


@pytest.mark.parametrize("reflexive", [False, True])
def test_wcc_equals_naive_fixpoint_random(reflexive):
    for (kb1, _), (kb2, _) in zip(
        _random_graph_kbs(55, 30, reflexive), _random_graph_kbs(55, 30, reflexive)
    ):
        close_symmetric_transitive(kb1, "rel")
        naive_symmetric_transitive_fixpoint(kb2, "rel")
        assert _edge_set(kb1) == _edge_set(kb2)


def test_materialize_idempotent_and_monotone():
    kb = KnowledgeBase()
    doc = university_doc(students=[("s1", ["u:c1"]), ("s2", ["u:c1", "u:c2"])])
    import_tbox(doc, kb)
    import_abox(doc, kb)
    before = statement_count(kb)
    first = materialize(kb)
    between = statement_count(kb)
    assert first.statements_before == before
    assert first.statements_after == between
    assert first.total == between - before  # report accounts for every addition
    assert between >= before
    second = materialize(kb)
    assert second.total == 0
    assert statement_count(kb) == between


def _naive_materialize(kb):
    """Independent rule-application oracle: apply every rule until stable."""
    from okb.kb import ClassDef, Individual

    while True:
        changed = 0
        for prop in list(kb.properties.values()):
            for ind in list(kb.individuals.values()):
                values = list(ind.values(prop.name))
                if values and prop.domain not in ind.type_closure(False):
                    if not prop.domain.is_role:
                        changed += 1 if kb.add_inferred_type(ind, prop.domain) else 0
                    else:
                        if prop.domain.role_for not in ind.type_closure(False):
                            kb.add_inferred_type(ind, prop.domain.role_for)
                            changed += 1
                        if ind.binding_for(prop.domain) is None:
                            kb.bind_role(ind, prop.domain)
                            changed += 1
                for v in values:
                    for sp in prop.super_properties:
                        changed += 0 if kb.assert_property(ind, sp, v) is None else 1
                    if not isinstance(v, Individual):
                        continue
                    if isinstance(prop.range, ClassDef) and (
                        prop.range not in v.type_closure(False)
                    ):
                        if not prop.range.is_role:
                            changed += 1 if kb.add_inferred_type(v, prop.range) else 0
                        else:
                            if prop.range.role_for not in v.type_closure(False):
                                kb.add_inferred_type(v, prop.range.role_for)
                                changed += 1
                            if v.binding_for(prop.range) is None:
                                kb.bind_role(v, prop.range)
                                changed += 1
                    if prop.inverse_of is not None:
                        changed += (
                            0 if kb.assert_property(v, prop.inverse_of, ind) is None
                            else 1
                        )
                    if prop.symmetric:
                        changed += 0 if kb.assert_property(v, prop, ind) is None else 1
                    if prop.transitive:
                        for w in list(v.values(prop.name)):
                            if w is ind and prop.symmetric and not prop.reflexive:
                                continue
                            changed += (
                                0 if kb.assert_property(ind, prop, w) is None else 1
                            )
        if changed == 0:
            return


def _random_mixed_kb(seed):
    rng = random.Random(seed)
    kb = KnowledgeBase()
    thing = kb.define_class("Thing")
    group = kb.define_class("Group", superclasses=[thing])
    member = kb.define_class("Member", superclasses=[thing], role_for=thing)
    broad = kb.define_property("related", "object", thing, thing)
    kb.define_property(
        "follows", "object", thing, thing,
        characteristics=["transitive"], super_properties=[broad],
    )
    fwd = kb.define_property("owns", "object", thing, group)
    kb.define_property("ownedBy", "object", group, thing, inverse_of=fwd)
    kb.define_property("near", "object", thing, thing, characteristics=["symmetric"])
    kb.define_property(
        "peer", "object", member, member,
        characteristics=["symmetric", "transitive"],
    )
    inds = [
        kb.add_individual([rng.choice([thing, group])]) for _ in range(rng.randint(3, 50))
    ]
    for prop in ("follows", "owns", "near", "peer"):
        for _ in range(rng.randint(0, 40)):
            a, b = rng.choice(inds), rng.choice(inds)
            try:
                kb.assert_property(a, prop, b)
            except Exception:
                pass
    return kb


def test_materialize_matches_naive_oracle_on_random_kbs():
    for seed in range(20):
        kb_fast = _random_mixed_kb(seed)
        kb_slow = _random_mixed_kb(seed)
        materialize(kb_fast)
        _naive_materialize(kb_slow)
        fast = {
            (s.id, p, o.id if hasattr(o, "id") else o)
            for s in kb_fast.individuals.values()
            for p, vals in s.assertions.items()
            for o in vals
        }
        slow = {
            (s.id, p, o.id if hasattr(o, "id") else o)
            for s in kb_slow.individuals.values()
            for p, vals in s.assertions.items()
            for o in vals
        }
        assert fast == slow, f"seed {seed}"
        types_fast = {
            (i.id, c.name)
            for i in kb_fast.individuals.values()
            for c in i.type_closure(True)
        }
        types_slow = {
            (i.id, c.name)
            for i in kb_slow.individuals.values()
            for c in i.type_closure(True)
        }
        assert types_fast == types_slow


# --- classification ---------------------------------------------------------------


def _classified_kb(students):
    kb = KnowledgeBase()
    doc = university_doc(students=students)
    import_tbox(doc, kb)
    import_abox(doc, kb)
    materialize(kb)
    return kb


def test_single_course_student_is_leisure():
    kb = _classified_kb([("s1", ["u:c1"])])
    leisure = kb.get_class("LeisureStudent")
    members = kb.extension_of(leisure, include_roles=True)
    assert [i.iri for i in members] == ["u:s1"]


def test_two_course_student_is_not_leisure():
    kb = _classified_kb([("busy", ["u:c1", "u:c2"]), ("lazy", ["u:c1"])])
    leisure = kb.get_class("LeisureStudent")
    assert [i.iri for i in kb.extension_of(leisure, include_roles=True)] == ["u:lazy"]


def test_unmatched_individual_unchanged():
    kb = KnowledgeBase()
    doc = university_doc()
    import_tbox(doc, kb)
    import_abox({"individuals": [{"iri": "u:x", "types": ["Person"]}]}, kb)
    gen = kb.generation
    assert classify_individuals(kb) == 0
    assert kb.generation == gen


def test_classification_reaches_fixpoint_within_class_count():
    kb = _classified_kb([("s1", ["u:c1"]), ("s2", ["u:c1", "u:c2"])])
    # a second run adds nothing
    assert classify_individuals(kb) == 0


# --- N-Triples subset ----------------------------------------------------------------


def test_ntriples_import():
    kb = KnowledgeBase()
    import_tbox(university_doc(), kb)
    nt = "\n".join(
        [
            "# comment line",
            "<u:s9> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <u:onto#Student> .",
            "<u:c9> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <u:onto#Course> .",
            '<u:s9> <u:onto#takesCourse> <u:c9> .',
            '<u:s9> <u:onto#age> "21"^^<http://www.w3.org/2001/XMLSchema#integer> .',
            '<u:s9> <u:onto#name> "Nine" .',
        ]
    ) + "\n"
    kb.define_property("age", "data", "Person", "integer")
    kb.define_property("name", "data", "Person", "string")
    doc = resolve_ntriples_names(parse_ntriples(nt), kb)
    count = import_abox(doc, kb)
    assert count == 2
    s9 = next(i for i in kb.individuals.values() if i.iri == "u:s9")
    assert s9.values("age") == [21]
    assert s9.values("name") == ["Nine"]
    assert s9.binding_for(kb.get_class("Student")) is not None


def test_ntriples_rejects_garbage():
    with pytest.raises(UnresolvedReference):
        parse_ntriples("this is not a triple .\n")
