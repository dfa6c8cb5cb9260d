import random

import pytest

from okb import AttributeSpec, KnowledgeBase, ScalarKind
from okb.errors import SchemaMismatch, UnknownDiscriminator, UnmappableKind
from okb.orm import (
    LoadSession,
    MemoryStore,
    SqliteStore,
    derive_schema,
    export_tabular,
    load_graph,
    save_graph,
)


def person_student_kb():
    kb = KnowledgeBase()
    person = kb.define_class(
        "Person", attributes=[AttributeSpec("age", ScalarKind.INTEGER)]
    )
    kb.define_class("Student", superclasses=[person], role_for=person)
    return kb


def test_joined_table_inheritance_shape():
    kb = KnowledgeBase()
    person = kb.define_class(
        "Person", attributes=[AttributeSpec("age", ScalarKind.INTEGER)]
    )
    kb.define_class("Graduate", superclasses=[person])
    schema = derive_schema(kb.classes.values(), kb.properties.values())
    person_t = schema.tables["person"]
    grad_t = schema.tables["graduate"]
    assert person_t.is_root and person_t.column_names() == ["uid", "iri", "kind", "age"]
    assert grad_t.parent == "person"
    assert any(fk.column == "id" and fk.ref_table == "person"
               for fk in grad_t.foreign_keys)


def test_role_table_references_identity():
    kb = person_student_kb()
    schema = derive_schema(kb.classes.values(), kb.properties.values())
    student_t = schema.tables["student"]
    assert student_t.is_role_root and student_t.identity_table == "person"
    assert any(fk.column == "holder_id" and fk.ref_table == "person"
               for fk in student_t.foreign_keys)


def test_attributeless_class_gets_bare_table():
    kb = KnowledgeBase()
    kb.define_class("Marker")
    schema = derive_schema(kb.classes.values())
    assert schema.tables["marker"].column_names() == ["uid", "iri", "kind"]


def test_ordered_collection_gets_position_column():
    kb = KnowledgeBase()
    part = kb.define_class("Part")
    kb.define_class(
        "Robot",
        attributes=[
            AttributeSpec("parts", part, "many", ordered=True),
            AttributeSpec("tags", ScalarKind.STRING, "many"),
        ],
    )
    schema = derive_schema(kb.classes.values())
    parts = schema.assocs["robot_parts"]
    assert parts.ordered and parts.target_table == "part"
    tags = schema.assocs["robot_tags"]
    assert not tags.ordered and tags.value_kind == "TEXT"
    assert "position INTEGER NOT NULL" in schema.ddl()


def test_schema_is_deterministic():
    def build():
        kb = KnowledgeBase()
        person = kb.define_class(
            "Person", attributes=[AttributeSpec("age", ScalarKind.INTEGER)]
        )
        dept = kb.define_class("Department")
        kb.define_class("Student", superclasses=[person], role_for=person)
        kb.define_property("worksFor", "object", person, dept)
        return derive_schema(kb.classes.values(), kb.properties.values()).ddl()

    assert build() == build()


def test_reserved_attribute_name_rejected():
    kb = KnowledgeBase()
    kb.define_class("Broken", attributes=[AttributeSpec("kind", ScalarKind.STRING)])
    with pytest.raises(UnmappableKind):
        derive_schema(kb.classes.values())


def _store_pair():
    return [MemoryStore(), SqliteStore(":memory:")]


def _simple_world():
    kb = KnowledgeBase()
    gadget = kb.define_class(
        "Gadget", attributes=[AttributeSpec("weight", ScalarKind.DECIMAL)]
    )
    person = kb.define_class(
        "Person",
        attributes=[
            AttributeSpec("age", ScalarKind.INTEGER),
            AttributeSpec("name", ScalarKind.STRING),
            AttributeSpec("gadgets", gadget, "many", ordered=True),
            AttributeSpec("buddy", None, "one"),
        ],
    )
    # buddy is a self-reference; patch the range after both classes exist
    person.attributes[-1].range = person
    return kb, person, gadget


@pytest.mark.parametrize("store_factory", [MemoryStore, lambda: SqliteStore(":memory:")])
def test_diamond_sharing_stored_once(store_factory):
    kb, person, gadget = _simple_world()
    shared = kb.add_individual([gadget])
    kb.assert_property(shared, "weight", 1.5)
    a = kb.add_individual([person])
    b = kb.add_individual([person])
    kb.assert_property(a, "gadgets", shared)
    kb.assert_property(b, "gadgets", shared)
    schema = derive_schema(kb.classes.values(), kb.properties.values())
    store = store_factory()
    store.create_schema(schema)
    id_map = save_graph([a, b], store, schema, kb)
    assert len(store.select("gadget")) == 1
    assert len(store.select("person")) == 2
    assert len(id_map) == 3


def test_empty_roots_empty_map():
    kb, *_ = _simple_world()
    schema = derive_schema(kb.classes.values(), kb.properties.values())
    store = MemoryStore()
    store.create_schema(schema)
    assert save_graph([], store, schema, kb) == {}


@pytest.mark.parametrize("store_factory", [MemoryStore, lambda: SqliteStore(":memory:")])
def test_reference_cycle_persists_and_loads(store_factory):
    kb, person, _ = _simple_world()
    a = kb.add_individual([person])
    b = kb.add_individual([person])
    kb.assert_property(a, "buddy", b)
    kb.assert_property(b, "buddy", a)
    schema = derive_schema(kb.classes.values(), kb.properties.values())
    store = store_factory()
    store.create_schema(schema)
    id_map = save_graph([a], store, schema, kb)
    rows = store.select("person")
    assert {r["buddy_id"] for r in rows} == set(id_map.values())
    loaded = load_graph(store, schema, kb, "Person")
    by_uid = {i.id: i for i in loaded}
    assert by_uid[a.id].values("buddy")[0] is by_uid[b.id]
    assert by_uid[b.id].values("buddy")[0] is by_uid[a.id]


def test_save_unregistered_schema_fails():
    kb, person, _ = _simple_world()
    a = kb.add_individual([person])
    schema = derive_schema(kb.classes.values(), kb.properties.values())
    store = MemoryStore()
    with pytest.raises(SchemaMismatch):
        save_graph([a], store, schema, kb)


def test_resave_is_idempotent():
    kb, person, gadget = _simple_world()
    g = kb.add_individual([gadget])
    kb.assert_property(g, "weight", 2.5)
    a = kb.add_individual([person])
    kb.assert_property(a, "age", 30)
    kb.assert_property(a, "gadgets", g)
    schema = derive_schema(kb.classes.values(), kb.properties.values())
    store = MemoryStore()
    store.create_schema(schema)
    save_graph([a], store, schema, kb)
    before = store.dump()
    save_graph([a], store, schema, kb)
    assert store.dump() == before


def test_modified_graph_updates_rows():
    kb, person, _ = _simple_world()
    a = kb.add_individual([person])
    kb.assert_property(a, "age", 30)
    schema = derive_schema(kb.classes.values(), kb.properties.values())
    store = MemoryStore()
    store.create_schema(schema)
    id_map = save_graph([a], store, schema, kb)
    kb.retract_property(a, "age", 30)
    kb.assert_property(a, "age", 31)
    save_graph([a], store, schema, kb)
    assert store.get("person", id_map[a.id])["age"] == 31
    assert len(store.select("person")) == 1


def test_polymorphic_load_most_specific():
    kb = KnowledgeBase()
    person = kb.define_class(
        "Person", attributes=[AttributeSpec("age", ScalarKind.INTEGER)]
    )
    grad = kb.define_class(
        "Graduate", superclasses=[person],
        attributes=[AttributeSpec("thesis", ScalarKind.STRING)],
    )
    g = kb.add_individual([grad])
    kb.assert_property(g, "age", 27)
    kb.assert_property(g, "thesis", "owls")
    schema = derive_schema(kb.classes.values(), kb.properties.values())
    store = SqliteStore(":memory:")
    store.create_schema(schema)
    save_graph([g], store, schema, kb)
    loaded = load_graph(store, schema, kb, "Person")
    assert len(loaded) == 1
    got = loaded[0]
    assert {c.name for c in got.declared_types} == {"Graduate"}
    assert got.values("age") == [27]
    assert got.values("thesis") == ["owls"]


def test_unknown_discriminator_detected():
    kb, person, _ = _simple_world()
    a = kb.add_individual([person])
    schema = derive_schema(kb.classes.values(), kb.properties.values())
    store = MemoryStore()
    store.create_schema(schema)
    pk = save_graph([a], store, schema, kb)[a.id]
    store.update("person", pk, {"kind": "Martian"})
    with pytest.raises(UnknownDiscriminator):
        load_graph(store, schema, kb, "Person")


def test_role_binding_persists_with_role_state():
    kb = KnowledgeBase()
    person = kb.define_class(
        "Person", attributes=[AttributeSpec("name", ScalarKind.STRING)]
    )
    course = kb.define_class("Course")
    student = kb.define_class("Student", superclasses=[person], role_for=person)
    kb.define_property("takesCourse", "object", student, course)
    bob = kb.add_individual([person], iri="u:bob")
    kb.assert_property(bob, "name", "bob")
    kb.bind_role(bob, student)
    c1 = kb.add_individual([course], iri="u:c1")
    kb.assert_property(bob, "takesCourse", c1)
    schema = derive_schema(kb.classes.values(), kb.properties.values())
    store = SqliteStore(":memory:")
    store.create_schema(schema)
    id_map = save_graph([bob, c1], store, schema, kb)
    srows = store.select("student")
    assert len(srows) == 1 and srows[0]["holder_id"] == id_map[bob.id]
    arows = store.select("student_takes_course")
    assert [(r["owner_id"], r["target_id"])
            for r in arows] == [(srows[0]["id"], id_map[c1.id])]
    # loading the role class returns its holders, fully reconstructed
    holders = load_graph(store, schema, kb, "Student")
    assert len(holders) == 1
    loaded_bob = holders[0]
    assert loaded_bob.id == bob.id
    assert loaded_bob.binding_for(student) is not None
    assert [v.id for v in loaded_bob.values("takesCourse")] == [c1.id]


# --- round-trip isomorphism ------------------------------------------------------


def _graph_signature(individuals):
    sig = {}
    for ind in individuals:
        entry = {"types": sorted(c.name for c in ind.declared_types), "attrs": {}}
        for name, values in sorted(ind.assertions.items()):
            entry["attrs"][name] = [
                ("ref", v.id) if hasattr(v, "id") else ("val", v) for v in values
            ]
        entry["roles"] = sorted(b.role_class.name for b in ind.role_bindings)
        sig[ind.id] = entry
    return sig


def _random_object_graph(seed):
    rng = random.Random(seed)
    kb, person, gadget = _simple_world()
    kb.convert_to_role(kb.define_class("Member", superclasses=[person]), person)
    n = rng.randint(1, 100)
    people, gadgets = [], []
    for _ in range(n):
        if rng.random() < 0.7:
            p = kb.add_individual([person])
            if rng.random() < 0.8:
                kb.assert_property(p, "age", rng.randint(1, 99))
            if rng.random() < 0.5:
                kb.assert_property(p, "name", rng.choice("abcdef") * 3)
            if rng.random() < 0.2:
                kb.bind_role(p, "Member")
            people.append(p)
        else:
            g = kb.add_individual([gadget])
            if rng.random() < 0.8:
                kb.assert_property(g, "weight", round(rng.uniform(0.1, 9.9), 3))
            gadgets.append(g)
    for p in people:
        # ~30% shared references plus occasional cycles through buddy
        if people and rng.random() < 0.6:
            kb.assert_property(p, "buddy", rng.choice(people))
        for g in rng.sample(gadgets, min(len(gadgets), rng.randint(0, 3))):
            kb.assert_property(p, "gadgets", g)
    return kb, people + gadgets


@pytest.mark.parametrize("backend", ["memory", "sqlite"])
def test_roundtrip_isomorphism_random_graphs(backend):
    for seed in range(25):
        kb, individuals = _random_object_graph(seed)
        schema = derive_schema(kb.classes.values(), kb.properties.values())
        store = MemoryStore() if backend == "memory" else SqliteStore(":memory:")
        store.create_schema(schema)
        save_graph(individuals, store, schema, kb)
        session = LoadSession(store, schema, kb)
        loaded = load_graph(store, schema, kb, "Person", session=session) + load_graph(
            store, schema, kb, "Gadget", session=session
        )
        assert _graph_signature(loaded) == _graph_signature(individuals), f"seed {seed}"
        # identity preservation: shared targets are shared objects after load
        by_id = {i.id: i for i in loaded}
        for ind in loaded:
            for values in ind.assertions.values():
                for v in values:
                    if hasattr(v, "id"):
                        assert v is by_id[v.id]


# --- tabular export -----------------------------------------------------------------


def test_export_has_header_and_rows():
    kb, person, _ = _simple_world()
    for age in (30, 40, 50):
        p = kb.add_individual([person])
        kb.assert_property(p, "age", age)
    schema = derive_schema(kb.classes.values(), kb.properties.values())
    store = MemoryStore()
    store.create_schema(schema)
    save_graph(list(kb.individuals.values()), store, schema, kb)
    out = export_tabular(store, schema, kb, "Person")
    lines = out.strip().split("\r\n")
    assert lines[0] == "id,uid,iri,kind,age,name,buddy_id"
    assert len(lines) == 4


def test_export_empty_class_header_only():
    kb, person, _ = _simple_world()
    schema = derive_schema(kb.classes.values(), kb.properties.values())
    store = MemoryStore()
    store.create_schema(schema)
    out = export_tabular(store, schema, kb, "Gadget")
    assert out.strip() == "id,uid,iri,kind,weight"


def test_export_quotes_embedded_commas():
    kb, person, _ = _simple_world()
    p = kb.add_individual([person])
    kb.assert_property(p, "name", 'comma, and "quote"')
    schema = derive_schema(kb.classes.values(), kb.properties.values())
    store = MemoryStore()
    store.create_schema(schema)
    save_graph([p], store, schema, kb)
    out = export_tabular(store, schema, kb, "Person")
    assert '"comma, and ""quote"""' in out


def test_role_export_includes_holder_key():
    kb = person_student_kb()
    bob = kb.add_individual(["Person"])
    kb.bind_role(bob, "Student")
    schema = derive_schema(kb.classes.values(), kb.properties.values())
    store = MemoryStore()
    store.create_schema(schema)
    id_map = save_graph([bob], store, schema, kb)
    out = export_tabular(store, schema, kb, "Student")
    lines = out.strip().split("\r\n")
    assert lines[0].startswith("id,kind,holder_id")
    assert lines[1].split(",")[2] == str(id_map[bob.id])
