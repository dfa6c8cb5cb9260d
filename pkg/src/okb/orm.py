"""Relational persistence derived from class definitions.

Mapping rules: one table per concrete class, joined-table inheritance down
the primary (first) superclass chain with a discriminator on root tables;
single-valued scalars inline, single-valued references as foreign keys,
to-many attributes in association tables (ordered ones carry a position
column). Role classes map to tables keyed by their own id with a foreign
key to the identity class's root table, so one holder may own several role
rows. Object identity uses surrogate integer keys; the engine id is kept
in a unique ``uid`` column and the IRI in a nullable ``iri`` column.

Stores implement a five-call driver interface (create_schema, insert,
update, select, get); an in-memory dict store ships for tests and a
sqlite-backed store is the reference SQL backend.
"""

from __future__ import annotations

import csv
import io
import sqlite3
from dataclasses import dataclass, field
from typing import Optional

from .errors import (
    SchemaMismatch,
    StoreError,
    UnknownDiscriminator,
    UnmappableKind,
)
from .kb import (
    AttributeSpec,
    ClassDef,
    Individual,
    KnowledgeBase,
    PropertyDef,
    ScalarKind,
)

_SQL_KIND = {
    ScalarKind.BOOLEAN: "INTEGER",
    ScalarKind.INTEGER: "INTEGER",
    ScalarKind.DECIMAL: "REAL",
    ScalarKind.STRING: "TEXT",
}

_RESERVED = {"id", "uid", "iri", "kind", "holder_id"}


@dataclass
class Column:
    name: str
    kind: str  # INTEGER | REAL | TEXT
    nullable: bool = True


@dataclass
class ForeignKey:
    column: str
    ref_table: str
    ref_column: str = "id"


@dataclass
class TableDef:
    name: str
    class_name: str
    columns: list = field(default_factory=list)
    foreign_keys: list = field(default_factory=list)
    parent: Optional[str] = None  # joined-inheritance parent table
    is_root: bool = False
    is_role_root: bool = False
    identity_table: Optional[str] = None  # for role roots

    def column_names(self) -> list:
        return [c.name for c in self.columns]


@dataclass
class AssocDef:
    name: str
    owner_table: str
    attribute: str
    ordered: bool
    target_table: Optional[str] = None  # None for scalar collections
    value_kind: Optional[str] = None


@dataclass
class Schema:
    tables: dict = field(default_factory=dict)
    assocs: dict = field(default_factory=dict)
    class_table: dict = field(default_factory=dict)  # class name -> table name

    def table_of(self, cls_name: str) -> TableDef:
        t = self.class_table.get(cls_name)
        if t is None:
            raise SchemaMismatch(f"class {cls_name!r} is not mapped")
        return self.tables[t]

    def chain_of(self, cls_name: str) -> list:
        """Tables from the root down to the class's own table."""
        chain = []
        table = self.table_of(cls_name)
        while table is not None:
            chain.append(table)
            table = self.tables[table.parent] if table.parent else None
        return list(reversed(chain))

    def role_tables(self) -> list:
        return [t for t in self.tables.values() if t.is_role_root]

    def ddl(self) -> str:
        """Deterministic CREATE TABLE script for inspection."""
        out = []
        for name in sorted(self.tables):
            t = self.tables[name]
            cols = ["id INTEGER PRIMARY KEY"]
            cols += [
                f"{c.name} {c.kind}{'' if c.nullable else ' NOT NULL'}"
                for c in t.columns
            ]
            cols += [
                f"FOREIGN KEY({fk.column}) REFERENCES {fk.ref_table}({fk.ref_column})"
                for fk in t.foreign_keys
            ]
            out.append(f"CREATE TABLE {name} (\n  " + ",\n  ".join(cols) + "\n);")
        for name in sorted(self.assocs):
            a = self.assocs[name]
            cols = ["id INTEGER PRIMARY KEY", "owner_id INTEGER NOT NULL"]
            if a.ordered:
                cols.append("position INTEGER NOT NULL")
            if a.target_table:
                cols.append("target_id INTEGER")
                cols.append(
                    f"FOREIGN KEY(target_id) REFERENCES {a.target_table}(id)"
                )
            else:
                cols.append(f"target_value {a.value_kind}")
            cols.append(
                f"FOREIGN KEY(owner_id) REFERENCES {a.owner_table}(id)"
            )
            out.append(f"CREATE TABLE {name} (\n  " + ",\n  ".join(cols) + "\n);")
        return "\n".join(out) + "\n"


def _snake(name: str) -> str:
    out = []
    for i, ch in enumerate(name):
        if ch.isupper() and i > 0 and (not name[i - 1].isupper()):
            out.append("_")
        out.append(ch.lower())
    return "".join(out)


def _effective_attrs(cls: ClassDef, properties) -> list:
    """Own attribute specs plus properties whose domain is exactly cls."""
    attrs = list(cls.attributes)
    for prop in properties:
        if prop.domain is cls:
            attrs.append(
                AttributeSpec(
                    prop.name,
                    prop.range,
                    "one" if (prop.kind == "data" and prop.functional) or
                             (prop.kind == "object" and prop.functional) else "many",
                    ordered=False,
                )
            )
    return attrs


def _primary_parent(cls: ClassDef, mapped: dict):
    for sup in cls.superclasses:
        if sup.name in mapped:
            return sup
    return None


def derive_schema(classes, properties=()) -> Schema:
    """Deterministic relational mapping of the class definitions."""
    schema = Schema()
    properties = list(properties)
    seen: dict[int, str] = {}
    ordered_classes = sorted(
        {id(c): c for c in classes}.values(), key=lambda c: (len(c.closure), c.name)
    )
    for cls in ordered_classes:
        if id(cls) in seen:
            continue
        seen[id(cls)] = cls.name
        table_name = _snake(cls.name)
        table = TableDef(name=table_name, class_name=cls.name)
        parent = _primary_parent(cls, schema.class_table)
        parent_is_role = parent is not None and parent.is_role
        if cls.is_role and not parent_is_role:
            # role root: composition link to the identity class's root table
            identity_root = schema.chain_of(cls.role_for.name)[0].name
            table.is_root = True
            table.is_role_root = True
            table.identity_table = identity_root
            table.columns.append(Column("kind", "TEXT", nullable=False))
            table.columns.append(Column("holder_id", "INTEGER", nullable=False))
            table.foreign_keys.append(ForeignKey("holder_id", identity_root))
        elif parent is None:
            table.is_root = True
            table.columns.append(Column("uid", "TEXT", nullable=False))
            table.columns.append(Column("iri", "TEXT"))
            table.columns.append(Column("kind", "TEXT", nullable=False))
        else:
            table.parent = schema.class_table[parent.name]
            table.foreign_keys.append(ForeignKey("id", table.parent))
        for spec in _effective_attrs(cls, properties):
            _map_attribute(schema, table, spec)
        schema.tables[table.name] = table
        schema.class_table[cls.name] = table.name
    return schema


def _map_attribute(schema: Schema, table: TableDef, spec: AttributeSpec) -> None:
    if spec.name in _RESERVED:
        raise UnmappableKind(f"attribute name {spec.name!r} is reserved")
    if spec.cardinality == "one":
        if isinstance(spec.range, ScalarKind):
            table.columns.append(Column(spec.name, _SQL_KIND[spec.range]))
        elif isinstance(spec.range, ClassDef):
            col = f"{spec.name}_id"
            table.columns.append(Column(col, "INTEGER"))
            table.foreign_keys.append(
                ForeignKey(col, _snake(_root_class_name(spec.range, schema)))
            )
        else:
            raise UnmappableKind(f"attribute {spec.name!r} has unmappable range")
        return
    assoc_name = f"{table.name}_{_snake(spec.name)}"
    if isinstance(spec.range, ScalarKind):
        schema.assocs[assoc_name] = AssocDef(
            assoc_name, table.name, spec.name, spec.ordered,
            value_kind=_SQL_KIND[spec.range],
        )
    elif isinstance(spec.range, ClassDef):
        schema.assocs[assoc_name] = AssocDef(
            assoc_name, table.name, spec.name, spec.ordered,
            target_table=_snake(_root_class_name(spec.range, schema)),
        )
    else:
        raise UnmappableKind(f"attribute {spec.name!r} has unmappable range")


def _root_class_name(cls: ClassDef, schema: Schema) -> str:
    """Identity root of a class: role values persist as their holders, so
    role ranges resolve through role_for."""
    node = cls
    while True:
        if node.is_role:
            node = node.role_for
            continue
        concrete = [s for s in node.superclasses if not s.is_role]
        if not concrete:
            return node.name
        node = concrete[0]


# --- store drivers ----------------------------------------------------------------


class MemoryStore:
    """Dict-backed store for tests; rows are plain dicts keyed by id."""

    def __init__(self):
        self.schema: Optional[Schema] = None
        self.tables: dict[str, dict[int, dict]] = {}
        self._next: dict[str, int] = {}

    def create_schema(self, schema: Schema) -> None:
        self.schema = schema
        for name in list(schema.tables) + list(schema.assocs):
            self.tables[name] = {}
            self._next[name] = 1

    def _table(self, table: str) -> dict:
        if table not in self.tables:
            raise StoreError(f"no table {table!r}")
        return self.tables[table]

    def insert(self, table: str, row: dict) -> int:
        rows = self._table(table)
        pk = row.get("id")
        if pk is None:
            pk = self._next[table]
            self._next[table] = pk + 1
        elif pk in rows:
            raise StoreError(f"{table}: duplicate key {pk}")
        else:
            self._next[table] = max(self._next[table], pk + 1)
        rows[pk] = {**row, "id": pk}
        return pk

    def update(self, table: str, pk: int, values: dict) -> None:
        rows = self._table(table)
        if pk not in rows:
            raise StoreError(f"{table}: no row {pk}")
        rows[pk].update(values)

    def get(self, table: str, pk: int) -> Optional[dict]:
        return self._table(table).get(pk)

    def select(self, table: str, where: Optional[dict] = None) -> list:
        out = []
        for row in self._table(table).values():
            if where and any(row.get(k) != v for k, v in where.items()):
                continue
            out.append(dict(row))
        out.sort(key=lambda r: r["id"])
        return out

    def delete(self, table: str, pk: int) -> None:
        self._table(table).pop(pk, None)

    def dump(self) -> dict:
        return {name: {pk: dict(r) for pk, r in rows.items()}
                for name, rows in self.tables.items()}


class SqliteStore:
    """Reference SQL backend over the stdlib sqlite3 driver."""

    def __init__(self, path: str = ":memory:"):
        self.conn = sqlite3.connect(path)
        self.conn.row_factory = sqlite3.Row
        self.schema: Optional[Schema] = None

    def create_schema(self, schema: Schema) -> None:
        self.schema = schema
        try:
            self.conn.executescript(schema.ddl())
            self.conn.commit()
        except sqlite3.Error as e:
            raise StoreError(str(e)) from e

    def insert(self, table: str, row: dict) -> int:
        cols = ", ".join(row)
        marks = ", ".join("?" for _ in row)
        try:
            cur = self.conn.execute(
                f"INSERT INTO {table} ({cols}) VALUES ({marks})",
                [_to_sql(v) for v in row.values()],
            )
        except sqlite3.Error as e:
            raise StoreError(f"{table}: {e}") from e
        return cur.lastrowid if "id" not in row else row["id"]

    def update(self, table: str, pk: int, values: dict) -> None:
        if not values:
            return
        sets = ", ".join(f"{k} = ?" for k in values)
        try:
            self.conn.execute(
                f"UPDATE {table} SET {sets} WHERE id = ?",
                [_to_sql(v) for v in values.values()] + [pk],
            )
        except sqlite3.Error as e:
            raise StoreError(f"{table}: {e}") from e

    def get(self, table: str, pk: int) -> Optional[dict]:
        cur = self.conn.execute(f"SELECT * FROM {table} WHERE id = ?", (pk,))
        row = cur.fetchone()
        return dict(row) if row else None

    def select(self, table: str, where: Optional[dict] = None) -> list:
        sql = f"SELECT * FROM {table}"
        args: list = []
        if where:
            parts = []
            for k, v in where.items():
                if v is None:
                    parts.append(f"{k} IS NULL")
                else:
                    parts.append(f"{k} = ?")
                    args.append(_to_sql(v))
            sql += " WHERE " + " AND ".join(parts)
        sql += " ORDER BY id"
        try:
            return [dict(r) for r in self.conn.execute(sql, args)]
        except sqlite3.Error as e:
            raise StoreError(f"{table}: {e}") from e

    def delete(self, table: str, pk: int) -> None:
        self.conn.execute(f"DELETE FROM {table} WHERE id = ?", (pk,))

    def commit(self) -> None:
        self.conn.commit()


def _to_sql(v):
    if isinstance(v, bool):
        return int(v)
    return v


# --- object graph persistence --------------------------------------------------------


def _home_class(ind: Individual) -> ClassDef:
    """Most specific declared non-role class, name-tiebreak for determinism."""
    candidates = [c for c in ind.declared_types if not c.is_role]
    if not candidates:
        candidates = [c for c in ind.inferred_types if not c.is_role]
    if not candidates:
        raise SchemaMismatch(f"{ind.id} has no persistable class")
    minimal = [
        c for c in candidates
        if not any(o is not c and c in o.closure for o in candidates)
    ]
    return sorted(minimal, key=lambda c: c.name)[0]


def _most_specific_role(binding_cls: ClassDef) -> ClassDef:
    return binding_cls


def save_graph(roots, store, schema: Schema, kb: KnowledgeBase) -> dict:
    """Persist the reachable closure once per identity; two-phase insert
    defers reference columns and association rows so cycles close cleanly.
    Returns the identity map (engine id -> row key)."""
    if store.schema is None:
        raise SchemaMismatch("store has no schema installed")
    closure: dict[str, Individual] = {}
    frontier = list(roots)
    while frontier:
        ind = frontier.pop(0)
        if ind.id in closure:
            continue
        closure[ind.id] = ind
        for values in ind.assertions.values():
            for v in values:
                if isinstance(v, Individual) and v.id not in closure:
                    frontier.append(v)

    ordered = sorted(closure.values(), key=lambda i: i.id)
    id_map: dict[str, int] = {}

    # phase 1: node rows with scalars only
    for ind in ordered:
        id_map[ind.id] = _upsert_node(ind, store, schema, kb)

    # phase 2: reference columns, association rows, role rows
    for ind in ordered:
        _write_references(ind, store, schema, kb, id_map)
        _write_roles(ind, store, schema, kb, id_map)
    if hasattr(store, "commit"):
        store.commit()
    return id_map


def _chain_values(ind_values, chain, kb):
    """Distribute single-valued scalars onto the owning tables of a chain;
    reference columns are filled in phase two."""
    per_table: dict[str, dict] = {t.name: {} for t in chain}
    for table in chain:
        cls = kb.get_class(table.class_name)
        for spec in _effective_attrs(cls, kb.properties.values()):
            if spec.cardinality != "one" or not isinstance(spec.range, ScalarKind):
                continue
            values = ind_values(spec.name)
            per_table[table.name][spec.name] = values[0] if values else None
    return per_table


def _upsert_node(ind: Individual, store, schema: Schema, kb) -> int:
    home = _home_class(ind)
    chain = schema.chain_of(home.name)
    root = chain[0]
    existing = store.select(root.name, {"uid": ind.id})
    per_table = _chain_values(ind.values, chain, kb)
    base = {"uid": ind.id, "iri": ind.iri, "kind": home.name}
    if existing:
        pk = existing[0]["id"]
        _update_if_changed(store, root.name, existing[0],
                           {**base, **per_table[root.name]})
        for table in chain[1:]:
            row = store.get(table.name, pk)
            desired = {**per_table[table.name], "id": pk}
            if row is None:
                store.insert(table.name, desired)
            else:
                _update_if_changed(store, table.name, row, desired)
        return pk
    pk = store.insert(root.name, {**base, **per_table[root.name]})
    for table in chain[1:]:
        store.insert(table.name, {**per_table[table.name], "id": pk})
    return pk


def _update_if_changed(store, table: str, row: dict, desired: dict) -> None:
    changes = {
        k: v for k, v in desired.items() if k != "id" and row.get(k) != v
    }
    if changes:
        store.update(table, row["id"], changes)


def _write_references(ind: Individual, store, schema, kb, id_map) -> None:
    home = _home_class(ind)
    chain = schema.chain_of(home.name)
    pk = id_map[ind.id]
    for table in chain:
        cls = kb.get_class(table.class_name)
        for spec in _effective_attrs(cls, kb.properties.values()):
            values = ind.values(spec.name)
            if spec.cardinality == "one":
                if isinstance(spec.range, ClassDef):
                    target = values[0] if values else None
                    fk = id_map.get(target.id) if isinstance(target, Individual) else None
                    row = store.get(table.name, pk)
                    _update_if_changed(
                        store, table.name, row or {"id": pk}, {f"{spec.name}_id": fk}
                    )
                continue
            _replace_assoc_rows(
                store, schema, f"{table.name}_{_snake(spec.name)}", pk, spec, values,
                id_map,
            )


def _replace_assoc_rows(store, schema, assoc_name, owner_pk, spec, values, id_map):
    assoc = schema.assocs.get(assoc_name)
    if assoc is None:
        raise SchemaMismatch(f"association {assoc_name!r} is not mapped")
    desired = []
    for pos, v in enumerate(values):
        row = {"owner_id": owner_pk}
        if assoc.ordered:
            row["position"] = pos
        if assoc.target_table:
            row["target_id"] = id_map[v.id] if isinstance(v, Individual) else None
        else:
            row["target_value"] = v
        desired.append(row)
    existing = store.select(assoc_name, {"owner_id": owner_pk})
    stripped = [{k: r[k] for k in r if k != "id"} for r in existing]
    want = [{k: _to_sql(v) if isinstance(v, bool) else v for k, v in r.items()}
            for r in desired]
    if _normalize_rows(stripped) == _normalize_rows(want):
        return
    for r in existing:
        store.delete(assoc_name, r["id"])
    for r in desired:
        store.insert(assoc_name, r)


def _normalize_rows(rows: list) -> list:
    return sorted(
        (tuple(sorted(r.items(), key=lambda kv: kv[0])) for r in rows)
    )


def _write_roles(ind: Individual, store, schema, kb, id_map) -> None:
    pk = id_map[ind.id]
    for binding in ind.role_bindings:
        role_cls = binding.role_class
        if role_cls.name not in schema.class_table:
            continue
        chain = schema.chain_of(role_cls.name)
        role_root = chain[0]
        existing = store.select(
            role_root.name, {"holder_id": pk, "kind": role_cls.name}
        )
        state = binding.role_state
        per_table: dict[str, dict] = {t.name: {} for t in chain}
        for table in chain:
            cls = kb.get_class(table.class_name)
            for spec in _effective_attrs(cls, kb.properties.values()):
                if spec.cardinality != "one":
                    continue
                values = state.get(spec.name, [])
                if isinstance(spec.range, ScalarKind):
                    per_table[table.name][spec.name] = values[0] if values else None
                elif values and isinstance(values[0], Individual):
                    per_table[table.name][f"{spec.name}_id"] = id_map.get(values[0].id)
        base = {"holder_id": pk, "kind": role_cls.name}
        if existing:
            role_pk = existing[0]["id"]
            _update_if_changed(store, role_root.name, existing[0],
                               {**base, **per_table[role_root.name]})
        else:
            role_pk = store.insert(
                role_root.name, {**base, **per_table[role_root.name]}
            )
            for table in chain[1:]:
                store.insert(table.name, {**per_table[table.name], "id": role_pk})
        for table in chain:
            cls = kb.get_class(table.class_name)
            for spec in _effective_attrs(cls, kb.properties.values()):
                if spec.cardinality == "one":
                    continue
                values = state.get(spec.name, [])
                _replace_assoc_rows(
                    store, schema, f"{table.name}_{_snake(spec.name)}",
                    role_pk, spec, values, id_map,
                )


# --- loading ---------------------------------------------------------------------------


def load_graph(store, schema: Schema, kb_defs: KnowledgeBase, cls_name: str,
               where: Optional[dict] = None, session: "LoadSession" = None) -> list:
    """Reconstruct individuals of a class (and subclasses) from the store.

    Identity is preserved: rows referencing one target yield one shared
    object; pass one LoadSession to several calls to share identities
    across them. Role-class loads return the holders carrying the role.
    Returns detached individuals sharing the definition objects of kb_defs.
    """
    loader = session or LoadSession(store, schema, kb_defs)
    cls = kb_defs.get_class(cls_name)
    if cls.is_role:
        role_root = schema.chain_of(cls_name)[0]
        rows = store.select(role_root.name)
        holders = []
        for row in rows:
            row_cls = _discriminated(kb_defs, role_root.name, row)
            if cls in row_cls.closure:
                holders.append(loader.node(role_root.identity_table, row["holder_id"]))
        return holders
    root = schema.chain_of(cls_name)[0]
    out = []
    for row in store.select(root.name, where):
        row_cls = _discriminated(kb_defs, root.name, row)
        if cls not in row_cls.closure:
            continue
        out.append(loader.node(root.name, row["id"]))
    return out


def _discriminated(kb_defs, table_name, row) -> ClassDef:
    name = row.get("kind")
    if name not in kb_defs.classes:
        raise UnknownDiscriminator(f"{table_name}.kind = {name!r}")
    return kb_defs.get_class(name)


class LoadSession:
    """Shared identity scope for one or more load_graph calls."""

    def __init__(self, store, schema: Schema, kb_defs: KnowledgeBase):
        self.store = store
        self.schema = schema
        self.kb = kb_defs
        self.memo: dict[tuple, Individual] = {}
        self.fresh = KnowledgeBase()
        self.fresh.classes = dict(kb_defs.classes)
        self.fresh.properties = dict(kb_defs.properties)

    def node(self, root_table: str, pk: int) -> Individual:
        key = (root_table, pk)
        if key in self.memo:
            return self.memo[key]
        row = self.store.get(root_table, pk)
        if row is None:
            raise StoreError(f"{root_table}: no row {pk}")
        cls_name = row["kind"]
        if cls_name not in self.kb.classes:
            raise UnknownDiscriminator(f"{root_table}.kind = {cls_name!r}")
        ind = Individual(id=row["uid"], iri=row["iri"], _kb=self.fresh)
        ind.declared_types.add(self.kb.get_class(cls_name))
        self.memo[key] = ind
        self.fresh.individuals[ind.id] = ind
        chain = self.schema.chain_of(cls_name)
        rows = {chain[0].name: row}
        for table in chain[1:]:
            sub = self.store.get(table.name, pk)
            if sub is None:
                raise StoreError(f"{table.name}: missing joined row {pk}")
            rows[table.name] = sub
        self._fill(ind, chain, rows, pk)
        self._attach_roles(ind, pk)
        return ind

    def _fill(self, ind: Individual, chain, rows, pk, state_only=False) -> None:
        for table in chain:
            cls = self.kb.get_class(table.class_name)
            row = rows[table.name]
            for spec in _effective_attrs(cls, self.kb.properties.values()):
                if spec.cardinality == "one":
                    if isinstance(spec.range, ScalarKind):
                        value = row.get(spec.name)
                        if value is not None:
                            ind.assertions.setdefault(spec.name, []).append(
                                _from_sql(value, spec.range)
                            )
                    else:
                        fk = row.get(f"{spec.name}_id")
                        if fk is not None:
                            target_root = self.schema.chain_of(
                                _root_class_name(spec.range, self.schema)
                            )[0]
                            ind.assertions.setdefault(spec.name, []).append(
                                self.node(target_root.name, fk)
                            )
                    continue
                assoc_name = f"{table.name}_{_snake(spec.name)}"
                assoc = self.schema.assocs[assoc_name]
                arows = self.store.select(assoc_name, {"owner_id": pk})
                if assoc.ordered:
                    arows.sort(key=lambda r: r["position"])
                values = []
                for r in arows:
                    if assoc.target_table:
                        values.append(self.node(assoc.target_table, r["target_id"]))
                    else:
                        values.append(_from_sql(r["target_value"], spec.range))
                if values:
                    ind.assertions.setdefault(spec.name, []).extend(values)

    def _attach_roles(self, ind: Individual, pk: int) -> None:
        from .kb import RoleBinding

        for role_root in self.schema.role_tables():
            home = _home_class(ind)
            if role_root.identity_table != self.schema.chain_of(home.name)[0].name:
                continue
            for row in self.store.select(role_root.name, {"holder_id": pk}):
                role_cls = self.kb.get_class(row["kind"])
                if ind.binding_for(role_cls) is not None:
                    continue
                binding = RoleBinding(holder=ind, role_class=role_cls)
                ind.role_bindings.append(binding)
                chain = self.schema.chain_of(role_cls.name)
                rows = {chain[0].name: row}
                for table in chain[1:]:
                    sub = self.store.get(table.name, row["id"])
                    rows[table.name] = sub or {}
                self._fill(ind, chain, rows, row["id"])


def _from_sql(value, kind: ScalarKind):
    if kind is ScalarKind.BOOLEAN:
        return bool(value)
    if kind is ScalarKind.DECIMAL:
        return float(value)
    return value


# --- tabular export -----------------------------------------------------------------


def export_tabular(store, schema: Schema, kb_defs: KnowledgeBase, cls_name: str) -> str:
    """One flat CSV row per instance: scalars inline, single-valued
    references as key columns; to-many collections live in their own
    association tables and are omitted here."""
    cls = kb_defs.get_class(cls_name)
    chain = schema.chain_of(cls.name)
    root = chain[0]
    header = ["id"]
    for table in chain:
        header.extend(table.column_names())
    buf = io.StringIO()
    writer = csv.writer(buf, quoting=csv.QUOTE_MINIMAL)
    writer.writerow(header)
    for row in store.select(root.name):
        row_cls = kb_defs.get_class(row["kind"])
        if cls not in row_cls.closure:
            continue
        values = [row["id"]]
        rows = {root.name: row}
        present = True
        for table in chain[1:]:
            sub = store.get(table.name, row["id"])
            if sub is None:
                present = False
                break
            rows[table.name] = sub
        if not present:
            continue
        for table in chain:
            for col in table.column_names():
                v = rows[table.name].get(col)
                values.append("" if v is None else v)
        writer.writerow(values)
    return buf.getvalue()
