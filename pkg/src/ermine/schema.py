"""Schema catalog and database instances.

A schema declares tables with typed fields.  Tables whose key is a single
field are entity tables; tables with a composite key are relationship
tables.  A field may reference the key field of an entity table, which is
how cross-table entity identity is declared (and checked, rather than
assumed from field names).

Entity fields are the key fields of entity tables plus every field that
references one.  The values stored in entity fields of an instance are its
entity constants.

Schema documents are JSON:

    {"tables": [{"name": "T",
                 "fields": [{"name": "f", "type": "string",
                             "key": true, "references": "U.g"}, ...]}, ...]}

``key`` defaults to false and ``references`` to absent.  Instances are one
CSV file per table (``<table>.csv``, RFC 4180, UTF-8) whose header row must
equal the declared field names in order.  Integer fields hold unquoted
decimal integers; there are no NULLs.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

from .errors import DataError, SchemaError

VALUE_TYPES = ("string", "integer")


@dataclass(frozen=True)
class FieldDecl:
    name: str
    value_type: str
    is_key: bool = False
    references: str | None = None


@dataclass(frozen=True)
class TableDecl:
    name: str
    fields: tuple[FieldDecl, ...]

    def __post_init__(self):
        if not self.fields:
            raise SchemaError(f"table {self.name!r} declares no fields")
        seen = set()
        for f in self.fields:
            if f.name in seen:
                raise SchemaError(f"table {self.name!r} repeats field {f.name!r}")
            seen.add(f.name)
            if f.value_type not in VALUE_TYPES:
                raise SchemaError(
                    f"field {self.name}.{f.name} has unknown type {f.value_type!r}"
                )
        if not self.key_fields:
            raise SchemaError(f"table {self.name!r} has no key fields")

    @property
    def key_fields(self) -> tuple[FieldDecl, ...]:
        return tuple(f for f in self.fields if f.is_key)

    @property
    def arity(self) -> int:
        return len(self.fields)

    @property
    def is_entity(self) -> bool:
        """Entity tables are exactly the tables with a single-field key."""
        return len(self.key_fields) == 1

    def field_named(self, name: str) -> FieldDecl:
        for f in self.fields:
            if f.name == name:
                return f
        raise SchemaError(f"table {self.name!r} has no field {name!r}")


@dataclass(frozen=True)
class Schema:
    tables: tuple[TableDecl, ...]

    def __post_init__(self):
        names = [t.name for t in self.tables]
        if len(set(names)) != len(names):
            dup = sorted({n for n in names if names.count(n) > 1})
            raise SchemaError(f"duplicate table names: {', '.join(dup)}")
        for t in self.tables:
            for f in t.fields:
                if f.references is None:
                    continue
                if "." not in f.references:
                    raise SchemaError(
                        f"{t.name}.{f.name}: references must be 'Table.Field', "
                        f"got {f.references!r}"
                    )
                tname, fname = f.references.split(".", 1)
                target = self._find_table(tname)
                if target is None:
                    raise SchemaError(
                        f"{t.name}.{f.name} references unknown table {tname!r}"
                    )
                if not target.is_entity:
                    raise SchemaError(
                        f"{t.name}.{f.name} references {f.references}, but "
                        f"{tname} is not an entity table"
                    )
                tfield = target.field_named(fname)
                if not tfield.is_key:
                    raise SchemaError(
                        f"{t.name}.{f.name} references non-key field {f.references}"
                    )
                if tfield.value_type != f.value_type:
                    raise SchemaError(
                        f"{t.name}.{f.name} ({f.value_type}) references "
                        f"{f.references} ({tfield.value_type}); types must match"
                    )

    def _find_table(self, name: str) -> TableDecl | None:
        for t in self.tables:
            if t.name == name:
                return t
        return None

    def table(self, name: str) -> TableDecl:
        t = self._find_table(name)
        if t is None:
            raise SchemaError(f"unknown table {name!r}")
        return t

    def has_table(self, name: str) -> bool:
        return self._find_table(name) is not None

    @property
    def entity_tables(self) -> tuple[TableDecl, ...]:
        return tuple(t for t in self.tables if t.is_entity)


def entity_fields(schema: Schema) -> frozenset[str]:
    """Return ``table.field`` names of all entity fields.

    These are the key fields of entity tables together with every field
    that references such a key.
    """
    out = set()
    for t in schema.tables:
        for f in t.fields:
            if t.is_entity and f.is_key:
                out.add(f"{t.name}.{f.name}")
            if f.references is not None:
                out.add(f"{t.name}.{f.name}")
    return frozenset(out)


def load_schema(doc) -> Schema:
    """Build a Schema from a parsed schema document (see module docstring)."""
    if not isinstance(doc, dict) or "tables" not in doc:
        raise SchemaError("schema document must be an object with a 'tables' list")
    raw_tables = doc["tables"]
    if not isinstance(raw_tables, list):
        raise SchemaError("'tables' must be a list")
    tables = []
    for raw in raw_tables:
        if not isinstance(raw, dict) or "name" not in raw or "fields" not in raw:
            raise SchemaError("each table needs 'name' and 'fields'")
        fields = []
        for rf in raw["fields"]:
            if not isinstance(rf, dict) or "name" not in rf or "type" not in rf:
                raise SchemaError(
                    f"table {raw['name']!r}: each field needs 'name' and 'type'"
                )
            fields.append(
                FieldDecl(
                    name=rf["name"],
                    value_type=rf["type"],
                    is_key=bool(rf.get("key", False)),
                    references=rf.get("references"),
                )
            )
        tables.append(TableDecl(raw["name"], tuple(fields)))
    return Schema(tuple(tables))


def load_schema_file(path) -> Schema:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON: {exc}") from exc
    return load_schema(doc)


@dataclass(frozen=True)
class DatabaseInstance:
    """Immutable instance: one finite relation (set of tuples) per table."""

    schema: Schema
    relations: dict[str, frozenset[tuple]]
    entity_constants: frozenset = field(default=frozenset(), compare=False)
    active_domain: frozenset = field(default=frozenset(), compare=False)

    def rows(self, table: str) -> frozenset[tuple]:
        try:
            return self.relations[table]
        except KeyError:
            raise DataError(f"instance has no table {table!r}") from None


def _check_value(table: TableDecl, f: FieldDecl, value, where: str):
    # type() rather than isinstance(): bool is a subclass of int.
    if f.value_type == "integer" and type(value) is not int:
        raise DataError(
            f"{where}: field {table.name}.{f.name} expects an integer, "
            f"got {value!r}"
        )
    if f.value_type == "string" and type(value) is not str:
        raise DataError(
            f"{where}: field {table.name}.{f.name} expects a string, got {value!r}"
        )


def load_instance(schema: Schema, tables) -> DatabaseInstance:
    """Validate row data (mapping of table name to iterable of row tuples).

    Checks arity and value types per field, key uniqueness, and referential
    integrity, then computes the entity constants and the active domain.
    """
    relations: dict[str, frozenset[tuple]] = {}
    extra = set(tables) - {t.name for t in schema.tables}
    if extra:
        raise DataError(f"data for undeclared tables: {', '.join(sorted(extra))}")
    for t in schema.tables:
        raw_rows = tables.get(t.name, ())
        rows = set()
        keys_seen = set()
        key_idx = [i for i, f in enumerate(t.fields) if f.is_key]
        for rno, raw in enumerate(raw_rows, start=1):
            row = tuple(raw)
            where = f"{t.name} row {rno}"
            if len(row) != t.arity:
                raise DataError(
                    f"{where}: expected {t.arity} values, got {len(row)}"
                )
            for f, v in zip(t.fields, row):
                _check_value(t, f, v, where)
            key = tuple(row[i] for i in key_idx)
            if key in keys_seen:
                raise DataError(f"{where}: duplicate key {key!r}")
            keys_seen.add(key)
            rows.add(row)
        relations[t.name] = frozenset(rows)

    # Referential integrity: every referencing value must exist as a key
    # value of the referenced table.
    for t in schema.tables:
        for i, f in enumerate(t.fields):
            if f.references is None:
                continue
            tname, fname = f.references.split(".", 1)
            target = schema.table(tname)
            j = [k for k, g in enumerate(target.fields) if g.name == fname][0]
            present = {row[j] for row in relations[tname]}
            for row in relations[t.name]:
                if row[i] not in present:
                    raise DataError(
                        f"{t.name}.{f.name} value {row[i]!r} has no matching "
                        f"{f.references} row"
                    )

    ents = set()
    efields = entity_fields(schema)
    for t in schema.tables:
        positions = [
            i for i, f in enumerate(t.fields) if f"{t.name}.{f.name}" in efields
        ]
        for row in relations[t.name]:
            for i in positions:
                ents.add(row[i])
    active = {v for rows in relations.values() for row in rows for v in row}
    return DatabaseInstance(
        schema, relations, frozenset(ents), frozenset(active)
    )


def is_entity_constant(inst: DatabaseInstance, value) -> bool:
    return value in inst.entity_constants


def _parse_cell(table: TableDecl, f: FieldDecl, cell: str, where: str):
    if f.value_type == "integer":
        try:
            return int(cell)
        except ValueError:
            raise DataError(
                f"{where}: field {table.name}.{f.name} expects an integer, "
                f"got {cell!r}"
            ) from None
    return cell


def load_instance_dir(schema: Schema, directory) -> DatabaseInstance:
    """Load one ``<table>.csv`` per schema table from a directory."""
    tables = {}
    for t in schema.tables:
        path = os.path.join(directory, f"{t.name}.csv")
        if not os.path.exists(path):
            raise DataError(f"missing data file {path}")
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise DataError(f"{path}: empty file, expected a header row") from None
            expected = [f.name for f in t.fields]
            if header != expected:
                raise DataError(
                    f"{path}: header {header!r} does not match declared fields "
                    f"{expected!r}"
                )
            rows = []
            for rno, cells in enumerate(reader, start=2):
                if len(cells) != t.arity:
                    raise DataError(
                        f"{path} line {rno}: expected {t.arity} values, "
                        f"got {len(cells)}"
                    )
                rows.append(
                    tuple(
                        _parse_cell(t, f, c, f"{path} line {rno}")
                        for f, c in zip(t.fields, cells)
                    )
                )
        tables[t.name] = rows
    return load_instance(schema, tables)


def save_instance_dir(inst: DatabaseInstance, directory) -> None:
    """Write one ``<table>.csv`` per table; inverse of load_instance_dir."""
    os.makedirs(directory, exist_ok=True)
    for t in inst.schema.tables:
        path = os.path.join(directory, f"{t.name}.csv")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([f.name for f in t.fields])
            for row in sorted(
                inst.relations[t.name],
                key=lambda r: tuple((type(v) is str, v) for v in r),
            ):
                writer.writerow(row)
