"""Hypothesis generators: small random instances plus queries over them.

Every generated query has the single free variable X.  Two families:

* safe_query_cases() makes safe (not necessarily entity) queries with
  constants, repeated variables, disjunctions, negation, and variables
  bound only through equalities.  Used for differential evaluation.
* valid_query_cases() / split_cases() make entity queries whose atoms
  hold only distinct variables with X in an entity position, so they are
  safe, entity, and valid for X by construction, and their reference
  domains are non-empty whenever no table is empty.

Instances stay tiny on purpose (at most four tables, four rows per
table, five distinct constants) so the enumeration oracle stays cheap.
"""

from hypothesis import strategies as st

from ermine import (
    Atom,
    Comparison,
    Constant,
    Exists,
    Not,
    Or,
    QueryDecl,
    Variable,
    conjunction,
    entity_fields,
    load_instance,
    load_schema,
)

NAMES = ("a", "b", "c")
WEIGHTS = (1, 2)

SCHEMAS = {
    "single": load_schema(
        {
            "tables": [
                {"name": "P", "fields": [{"name": "id", "type": "string", "key": True}]},
            ]
        }
    ),
    "linked": load_schema(
        {
            "tables": [
                {"name": "P", "fields": [{"name": "id", "type": "string", "key": True}]},
                {"name": "Q", "fields": [{"name": "id", "type": "string", "key": True}]},
                {
                    "name": "L",
                    "fields": [
                        {"name": "p", "type": "string", "key": True, "references": "P.id"},
                        {"name": "q", "type": "string", "key": True, "references": "Q.id"},
                    ],
                },
            ]
        }
    ),
    "graph": load_schema(
        {
            "tables": [
                {"name": "N", "fields": [{"name": "id", "type": "string", "key": True}]},
                {
                    "name": "E",
                    "fields": [
                        {"name": "s", "type": "string", "key": True, "references": "N.id"},
                        {"name": "t", "type": "string", "key": True, "references": "N.id"},
                        {"name": "w", "type": "integer"},
                    ],
                },
            ]
        }
    ),
    "four": load_schema(
        {
            "tables": [
                {"name": "P", "fields": [{"name": "id", "type": "string", "key": True}]},
                {"name": "Q", "fields": [{"name": "id", "type": "string", "key": True}]},
                {
                    "name": "L",
                    "fields": [
                        {"name": "p", "type": "string", "key": True, "references": "P.id"},
                        {"name": "q", "type": "string", "key": True, "references": "Q.id"},
                    ],
                },
                {
                    "name": "M",
                    "fields": [
                        {"name": "q", "type": "string", "key": True, "references": "Q.id"},
                        {"name": "p", "type": "string", "key": True, "references": "P.id"},
                    ],
                },
            ]
        }
    ),
}


def _anchor_positions(schema):
    efields = entity_fields(schema)
    out = []
    for t in schema.tables:
        for i, f in enumerate(t.fields):
            if f"{t.name}.{f.name}" in efields:
                out.append((t.name, i))
    return out


ANCHORS = {key: _anchor_positions(schema) for key, schema in SCHEMAS.items()}


@st.composite
def instances(draw, schema_key=None, non_empty=False):
    key = schema_key or draw(st.sampled_from(sorted(SCHEMAS)))
    schema = SCHEMAS[key]
    tables = {}
    for t in schema.tables:
        if t.is_entity:
            ids = draw(
                st.lists(
                    st.sampled_from(NAMES),
                    min_size=1 if non_empty else 0,
                    max_size=3,
                    unique=True,
                )
            )
            tables[t.name] = [(v,) for v in ids]
    for t in schema.tables:
        if t.is_entity:
            continue
        pools = []
        for f in t.fields:
            if f.references:
                ref_table = f.references.split(".", 1)[0]
                pools.append(sorted(row[0] for row in tables[ref_table]))
            else:
                pools.append(list(WEIGHTS))
        if any(not pool for pool in pools):
            tables[t.name] = []
            continue
        key_idx = [i for i, f in enumerate(t.fields) if f.is_key]
        rows = draw(
            st.lists(
                st.tuples(*[st.sampled_from(pool) for pool in pools]),
                min_size=1 if non_empty else 0,
                max_size=4,
                unique_by=lambda row, idx=tuple(key_idx): tuple(row[i] for i in idx),
            )
        )
        tables[t.name] = rows
    return key, load_instance(schema, tables)


@st.composite
def _pattern(draw, key, var="X", plain=True, allow_negation=True, alias=False):
    """One existentially closed conjunction whose free variable is `var`.

    With plain=True every atom holds distinct fresh variables besides the
    anchored `var`, so the projection onto `var` covers a whole column.
    Otherwise constants and repeated bound variables may appear.
    """
    schema = SCHEMAS[key]
    used = []  # (name, value_type) of fresh variables, in first-use order

    def fresh(value_type):
        name = f"V{len(used) + 1}"
        used.append((name, value_type))
        return name

    def term_for(field):
        if not plain:
            same_type = [n for n, vt in used if vt == field.value_type]
            options = ["fresh"]
            if same_type:
                options.append("reuse")
            options.append("const")
            choice = draw(st.sampled_from(options))
            if choice == "reuse":
                return Variable(draw(st.sampled_from(same_type)))
            if choice == "const":
                pool = NAMES if field.value_type == "string" else WEIGHTS
                return Constant(draw(st.sampled_from(pool)))
        return Variable(fresh(field.value_type))

    def anchored_atom():
        table_name, pos = draw(st.sampled_from(ANCHORS[key]))
        table = schema.table(table_name)
        terms = tuple(
            Variable(var) if i == pos else term_for(f)
            for i, f in enumerate(table.fields)
        )
        return Atom(table_name, terms)

    conjs = [anchored_atom()]
    if draw(st.booleans()):
        conjs.append(anchored_atom())
    ints = [n for n, vt in used if vt == "integer"]
    if ints and draw(st.booleans()):
        conjs.append(
            Comparison(
                Variable(draw(st.sampled_from(ints))),
                draw(st.sampled_from(("<", ">", "<=", ">=", "=", "!="))),
                Constant(draw(st.sampled_from(WEIGHTS))),
            )
        )
    if allow_negation and draw(st.booleans()):
        negand = draw(_pattern(key, var=var, plain=plain, allow_negation=False))
        conjs.append(Not(negand))
    if alias and draw(st.booleans()):
        # A variable bound only through an equality with the anchor.
        conjs.append(Comparison(Variable(fresh("string")), "=", Variable(var)))
    body = conjunction(conjs)
    for name, _ in reversed(used):
        body = Exists(name, body)
    return body


@st.composite
def _safe_body(draw, key):
    kind = draw(st.sampled_from(("pattern", "alias", "eq", "or", "or-eq")))
    if kind == "pattern":
        return draw(_pattern(key, plain=False))
    if kind == "alias":
        return draw(_pattern(key, plain=False, alias=True))
    if kind == "eq":
        value = draw(st.sampled_from(NAMES + WEIGHTS))
        return Comparison(Variable("X"), "=", Constant(value))
    if kind == "or":
        return Or(draw(_pattern(key, plain=False)), draw(_pattern(key, plain=False)))
    return Or(
        draw(_pattern(key, plain=False)),
        Comparison(Variable("X"), "=", Constant(draw(st.sampled_from(NAMES)))),
    )


@st.composite
def safe_query_cases(draw):
    key, inst = draw(instances())
    body = draw(_safe_body(key))
    return inst, QueryDecl("q", ("X",), body)


@st.composite
def valid_query_cases(draw, non_empty=True):
    key, inst = draw(instances(non_empty=non_empty))
    if draw(st.booleans()):
        body = draw(_pattern(key))
    else:
        body = Or(draw(_pattern(key)), draw(_pattern(key)))
    return inst, QueryDecl("q", ("X",), body)


@st.composite
def split_cases(draw):
    """An instance without empty tables plus two closed patterns over X."""
    key, inst = draw(instances(non_empty=True))
    s = draw(_pattern(key, allow_negation=False))
    f = draw(_pattern(key, allow_negation=False))
    return inst, s, f
