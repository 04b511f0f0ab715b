"""Formula AST for the query language.

Formulas are built from table atoms and comparisons with NOT, AND
(n-ary), OR (binary), EXISTS, and FORALL.  Nodes are frozen dataclasses;
structural equality ignores source spans, so a parsed formula compares
equal to the same formula built programmatically.

``normalize`` rewrites every FORALL X. G into NOT EXISTS X. NOT G and
flattens nested ANDs, so downstream analyses only ever see maximal
conjunctions and existential quantifiers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

Span = tuple[int, int]

COMPARISON_OPS = ("=", "!=", "<", ">", "<=", ">=")
EQUALITY_OPS = ("=", "!=")
ORDER_OPS = ("<", ">", "<=", ">=")


@dataclass(frozen=True)
class Variable:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Constant:
    value: str | int

    def __str__(self):
        return format_constant(self.value)


Term = Variable | Constant


def format_constant(value) -> str:
    if type(value) is int:
        return str(value)
    escaped = value.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


class Formula:
    """Base class; concrete nodes are the dataclasses below."""

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True)
class Atom(Formula):
    predicate: str
    terms: tuple[Term, ...]
    span: Span | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Comparison(Formula):
    left: Term
    op: str
    right: Term
    span: Span | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.op not in COMPARISON_OPS:
            raise ValueError(f"unknown comparison operator {self.op!r}")


@dataclass(frozen=True)
class Not(Formula):
    body: Formula
    span: Span | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class And(Formula):
    conjuncts: tuple[Formula, ...]
    span: Span | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if len(self.conjuncts) < 2:
            raise ValueError("And needs at least two conjuncts")


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula
    span: Span | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Exists(Formula):
    var: str
    body: Formula
    span: Span | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Forall(Formula):
    var: str
    body: Formula
    span: Span | None = field(default=None, compare=False, repr=False)


def conjunction(parts, span=None) -> Formula:
    """Combine formulas into one conjunction, flattening nested Ands."""
    flat = []
    stack = list(parts)[::-1]
    while stack:
        p = stack.pop()
        if isinstance(p, And):
            stack.extend(reversed(p.conjuncts))
        else:
            flat.append(p)
    if not flat:
        raise ValueError("conjunction of nothing")
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat), span=span)


def conjuncts_of(f: Formula) -> tuple[Formula, ...]:
    """The conjuncts of a maximal conjunction; a non-And is one conjunct."""
    if isinstance(f, And):
        return f.conjuncts
    return (f,)


def free_variables(f: Formula) -> tuple[str, ...]:
    """Free variables in order of first syntactic occurrence."""
    seen: dict[str, None] = {}

    def walk(g, bound):
        if isinstance(g, Atom):
            for t in g.terms:
                if isinstance(t, Variable) and t.name not in bound:
                    seen.setdefault(t.name)
        elif isinstance(g, Comparison):
            for t in (g.left, g.right):
                if isinstance(t, Variable) and t.name not in bound:
                    seen.setdefault(t.name)
        elif isinstance(g, Not):
            walk(g.body, bound)
        elif isinstance(g, And):
            for c in g.conjuncts:
                walk(c, bound)
        elif isinstance(g, Or):
            walk(g.left, bound)
            walk(g.right, bound)
        elif isinstance(g, (Exists, Forall)):
            walk(g.body, bound | {g.var})
        else:
            raise TypeError(f"not a formula: {g!r}")

    walk(f, frozenset())
    return tuple(seen)


def subformulas(f: Formula):
    """Yield f and every subformula, pre-order."""
    yield f
    if isinstance(f, Not):
        yield from subformulas(f.body)
    elif isinstance(f, And):
        for c in f.conjuncts:
            yield from subformulas(c)
    elif isinstance(f, Or):
        yield from subformulas(f.left)
        yield from subformulas(f.right)
    elif isinstance(f, (Exists, Forall)):
        yield from subformulas(f.body)


def quantified_variables(f: Formula) -> frozenset[str]:
    return frozenset(
        g.var for g in subformulas(f) if isinstance(g, (Exists, Forall))
    )


def constants_of(f: Formula) -> frozenset:
    out = set()
    for g in subformulas(f):
        if isinstance(g, Atom):
            terms = g.terms
        elif isinstance(g, Comparison):
            terms = (g.left, g.right)
        else:
            continue
        for t in terms:
            if isinstance(t, Constant):
                out.add(t.value)
    return frozenset(out)


def normalize(f: Formula) -> Formula:
    """Rewrite FORALL via NOT EXISTS NOT and flatten nested conjunctions.

    The result is semantically equivalent, has the same free variables,
    and is a fixed point of this function.
    """
    if isinstance(f, (Atom, Comparison)):
        return f
    if isinstance(f, Not):
        return Not(normalize(f.body), span=f.span)
    if isinstance(f, And):
        return conjunction([normalize(c) for c in f.conjuncts], span=f.span)
    if isinstance(f, Or):
        return Or(normalize(f.left), normalize(f.right), span=f.span)
    if isinstance(f, Exists):
        return Exists(f.var, normalize(f.body), span=f.span)
    if isinstance(f, Forall):
        body = normalize(f.body)
        return Not(Exists(f.var, Not(body, span=f.span), span=f.span), span=f.span)
    raise TypeError(f"not a formula: {f!r}")


def _wrap(text: str) -> str:
    return f"({text})"


def to_text(f: Formula) -> str:
    """Render a formula; parsing the result reproduces the same AST."""
    if isinstance(f, Atom):
        return f"{f.predicate}({', '.join(str(t) for t in f.terms)})"
    if isinstance(f, Comparison):
        return f"{f.left} {f.op} {f.right}"
    if isinstance(f, Not):
        inner = to_text(f.body)
        if not isinstance(f.body, Atom):
            inner = _wrap(inner)
        return f"NOT {inner}"
    if isinstance(f, And):
        parts = []
        for c in f.conjuncts:
            text = to_text(c)
            # Quantifiers extend maximally right and OR binds more loosely
            # than AND, so those conjuncts need parentheses.
            if isinstance(c, (Or, Exists, Forall, And)):
                text = _wrap(text)
            parts.append(text)
        return " AND ".join(parts)
    if isinstance(f, Or):
        left = to_text(f.left)
        if isinstance(f.left, (Exists, Forall)):
            left = _wrap(left)
        right = to_text(f.right)
        if isinstance(f.right, Or):
            right = _wrap(right)
        return f"{left} OR {right}"
    if isinstance(f, Exists):
        return f"EXISTS {f.var}. {to_text(f.body)}"
    if isinstance(f, Forall):
        return f"FORALL {f.var}. {to_text(f.body)}"
    raise TypeError(f"not a formula: {f!r}")


@dataclass(frozen=True)
class QueryDecl:
    """A named query: declared head variables fix the result column order."""

    name: str | None
    variables: tuple[str, ...]
    body: Formula
    source: str | None = field(default=None, compare=False, repr=False)

    def text(self) -> str:
        head = ", ".join(self.variables)
        return f"{self.name or 'q'}({head}) := {to_text(self.body)}"

    def __str__(self):
        return self.text()
