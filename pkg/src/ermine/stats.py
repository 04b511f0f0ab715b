"""Frequency, support, and confidence as exact rationals.

The frequency of a query is |result tuples| / |reference domain of the
head variables|.  It is only defined for safe entity queries that are
valid for their head (validity guarantees a non-empty denominator on
instances without empty tables; an empty domain raises EmptyDomainError
rather than dividing by zero).

A rule F -> G pairs an antecedent query F with a consequent formula G
whose free variables all occur in F's head.  Support is the frequency of
the conjunction F AND G; confidence is |tuples(F AND G)| / |tuples(F)|.
All arithmetic uses fractions.Fraction; nothing here ever rounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .domains import reference_domain
from .entities import is_er_query, is_valid_for
from .errors import (
    DataError,
    EmptyDomainError,
    InvalidRuleError,
    NotEntityQueryError,
    NotValidError,
    UnsafeQueryError,
    ZeroAntecedentError,
)
from .evaluator import evaluate
from .formulas import (
    Atom,
    Constant,
    Formula,
    QueryDecl,
    Variable,
    conjunction,
    free_variables,
    normalize,
    to_text,
)
from .safety import check_safe
from .schema import DatabaseInstance


@dataclass(frozen=True)
class Frequency:
    numerator: int
    denominator: int

    def __post_init__(self):
        if self.denominator <= 0:
            raise ValueError("frequency denominator must be positive")

    @property
    def value(self) -> Fraction:
        return Fraction(self.numerator, self.denominator)

    def __str__(self):
        return f"{self.numerator}/{self.denominator} = {self.value}"


@dataclass(frozen=True)
class ErRule:
    antecedent: QueryDecl
    consequent: Formula

    def text(self) -> str:
        return f"{to_text(self.antecedent.body)} -> {to_text(self.consequent)}"


def checked_query(inst: DatabaseInstance, query: QueryDecl) -> QueryDecl:
    """Normalize and verify safety, entity status, and validity.

    Raises UnsafeQueryError, NotEntityQueryError, or NotValidError.
    """
    body = normalize(query.body)
    report = check_safe(body)
    if not report.safe:
        raise UnsafeQueryError(report)
    er = is_er_query(body, inst)
    if not er.is_er:
        raise NotEntityQueryError(er)
    validity = is_valid_for(body, query.variables)
    if not validity.valid:
        where = to_text(validity.failing) if validity.failing else to_text(body)
        raise NotValidError(
            f"query is not valid for ({', '.join(query.variables)}); "
            f"first failing subformula: {where}"
        )
    return QueryDecl(query.name, query.variables, body, source=query.source)


def frequency(inst: DatabaseInstance, query: QueryDecl) -> Frequency:
    """Exact |tuples| / |reference domain| for a valid entity query."""
    q = checked_query(inst, query)
    dom = reference_domain(inst, q.body, q.variables)
    if not dom.members:
        raise EmptyDomainError(
            f"reference domain of ({', '.join(q.variables)}) is empty"
        )
    rel = evaluate(inst, q)
    return Frequency(len(rel.rows), len(dom.members))


def rule_conjunction(rule: ErRule) -> QueryDecl:
    """The query F AND G over the antecedent's head."""
    head = set(rule.antecedent.variables)
    cons_free = set(free_variables(rule.consequent))
    if not cons_free <= head:
        stray = ", ".join(sorted(cons_free - head))
        raise InvalidRuleError(
            f"consequent variables not in the antecedent head: {stray}"
        )
    body = conjunction([rule.antecedent.body, rule.consequent])
    return QueryDecl(None, rule.antecedent.variables, body)


def support(inst: DatabaseInstance, rule: ErRule) -> Frequency:
    return frequency(inst, rule_conjunction(rule))


def confidence(inst: DatabaseInstance, rule: ErRule) -> Fraction:
    """|tuples(F AND G)| / |tuples(F)|; needs a non-empty antecedent."""
    conj = checked_query(inst, rule_conjunction(rule))
    antecedent_rows = evaluate(inst, rule.antecedent).rows
    if not antecedent_rows:
        raise ZeroAntecedentError(
            f"antecedent {to_text(rule.antecedent.body)} has no result tuples"
        )
    conj_rows = evaluate(inst, conj).rows
    return Fraction(len(conj_rows), len(antecedent_rows))


def itemset_frequency(
    inst: DatabaseInstance,
    items,
    transactions_table: str = "Transactions",
    link_table: str = "TransItems",
) -> Frequency:
    """Frequency of transactions containing all the given items.

    Expects a unary transactions table and a binary link table whose
    first field holds the transaction and whose second holds the item.
    The empty itemset has frequency 1 on a non-empty transactions table.
    """
    trans = inst.schema.table(transactions_table)
    link = inst.schema.table(link_table)
    if trans.arity != 1:
        raise DataError(f"{transactions_table} must have exactly one field")
    if link.arity != 2:
        raise DataError(f"{link_table} must have exactly two fields")
    var = Variable("X")
    parts: list[Formula] = [Atom(transactions_table, (var,))]
    for item in items:
        parts.append(Atom(link_table, (var, Constant(item))))
    query = QueryDecl("itemset", ("X",), conjunction(parts))
    return frequency(inst, query)
