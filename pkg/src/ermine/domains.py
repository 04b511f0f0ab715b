"""Reference domains: the denominators for frequency statistics.

The reference domain of a formula for a variable list is built by
structural recursion and collects, per subformula, the tuples the
variables could range over:

* an atom mentioning all the variables contributes its own satisfying
  tuples projected onto them (an atom missing some variable contributes
  nothing);
* a lone comparison contributes {(c,)} when it equates the single
  requested variable with the constant c, else nothing;
* a conjunction whose conjuncts equate every requested variable with a
  constant contributes those constant tuples on top of the domain of the
  remaining conjuncts; any other conjunction contributes the union over
  its conjuncts;
* OR contributes the union of both branches;
* NOT is transparent (the domain of the negated formula);
* EXISTS is transparent unless it captures a requested variable, in
  which case it contributes nothing.

Logically equivalent formulas may have different reference domains; the
construction is deliberately syntactic so that a query's denominator
reflects the tables and selections it actually names.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .formulas import (
    And,
    Atom,
    Comparison,
    Constant,
    Exists,
    Forall,
    Formula,
    Not,
    Or,
    Variable,
    conjunction,
    to_text,
)
from .schema import DatabaseInstance


@dataclass(frozen=True)
class ReferenceDomain:
    variables: tuple[str, ...]
    members: frozenset[tuple]


@dataclass
class DomainTrace:
    """One node of the recursion tree behind a reference domain."""

    formula: str
    rule: str
    members: frozenset[tuple]
    children: list[DomainTrace] = field(default_factory=list)

    def render(self, indent: int = 0) -> str:
        pad = "  " * indent
        shown = ", ".join(
            "(" + ", ".join(str(v) for v in m) + ")"
            for m in sorted(
                self.members, key=lambda m: tuple((type(v) is str, v) for v in m)
            )
        )
        lines = [f"{pad}{self.rule}: {self.formula} -> {{{shown}}}"]
        for child in self.children:
            lines.append(child.render(indent + 1))
        return "\n".join(lines)


def reference_domain(
    inst: DatabaseInstance, f: Formula, variables
) -> ReferenceDomain:
    members, _ = _dom(inst, f, tuple(variables), trace=False)
    return ReferenceDomain(tuple(variables), members)


def explain_reference_domain(
    inst: DatabaseInstance, f: Formula, variables
) -> tuple[ReferenceDomain, DomainTrace]:
    members, node = _dom(inst, f, tuple(variables), trace=True)
    return ReferenceDomain(tuple(variables), members), node


def _dom(inst, f: Formula, variables: tuple[str, ...], trace: bool):
    if not variables:
        raise ValueError("reference domain needs a non-empty variable list")
    if isinstance(f, Atom):
        names = {t.name for t in f.terms if isinstance(t, Variable)}
        if set(variables) <= names:
            members = _atom_projection(inst, f, variables)
            return members, _node(trace, f, "atom-projection", members)
        return frozenset(), _node(trace, f, "atom-missing-variable", frozenset())
    if isinstance(f, Comparison):
        members = frozenset()
        if len(variables) == 1 and f.op == "=":
            for a, b in ((f.left, f.right), (f.right, f.left)):
                if (
                    isinstance(a, Variable)
                    and a.name == variables[0]
                    and isinstance(b, Constant)
                ):
                    members = frozenset({(b.value,)})
                    break
        rule = "comparison-constant" if members else "comparison-empty"
        return members, _node(trace, f, rule, members)
    if isinstance(f, Not):
        members, child = _dom(inst, f.body, variables, trace)
        return members, _node(trace, f, "negation-transparent", members, child)
    if isinstance(f, Or):
        left, lnode = _dom(inst, f.left, variables, trace)
        right, rnode = _dom(inst, f.right, variables, trace)
        members = left | right
        return members, _node(trace, f, "disjunction-union", members, lnode, rnode)
    if isinstance(f, Exists):
        if f.var in variables:
            return frozenset(), _node(
                trace, f, "quantifies-requested-variable", frozenset()
            )
        members, child = _dom(inst, f.body, variables, trace)
        return members, _node(trace, f, "quantifier-transparent", members, child)
    if isinstance(f, Forall):
        raise ValueError("reference_domain needs a normalized formula")
    if isinstance(f, And):
        constants = _cover_constants(f, variables)
        if constants is not None:
            rest = [
                c
                for c in f.conjuncts
                if not _is_cover_equality(c, set(variables))
            ]
            tuples = frozenset(itertools.product(*constants))
            if rest:
                base, child = _dom(inst, conjunction(rest), variables, trace)
                members = base | tuples
                return members, _node(
                    trace, f, "conjunction-equality-cover", members, child
                )
            return tuples, _node(
                trace, f, "conjunction-equality-cover", tuples
            )
        members = frozenset()
        children = []
        for c in f.conjuncts:
            sub, child = _dom(inst, c, variables, trace)
            members = members | sub
            if child is not None:
                children.append(child)
        return members, _node(trace, f, "conjunction-union", members, *children)
    raise TypeError(f"not a formula: {f!r}")


def _atom_projection(inst, atom: Atom, variables: tuple[str, ...]) -> frozenset:
    """Project the atom's satisfying tuples onto the variables.

    This scans the table directly so that reference domains stay
    independent from the evaluator.
    """
    first_pos = {}
    for i, t in enumerate(atom.terms):
        if isinstance(t, Variable) and t.name not in first_pos:
            first_pos[t.name] = i
    out = set()
    for row in inst.rows(atom.predicate):
        env: dict[str, object] = {}
        ok = True
        for t, v in zip(atom.terms, row):
            if isinstance(t, Constant):
                if t.value != v:
                    ok = False
                    break
            elif t.name in env:
                if env[t.name] != v:
                    ok = False
                    break
            else:
                env[t.name] = v
        if ok:
            out.add(tuple(row[first_pos[v]] for v in variables))
    return frozenset(out)


def _is_cover_equality(c: Formula, varset: set) -> bool:
    if not (isinstance(c, Comparison) and c.op == "="):
        return False
    for a, b in ((c.left, c.right), (c.right, c.left)):
        if isinstance(a, Variable) and a.name in varset and isinstance(b, Constant):
            return True
    return False


def _cover_constants(f: And, variables: tuple[str, ...]):
    """Per-variable constant lists when the conjunction equates every
    requested variable with at least one constant, else None."""
    eq: dict[str, list] = {v: [] for v in variables}
    for c in f.conjuncts:
        if not (isinstance(c, Comparison) and c.op == "="):
            continue
        for a, b in ((c.left, c.right), (c.right, c.left)):
            if (
                isinstance(a, Variable)
                and a.name in eq
                and isinstance(b, Constant)
                and b.value not in eq[a.name]
            ):
                eq[a.name].append(b.value)
    if all(eq[v] for v in variables):
        return [eq[v] for v in variables]
    return None


def _node(trace: bool, f: Formula, rule: str, members, *children):
    if not trace:
        return None
    return DomainTrace(
        to_text(f), rule, frozenset(members), [c for c in children if c]
    )
