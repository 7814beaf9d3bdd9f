"""Literals, conjunctive propositions and the query expression grammar."""

from __future__ import annotations

import re
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from typing import NamedTuple


class ContradictionError(ValueError):
    """A proposition asserts both a node and its complement."""


class QuerySyntaxError(ValueError):
    pass


class Literal(NamedTuple):
    node: str
    positive: bool = True

    def __str__(self) -> str:
        return self.node if self.positive else f"!{self.node}"

    def negate(self) -> Literal:
        return Literal(self.node, not self.positive)


@dataclass(frozen=True)
class Proposition:
    """A conjunction of node literals; the empty conjunction is TRUE.

    Equality and hashing go through the frozenset of literals, so the
    order in which literals were supplied never matters.
    """

    literals: frozenset[Literal] = frozenset()

    def __post_init__(self) -> None:
        seen: dict[str, bool] = {}
        for lit in self.literals:
            if seen.get(lit.node, lit.positive) != lit.positive:
                raise ContradictionError(f"proposition contains both {lit.node} and !{lit.node}")
            seen[lit.node] = lit.positive

    @classmethod
    def of(cls, *literals: Literal | tuple[str, bool] | str) -> Proposition:
        out = []
        for lit in literals:
            if isinstance(lit, str):
                out.append(_parse_literal(lit))
            else:
                out.append(Literal(*lit))
        return cls(frozenset(out))

    @classmethod
    def from_assignment(cls, assignment: Mapping[str, bool]) -> Proposition:
        return cls(frozenset(Literal(n, bool(v)) for n, v in assignment.items()))

    @classmethod
    def parse(cls, text: str) -> Proposition:
        """Parse a conjunction such as ``"!a1 & a3"``; ``"T"`` is TRUE."""
        text = text.strip()
        if not text:
            raise QuerySyntaxError("empty proposition")
        if text in ("T", "TRUE", "true"):
            return TRUE
        parts = [p.strip() for p in text.split("&")]
        if any(not p for p in parts):
            raise QuerySyntaxError(f"dangling '&' in {text!r}")
        return cls(frozenset(_parse_literal(p) for p in parts))

    @property
    def is_true(self) -> bool:
        return not self.literals

    @property
    def nodes(self) -> frozenset[str]:
        return frozenset(lit.node for lit in self.literals)

    def as_dict(self) -> dict[str, bool]:
        return {lit.node: lit.positive for lit in self.literals}

    def conjoin(self, other: Proposition) -> Proposition:
        return Proposition(self.literals | other.literals)

    def holds(self, assignment: Mapping[str, bool]) -> bool:
        return all(assignment[lit.node] == lit.positive for lit in self.literals)

    def sorted_literals(self, order: Mapping[str, int] | None = None) -> list[Literal]:
        if order is None:
            return sorted(self.literals)
        return sorted(self.literals, key=lambda lit: (order[lit.node], lit.node))

    def label(self, order: Mapping[str, int] | None = None) -> str:
        if self.is_true:
            return "T"
        return " & ".join(str(lit) for lit in self.sorted_literals(order))

    def __str__(self) -> str:
        return self.label()


TRUE = Proposition()

_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_.\-]*\Z")


def _parse_literal(text: str) -> Literal:
    text = text.strip()
    positive = True
    while text.startswith("!"):
        positive = not positive
        text = text[1:].strip()
    if not _NAME.match(text):
        raise QuerySyntaxError(f"bad literal {text!r}")
    return Literal(text, positive)


@dataclass(frozen=True)
class Query:
    target: Proposition
    given: Proposition | None = None


def parse_query(text: str) -> Query:
    """Parse ``target`` or ``target | given`` where both sides are conjunctions."""
    if text.count("|") > 1:
        raise QuerySyntaxError("at most one '|' is allowed")
    if "|" in text:
        lhs, rhs = text.split("|")
        return Query(Proposition.parse(lhs), Proposition.parse(rhs))
    return Query(Proposition.parse(text))


def mutually_exclusive(a: Proposition, b: Proposition) -> bool:
    da, db = a.as_dict(), b.as_dict()
    return any(n in db and db[n] != v for n, v in da.items())


def enumerate_assignments(nodes: Iterable[str]):
    """Yield every truth assignment over ``nodes`` as a dict."""
    names = sorted(set(nodes))
    for bits in range(1 << len(names)):
        yield {n: bool(bits >> j & 1) for j, n in enumerate(names)}


def is_partition(whole: Proposition, parts: list[Proposition]) -> bool:
    """True iff ``parts`` are pairwise exclusive and their disjunction equals ``whole``.

    Checked by enumeration over every node any of the propositions mentions.
    """
    mentioned = set(whole.nodes)
    for p in parts:
        mentioned |= p.nodes
    for omega in enumerate_assignments(mentioned):
        hits = sum(p.holds(omega) for p in parts)
        if hits > 1 or hits != int(whole.holds(omega)):
            return False
    return True
