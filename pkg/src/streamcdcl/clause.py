"""Literals, canonical clauses and content-derived clause keys.

Literals are exchanged as signed integers in DIMACS convention (``3`` is
atom 3, ``-3`` its negation). :class:`Literal` is the structured view of
the same thing for callers who prefer named fields.
"""
from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from typing import Iterable, NewType, Union

ClauseKey = NewType("ClauseKey", int)


class EmptyClause(ValueError):
    """Raised when a clause would have no literals."""


@dataclass(frozen=True, order=True)
class Literal:
    atom: int
    polarity: bool = True

    def __post_init__(self):
        if self.atom < 1:
            raise ValueError(f"atom must be >= 1, got {self.atom}")

    def complement(self) -> "Literal":
        return Literal(self.atom, not self.polarity)

    def __int__(self) -> int:
        return self.atom if self.polarity else -self.atom

    @classmethod
    def from_int(cls, lit: int) -> "Literal":
        return cls(abs(lit), lit > 0)

    def __str__(self):
        return f"x{self.atom}" if self.polarity else f"~x{self.atom}"


LiteralLike = Union[int, Literal]


def complement(lit: LiteralLike) -> LiteralLike:
    if isinstance(lit, Literal):
        return lit.complement()
    return -lit


class _Tautology:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "Tautology"

    def __bool__(self):
        return False


#: Result of :func:`canonicalize` for a clause containing ``l`` and ``-l``.
Tautology = _Tautology()


def _sort_key(lit: int):
    return (abs(lit), lit > 0)


@dataclass(frozen=True)
class Clause:
    """Canonical clause: literals sorted by (atom, polarity), no duplicates."""

    lits: tuple

    @property
    def literals(self) -> tuple:
        return tuple(Literal.from_int(l) for l in self.lits)

    @property
    def atoms(self) -> tuple:
        return tuple(abs(l) for l in self.lits)

    def __len__(self):
        return len(self.lits)

    def __iter__(self):
        return iter(self.lits)

    def __str__(self):
        return "[" + ", ".join(str(Literal.from_int(l)) for l in self.lits) + "]"


def canonicalize(lits: Iterable[LiteralLike]):
    """Return the canonical :class:`Clause` for ``lits`` or ``Tautology``.

    >>> canonicalize([1, -2, 1])
    Clause(lits=(1, -2))
    >>> canonicalize([-3, 2])
    Clause(lits=(2, -3))
    """
    ints = set()
    for l in lits:
        v = int(l)
        if v == 0:
            raise ValueError("0 is not a literal")
        ints.add(v)
    if not ints:
        raise EmptyClause("empty clause")
    for v in ints:
        if -v in ints:
            return Tautology
    return Clause(tuple(sorted(ints, key=_sort_key)))


def clause_key(clause: Clause) -> ClauseKey:
    """64-bit digest of the canonical literal sequence, stable across runs."""
    data = struct.pack(f"<{len(clause.lits)}q", *clause.lits)
    return ClauseKey(int.from_bytes(hashlib.blake2b(data, digest_size=8).digest(), "little"))


def key_of_lits(lits: Iterable[int]) -> ClauseKey:
    """Key of an arbitrary non-tautological literal collection."""
    c = canonicalize(lits)
    if c is Tautology:
        raise ValueError("tautologies have no key")
    return clause_key(c)
