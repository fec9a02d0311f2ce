"""Magic Square game: rounds, win rule and exhaustive classical value."""

from __future__ import annotations

from fractions import Fraction
from itertools import product

from ..qsim import QubitPool
from ..questions import MAGIC_COLUMN_SIGN, MagicColumn, MagicRow
from ..strategies import P1_PREFIXES, P2_PREFIXES
from .core import Transcript, check_pm1


def complete_row(a: tuple[int, int]) -> tuple[int, int, int]:
    return a[0], a[1], a[0] * a[1]


def complete_column(b: tuple[int, int], column: int) -> tuple[int, int, int]:
    return b[0], b[1], MAGIC_COLUMN_SIGN[column] * b[0] * b[1]


def wins(row: int, column: int, a: tuple[int, int], b: tuple[int, int]) -> bool:
    """Row prover's entry at ``column`` must equal column prover's entry at ``row``."""
    return complete_row(a)[column] == complete_column(b, column)[row]


def play_magic_square(p1, p2, pool: QubitPool, slots, rng, label="magic-square") -> Transcript:
    row = int(rng.integers(3))
    column = int(rng.integers(3))
    a = check_pm1(p1.answer(MagicRow(slots, row), pool.view(*P1_PREFIXES), rng), 2, "prover 1")
    b = check_pm1(p2.answer(MagicColumn(slots, column), pool.view(*P2_PREFIXES), rng), 2, "prover 2")
    return Transcript(
        label,
        {"row": row, "column": column, "slots": list(slots)},
        {"a": list(a), "b": list(b)},
        wins(row, column, a, b),
    )


class MagicSquareGame:
    """Two provers sharing two EPR pairs; one row, one column question."""

    slots = (0, 1)

    def play_round(self, p1, p2, rng, coin_rng=None) -> Transcript:
        pool = QubitPool()
        for j in self.slots:
            pool.declare_epr(f"A{j}", f"B{j}")
        return play_magic_square(p1, p2, pool, self.slots, rng)

    def describe(self) -> dict:
        return {"game": "magic-square"}


def magic_square_round(s1, s2, rng) -> Transcript:
    return MagicSquareGame().play_round(s1, s2, rng)


def deterministic_tables():
    """All 64 deterministic tables: one +-1 pair per row (or column)."""
    pairs = list(product((1, -1), repeat=2))
    return list(product(pairs, repeat=3))


def table_value(rows, columns) -> Fraction:
    won = sum(wins(r, c, rows[r], columns[c]) for r in range(3) for c in range(3))
    return Fraction(won, 9)


def classical_value() -> tuple[Fraction, tuple, tuple]:
    """Exhaustive search over deterministic strategy pairs; returns the best value and a witness."""
    best = (Fraction(-1), None, None)
    tables = deterministic_tables()
    for rows in tables:
        for cols in tables:
            v = table_value(rows, cols)
            if v > best[0]:
                best = (v, rows, cols)
    return best
