"""Question messages a verifier can send to a prover.

A prover only ever sees one of these objects, which is what keeps the two
provers from reading each other's questions.
"""

from __future__ import annotations

from dataclasses import dataclass

# Rows and columns of the Magic Square observable table (two qubits per entry).
MAGIC_TABLE = (
    ("IZ", "ZI", "ZZ"),
    ("XI", "IX", "XX"),
    ("XZ", "ZX", "YY"),
)
# Product of the three entries in each column: +I, +I, -I.
MAGIC_COLUMN_SIGN = (1, 1, -1)


@dataclass(frozen=True)
class Word:
    """A masked Pauli word over {X, Z, I}, one letter per EPR slot."""

    letters: str


@dataclass(frozen=True)
class WordPair:
    """Two masked words sharing the same unmasked word (linearity test, prover 1)."""

    first: str
    second: str


@dataclass(frozen=True)
class MagicRow:
    slots: tuple[int, int]
    row: int


@dataclass(frozen=True)
class MagicColumn:
    slots: tuple[int, int]
    column: int


@dataclass(frozen=True)
class Positions:
    """Teleport the source register through the EPR halves at these slots."""

    positions: tuple[int, ...]
