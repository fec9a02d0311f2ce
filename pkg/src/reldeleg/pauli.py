"""Pauli strings: parsing, masking, commutation and dense matrices.

Qubit 0 is the leftmost letter and the most significant tensor factor, so
``dense_matrix("XZ") == kron(X, Z)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import lru_cache, reduce
from typing import Iterable, Sequence

import numpy as np

LETTERS = "IXYZ"
DEFAULT_DENSE_CAP = 14

_SINGLE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# (x, z) symplectic bits per letter
_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_FROM_BITS = {v: k for k, v in _BITS.items()}

_COEFF_RE = re.compile(r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s+")


class PauliParseError(ValueError):
    """Raised when a Pauli string literal is malformed."""

    def __init__(self, text: str, index: int, char: str):
        self.text = text
        self.index = index
        super().__init__(f"invalid Pauli letter {char!r} at index {index} in {text!r}")


class DimensionCapError(ValueError):
    """Raised when a dense object would exceed the configured qubit cap."""


@dataclass(frozen=True)
class PauliString:
    """A word over {I, X, Y, Z} with a real coefficient."""

    letters: str
    coefficient: float = 1.0
    _x: int = field(init=False, repr=False, compare=False)
    _z: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        letters = "".join(self.letters)
        if not letters:
            raise ValueError("a Pauli string needs at least one letter")
        for i, ch in enumerate(letters):
            if ch not in LETTERS:
                raise PauliParseError(letters, i, ch)
        if not math.isfinite(self.coefficient):
            raise ValueError("coefficient must be finite")
        object.__setattr__(self, "letters", letters)
        object.__setattr__(self, "coefficient", float(self.coefficient))
        x = z = 0
        for ch in letters:
            bx, bz = _BITS[ch]
            x = (x << 1) | bx
            z = (z << 1) | bz
        object.__setattr__(self, "_x", x)
        object.__setattr__(self, "_z", z)

    def __len__(self) -> int:
        return len(self.letters)

    def __str__(self) -> str:
        if self.coefficient == 1.0:
            return self.letters
        return f"{self.coefficient!r} {self.letters}"

    @property
    def n(self) -> int:
        return len(self.letters)

    @property
    def x_mask(self) -> int:
        return self._x

    @property
    def z_mask(self) -> int:
        return self._z

    @property
    def is_xz(self) -> bool:
        return "Y" not in self.letters

    @property
    def weight(self) -> int:
        return sum(ch != "I" for ch in self.letters)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, ch in enumerate(self.letters) if ch != "I")

    def with_coefficient(self, coefficient: float) -> PauliString:
        return PauliString(self.letters, coefficient)


@dataclass(frozen=True)
class PauliWord:
    """A question word over {X, Z}, before masking."""

    letters: str

    def __post_init__(self):
        letters = "".join(self.letters)
        if not letters:
            raise ValueError("a Pauli word needs at least one letter")
        for i, ch in enumerate(letters):
            if ch not in "XZ":
                raise PauliParseError(letters, i, ch)
        object.__setattr__(self, "letters", letters)

    def __len__(self) -> int:
        return len(self.letters)

    def __getitem__(self, i):
        return self.letters[i]


def parse_pauli(text: str) -> PauliString:
    """Parse ``"XZI"`` or ``"-0.5 ZZ"`` into a :class:`PauliString`."""
    coefficient = 1.0
    body = text
    m = _COEFF_RE.match(text)
    if m:
        coefficient = float(m.group(1))
        body = text[m.end():]
    offset = len(text) - len(body)
    body = body.rstrip()
    if not body:
        raise PauliParseError(text, len(text), "")
    for i, ch in enumerate(body):
        if ch not in LETTERS:
            raise PauliParseError(text, offset + i, ch)
    return PauliString(body, coefficient)


def _as_letters(w) -> str:
    return w.letters if isinstance(w, (PauliString, PauliWord)) else "".join(w)


def restrict(word, mask: Sequence[int]) -> PauliString:
    """Return ``W(a)``: keep letter i where ``mask[i] == 1``, identity elsewhere."""
    letters = _as_letters(word)
    if len(letters) != len(mask):
        raise ValueError(f"word length {len(letters)} != mask length {len(mask)}")
    return PauliString("".join(ch if int(bit) else "I" for ch, bit in zip(letters, mask)))


def _check_lengths(p: PauliString, q: PauliString):
    if len(p) != len(q):
        raise ValueError(f"length mismatch: {len(p)} vs {len(q)}")


def commutation_sign(p: PauliString, q: PauliString) -> int:
    """+1 if the strings commute, -1 if they anticommute."""
    _check_lengths(p, q)
    k = ((p.x_mask & q.z_mask) ^ (p.z_mask & q.x_mask)).bit_count()
    return -1 if k & 1 else 1


def multiply(p: PauliString, q: PauliString) -> tuple[complex, PauliString]:
    """Return ``(phase, r)`` with ``P @ Q == phase * R``; ``r`` carries coefficient 1.

    The coefficients of ``p`` and ``q`` are folded into the phase.
    """
    _check_lengths(p, q)
    phase = complex(p.coefficient * q.coefficient)
    out = []
    for a, b in zip(p.letters, q.letters):
        ph, c = _single_product(a, b)
        phase *= ph
        out.append(c)
    return phase, PauliString("".join(out))


def _single_product(a: str, b: str) -> tuple[complex, str]:
    if a == "I":
        return 1, b
    if b == "I":
        return 1, a
    if a == b:
        return 1, "I"
    xa, za = _BITS[a]
    xb, zb = _BITS[b]
    c = _FROM_BITS[(xa ^ xb, za ^ zb)]
    # cyclic X->Y->Z gives +i
    cyc = {("X", "Y"), ("Y", "Z"), ("Z", "X")}
    return (1j if (a, b) in cyc else -1j), c


def tensor(*strings: PauliString) -> PauliString:
    coeff = reduce(lambda acc, s: acc * s.coefficient, strings, 1.0)
    return PauliString("".join(s.letters for s in strings), coeff)


def dense_matrix(p: PauliString, cap: int = DEFAULT_DENSE_CAP) -> np.ndarray:
    if len(p) > cap:
        raise DimensionCapError(f"{len(p)} qubits exceeds dense cap {cap}")
    mat = reduce(np.kron, (_SINGLE[ch] for ch in p.letters))
    return p.coefficient * mat


def apply_pauli(p: PauliString, amplitudes: np.ndarray) -> np.ndarray:
    """Apply ``p`` (with its coefficient) to a state vector without forming a matrix."""
    n = len(p)
    if amplitudes.shape != (1 << n,):
        raise ValueError(f"state of length {amplitudes.shape} does not match {n} qubits")
    src, signs = _pauli_action(n, p.x_mask, p.z_mask)
    # P = i^{#Y} X^x Z^z on every qubit; (P psi)[i] = i^ny (-1)^{|src & z|} psi[src]
    ny = (p.x_mask & p.z_mask).bit_count()
    return (p.coefficient * (1j ** ny)) * signs * amplitudes[src]


@lru_cache(maxsize=4096)
def _pauli_action(n: int, x: int, z: int) -> tuple[np.ndarray, np.ndarray]:
    idx = np.arange(1 << n)
    src = idx ^ x
    v = src & z
    parity = np.zeros_like(v)
    while np.any(v):
        parity ^= v & 1
        v >>= 1
    signs = np.where(parity.astype(bool), -1.0, 1.0)
    src.setflags(write=False)
    signs.setflags(write=False)
    return src, signs


def all_strings(n: int, alphabet: str = LETTERS) -> Iterable[PauliString]:
    """Every coefficient-1 string of length ``n`` over ``alphabet``."""
    from itertools import product

    for letters in product(alphabet, repeat=n):
        yield PauliString("".join(letters))
