"""Prover behaviours: the honest pair and a closed catalog of adversaries.

Every strategy is an immutable descriptor with an ``answer(question, view,
rng)`` method. ``view`` is a :class:`~reldeleg.qsim.PoolView` limited to the
prover's own qubits: prover 1 holds the ``A*`` EPR halves and its ``S*``
source register, prover 2 holds the ``B*`` halves. The exact engine
recognizes these descriptor classes directly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .hamiltonian import XZHamiltonian, eigenstates, ground_state
from .pauli import DEFAULT_DENSE_CAP
from .qsim import PoolView, StateVector
from .questions import MAGIC_TABLE, MagicColumn, MagicRow, Positions, Word, WordPair

P1_PREFIXES = ("A", "S")
P2_PREFIXES = ("B",)


class StrategyError(ValueError):
    """A strategy cannot answer this question or was built with a bad shape."""


def _measure_word(letters: str, view: PoolView, prefix: str, rng) -> tuple[int, ...]:
    return tuple(view.measure({f"{prefix}{j}": ch}, rng) for j, ch in enumerate(letters))


def _measure_magic(entries: Sequence[str], slots, view: PoolView, prefix: str, rng) -> tuple[int, int]:
    i, j = slots
    out = []
    for ent in entries:
        out.append(view.measure({f"{prefix}{i}": ent[0], f"{prefix}{j}": ent[1]}, rng))
    return tuple(out)


def _measure_pair(first: str, second: str, view: PoolView, rng) -> tuple[tuple[int, ...], tuple[int, ...]]:
    b, b2 = [], []
    for j, (l1, l2) in enumerate(zip(first, second)):
        if l1 != "I" and l2 != "I" and l1 != l2:
            raise StrategyError("word pair disagrees on a shared slot")
        letter = l1 if l1 != "I" else l2
        o = view.measure({f"A{j}": letter}, rng)
        b.append(o if l1 != "I" else 1)
        b2.append(o if l2 != "I" else 1)
    return tuple(b), tuple(b2)


@dataclass(frozen=True, eq=False)
class HonestP1:
    """Measures sigma_W on its EPR halves and teleports ``states`` on request.

    ``states`` is an ensemble of pure source states (one is drawn per
    round with ``weights``); the honest prover holds a single ground state.
    """

    states: tuple[np.ndarray, ...]
    weights: tuple[float, ...] = ()

    def __post_init__(self):
        states = tuple(StateVector(np.asarray(s)).amplitudes for s in self.states)
        if not states:
            raise StrategyError("need at least one source state")
        if len({s.size for s in states}) != 1:
            raise StrategyError("ensemble states must have equal size")
        weights = tuple(self.weights) or (1.0 / len(states),) * len(states)
        if len(weights) != len(states) or abs(sum(weights) - 1) > 1e-12 or min(weights) < 0:
            raise StrategyError("weights must be a probability vector over the states")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "weights", weights)

    @property
    def n(self) -> int:
        return self.states[0].size.bit_length() - 1

    def answer(self, question, view: PoolView, rng):
        if isinstance(question, Word):
            return _measure_word(question.letters, view, "A", rng)
        if isinstance(question, WordPair):
            return _measure_pair(question.first, question.second, view, rng)
        if isinstance(question, MagicRow):
            return _measure_magic(MAGIC_TABLE[question.row][:2], question.slots, view, "A", rng)
        if isinstance(question, Positions):
            return self._teleport(question.positions, view, rng)
        raise StrategyError(f"prover 1 cannot answer {type(question).__name__}")

    def _teleport(self, positions, view: PoolView, rng):
        n = self.n
        if len(positions) != n:
            raise StrategyError(f"got {len(positions)} positions for an {n}-qubit source")
        k = 0 if len(self.states) == 1 else int(rng.choice(len(self.states), p=self.weights))
        labels = [f"S{i}" for i in range(n)]
        view.add(labels, self.states[k])
        a, b = [], []
        for i, pos in enumerate(positions):
            bell_a, bell_b = view.bell_measure(labels[i], f"A{pos}", rng)
            # Phi_ab leaves X^a Z^b remotely: report Z-type bit as a, X-type as b
            a.append(bell_b)
            b.append(bell_a)
        return tuple(a), tuple(b)


@dataclass(frozen=True, eq=False)
class TeleportState(HonestP1):
    """Honest prover 1 in every respect except the state it teleports."""


@dataclass(frozen=True)
class HonestP2:
    """Measures sigma_W on its EPR halves for every word or column it receives."""

    def answer(self, question, view: PoolView, rng):
        if isinstance(question, Word):
            return _measure_word(question.letters, view, "B", rng)
        if isinstance(question, MagicColumn):
            col = [MAGIC_TABLE[r][question.column] for r in range(2)]
            return _measure_magic(col, question.slots, view, "B", rng)
        raise StrategyError(f"prover 2 cannot answer {type(question).__name__}")


@dataclass(frozen=True)
class ConstantStrategy:
    """Classical mock: answers ``value`` everywhere (and zero frame bits)."""

    value: int = 1

    def __post_init__(self):
        if self.value not in (1, -1):
            raise StrategyError("value must be +1 or -1")

    def answer(self, question, view, rng):
        v = self.value
        if isinstance(question, Word):
            return (v,) * len(question.letters)
        if isinstance(question, WordPair):
            return (v,) * len(question.first), (v,) * len(question.second)
        if isinstance(question, (MagicRow, MagicColumn)):
            return (v, v)
        if isinstance(question, Positions):
            z = (0,) * len(question.positions)
            return z, z
        raise StrategyError(f"cannot answer {type(question).__name__}")


@dataclass(frozen=True)
class ClassicalTable:
    """Deterministic Magic Square answers: ``table[q]`` for row/column ``q``."""

    table: tuple[tuple[int, int], tuple[int, int], tuple[int, int]]

    def __post_init__(self):
        table = tuple(tuple(int(v) for v in entry) for entry in self.table)
        if len(table) != 3:
            raise StrategyError("a Magic Square table needs one entry per row/column")
        for entry in table:
            if len(entry) != 2 or any(v not in (1, -1) for v in entry):
                raise StrategyError(f"table entry {entry} is not a pair of +-1 values")
        object.__setattr__(self, "table", table)

    def answer(self, question, view, rng):
        if isinstance(question, MagicRow):
            return self.table[question.row]
        if isinstance(question, MagicColumn):
            return self.table[question.column]
        raise StrategyError(f"a classical table cannot answer {type(question).__name__}")


FLIP_FIELDS = ("outcomes", "a", "b")


@dataclass(frozen=True)
class BitFlip:
    """Flips designated answer bits of ``base``.

    ``field="outcomes"`` flips the +-1 outcome at slot ``j`` whenever
    ``mask[j]`` is set and the question letter there is not I (word and
    word-pair answers). ``field="a"``/``"b"`` flips teleportation frame bits.
    Magic Square answers pass through unchanged.
    """

    base: object
    field: str
    mask: tuple[int, ...] = ()

    def __post_init__(self):
        if self.field not in FLIP_FIELDS:
            raise StrategyError(f"unknown flip field {self.field!r}")
        mask = tuple(int(m) for m in self.mask)
        if any(m not in (0, 1) for m in mask):
            raise StrategyError("mask must be a bitstring")
        object.__setattr__(self, "mask", mask)

    def _check(self, length):
        if self.mask and len(self.mask) != length:
            raise StrategyError(f"mask length {len(self.mask)} does not match answer length {length}")

    def _flip_outcomes(self, letters: str, outcomes):
        self._check(len(outcomes))
        return tuple(
            -o if (self.mask and self.mask[j] and letters[j] != "I") else o
            for j, o in enumerate(outcomes)
        )

    def answer(self, question, view, rng):
        ans = self.base.answer(question, view, rng)
        if not self.mask:
            return ans
        if self.field == "outcomes":
            if isinstance(question, Word):
                return self._flip_outcomes(question.letters, ans)
            if isinstance(question, WordPair):
                return (self._flip_outcomes(question.first, ans[0]),
                        self._flip_outcomes(question.second, ans[1]))
            return ans
        if isinstance(question, Positions):
            a, b = ans
            target = a if self.field == "a" else b
            self._check(len(target))
            flipped = tuple(x ^ m for x, m in zip(target, self.mask))
            return (flipped, b) if self.field == "a" else (a, flipped)
        return ans


@dataclass(frozen=True)
class LateAnswer:
    """Answers exactly like ``base`` but ``delay`` time units after the honest schedule."""

    base: object
    delay: float

    def answer(self, question, view, rng):
        return self.base.answer(question, view, rng)


def unwrap(strategy):
    """Strip timing wrappers, which do not change answers."""
    while isinstance(strategy, LateAnswer):
        strategy = strategy.base
    return strategy


def honest_pair(h: XZHamiltonian, cap: int = DEFAULT_DENSE_CAP) -> tuple[HonestP1, HonestP2]:
    """Prover 1 holds a ground state of ``h``; prover 2 measures what it is asked."""
    gs = ground_state(h, cap)
    return HonestP1((gs.vector,)), HonestP2()


def teleport_state_adversary(spec, h: XZHamiltonian | None = None, cap: int = DEFAULT_DENSE_CAP) -> TeleportState:
    """Build a prover 1 that teleports something other than the ground state.

    ``spec`` may be an amplitude vector, a list of ``(weight, amplitudes)``
    pairs, or one of the strings ``"basis=0101"``, ``"eigen=K"`` (needs
    ``h``), ``"uniform=N"`` (equal mixture of all N-qubit basis states).
    """
    if isinstance(spec, str):
        kind, _, arg = spec.partition("=")
        if kind == "basis":
            if not arg or set(arg) - {"0", "1"}:
                raise StrategyError(f"malformed basis spec {spec!r}")
            v = np.zeros(1 << len(arg), dtype=complex)
            v[int(arg, 2)] = 1
            return TeleportState((v,))
        if kind == "eigen":
            if h is None:
                raise StrategyError("eigen=K needs a Hamiltonian")
            _, vecs = eigenstates(h, cap)
            k = int(arg)
            if not 0 <= k < vecs.shape[1]:
                raise StrategyError(f"eigenstate index {k} out of range")
            return TeleportState((vecs[:, k],))
        if kind == "uniform":
            n = int(arg)
            basis = tuple(np.eye(1 << n, dtype=complex)[i] for i in range(1 << n))
            return TeleportState(basis)
        raise StrategyError(f"unknown state spec {spec!r}")
    if isinstance(spec, (list, tuple)) and spec and isinstance(spec[0], tuple):
        weights, states = zip(*spec)
        return TeleportState(tuple(np.asarray(s) for s in states), tuple(float(w) for w in weights))
    try:
        return TeleportState((np.asarray(spec, dtype=complex),))
    except ValueError as exc:
        raise StrategyError(str(exc)) from exc


def classical_table_strategy(tables) -> ClassicalTable:
    return ClassicalTable(tuple(tuple(e) for e in tables))


def bit_flip_adversary(base, mask: Sequence[int], field: str = "outcomes") -> BitFlip:
    return BitFlip(base, field, tuple(mask))
