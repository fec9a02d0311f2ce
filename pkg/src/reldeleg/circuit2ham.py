"""Compile small circuits into clock Hamiltonians and check their spectra.

Layout of the dense register: ``T`` clock qubits ``c_1 .. c_T`` first, then
the ``n`` work qubits. Time ``t`` is encoded in unary as ``T - t`` zeros
followed by ``t`` ones, so a valid clock string never has a 1 before a 0.

Every term is stored on its local support as a small dense matrix together
with its Pauli expansion; the full operator is the plain (unaveraged) sum.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from functools import reduce
from pathlib import Path
from typing import Sequence

import numpy as np

from .pauli import DEFAULT_DENSE_CAP, DimensionCapError, PauliString, dense_matrix
from .qsim import StateVector, apply_unitary, basis_state

log = logging.getLogger(__name__)

_C, _S = math.cos(math.pi / 8), math.sin(math.pi / 8)
GATES: dict[str, np.ndarray] = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "R": np.array([[_S, _C], [_C, -_S]], dtype=complex),  # cos(pi/8) X + sin(pi/8) Z
    "CNOT": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
}
ARITY = {"X": 1, "R": 1, "CNOT": 2}

_P0 = np.diag([1.0, 0.0]).astype(complex)
_P1 = np.diag([0.0, 1.0]).astype(complex)
_I2 = np.eye(2, dtype=complex)
_XM = GATES["X"]


class CircuitFormatError(ValueError):
    """Malformed circuit text."""


@dataclass(frozen=True)
class Gate:
    kind: str
    targets: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in GATES:
            raise ValueError(f"unknown gate {self.kind!r}; allowed: {sorted(GATES)}")
        object.__setattr__(self, "targets", tuple(int(i) for i in self.targets))
        if len(self.targets) != ARITY[self.kind]:
            raise ValueError(f"{self.kind} takes {ARITY[self.kind]} target(s), got {self.targets}")
        if len(set(self.targets)) != len(self.targets):
            raise ValueError(f"repeated target in {self.targets}")

    @property
    def matrix(self) -> np.ndarray:
        return GATES[self.kind]


@dataclass(frozen=True)
class Circuit:
    """``n`` work qubits, a gate list and the index of the output qubit.

    The input is a computational basis string (all zeros unless given).
    """

    n: int
    gates: tuple[Gate, ...]
    output: int = 0
    input_bits: tuple[int, ...] | None = None

    def __post_init__(self):
        # accept Gate objects or (kind, targets) pairs
        gates = tuple(g if isinstance(g, Gate) else Gate(g[0], tuple(g[1])) for g in self.gates)
        object.__setattr__(self, "gates", gates)
        if self.n < 1:
            raise ValueError("a circuit needs at least one work qubit")
        if not gates:
            raise ValueError("a circuit needs at least one gate (T >= 1)")
        for g in gates:
            if any(not 0 <= i < self.n for i in g.targets):
                raise ValueError(f"gate {g} addresses a qubit outside 0..{self.n - 1}")
        if not 0 <= self.output < self.n:
            raise ValueError(f"output index {self.output} out of range")
        bits = tuple(self.input_bits) if self.input_bits is not None else (0,) * self.n
        if len(bits) != self.n or any(b not in (0, 1) for b in bits):
            raise ValueError(f"input must be {self.n} bits, got {bits}")
        object.__setattr__(self, "input_bits", bits)

    @property
    def T(self) -> int:
        return len(self.gates)

    def input_state(self) -> StateVector:
        return basis_state(self.n, self.input_bits)

    def snapshots(self, psi: StateVector | None = None) -> list[StateVector]:
        """``[psi, U_1 psi, U_2 U_1 psi, ...]`` (length ``T + 1``)."""
        state = psi if psi is not None else self.input_state()
        if state.num_qubits != self.n:
            raise ValueError(f"input has {state.num_qubits} qubits, circuit has {self.n}")
        out = [state]
        for g in self.gates:
            state = apply_unitary(state, g.matrix, g.targets)
            out.append(state)
        return out

    def acceptance(self, psi: StateVector | None = None) -> float:
        """Probability that the output qubit reads 1 after the last gate."""
        final = self.snapshots(psi)[-1].amplitudes.reshape((2,) * self.n)
        ones = np.take(final, 1, axis=self.output)
        return float(np.vdot(ones, ones).real)


# ---------------------------------------------------------------- file format

CIRCUIT_HEADER = "# reldeleg circuit v1"


def dumps(c: Circuit) -> str:
    lines = [CIRCUIT_HEADER, f"n {c.n}", f"output {c.output}", "input " + "".join(map(str, c.input_bits))]
    lines += [" ".join([g.kind, *map(str, g.targets)]) for g in c.gates]
    return "\n".join(lines) + "\n"


def loads(text: str) -> Circuit:
    n = output = None
    bits = None
    gates = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        try:
            if head == "n":
                n = int(rest[0])
            elif head == "output":
                output = int(rest[0])
            elif head == "input":
                bits = tuple(int(ch) for ch in rest[0])
            else:
                gates.append(Gate(head, tuple(int(x) for x in rest)))
        except (IndexError, ValueError) as exc:
            raise CircuitFormatError(f"line {lineno}: {exc or 'missing value'}") from exc
    if n is None or output is None:
        raise CircuitFormatError("circuit text needs both 'n' and 'output' lines")
    try:
        return Circuit(n, tuple(gates), output, bits)
    except ValueError as exc:
        raise CircuitFormatError(str(exc)) from exc


def load(path: str | Path) -> Circuit:
    return loads(Path(path).read_text())


def dump(c: Circuit, path: str | Path) -> None:
    Path(path).write_text(dumps(c))


# ---------------------------------------------------------------- Pauli expansion

@dataclass(frozen=True)
class PauliExpansion:
    terms: tuple[tuple[float, str], ...]

    @property
    def is_xz(self) -> bool:
        return all("Y" not in letters for _, letters in self.terms)

    @property
    def y_letters_paired(self) -> bool:
        return all(letters.count("Y") % 2 == 0 for _, letters in self.terms)

    def recompose(self, q: int | None = None) -> np.ndarray:
        if not self.terms:
            if q is None:
                raise ValueError("empty expansion needs an explicit qubit count")
            return np.zeros((1 << q, 1 << q), dtype=complex)
        return sum(coef * dense_matrix(PauliString(letters)) for coef, letters in self.terms)

    def strings(self) -> list[PauliString]:
        return [PauliString(letters, coef) for coef, letters in self.terms]


def pauli_decompose(matrix: np.ndarray, atol: float = 1e-12, cap: int = 8) -> PauliExpansion:
    """Expand a Hermitian matrix as ``sum_P tr(P M) / 2^q * P``."""
    m = np.asarray(matrix, dtype=complex)
    dim = m.shape[0]
    q = dim.bit_length() - 1
    if m.shape != (dim, dim) or dim != 1 << q:
        raise ValueError(f"matrix shape {m.shape} is not 2^q x 2^q")
    if q > cap:
        raise DimensionCapError(f"{q}-qubit expansion exceeds cap {cap}")
    if not np.allclose(m, m.conj().T, atol=1e-10):
        raise ValueError("matrix is not Hermitian")
    out = []
    for letters in itertools.product("IXYZ", repeat=q):
        word = "".join(letters)
        coef = np.trace(dense_matrix(PauliString(word)) @ m) / dim
        if abs(coef) > atol:
            out.append((float(coef.real), word))
    return PauliExpansion(tuple(out))


# ---------------------------------------------------------------- clock Hamiltonian

@dataclass(frozen=True)
class ClockTerm:
    label: str  # init | prop | clock | output
    qubits: tuple[int, ...]
    local: np.ndarray = field(repr=False, compare=False)
    expansion: PauliExpansion = field(repr=False, compare=False)

    def dense(self, q: int) -> np.ndarray:
        """Embed the local matrix into the full ``q``-qubit space."""
        k = len(self.qubits)
        eye = np.eye(1 << q, dtype=complex).reshape((2,) * (2 * q))
        local = self.local.reshape((2,) * (2 * k))
        # contract local on the row indices of the support
        rows = list(self.qubits)
        out = np.tensordot(local, eye, axes=(list(range(k, 2 * k)), rows))
        out = np.moveaxis(out, list(range(k)), rows)
        return out.reshape(1 << q, 1 << q)


@dataclass
class ClockHamiltonian:
    T: int
    n: int
    terms: list[ClockTerm]

    @property
    def num_qubits(self) -> int:
        return self.T + self.n

    @property
    def clock_qubits(self) -> tuple[int, ...]:
        return tuple(range(self.T))

    @property
    def work_qubits(self) -> tuple[int, ...]:
        return tuple(range(self.T, self.T + self.n))

    def family(self, label: str) -> list[ClockTerm]:
        return [t for t in self.terms if t.label == label]

    def matrix(self, labels: Sequence[str] | None = None, cap: int = DEFAULT_DENSE_CAP) -> np.ndarray:
        q = self.num_qubits
        if q > cap:
            raise DimensionCapError(f"{q} qubits exceeds dense cap {cap}")
        chosen = [t for t in self.terms if labels is None or t.label in labels]
        out = np.zeros((1 << q, 1 << q), dtype=complex)
        for t in chosen:
            out += t.dense(q)
        return out

    def energy(self, state: StateVector, labels: Sequence[str] | None = None) -> float:
        """``<psi|H|psi>`` evaluated term by term on the local supports."""
        q = self.num_qubits
        if state.num_qubits != q:
            raise ValueError(f"state has {state.num_qubits} qubits, Hamiltonian has {q}")
        total = 0.0
        for t in self.terms:
            if labels is not None and t.label not in labels:
                continue
            moved = _apply_local(state.amplitudes, t.local, t.qubits, q)
            total += float(np.vdot(state.amplitudes, moved).real)
        return total

    def ground_energy(self, labels: Sequence[str] | None = None) -> float:
        return float(np.linalg.eigvalsh(self.matrix(labels))[0])

    def pauli_terms(self) -> list[tuple[str, PauliString]]:
        """Every term expanded and placed on the full register."""
        q = self.num_qubits
        out = []
        for t in self.terms:
            for coef, letters in t.expansion.terms:
                full = ["I"] * q
                for ch, i in zip(letters, t.qubits):
                    full[i] = ch
                out.append((t.label, PauliString("".join(full), coef)))
        return out

    @property
    def is_xz(self) -> bool:
        return all(t.expansion.is_xz for t in self.terms)


def _apply_local(amps: np.ndarray, matrix: np.ndarray, qubits, q: int) -> np.ndarray:
    k = len(qubits)
    tensor = np.moveaxis(amps.reshape((2,) * q), list(qubits), list(range(k)))
    flat = matrix @ tensor.reshape(1 << k, -1)
    return np.moveaxis(flat.reshape((2,) * q), list(range(k)), list(qubits)).reshape(-1)


def _kron(*ms) -> np.ndarray:
    return reduce(np.kron, ms)


def _term(label: str, qubits, local) -> ClockTerm:
    return ClockTerm(label, tuple(qubits), local, pauli_decompose(local))


def _clock_projector(T: int, t: int) -> tuple[tuple[int, ...], np.ndarray]:
    """Local form of ``|t><t|_clock`` valid on the legal clock subspace."""
    if T == 1:
        return (0,), (_P1 if t == 1 else _P0)
    if t == 0:
        return (T - 1,), _P0
    if t == T:
        return (0,), _P1
    # qubits c_{T-t} c_{T-t+1} (1-indexed) read "01"
    return (T - t - 1, T - t), _kron(_P0, _P1)


def _prop_term(T: int, n: int, t: int, gate: Gate) -> ClockTerm:
    # the clock flips at c_p with p = T - t + 1 (1-indexed), i.e. index T - t
    p = T - t
    clock_q: list[int] = []
    ctrl: list[np.ndarray] = []
    if p - 1 >= 0:
        clock_q.append(p - 1)
        ctrl.append(_P0)
    clock_q.append(p)
    flip_at = len(ctrl)
    ctrl.append(None)
    if p + 1 < T:
        clock_q.append(p + 1)
        ctrl.append(_P1)
    u = gate.matrix
    k = len(gate.targets)
    eye_u = np.eye(1 << k, dtype=complex)
    # |t><t-1| on c_p is |1><0|; the Hermitian pair is |t-1><t| (x) U^dagger
    up = np.array([[0, 0], [1, 0]], dtype=complex)

    def clock_op(mid):
        parts = list(ctrl)
        parts[flip_at] = mid
        return _kron(*parts)

    local = 0.5 * (
        _kron(clock_op(_I2), eye_u)
        - _kron(clock_op(up), u)
        - _kron(clock_op(up.conj().T), u.conj().T)
    )
    qubits = tuple(clock_q) + tuple(T + i for i in gate.targets)
    return _term("prop", qubits, local)


def build_hq(c: Circuit, include_output: bool = True, cap: int = DEFAULT_DENSE_CAP) -> ClockHamiltonian:
    """Clock Hamiltonian with init, propagation, clock and (optionally) output terms."""
    T, n = c.T, c.n
    if T + n > cap:
        raise DimensionCapError(f"T + n = {T + n} exceeds dense cap {cap}")
    terms: list[ClockTerm] = []
    q0, p0 = _clock_projector(T, 0)
    for i, bit in enumerate(c.input_bits):
        wrong = _P0 if bit else _P1
        terms.append(_term("init", q0 + (T + i,), _kron(p0, wrong)))
    for t, gate in enumerate(c.gates, 1):
        terms.append(_prop_term(T, n, t, gate))
    for i in range(T - 1):
        terms.append(_term("clock", (i, i + 1), _kron(_P1, _P0)))
    if include_output:
        qT, pT = _clock_projector(T, T)
        terms.append(_term("output", qT + (T + c.output,), _kron(pT, _P0)))
    return ClockHamiltonian(T, n, terms)


def clock_encoding(T: int, t: int) -> tuple[int, ...]:
    if not 0 <= t <= T:
        raise ValueError(f"time {t} outside 0..{T}")
    return (0,) * (T - t) + (1,) * t


def valid_clock_strings(T: int) -> list[tuple[int, ...]]:
    return [clock_encoding(T, t) for t in range(T + 1)]


def history_state(c: Circuit, psi: StateVector | None = None, cap: int = DEFAULT_DENSE_CAP) -> StateVector:
    """``(T+1)^{-1/2} sum_t |t>_clock (x) U_t ... U_1 psi``."""
    T, n = c.T, c.n
    if T + n > cap:
        raise DimensionCapError(f"T + n = {T + n} exceeds dense cap {cap}")
    amps = np.zeros(1 << (T + n), dtype=complex)
    for t, snap in enumerate(c.snapshots(psi)):
        idx = int("".join(map(str, clock_encoding(T, t))), 2)
        clock = np.zeros(1 << T, dtype=complex)
        clock[idx] = 1.0
        amps += np.kron(clock, snap.amplitudes)
    amps /= math.sqrt(T + 1)
    return StateVector(amps, {"clock": tuple(range(T)), "work": tuple(range(T, T + n))})


@dataclass(frozen=True)
class KitaevReport:
    T: int
    n: int
    acceptance: float
    ground_energy: float
    epsilon: float
    completeness_bound: float
    completeness_ok: bool
    soundness_flag: bool | None
    history_energy: float
    is_xz: bool
    averaging: str = "summed"

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def kitaev_check(c: Circuit, epsilon: float | None = None, tol: float = 1e-9) -> KitaevReport:
    """Simulate the circuit, diagonalize ``H_Q`` and compare with the clock bounds.

    ``epsilon`` defaults to the simulated rejection probability. The soundness
    flag is ``lambda_0 > 0`` and is only reported when the circuit rejects
    with non-negligible probability.
    """
    acc = c.acceptance()
    eps = 1.0 - acc if epsilon is None else float(epsilon)
    h = build_hq(c, include_output=True)
    lam = h.ground_energy()
    bound = eps / (c.T + 1)
    hist = h.energy(history_state(c))
    rejects = acc < 1 - 1e-6
    log.debug("kitaev check T=%d acc=%.6f lambda0=%.3e", c.T, acc, lam)
    return KitaevReport(
        T=c.T, n=c.n, acceptance=acc, ground_energy=lam, epsilon=eps,
        completeness_bound=bound, completeness_ok=lam <= bound + tol,
        soundness_flag=(lam > tol) if rejects else None,
        history_energy=hist, is_xz=h.is_xz,
    )
