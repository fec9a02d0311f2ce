"""Dense statevector simulation with named registers.

Bit order follows :mod:`reldeleg.pauli`: qubit 0 is the most significant
index bit. All assertions made on states are phase-insensitive.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .pauli import DEFAULT_DENSE_CAP, DimensionCapError, PauliString, apply_pauli

log = logging.getLogger(__name__)

NORM_TOL = 1e-10
_SQRT_HALF = 1 / np.sqrt(2)


def _bell_vectors() -> dict[tuple[int, int], np.ndarray]:
    """Phi_ab = (X^a Z^b (x) I) (|00> + |11>)/sqrt2, first factor = first measured qubit."""
    out = {}
    for a in (0, 1):
        for b in (0, 1):
            v = np.zeros(4, dtype=complex)
            # Z^b on |0>,|1> of the first qubit, then X^a flips it
            for bit in (0, 1):
                amp = _SQRT_HALF * (-1) ** (b * bit)
                v[((bit ^ a) << 1) | bit] += amp
            out[(a, b)] = v
    return out


BELL = _bell_vectors()


@dataclass
class StateVector:
    """Unit vector over ``q`` qubits with a register map partitioning the qubits."""

    amplitudes: np.ndarray
    registers: dict[str, tuple[int, ...]] = field(default_factory=dict)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).ravel()
        q = int(round(np.log2(amps.size))) if amps.size else -1
        if q < 0 or amps.size != 1 << q:
            raise ValueError(f"amplitude vector of length {amps.size} is not a power of two")
        norm = np.linalg.norm(amps)
        if abs(norm - 1) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm {norm!r})")
        self.amplitudes = amps
        if not self.registers:
            self.registers = {"q": tuple(range(q))} if q else {}
        else:
            self.registers = {k: tuple(v) for k, v in self.registers.items()}
            seen = sorted(i for v in self.registers.values() for i in v)
            if seen != list(range(q)):
                raise ValueError("register map must partition the qubits")

    @property
    def num_qubits(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    def copy(self) -> StateVector:
        return StateVector(self.amplitudes.copy(), dict(self.registers))

    def register(self, name: str) -> tuple[int, ...]:
        return self.registers[name]

    def fidelity(self, other) -> float:
        v = other.amplitudes if isinstance(other, StateVector) else np.asarray(other)
        return float(abs(np.vdot(self.amplitudes, v)) ** 2)


def _check_cap(q: int, cap: int):
    if q > cap:
        raise DimensionCapError(f"{q} qubits exceeds dense cap {cap}")


def basis_state(n: int, bits: Sequence[int] | None = None, cap: int = DEFAULT_DENSE_CAP) -> StateVector:
    if n < 1:
        raise ValueError("need at least one qubit")
    _check_cap(n, cap)
    amps = np.zeros(1 << n, dtype=complex)
    idx = 0
    for b in bits or [0] * n:
        idx = (idx << 1) | int(b)
    amps[idx] = 1.0
    return StateVector(amps)


def tensor_states(*states: StateVector) -> StateVector:
    """Kronecker product; register names must be disjoint."""
    amps = np.ones(1, dtype=complex)
    regs: dict[str, tuple[int, ...]] = {}
    offset = 0
    for s in states:
        amps = np.kron(amps, s.amplitudes)
        for name, qs in s.registers.items():
            if name in regs:
                raise ValueError(f"duplicate register {name!r}")
            regs[name] = tuple(i + offset for i in qs)
        offset += s.num_qubits
    return StateVector(amps, regs)


def permute_qubits(state: StateVector, order: Sequence[int]) -> StateVector:
    """New state whose qubit ``k`` is the old qubit ``order[k]``."""
    q = state.num_qubits
    tensor = state.amplitudes.reshape((2,) * q).transpose(order)
    where = {old: new for new, old in enumerate(order)}
    regs = {k: tuple(where[i] for i in v) for k, v in state.registers.items()}
    return StateVector(tensor.reshape(-1), regs)


def epr_register(t: int, cap: int = DEFAULT_DENSE_CAP) -> StateVector:
    """``t`` EPR pairs; pair ``i`` sits on ``epr_A[i]``, ``epr_B[i]``."""
    if t < 1:
        raise ValueError("need at least one EPR pair")
    _check_cap(2 * t, cap)
    pair = BELL[(0, 0)]
    amps = np.ones(1, dtype=complex)
    for _ in range(t):
        amps = np.kron(amps, pair)
    # kron order is A0 B0 A1 B1 ...; regroup as A0..A(t-1) B0..B(t-1)
    interleaved = StateVector(amps)
    order = [2 * i for i in range(t)] + [2 * i + 1 for i in range(t)]
    out = permute_qubits(interleaved, order)
    out.registers = {"epr_A": tuple(range(t)), "epr_B": tuple(range(t, 2 * t))}
    return out


def apply_unitary(state: StateVector, matrix: np.ndarray, qubits: Sequence[int]) -> StateVector:
    q = state.num_qubits
    k = len(qubits)
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.shape != (1 << k, 1 << k):
        raise ValueError("matrix shape does not match qubit count")
    tensor = state.amplitudes.reshape((2,) * q)
    tensor = np.moveaxis(tensor, list(qubits), list(range(k)))
    flat = matrix @ tensor.reshape(1 << k, -1)
    tensor = np.moveaxis(flat.reshape((2,) * q), list(range(k)), list(qubits))
    return StateVector(tensor.reshape(-1), dict(state.registers))


def embed_pauli(p: PauliString, qubits: Sequence[int], q: int) -> PauliString:
    """Place the letters of ``p`` on ``qubits`` of a ``q``-qubit register."""
    if len(p) != len(qubits):
        raise ValueError("one qubit index per letter required")
    letters = ["I"] * q
    for ch, i in zip(p.letters, qubits):
        letters[i] = ch
    return PauliString("".join(letters), p.coefficient)


def _full(state: StateVector, p: PauliString, qubits) -> PauliString:
    if qubits is None:
        if len(p) != state.num_qubits:
            raise ValueError(f"Pauli length {len(p)} != {state.num_qubits} qubits")
        return p
    return embed_pauli(p, qubits, state.num_qubits)


def expectation(state: StateVector, p: PauliString, qubits: Sequence[int] | None = None) -> float:
    full = _full(state, p, qubits)
    val = np.vdot(state.amplitudes, apply_pauli(full, state.amplitudes))
    return float(val.real)


def _projected(state: StateVector, full: PauliString, sign: int) -> np.ndarray:
    unit = full.with_coefficient(1.0)
    return 0.5 * (state.amplitudes + sign * apply_pauli(unit, state.amplitudes))


def measure_observable(
    state: StateVector, p: PauliString, rng: np.random.Generator, qubits: Sequence[int] | None = None
) -> tuple[int, StateVector]:
    """Projective measurement of a binary observable ``p`` (coefficient +-1)."""
    if p.coefficient not in (1.0, -1.0):
        raise ValueError("only binary observables (coefficient +-1) can be measured")
    full = _full(state, p, qubits)
    plus = _projected(state, full, +1)
    prob_plus = min(max(float(np.vdot(plus, plus).real), 0.0), 1.0)
    if rng.random() < prob_plus:
        eig, vec, prob = +1, plus, prob_plus
    else:
        eig, vec, prob = -1, state.amplitudes - plus, 1.0 - prob_plus
    post = StateVector(vec / np.sqrt(prob), dict(state.registers))
    return eig * int(p.coefficient), post


def outcome_branches(
    state: StateVector, observables: Sequence[tuple[PauliString, Sequence[int]]], atol: float = 1e-15
) -> list[tuple[tuple[int, ...], float, np.ndarray]]:
    """Exact joint distribution of commuting coefficient-1 observables.

    Returns ``(outcomes, probability, unnormalized post-state)`` for every
    branch of non-negligible weight.
    """
    branches = [((), state.amplitudes)]
    for p, qubits in observables:
        full = _full(state, p, qubits).with_coefficient(1.0)
        nxt = []
        for outs, vec in branches:
            moved = apply_pauli(full, vec)
            for sign in (+1, -1):
                part = 0.5 * (vec + sign * moved)
                if np.vdot(part, part).real > atol:
                    nxt.append((outs + (sign,), part))
        branches = nxt
    return [(outs, float(np.vdot(v, v).real), v) for outs, v in branches]


def _remove_two(state: StateVector, q1: int, q2: int):
    q = state.num_qubits
    keep = [i for i in range(q) if i not in (q1, q2)]
    tensor = np.moveaxis(state.amplitudes.reshape((2,) * q), [q1, q2], [0, 1])
    where = {old: new for new, old in enumerate(keep)}
    regs = {}
    for name, qs in state.registers.items():
        left = tuple(where[i] for i in qs if i in where)
        if left:
            regs[name] = left
    return tensor.reshape(4, -1), regs


def bell_branches(
    state: StateVector, q1: int, q2: int, remove: bool = True
) -> list[tuple[int, int, float, StateVector | None]]:
    """All four Bell outcomes of qubits ``(q1, q2)`` with Born weights.

    Outcome ``(a, b)`` labels the projector onto ``Phi_ab``. Post-states are
    normalized; a branch of zero weight carries ``None``.
    """
    if q1 == q2:
        raise ValueError("Bell measurement needs two distinct qubits")
    q = state.num_qubits
    if not (0 <= q1 < q and 0 <= q2 < q):
        raise IndexError("qubit index out of range")
    mat, regs = _remove_two(state, q1, q2)
    out = []
    for (a, b), phi in BELL.items():
        rest = phi.conj() @ mat
        prob = float(np.vdot(rest, rest).real)
        post = None
        if prob > 1e-15:
            rest = rest / np.sqrt(prob)
            if remove:
                post = StateVector(rest, regs) if rest.size > 1 else None
            else:
                full = np.kron(phi, rest).reshape((2,) * q)
                full = np.moveaxis(full, [0, 1], [q1, q2])
                post = StateVector(full.reshape(-1), dict(state.registers))
        out.append((a, b, prob, post))
    return out


def bell_measure(
    state: StateVector, q1: int, q2: int, rng: np.random.Generator, remove: bool = True
) -> tuple[int, int, StateVector | None]:
    branches = bell_branches(state, q1, q2, remove=remove)
    probs = np.array([br[2] for br in branches])
    k = rng.choice(4, p=probs / probs.sum())
    a, b, _, post = branches[k]
    return a, b, post


@dataclass(frozen=True)
class TeleportRecord:
    """Frame bits reported after teleporting ``n`` qubits.

    Convention: ``a[i]`` is the Z-type frame bit (it flips X-basis outcomes)
    and ``b[i]`` is the X-type frame bit (it flips Z-basis outcomes), so the
    remote qubit ``i`` holds ``X^{b_i} Z^{a_i}`` applied to the source, up to
    phase. With these labels the verifier's correction rule
    ``d = (-1)^a c`` for X and ``(-1)^b c`` for Z is literally correct.
    """

    a: tuple[int, ...]
    b: tuple[int, ...]
    positions: tuple[int, ...]

    def __post_init__(self):
        if not (len(self.a) == len(self.b) == len(self.positions)):
            raise ValueError("a, b and positions must have equal length")
        if len(set(self.positions)) != len(self.positions):
            raise ValueError("teleport positions must be distinct")

    @property
    def x_frame(self) -> tuple[int, ...]:
        return self.b

    @property
    def z_frame(self) -> tuple[int, ...]:
        return self.a


def teleport(
    state: StateVector,
    source: str | Sequence[int],
    positions: Sequence[int],
    rng: np.random.Generator,
    epr_a: str = "epr_A",
    epr_b: str = "epr_B",
) -> tuple[TeleportRecord, StateVector]:
    """Teleport the source register through the EPR pairs at ``positions``.

    The returned state no longer contains the source qubits or the used
    ``epr_A`` halves; ``epr_B`` keeps its original ordering.
    """
    src = list(state.registers[source]) if isinstance(source, str) else list(source)
    a_half = state.registers[epr_a]
    b_half = state.registers[epr_b]
    positions = list(positions)
    if len(positions) != len(src):
        raise ValueError("one position per source qubit required")
    if len(set(positions)) != len(positions):
        raise ValueError("teleport positions must be distinct")
    if any(not 0 <= p < len(a_half) for p in positions):
        raise IndexError("teleport position out of range")
    if set(src) & (set(a_half) | set(b_half)):
        raise ValueError("source register overlaps the EPR registers")

    # track qubits by tag since indices shift after each removal
    tags = [None] * state.num_qubits
    for i, qb in enumerate(src):
        tags[qb] = ("src", i)
    for j, qb in enumerate(a_half):
        tags[qb] = ("A", j)
    zs, xs = [], []
    cur = state
    for i, pos in enumerate(positions):
        q1 = tags.index(("src", i))
        q2 = tags.index(("A", pos))
        bell_a, bell_b, cur = bell_measure(cur, q1, q2, rng)
        tags = [tg for k, tg in enumerate(tags) if k not in (q1, q2)]
        # Phi_ab leaves X^a Z^b on the remote side
        xs.append(bell_a)
        zs.append(bell_b)
    return TeleportRecord(tuple(zs), tuple(xs), tuple(positions)), cur


def teleport_branches(source: np.ndarray | StateVector) -> list[tuple[float, TeleportRecord, np.ndarray]]:
    """Enumerate every Bell-outcome branch of teleporting an ``n``-qubit state.

    Each source qubit is teleported through a fresh EPR pair, one at a time,
    so the peak register size is ``n + 2``. Returns ``(probability, record,
    remote amplitudes)`` with the remote qubits in source order and
    ``positions = (0..n-1)``.
    """
    psi = source if isinstance(source, StateVector) else StateVector(np.asarray(source))
    n = psi.num_qubits
    # layout during step i: remote_0..remote_{i-1}, src_i..src_{n-1}, A, B
    branches = [(1.0, (), (), psi.amplitudes)]
    for i in range(n):
        nxt = []
        for prob, zs, xs, amps in branches:
            joint = StateVector(np.kron(amps, BELL[(0, 0)]))
            q = joint.num_qubits
            for a, b, pb, post in bell_branches(joint, i, q - 2):
                if post is None:
                    continue
                # remaining order: remote.., src_{i+1}.., B -> move B to slot i
                order = list(range(post.num_qubits))
                order.insert(i, order.pop())
                moved = permute_qubits(post, order)
                nxt.append((prob * pb, zs + (b,), xs + (a,), moved.amplitudes))
        branches = nxt
    pos = tuple(range(n))
    return [(p, TeleportRecord(zs, xs, pos), amps) for p, zs, xs, amps in branches]


_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.diag([1.0, -1.0]).astype(complex)
_PAULI = {"X": _X, "Y": np.array([[0, -1j], [1j, 0]]), "Z": _Z}


def frame_correct(state: StateVector, record: TeleportRecord, qubits: Sequence[int]) -> StateVector:
    """Undo the teleportation frame on the remote ``qubits`` (one per record slot)."""
    out = state
    for qb, z, x in zip(qubits, record.z_frame, record.x_frame):
        # remote = X^x Z^z psi, so apply X^x first then Z^z
        if x:
            out = apply_unitary(out, _X, [qb])
        if z:
            out = apply_unitary(out, _Z, [qb])
    return out


class QubitPool:
    """Labelled qubits held in independent tensor-factor blocks.

    Untouched factors stay separate, so an EPR register of ``t`` pairs costs
    ``t`` two-qubit blocks until operations entangle them. EPR pairs declared
    with :meth:`declare_epr` are created on first use.
    """

    def __init__(self, cap: int = DEFAULT_DENSE_CAP):
        self.cap = cap
        self._blocks: dict[int, tuple[np.ndarray, list[str]]] = {}
        self._where: dict[str, int] = {}
        self._lazy: dict[str, tuple[str, str]] = {}
        self._next = 0

    def labels(self) -> list[str]:
        return list(self._where) + [lb for lb in self._lazy if lb not in self._where]

    def add(self, labels: Sequence[str], amplitudes: np.ndarray):
        labels = list(labels)
        if any(lb in self._where or lb in self._lazy for lb in labels):
            raise ValueError("label already in use")
        amps = np.asarray(amplitudes, dtype=complex)
        if amps.size != 1 << len(labels):
            raise ValueError("amplitudes do not match label count")
        self._blocks[self._next] = (amps, labels)
        for lb in labels:
            self._where[lb] = self._next
        self._next += 1

    def declare_epr(self, label_a: str, label_b: str):
        self._lazy[label_a] = (label_a, label_b)
        self._lazy[label_b] = (label_a, label_b)

    def _materialize(self, label: str):
        if label in self._where:
            return
        if label not in self._lazy:
            raise KeyError(f"unknown qubit label {label!r}")
        la, lb = self._lazy.pop(label)
        other = lb if label == la else la
        self._lazy.pop(other, None)
        self.add([la, lb], BELL[(0, 0)])

    def _merge(self, labels: Sequence[str]) -> tuple[int, list[int]]:
        for lb in labels:
            self._materialize(lb)
        ids = []
        for lb in labels:
            bid = self._where[lb]
            if bid not in ids:
                ids.append(bid)
        if len(ids) > 1:
            amps = np.ones(1, dtype=complex)
            merged: list[str] = []
            for bid in ids:
                a, lbs = self._blocks.pop(bid)
                amps = np.kron(amps, a)
                merged.extend(lbs)
            if len(merged) > self.cap:
                raise DimensionCapError(f"{len(merged)} qubits exceeds dense cap {self.cap}")
            self._blocks[self._next] = (amps, merged)
            for lb in merged:
                self._where[lb] = self._next
            ids = [self._next]
            self._next += 1
        bid = ids[0]
        order = self._blocks[bid][1]
        return bid, [order.index(lb) for lb in labels]

    def state_of(self, labels: Sequence[str]) -> StateVector:
        """Copy of the block holding ``labels``, reordered so they come first."""
        bid, idx = self._merge(labels)
        amps, lbs = self._blocks[bid]
        rest = [i for i in range(len(lbs)) if i not in idx]
        sv = permute_qubits(StateVector(amps), idx + rest)
        return sv

    def measure(self, letters: Mapping[str, str], rng: np.random.Generator) -> int:
        """Measure the product observable given as ``{label: letter}``; returns +-1."""
        active = {lb: ch for lb, ch in letters.items() if ch != "I"}
        if not active:
            return 1
        bid, idx = self._merge(list(active))
        amps, lbs = self._blocks[bid]
        q = len(lbs)
        tensor = amps.reshape((2,) * q)
        moved = tensor
        for ch, axis in zip(active.values(), idx):
            moved = np.moveaxis(np.tensordot(_PAULI[ch], moved, axes=([1], [axis])), 0, axis)
        plus = 0.5 * (amps + moved.reshape(-1))
        prob_plus = min(max(float(np.vdot(plus, plus).real), 0.0), 1.0)
        if rng.random() < prob_plus:
            out, vec, prob = 1, plus, prob_plus
        else:
            out, vec, prob = -1, amps - plus, 1.0 - prob_plus
        self._blocks[bid] = (vec / np.sqrt(prob), lbs)
        return out

    def bell_measure(self, l1: str, l2: str, rng: np.random.Generator) -> tuple[int, int]:
        """Bell-measure two labelled qubits and discard them."""
        bid, (i1, i2) = self._merge([l1, l2])
        amps, lbs = self._blocks.pop(bid)
        a, b, post = bell_measure(StateVector(amps), i1, i2, rng)
        del self._where[l1], self._where[l2]
        rest = [lb for lb in lbs if lb not in (l1, l2)]
        if rest:
            self._blocks[bid] = (post.amplitudes, rest)
        return a, b

    def view(self, *prefixes: str) -> PoolView:
        return PoolView(self, prefixes)


class PoolView:
    """A prover's handle on the pool: only labels with its own prefixes are reachable."""

    def __init__(self, pool: QubitPool, prefixes: Sequence[str]):
        self._pool = pool
        self._prefixes = tuple(prefixes)

    def _check(self, labels):
        for lb in labels:
            if not lb.startswith(self._prefixes):
                raise PermissionError(f"qubit {lb!r} is not held by this party")

    def add(self, labels: Sequence[str], amplitudes: np.ndarray):
        self._check(labels)
        self._pool.add(labels, amplitudes)

    def measure(self, letters: Mapping[str, str], rng: np.random.Generator) -> int:
        self._check(letters)
        return self._pool.measure(letters, rng)

    def bell_measure(self, l1: str, l2: str, rng: np.random.Generator) -> tuple[int, int]:
        self._check([l1, l2])
        return self._pool.bell_measure(l1, l2, rng)
