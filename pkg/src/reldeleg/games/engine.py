"""Acceptance-probability engines.

``exact_acceptance`` evaluates a game without sampling, for strategies it can
recognize from their descriptors; ``estimate_acceptance`` plays seeded rounds.
The two share no code path beyond the game rules themselves.
"""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import numpy as np

from ..pauli import PauliString, apply_pauli, dense_matrix
from ..qsim import BELL, epr_register, teleport_branches
from ..questions import MAGIC_TABLE
from ..strategies import (BitFlip, ClassicalTable, ConstantStrategy, HonestP1, HonestP2, LateAnswer,
                          unwrap)
from .energy import EnergyTest, HamiltonianTest, WrappedGame
from .magic_square import MagicSquareGame, wins
from .pbt import PauliBraidingTest

Z99 = 2.5758293035489004  # two-sided 99% normal quantile


class NotAnalyzable(TypeError):
    """The exact engine has no closed evaluation for this strategy."""


# ---------------------------------------------------------------- local models

_I2 = np.eye(2, dtype=complex)


def _proj(letters: str, sign: int) -> np.ndarray:
    return 0.5 * (np.eye(1 << len(letters), dtype=complex) + sign * dense_matrix(PauliString(letters)))


def _ms_model(strategy, role: int, q: int):
    """``[(answer pair, 4x4 operator)]`` for Magic Square question ``q`` (row or column)."""
    s = unwrap(strategy)
    if isinstance(s, BitFlip):
        return _ms_model(s.base, role, q)
    if isinstance(s, ConstantStrategy):
        return [((s.value, s.value), np.eye(4, dtype=complex))]
    if isinstance(s, ClassicalTable):
        return [(s.table[q], np.eye(4, dtype=complex))]
    honest = isinstance(s, HonestP1) if role == 1 else isinstance(s, HonestP2)
    if honest:
        entries = MAGIC_TABLE[q][:2] if role == 1 else [MAGIC_TABLE[r][q] for r in range(2)]
        out = []
        for s1, s2 in product((1, -1), repeat=2):
            op = _proj(entries[0], s1) @ _proj(entries[1], s2)
            out.append(((s1, s2), op))
        return out
    raise NotAnalyzable(f"no Magic Square model for {type(s).__name__}")


@lru_cache(maxsize=None)
def _epr2() -> np.ndarray:
    return epr_register(2).amplitudes


def magic_square_exact(p1, p2) -> float:
    psi = _epr2()
    total = 0.0
    for r in range(3):
        m1 = _ms_model(p1, 1, r)
        for c in range(3):
            for a, op1 in m1:
                for b, op2 in _ms_model(p2, 2, c):
                    if wins(r, c, a, b):
                        total += np.vdot(psi, np.kron(op1, op2) @ psi).real
    return total / 9


def _slot_model(strategy, role: int, letter: str, j: int):
    """Single-slot ``[(outcome, 2x2 operator)]`` for a word letter."""
    s = unwrap(strategy)
    if isinstance(s, BitFlip):
        if s.field != "outcomes":
            return _slot_model(s.base, role, letter, j)
        base = _slot_model(s.base, role, letter, j)
        if s.mask and s.mask[j] and letter != "I":
            return [(-o, op) for o, op in base]
        return base
    if isinstance(s, ConstantStrategy):
        return [(s.value, _I2)]
    honest = isinstance(s, HonestP1) if role == 1 else isinstance(s, HonestP2)
    if honest:
        if letter == "I":
            return [(1, _I2)]
        return [(+1, _proj(letter, +1)), (-1, _proj(letter, -1))]
    raise NotAnalyzable(f"no per-slot model for {type(s).__name__}")


def _pair_model(strategy, l1: str, l2: str, j: int):
    """Prover 1's single-slot joint answer ``[((o1, o2), operator)]`` to a word pair."""
    s = unwrap(strategy)
    if isinstance(s, BitFlip):
        base = _pair_model(s.base, l1, l2, j)
        if s.field != "outcomes" or not (s.mask and s.mask[j]):
            return base
        return [((-o1 if l1 != "I" else o1, -o2 if l2 != "I" else o2), op) for (o1, o2), op in base]
    if isinstance(s, ConstantStrategy):
        return [((s.value, s.value), _I2)]
    if isinstance(s, HonestP1):
        letter = l1 if l1 != "I" else l2
        if letter == "I":
            return [((1, 1), _I2)]
        return [((o if l1 != "I" else 1, o if l2 != "I" else 1), _proj(letter, o)) for o in (1, -1)]
    raise NotAnalyzable(f"no word-pair model for {type(s).__name__}")


_PHI = BELL[(0, 0)]


def _joint(op1: np.ndarray, op2: np.ndarray) -> float:
    return float(np.vdot(_PHI, np.kron(op1, op2) @ _PHI).real)


# masked letter distribution of one slot: W in {X, Z}, mask bit in {0, 1}
_SLOT_QUESTIONS = [("X", 0), ("X", 1), ("Z", 0), ("Z", 1)]


def _masked(w: str, bit: int) -> str:
    return w if bit else "I"


def consistency_exact(p1, p2, t: int) -> float:
    acc = 1.0
    for j in range(t):
        slot = 0.0
        for w, bit in _SLOT_QUESTIONS:
            letter = _masked(w, bit)
            for o1, op1 in _slot_model(p1, 1, letter, j):
                for o2, op2 in _slot_model(p2, 2, letter, j):
                    if o1 == o2:
                        slot += _joint(op1, op2)
        acc *= slot / 4
    return acc


def linearity_exact(p1, p2, t: int) -> float:
    total = 0.0
    for choice in (0, 1):
        acc = 1.0
        for j in range(t):
            slot = 0.0
            for w, x, y in product("XZ", (0, 1), (0, 1)):
                l1, l2 = _masked(w, x), _masked(w, y)
                sent = l1 if choice == 0 else l2
                for (o1, o2), op1 in _pair_model(p1, l1, l2, j):
                    mine = o1 if choice == 0 else o2
                    for c, op2 in _slot_model(p2, 2, sent, j):
                        if mine == c:
                            slot += _joint(op1, op2)
            acc *= slot / 8
        total += acc / 2
    return total


def anticommutation_exact(p1, p2, t: int) -> float:
    # catalog strategies treat every slot pair alike for Magic Square questions
    return magic_square_exact(p1, p2)


def pbt_exact(p1, p2, t: int) -> dict[str, float]:
    parts = {
        "consistency": consistency_exact(p1, p2, t),
        "linearity": linearity_exact(p1, p2, t),
        "anticommutation": anticommutation_exact(p1, p2, t),
    }
    parts["total"] = sum(parts.values()) / 3
    return parts


def _p1_energy_model(strategy):
    """``(ensemble, weights, a-flip, b-flip)`` for prover 1 in the Energy Test."""
    s = unwrap(strategy)
    flips = {"a": None, "b": None}
    while isinstance(s, BitFlip):
        if s.field in flips and s.mask:
            prev = flips[s.field]
            flips[s.field] = s.mask if prev is None else tuple(x ^ y for x, y in zip(prev, s.mask))
        s = unwrap(s.base)
    if isinstance(s, HonestP1):
        return s.states, s.weights, flips["a"], flips["b"]
    if isinstance(s, ConstantStrategy):
        return None, None, flips["a"], flips["b"]
    raise NotAnalyzable(f"no Energy Test model for prover 1 of type {type(s).__name__}")


def _check_p2_honest(strategy):
    s = unwrap(strategy)
    if isinstance(s, BitFlip) and not s.mask:
        return _check_p2_honest(s.base)
    if not isinstance(s, HonestP2):
        raise NotAnalyzable("the exact Energy Test engine needs an honest prover 2")


def energy_exact(h, p1, p2) -> float:
    """Sum over terms and teleportation branches of the rejection weight."""
    _check_p2_honest(p2)
    states, weights, flip_a, flip_b = _p1_energy_model(p1)
    n = h.n
    zero = (0,) * n
    flip_a = flip_a or zero
    flip_b = flip_b or zero
    rejection = 0.0
    for gamma, term in h.terms:
        letters = term.letters
        if states is None:
            # nothing teleported: prover 2's outcomes on fresh EPR halves are unbiased
            mean = 1.0 if term.weight == 0 else 0.0
        else:
            mean = 0.0
            for psi, wgt in zip(states, weights):
                for prob, rec, remote in teleport_branches(psi):
                    a = [x ^ f for x, f in zip(rec.a, flip_a)]
                    b = [x ^ f for x, f in zip(rec.b, flip_b)]
                    parity = sum(a[i] if ch == "X" else b[i] for i, ch in enumerate(letters) if ch != "I")
                    val = np.vdot(remote, apply_pauli(term, remote)).real
                    mean += wgt * prob * (-1) ** parity * val
        rejection += (abs(gamma) + gamma * mean) / 2
    return 1.0 - rejection / h.m


def exact_acceptance(game, p1, p2) -> float:
    """Exact acceptance probability of ``game`` for recognizable strategies."""
    return exact_breakdown(game, p1, p2)["total"]


def exact_breakdown(game, p1, p2) -> dict[str, float]:
    if isinstance(game, MagicSquareGame):
        return {"total": magic_square_exact(p1, p2)}
    if isinstance(game, PauliBraidingTest):
        return pbt_exact(p1, p2, game.t)
    if isinstance(game, EnergyTest):
        return {"total": energy_exact(game.h, p1, p2)}
    if isinstance(game, HamiltonianTest):
        parts = {}
        if game.p < 1:
            parts.update({f"pbt.{k}": v for k, v in pbt_exact(p1, p2, game.t).items()})
        if game.p > 0:
            parts["energy"] = energy_exact(game.h, p1, p2)
        pbt_val = parts.get("pbt.total", 1.0)
        en_val = parts.get("energy", 1.0)
        parts["total"] = (1 - game.p) * pbt_val + game.p * en_val
        return parts
    if isinstance(game, WrappedGame):
        inner = exact_breakdown(game.inner, p1, p2)
        w_acc, _, w_play = game.weights
        out = {f"inner.{k}": v for k, v in inner.items()}
        out["total"] = w_acc + w_play * inner["total"]
        return out
    raise NotAnalyzable(f"no exact evaluation for {type(game).__name__}")


# ---------------------------------------------------------------- Monte Carlo

@dataclass
class Estimate:
    frequency: float
    half_width: float
    rounds: int
    accepted: int
    seed: int
    breakdown: dict[str, list[int]] = field(default_factory=dict)
    resamples: int = 0
    transcripts: list = field(default_factory=list, repr=False)

    @property
    def interval(self) -> tuple[float, float]:
        return self.frequency - self.half_width, self.frequency + self.half_width

    def contains(self, value: float, slack: float = 1e-12) -> bool:
        return abs(value - self.frequency) <= self.half_width + slack

    def to_dict(self) -> dict:
        return {
            "acceptance": self.frequency,
            "interval": [self.interval[0], self.interval[1]],
            "half_width": self.half_width,
            "rounds": self.rounds,
            "accepted": self.accepted,
            "seed": self.seed,
            "per_test": {k: {"accepted": v[0], "rounds": v[1]} for k, v in sorted(self.breakdown.items())},
            "resamples": self.resamples,
        }


def _run_chunk(args):
    game, p1, p2, seq, rounds, keep = args
    main, coin = seq.spawn(2)
    rng = np.random.Generator(np.random.PCG64(main))
    coin_rng = np.random.Generator(np.random.PCG64(coin))
    acc = 0
    per: Counter = Counter()
    tot: Counter = Counter()
    resamples = 0
    kept = []
    for _ in range(rounds):
        tr = game.play_round(p1, p2, rng, coin_rng)
        acc += tr.accepted
        tot[tr.test] += 1
        per[tr.test] += tr.accepted
        resamples += tr.extras.get("resamples", 0)
        if keep:
            kept.append(tr)
    return acc, dict(per), dict(tot), resamples, kept


def estimate_acceptance(game, p1, p2, rounds: int, seed: int, workers: int = 1,
                        chunk_size: int = 1000, keep_transcripts: bool = False) -> Estimate:
    """Empirical acceptance with a 99% normal-approximation half-width.

    Rounds are grouped in fixed-size chunks, each seeded from its own child
    of ``SeedSequence(seed)``; results do not depend on ``workers``.
    """
    if rounds < 1:
        raise ValueError("rounds must be at least 1")
    n_chunks = math.ceil(rounds / chunk_size)
    seqs = np.random.SeedSequence(seed).spawn(n_chunks)
    sizes = [min(chunk_size, rounds - k * chunk_size) for k in range(n_chunks)]
    jobs = [(game, p1, p2, s, n, keep_transcripts) for s, n in zip(seqs, sizes)]
    if workers > 1 and n_chunks > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_chunk, jobs))
    else:
        results = [_run_chunk(j) for j in jobs]
    accepted = sum(r[0] for r in results)
    per: Counter = Counter()
    tot: Counter = Counter()
    transcripts = []
    for r in results:
        per.update(r[1])
        tot.update(r[2])
        transcripts.extend(r[4])
    freq = accepted / rounds
    half = Z99 * math.sqrt(freq * (1 - freq) / rounds)
    breakdown = {k: [per.get(k, 0), tot[k]] for k in tot}
    return Estimate(freq, half, rounds, accepted, seed, breakdown,
                    sum(r[3] for r in results), transcripts)
