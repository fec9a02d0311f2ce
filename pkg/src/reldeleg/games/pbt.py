"""Pauli Braiding Test: consistency, linearity and anticommutation sub-tests."""

from __future__ import annotations

from ..pauli import restrict
from ..qsim import QubitPool
from ..questions import Word, WordPair
from ..strategies import P1_PREFIXES, P2_PREFIXES
from .core import Transcript, check_pm1, random_bits, random_word
from .magic_square import play_magic_square

SUBTESTS = ("consistency", "linearity", "anticommutation")


def fresh_pool(t: int) -> QubitPool:
    pool = QubitPool()
    for j in range(t):
        pool.declare_epr(f"A{j}", f"B{j}")
    return pool


class PauliBraidingTest:
    """Each round runs one of the three sub-tests with probability 1/3.

    The anticommutation sub-test plays a single Magic Square round on a
    uniformly random ordered pair of distinct EPR slots.
    """

    def __init__(self, t: int):
        if t < 2:
            raise ValueError("the Pauli Braiding Test needs t >= 2")
        self.t = t

    def describe(self) -> dict:
        return {"game": "pbt", "t": self.t}

    def play_round(self, p1, p2, rng, coin_rng=None, subtest: str | None = None) -> Transcript:
        if subtest is None:
            subtest = SUBTESTS[int(rng.integers(3))]
        pool = fresh_pool(self.t)
        if subtest == "consistency":
            return self._consistency(p1, p2, pool, rng)
        if subtest == "linearity":
            return self._linearity(p1, p2, pool, rng)
        if subtest == "anticommutation":
            return self._anticommutation(p1, p2, pool, rng)
        raise ValueError(f"unknown sub-test {subtest!r}")

    def _consistency(self, p1, p2, pool, rng) -> Transcript:
        t = self.t
        w = random_word(rng, t)
        a = random_bits(rng, t)
        q = restrict(w, a).letters
        b = check_pm1(p1.answer(Word(q), pool.view(*P1_PREFIXES), rng), t, "prover 1")
        c = check_pm1(p2.answer(Word(q), pool.view(*P2_PREFIXES), rng), t, "prover 2")
        return Transcript("consistency", {"W": w, "a": list(a), "sent": q},
                          {"b": list(b), "c": list(c)}, b == c)

    def _linearity(self, p1, p2, pool, rng) -> Transcript:
        t = self.t
        w = random_word(rng, t)
        a = random_bits(rng, t)
        a2 = random_bits(rng, t)
        q1 = restrict(w, a).letters
        q2 = restrict(w, a2).letters
        choice = int(rng.integers(2))
        sent = q1 if choice == 0 else q2
        b, b2 = p1.answer(WordPair(q1, q2), pool.view(*P1_PREFIXES), rng)
        b = check_pm1(b, t, "prover 1")
        b2 = check_pm1(b2, t, "prover 1")
        c = check_pm1(p2.answer(Word(sent), pool.view(*P2_PREFIXES), rng), t, "prover 2")
        # the verifier compares against the word it actually sent
        accepted = (b if choice == 0 else b2) == c
        return Transcript("linearity",
                          {"W": w, "a": list(a), "a_prime": list(a2), "to_p1": [q1, q2], "to_p2": sent},
                          {"b": list(b), "b_prime": list(b2), "c": list(c)}, accepted)

    def _anticommutation(self, p1, p2, pool, rng) -> Transcript:
        i, j = (int(x) for x in rng.choice(self.t, size=2, replace=False))
        return play_magic_square(p1, p2, pool, (i, j), rng, label="anticommutation")


def pbt_round(s1, s2, cfg, rng) -> Transcript:
    return PauliBraidingTest(cfg.t).play_round(s1, s2, rng)
