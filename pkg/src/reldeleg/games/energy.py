"""Energy Test, the Hamiltonian Test G(H) and the wrapped game built on it."""

from __future__ import annotations

import logging
import math

from ..hamiltonian import XZHamiltonian, amplify, ground_energy
from ..pauli import PauliString, restrict
from ..questions import Positions, Word
from ..strategies import P1_PREFIXES, P2_PREFIXES
from .core import GameConfig, Transcript, check_bits, check_pm1, default_t, random_bits, random_word
from .pbt import PauliBraidingTest, fresh_pool

log = logging.getLogger(__name__)


class NoEmbedding(ValueError):
    """No injective slot assignment matches the term for this question."""


class EmbeddingExhausted(RuntimeError):
    def __init__(self, attempts: int):
        self.attempts = attempts
        super().__init__(f"no embedding found after {attempts} draws of (W, e)")


def embed_positions(term: PauliString | str, w: str, e, rng) -> tuple[int, ...]:
    """Random injective ``T`` with ``W(e)[T_i]`` equal to letter ``i`` of ``term``.

    Identity letters are placed on slots where ``e`` is 0. The draw is
    uniform over all valid assignments.
    """
    letters = term.letters if isinstance(term, PauliString) else term
    masked = restrict(w, e).letters
    free: dict[str, list[int]] = {"X": [], "Z": [], "I": []}
    for j, ch in enumerate(masked):
        free[ch].append(j)
    need: dict[str, list[int]] = {"X": [], "Z": [], "I": []}
    for i, ch in enumerate(letters):
        if ch not in need:
            raise ValueError(f"term letter {ch!r} is not X, Z or I")
        need[ch].append(i)
    positions = [0] * len(letters)
    for ch, idx in need.items():
        if len(idx) > len(free[ch]):
            raise NoEmbedding(f"term needs {len(idx)} {ch} slots, W(e) offers {len(free[ch])}")
        if idx:
            chosen = rng.permutation(free[ch])[: len(idx)]
            for i, slot in zip(idx, chosen):
                positions[i] = int(slot)
    return tuple(positions)


def derive_d(term: str, w: str, positions, a, b, c) -> tuple[int, ...]:
    """Frame-corrected outcomes: X slots use ``a``, Z slots use ``b``; I slots give +1."""
    d = []
    for i, ch in enumerate(term):
        if ch == "I":
            d.append(1)
            continue
        slot = positions[i]
        bit = a[i] if w[slot] == "X" else b[i]
        d.append((-1) ** bit * c[slot])
    return tuple(d)


def _sign(x: float) -> int:
    return (x > 0) - (x < 0)


def energy_verdict(product: int, gamma: float, coin: float) -> bool:
    """Accept on a sign mismatch; otherwise reject when ``coin < |gamma|``."""
    if product != _sign(gamma):
        return True
    return coin >= abs(gamma)


class EnergyTest:
    def __init__(self, h: XZHamiltonian, t: int | None = None, max_embed_resamples: int = 64):
        if not h.normal_form:
            raise ValueError("the Energy Test needs a normal-form Hamiltonian (|gamma| <= 1)")
        self.h = h
        self.t = t if t is not None else default_t(h.n, h.k)
        if self.t < h.n:
            raise ValueError(f"t={self.t} is smaller than n={h.n}")
        self.max_embed_resamples = max_embed_resamples

    def describe(self) -> dict:
        return {"game": "energy", "t": self.t, "n": self.h.n, "m": self.h.m}

    def play_round(self, p1, p2, rng, coin_rng) -> Transcript:
        h = self.h
        l = int(rng.integers(h.m))
        gamma, term = h.terms[l]
        for attempt in range(1, self.max_embed_resamples + 1):
            w = random_word(rng, self.t)
            e = random_bits(rng, self.t)
            try:
                positions = embed_positions(term, w, e, rng)
                break
            except NoEmbedding:
                continue
        else:
            raise EmbeddingExhausted(self.max_embed_resamples)
        pool = fresh_pool(self.t)
        masked = restrict(w, e).letters
        a, b = p1.answer(Positions(positions), pool.view(*P1_PREFIXES), rng)
        a = check_bits(a, h.n, "prover 1")
        b = check_bits(b, h.n, "prover 1")
        c = check_pm1(p2.answer(Word(masked), pool.view(*P2_PREFIXES), rng), self.t, "prover 2")
        d = derive_d(term.letters, w, positions, a, b, c)
        product = math.prod(d)
        coin = float(coin_rng.random())
        return Transcript(
            "energy",
            {"l": l, "W": w, "e": list(e), "positions": list(positions), "to_p2": masked},
            {"a": list(a), "b": list(b), "c": list(c)},
            energy_verdict(product, gamma, coin),
            d,
            {"gamma": gamma, "term": term.letters, "coin": coin, "resamples": attempt - 1},
        )


def audit_transcript(tr: Transcript, h: XZHamiltonian) -> bool:
    """Re-derive ``d`` and the verdict of an energy transcript from its stored fields."""
    if tr.test != "energy":
        return True
    q, ans = tr.questions, tr.answers
    gamma, term = h.terms[q["l"]]
    d = derive_d(term.letters, q["W"], q["positions"], ans["a"], ans["b"], ans["c"])
    if tuple(tr.d) != d:
        return False
    return energy_verdict(math.prod(d), gamma, tr.extras["coin"]) == tr.accepted


class HamiltonianTest:
    """``G(H)``: Pauli Braiding Test with probability ``1 - p``, Energy Test with ``p``."""

    def __init__(self, h: XZHamiltonian, p: float, t: int | None = None, max_embed_resamples: int = 64):
        if not 0 <= p <= 1:
            raise ValueError("p must lie in [0, 1]")
        self.h = h
        self.p = p
        self.energy = EnergyTest(h, t, max_embed_resamples)
        self.t = self.energy.t
        self.pbt = PauliBraidingTest(self.t)

    @classmethod
    def from_config(cls, h: XZHamiltonian, cfg: GameConfig) -> HamiltonianTest:
        return cls(h, cfg.p, cfg.t, cfg.max_embed_resamples)

    def describe(self) -> dict:
        return {"game": "hamiltonian", "p": self.p, "t": self.t, "n": self.h.n, "m": self.h.m}

    def play_round(self, p1, p2, rng, coin_rng) -> Transcript:
        if rng.random() < self.p:
            return self.energy.play_round(p1, p2, rng, coin_rng)
        return self.pbt.play_round(p1, p2, rng)


def omega_h(h: XZHamiltonian, p: float, ground: float | None = None) -> float:
    """Honest acceptance ``1 - p ((1/2m) sum |gamma_l| + lambda_0 / 2)``."""
    lam = ground_energy(h) if ground is None else ground
    return 1.0 - p * (h.gamma_abs_mean / 2 + lam / 2)


class WrappedGame:
    """Accept outright, reject outright, or play ``G(H')`` on the amplified instance.

    Branch weights are ``1/2 - (2c - eta')/4``, ``(2c - eta')/4`` and ``1/2``.
    ``c`` defaults to the honest-value threshold of ``G(H')`` at
    ``lambda_0(H') = 1/2``, i.e. ``1 - p (S' + 1/(4 rho))`` where ``S'`` is
    the mean ``|gamma'|`` over two and ``rho`` the amplification rescale.
    """

    def __init__(self, h: XZHamiltonian, alpha: float, beta: float, p: float,
                 eta_prime: float = 0.05, t: int | None = None, c: float | None = None,
                 max_embed_resamples: int = 64):
        self.amplified = amplify(h, alpha, beta)
        inner = self.amplified.hamiltonian
        self.inner = HamiltonianTest(inner, p, t, max_embed_resamples)
        rho = self.amplified.rescale
        self.c = c if c is not None else 1.0 - p * (inner.gamma_abs_mean / 2 + 0.5 / rho / 2)
        self.eta_prime = eta_prime
        w_rej = (2 * self.c - eta_prime) / 4
        self.weights = (0.5 - w_rej, w_rej, 0.5)
        if any(not 0 <= w <= 1 for w in self.weights):
            raise ValueError(f"invalid mixture weights {self.weights}")

    @property
    def h_prime(self) -> XZHamiltonian:
        return self.inner.h

    @classmethod
    def from_config(cls, h: XZHamiltonian, cfg: GameConfig) -> WrappedGame:
        if h.alpha is None:
            raise ValueError("the wrapped game needs alpha and beta on the instance")
        return cls(h, h.alpha, h.beta, cfg.p, cfg.eta_prime, cfg.t, cfg.c, cfg.max_embed_resamples)

    def describe(self) -> dict:
        return {"game": "wrapped", "p": self.inner.p, "t": self.inner.t, "a": self.amplified.a,
                "rescale": self.amplified.rescale, "c": self.c, "eta_prime": self.eta_prime}

    def play_round(self, p1, p2, rng, coin_rng) -> Transcript:
        u = rng.random()
        w_acc, w_rej, _ = self.weights
        if u < w_acc:
            return Transcript("wrapped-accept", {}, {}, True, extras={"branch": "accept"})
        if u < w_acc + w_rej:
            return Transcript("wrapped-reject", {}, {}, False, extras={"branch": "reject"})
        tr = self.inner.play_round(p1, p2, rng, coin_rng)
        tr.extras["branch"] = "play"
        return tr


def energy_test_round(h, s1, s2, cfg: GameConfig, rng, coin_rng) -> Transcript:
    return EnergyTest(h, cfg.t, cfg.max_embed_resamples).play_round(s1, s2, rng, coin_rng)


def hamiltonian_test_round(h, s1, s2, cfg: GameConfig, rng, coin_rng) -> Transcript:
    return HamiltonianTest.from_config(h, cfg).play_round(s1, s2, rng, coin_rng)


def wrapped_game_round(h, alpha, beta, cfg: GameConfig, s1, s2, rng, coin_rng) -> Transcript:
    game = WrappedGame(h, alpha, beta, cfg.p, cfg.eta_prime, cfg.t, cfg.c, cfg.max_embed_resamples)
    return game.play_round(s1, s2, rng, coin_rng)
