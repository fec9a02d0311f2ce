"""Shared game plumbing: configuration, transcripts, answer validation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

TEST_LABELS = (
    "consistency", "linearity", "anticommutation", "energy",
    "wrapped-accept", "wrapped-reject", "magic-square",
)


class MalformedAnswer(ValueError):
    """A prover's answer does not have the shape its question demands."""


@dataclass(frozen=True)
class GameConfig:
    p: float = 0.5
    t: int | None = None
    seed: int = 0
    max_embed_resamples: int = 64
    eta: float | None = None
    eta_prime: float = 0.05
    c: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p={self.p} outside [0, 1]")
        if self.t is not None and self.t < 1:
            raise ValueError("t must be positive")
        if self.max_embed_resamples < 1:
            raise ValueError("max_embed_resamples must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def default_t(n: int, k: int) -> int:
    """EPR register size ``ceil(2 n log2(max(n, 2))) + 2k``."""
    return math.ceil(2 * n * math.log2(max(n, 2))) + 2 * k


@dataclass
class Transcript:
    """One game round. ``d`` is set for energy rounds only."""

    test: str
    questions: dict[str, Any]
    answers: dict[str, Any]
    accepted: bool
    d: tuple[int, ...] | None = None
    extras: dict[str, Any] = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return "accept" if self.accepted else "reject"

    def to_dict(self) -> dict[str, Any]:
        return {
            "test": self.test,
            "questions": self.questions,
            "answers": self.answers,
            "d": None if self.d is None else list(self.d),
            "verdict": self.verdict,
            "extras": self.extras,
        }


def check_pm1(values, length: int, who: str) -> tuple[int, ...]:
    try:
        values = tuple(int(v) for v in values)
    except (TypeError, ValueError) as exc:
        raise MalformedAnswer(f"{who}: answer is not a sequence of +-1 values") from exc
    if len(values) != length or any(v not in (1, -1) for v in values):
        raise MalformedAnswer(f"{who}: expected {length} values in {{+1, -1}}, got {values}")
    return values


def check_bits(values, length: int, who: str) -> tuple[int, ...]:
    try:
        values = tuple(int(v) for v in values)
    except (TypeError, ValueError) as exc:
        raise MalformedAnswer(f"{who}: answer is not a bitstring") from exc
    if len(values) != length or any(v not in (0, 1) for v in values):
        raise MalformedAnswer(f"{who}: expected {length} bits, got {values}")
    return values


def random_word(rng, t: int) -> str:
    return "".join("XZ"[i] for i in rng.integers(0, 2, size=t))


def random_bits(rng, t: int) -> tuple[int, ...]:
    return tuple(int(b) for b in rng.integers(0, 2, size=t))
