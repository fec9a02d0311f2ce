"""One-dimensional space-time bookkeeping for the two-prover timing protocol.

Units put the speed of light at 1. The verifier sits at the origin, prover 1
at ``-t0`` and prover 2 at ``+t0``. Questions leave the verifier at time 0,
honest answers are sent ``t1`` after arrival, and the verifier aborts on any
answer arriving after ``3 t0``.
"""

from __future__ import annotations

import json
import logging
import math
import secrets
from collections import deque
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

log = logging.getLogger(__name__)

TOL = 1e-12
DEFAULT_GUARD = 0.25  # t1 < guard * t0
TRUSTED = frozenset({"V", "A1", "A2"})
PROVERS = ("P1", "P2")


@dataclass(frozen=True, order=True, init=False)
class SpaceTimeEvent:
    time: float
    position: float

    def __init__(self, position: float, time: float):
        if not (math.isfinite(position) and math.isfinite(time)):
            raise ValueError(f"non-finite event ({position}, {time})")
        object.__setattr__(self, "position", float(position))
        object.__setattr__(self, "time", float(time))

    def __repr__(self) -> str:
        return f"SpaceTimeEvent(x={self.position:g}, t={self.time:g})"

    def to_list(self) -> list[float]:
        return [self.position, self.time]


def causally_reachable(e1: SpaceTimeEvent, e2: SpaceTimeEvent, tol: float = TOL) -> bool:
    """True iff a signal at speed <= 1 can leave ``e1`` and reach ``e2``."""
    return e2.time - e1.time >= abs(e2.position - e1.position) - tol


@dataclass(frozen=True)
class Party:
    name: str
    worldline: tuple[SpaceTimeEvent, ...]

    def position_at(self, time: float) -> float:
        pts = self.worldline
        if time <= pts[0].time:
            return pts[0].position
        for a, b in zip(pts, pts[1:]):
            if a.time <= time <= b.time:
                if b.time == a.time:
                    return b.position
                frac = (time - a.time) / (b.time - a.time)
                return a.position + frac * (b.position - a.position)
        return pts[-1].position

    def max_speed(self) -> float:
        speed = 0.0
        for a, b in zip(self.worldline, self.worldline[1:]):
            dt, dx = b.time - a.time, abs(b.position - a.position)
            if dt <= 0:
                speed = max(speed, math.inf if dx > TOL or dt < 0 else 0.0)
            else:
                speed = max(speed, dx / dt)
        return speed


def stationary(name: str, position: float, start: float, end: float) -> Party:
    return Party(name, (SpaceTimeEvent(position, start), SpaceTimeEvent(position, end)))


@dataclass(frozen=True)
class Message:
    sender: str
    receiver: str
    emit: SpaceTimeEvent
    receive: SpaceTimeEvent
    payload_len: int
    kind: str  # question | answer | handoff | relay
    payload: str = ""  # logical payload id, e.g. "q1"
    encrypted: bool = False
    content: str = ""  # hex of what travels on the wire

    @property
    def label(self) -> str:
        return f"{self.sender}->{self.receiver}:{self.kind}"


@dataclass(frozen=True)
class MessageSchedule:
    t0: float
    t1: float
    parties: tuple[Party, ...]
    messages: tuple[Message, ...]
    deadline: float

    def party(self, name: str) -> Party:
        for p in self.parties:
            if p.name == name:
                return p
        raise KeyError(name)

    def events(self) -> list[tuple[str, SpaceTimeEvent]]:
        """Every (party, event) pair touched by a message, without duplicates."""
        seen: dict[tuple[str, SpaceTimeEvent], None] = {}
        for m in self.messages:
            seen[(m.sender, m.emit)] = None
            seen[(m.receiver, m.receive)] = None
        return list(seen)

    def answer_emission(self, prover: str) -> SpaceTimeEvent:
        times = [m.emit for m in self.messages if m.sender == prover and m.kind == "answer"]
        if not times:
            raise KeyError(f"{prover} sends no answer")
        return min(times)

    def to_dict(self) -> dict:
        return {
            "t0": self.t0, "t1": self.t1, "deadline": self.deadline,
            "parties": [{"name": p.name, "worldline": [e.to_list() for e in p.worldline]} for p in self.parties],
            "messages": [
                {**{k: v for k, v in asdict(m).items() if k not in ("emit", "receive")},
                 "emit": m.emit.to_list(), "receive": m.receive.to_list()}
                for m in self.messages
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> MessageSchedule:
        parties = tuple(Party(p["name"], tuple(SpaceTimeEvent(*e) for e in p["worldline"])) for p in d["parties"])
        msgs = []
        for m in d["messages"]:
            m = dict(m)
            m["emit"] = SpaceTimeEvent(*m["emit"])
            m["receive"] = SpaceTimeEvent(*m["receive"])
            msgs.append(Message(**m))
        return cls(float(d["t0"]), float(d["t1"]), parties, tuple(msgs), float(d["deadline"]))


def dumps(schedule: MessageSchedule) -> str:
    return json.dumps(schedule.to_dict(), indent=2, sort_keys=True) + "\n"


def loads(text: str) -> MessageSchedule:
    return MessageSchedule.from_dict(json.loads(text))


def load(path: str | Path) -> MessageSchedule:
    return loads(Path(path).read_text())


def dump(schedule: MessageSchedule, path: str | Path) -> None:
    Path(path).write_text(dumps(schedule))


# ---------------------------------------------------------------- schedules

def _check_params(t0: float, t1: float, guard: float):
    if not t0 > 0:
        raise ValueError("t0 must be positive")
    if not 0 < t1 < guard * t0:
        raise ValueError(f"need 0 < t1 < {guard} * t0 (got t0={t0}, t1={t1})")


def _prover_positions(t0: float) -> dict[str, float]:
    return {"P1": -t0, "P2": t0}


def honest_schedule(t0: float, t1: float, payload_len: int = 1, guard: float = DEFAULT_GUARD) -> MessageSchedule:
    _check_params(t0, t1, guard)
    end = 3 * t0
    parties = [stationary("V", 0.0, 0.0, end)]
    msgs = []
    for i, (name, x) in enumerate(_prover_positions(t0).items(), 1):
        parties.append(stationary(name, x, 0.0, end))
        origin = SpaceTimeEvent(0.0, 0.0)
        arrive = SpaceTimeEvent(x, t0)
        reply = SpaceTimeEvent(x, t0 + t1)
        msgs.append(Message("V", name, origin, arrive, payload_len, "question", f"q{i}"))
        msgs.append(Message(name, "V", reply, SpaceTimeEvent(0.0, 2 * t0 + t1), payload_len, "answer", f"r{i}"))
    return MessageSchedule(t0, t1, tuple(parties), tuple(msgs), end)


def otp(key: bytes, message: bytes) -> bytes:
    """XOR ``message`` with the leading bytes of ``key``; applying it twice is the identity."""
    if len(key) < len(message):
        raise ValueError(f"one-time pad key of {len(key)} bytes is shorter than message of {len(message)}")
    return bytes(k ^ m for k, m in zip(key, message))


def agent_schedule(t0: float, t1: float, questions: Sequence[bytes] = (b"\x00", b"\x00"),
                   keys: Sequence[bytes] | None = None, guard: float = DEFAULT_GUARD) -> MessageSchedule:
    """Schedule with trusted agents ``A1``, ``A2`` sitting next to the provers.

    Verifier-to-agent traffic is one-time-pad encrypted with pre-shared keys;
    each agent decrypts on arrival and hands the question to its prover locally.
    """
    _check_params(t0, t1, guard)
    if len(questions) != 2:
        raise ValueError("need one question per prover")
    if keys is None:
        keys = [secrets.token_bytes(len(q)) for q in questions]
    end = 3 * t0
    parties = [stationary("V", 0.0, 0.0, end)]
    msgs = []
    for i, (name, x) in enumerate(_prover_positions(t0).items(), 1):
        agent = f"A{i}"
        parties += [stationary(name, x, 0.0, end), stationary(agent, x, 0.0, end)]
        q = bytes(questions[i - 1])
        cipher = otp(keys[i - 1], q)
        nbits = 8 * len(q)
        origin, arrive = SpaceTimeEvent(0.0, 0.0), SpaceTimeEvent(x, t0)
        msgs.append(Message("V", agent, origin, arrive, nbits, "question", f"q{i}", True, cipher.hex()))
        msgs.append(Message(agent, name, arrive, arrive, nbits, "handoff", f"q{i}", False, q.hex()))
        reply = SpaceTimeEvent(x, t0 + t1)
        msgs.append(Message(name, "V", reply, SpaceTimeEvent(0.0, 2 * t0 + t1), 1, "answer", f"r{i}"))
    return MessageSchedule(t0, t1, tuple(parties), tuple(msgs), end)


# ---------------------------------------------------------------- validation

@dataclass
class Verdict:
    ok: bool
    nss_violations: list[str] = field(default_factory=list)
    late: list[str] = field(default_factory=list)
    worldline: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def validate(schedule: MessageSchedule, tol: float = TOL) -> Verdict:
    nss, late, wl = [], [], []
    names = {p.name for p in schedule.parties}
    for k, m in enumerate(schedule.messages):
        tag = f"#{k} {m.label}"
        if not causally_reachable(m.emit, m.receive, tol):
            nss.append(f"{tag}: dt={m.receive.time - m.emit.time:g} < dx={abs(m.receive.position - m.emit.position):g}")
        if m.kind == "answer" and m.receiver == "V" and m.receive.time > schedule.deadline + tol:
            late.append(f"{tag}: arrives {m.receive.time:g} after deadline {schedule.deadline:g}")
        for who, ev in ((m.sender, m.emit), (m.receiver, m.receive)):
            if who not in names:
                wl.append(f"{tag}: unknown party {who}")
            elif abs(schedule.party(who).position_at(ev.time) - ev.position) > 1e-9:
                wl.append(f"{tag}: {who} is not at x={ev.position:g} at t={ev.time:g}")
    for p in schedule.parties:
        if p.max_speed() > 1 + tol:
            wl.append(f"{p.name}: worldline speed {p.max_speed():g} exceeds 1")
    return Verdict(not (nss or late or wl), nss, late, wl)


# ---------------------------------------------------------------- attacks

@dataclass(frozen=True)
class AttackResult:
    x: float
    feasible: bool
    arrival: float
    latest_useful: float
    chain: tuple[SpaceTimeEvent, ...] | None

    def to_dict(self) -> dict:
        return {"x": self.x, "feasible": self.feasible, "arrival": self.arrival,
                "latest_useful": self.latest_useful,
                "chain": [e.to_list() for e in self.chain] if self.chain else None}


def latest_answer_emission(t0: float, deadline: float | None = None) -> float:
    """Latest time a prover at distance ``t0`` can answer and still meet the deadline."""
    return (3 * t0 if deadline is None else deadline) - t0


def intercept_attack_feasible(t0: float, t1: float, x: float) -> AttackResult:
    """Prover 1 waits at ``-x``, reads the question at time ``x`` and relays it to prover 2."""
    if not 0 < x < t0:
        raise ValueError(f"intercept offset x={x} must lie in (0, t0)")
    start = SpaceTimeEvent(0.0, 0.0)
    grab = SpaceTimeEvent(-x, x)
    land = SpaceTimeEvent(t0, x + (t0 + x))
    assert causally_reachable(start, grab) and causally_reachable(grab, land)
    latest = latest_answer_emission(t0)
    feasible = land.time <= latest + TOL
    return AttackResult(x, feasible, land.time, latest, (start, grab, land) if feasible else None)


def intercept_schedule(t0: float, t1: float, x: float) -> MessageSchedule:
    """Honest schedule with prover 1 moved to ``-x`` early, plus its relay to prover 2.

    Prover 1 walks back to ``-t0`` at light speed so it is in place by ``t0``.
    Prover 2 holds its answer until the relay lands, so the schedule
    validates exactly when the attack is feasible.
    """
    base = honest_schedule(t0, t1)
    res = intercept_attack_feasible(t0, t1, x)
    grab, land = SpaceTimeEvent(-x, x), SpaceTimeEvent(t0, 2 * x + t0)
    p1 = Party("P1", (SpaceTimeEvent(-x, 0.0), grab, SpaceTimeEvent(-t0, t0), SpaceTimeEvent(-t0, 3 * t0)))
    end = max(3 * t0, land.time + t0)
    parties = tuple(
        p1 if p.name == "P1" else stationary(p.name, p.worldline[0].position, 0.0, end)
        for p in base.parties
    )
    reply = max(t0 + t1, land.time)
    msgs = tuple(
        replace(m, emit=SpaceTimeEvent(t0, reply), receive=SpaceTimeEvent(0.0, reply + t0))
        if m.sender == "P2" and m.kind == "answer" else m
        for m in base.messages
    )
    relay = Message("P1", "P2", grab, land, 1, "relay", "q1")
    log.debug("intercept x=%g feasible=%s", x, res.feasible)
    return MessageSchedule(t0, t1, parties, msgs + (relay,), base.deadline)


def attack_grid(t0: float, points: int = 100) -> np.ndarray:
    """``points`` offsets strictly inside ``(0, t0)`` with spacing ``t0 / (points + 1)``."""
    return t0 * np.arange(1, points + 1) / (points + 1)


def _plaintext_sources(schedule: MessageSchedule, payload: str) -> list[tuple[str, SpaceTimeEvent]]:
    """Events where an untrusted party first holds ``payload`` in the clear."""
    out = []
    for m in schedule.messages:
        if m.payload == payload and not m.encrypted and m.receiver not in TRUSTED:
            out.append((m.receiver, m.receive))
    return out


def _wire_sources(schedule: MessageSchedule, payload: str) -> list[SpaceTimeEvent]:
    """Emission events of plaintext copies of ``payload`` travelling through open space."""
    return [m.emit for m in schedule.messages
            if m.payload == payload and not m.encrypted and m.emit.position != m.receive.position]


def plaintext_available(schedule: MessageSchedule, payload: str, event: SpaceTimeEvent) -> bool:
    """Whether the clear payload can be present at ``event`` without any key.

    On the verifier worldline the payload exists from its creation at time 0.
    Elsewhere it needs a causal chain from a plaintext wire emission or from
    a point where an untrusted party was handed it in the clear.
    """
    if event.position == 0.0 and event.time >= 0.0:
        return True
    sources = _wire_sources(schedule, payload) + [e for _, e in _plaintext_sources(schedule, payload)]
    return any(causally_reachable(s, event) for s in sources)


def intercept_search(schedule: MessageSchedule, xs: Iterable[float]) -> list[AttackResult]:
    """Try intercepting prover 1's question at each offset ``x`` on its way out.

    The interceptor learns the question at ``(-x, x)`` only if the wire copy is
    plaintext; otherwise the earliest usable point is where it is first
    decrypted for an untrusted party.
    """
    t0 = schedule.t0
    target_x = t0
    latest = schedule.deadline - t0
    out = []
    for x in xs:
        x = float(x)
        grab = SpaceTimeEvent(-x, x)
        if plaintext_available(schedule, "q1", grab) and grab.position != 0.0:
            start = grab
        else:
            srcs = _plaintext_sources(schedule, "q1")
            start = min((e for _, e in srcs), key=lambda e: e.time + abs(target_x - e.position))
        arrival = start.time + abs(target_x - start.position)
        feasible = arrival <= latest + TOL
        chain = (SpaceTimeEvent(0.0, 0.0), start, SpaceTimeEvent(target_x, arrival))
        out.append(AttackResult(x, feasible, arrival, latest, chain if feasible else None))
    return out


def green_zone_violations(schedule: MessageSchedule) -> list[tuple[str, tuple[SpaceTimeEvent, ...]]]:
    """Causal chains through schedule events carrying a prover's question to the other prover in time.

    Chains start where an untrusted party holds the question in the clear and
    hop only between events of untrusted parties; trusted parties never relay.
    """
    events = [(who, e) for who, e in schedule.events() if who not in TRUSTED]
    found = []
    for i, me in enumerate(PROVERS, 1):
        other = PROVERS[2 - i]
        try:
            target = schedule.answer_emission(other)
        except KeyError:
            continue
        for _, src in _plaintext_sources(schedule, f"q{i}"):
            # BFS over untrusted events for a witness chain
            prev: dict[SpaceTimeEvent, SpaceTimeEvent | None] = {src: None}
            queue = deque([src])
            hit = None
            while queue:
                cur = queue.popleft()
                if causally_reachable(cur, target):
                    hit = cur
                    break
                for _, nxt in events:
                    if nxt not in prev and nxt != cur and causally_reachable(cur, nxt):
                        prev[nxt] = cur
                        queue.append(nxt)
            if hit is not None:
                chain = [target, hit]
                while prev[chain[-1]] is not None:
                    chain.append(prev[chain[-1]])
                found.append((f"q{i}->{other}", tuple(reversed(chain))))
    return found
