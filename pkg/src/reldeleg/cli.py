"""Command-line driver.

Every subcommand prints (or writes) one JSON result record that embeds the
full parameter set, the seed and the outputs. Records contain no clocks or
host data, so the same arguments always give the same bytes.

Exit status: 0 success, 1 negative verdict, 2 usage, input or module error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from . import circuit2ham as c2h
from . import hamiltonian as hl
from . import relativistic as rel
from .games import (EnergyTest, HamiltonianTest, MagicSquareGame, NotAnalyzable, PauliBraidingTest,
                    WrappedGame, classical_value, estimate_acceptance, exact_breakdown, omega_h)
from .strategies import (BitFlip, HonestP1, HonestP2, StrategyError, honest_pair,
                         teleport_state_adversary)

log = logging.getLogger(__name__)

EXIT_OK, EXIT_NEGATIVE, EXIT_ERROR = 0, 1, 2
SUBCOMMANDS = ("diag", "game", "amplify", "c2h", "reltime", "magic-square")


class UsageError(Exception):
    pass


def _clean(obj: Any) -> Any:
    """Make numpy scalars, tuples and Fractions JSON friendly."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, Fraction):
        return {"fraction": f"{obj.numerator}/{obj.denominator}", "value": float(obj)}
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def render(record: dict) -> str:
    return json.dumps(_clean(record), indent=2, sort_keys=True) + "\n"


def _file_input(path: str) -> dict:
    data = Path(path).read_bytes()
    return {"path": path, "sha256": hashlib.sha256(data).hexdigest()}


def _load_hamiltonian(args) -> tuple[hl.XZHamiltonian, dict]:
    if args.hamiltonian:
        return hl.load(args.hamiltonian), _file_input(args.hamiltonian)
    if args.term:
        terms = []
        for text in args.term:
            parts = text.split()
            if len(parts) != 2:
                raise UsageError(f"--term expects '<gamma> <letters>', got {text!r}")
            terms.append((float(parts[0]), parts[1]))
        return hl.hamiltonian(terms), {"terms": list(args.term)}
    raise UsageError("give a Hamiltonian file or at least one --term")


# ---------------------------------------------------------------- strategies

def _read_state_file(path: str) -> np.ndarray:
    raw = json.loads(Path(path).read_text())
    amps = raw["amplitudes"] if isinstance(raw, dict) else raw
    return np.array([complex(*a) if isinstance(a, list) else complex(a) for a in amps])


def parse_strategy(text: str, role: int, h: hl.XZHamiltonian | None):
    """``honest``, ``teleport:basis=01|eigen=K|uniform=N|file=PATH`` or ``flip:FIELD:BITS``."""
    kind, _, rest = text.partition(":")
    if kind == "honest":
        if role == 2:
            return HonestP2()
        if h is None:
            return HonestP1((np.array([1.0, 0.0]),))
        return honest_pair(h)[0]
    if kind == "teleport":
        if role != 1:
            raise UsageError("teleport strategies are for prover 1")
        if rest.startswith("file="):
            return teleport_state_adversary(_read_state_file(rest[5:]), h)
        return teleport_state_adversary(rest, h)
    if kind == "flip":
        field, _, bits = rest.partition(":")
        if not bits or set(bits) - {"0", "1"}:
            raise UsageError(f"flip needs a bitstring, got {text!r}")
        base = parse_strategy("honest", role, h)
        return BitFlip(base, field, tuple(int(b) for b in bits))
    raise UsageError(f"unknown strategy selector {text!r}")


# ---------------------------------------------------------------- commands

def cmd_diag(args) -> tuple[dict, int]:
    h, src = _load_hamiltonian(args)
    vals = hl.spectrum(h)
    gs = hl.ground_state(h)
    out = {
        "n": h.n, "m": h.m, "k": h.k, "normal_form": h.normal_form,
        "lambda0": float(vals[0]), "degeneracy": gs.degeneracy,
        "spectrum": [float(v) for v in vals[: args.levels]],
        "norm": hl.operator_norm(h),
    }
    return {"inputs": {"hamiltonian": src, "levels": args.levels}, "outputs": out}, EXIT_OK


def _build_game(args, h):
    if args.game == "hamiltonian":
        return HamiltonianTest(h, args.p, args.t)
    if args.game == "energy":
        return EnergyTest(h, args.t)
    if args.game == "pbt":
        return PauliBraidingTest(args.t or 2)
    if args.game == "wrapped":
        alpha = args.alpha if args.alpha is not None else h.alpha
        beta = args.beta if args.beta is not None else h.beta
        if alpha is None or beta is None:
            raise UsageError("the wrapped game needs --alpha and --beta")
        return WrappedGame(h, alpha, beta, args.p, args.eta_prime, args.t)
    raise UsageError(f"unknown game {args.game!r}")


def _run_engines(args, game, p1, p2, rounds) -> dict:
    out: dict[str, Any] = {"game": game.describe()}
    if args.engine in ("exact", "both"):
        try:
            out["exact"] = exact_breakdown(game, p1, p2)
        except NotAnalyzable as exc:
            if args.engine == "exact":
                raise
            out["exact"] = {"unavailable": str(exc)}
    if args.engine in ("mc", "both"):
        est = estimate_acceptance(game, p1, p2, rounds, args.seed, workers=args.workers)
        out["monte_carlo"] = est.to_dict()
        if "total" in out.get("exact", {}):
            out["exact_in_interval"] = bool(est.contains(out["exact"]["total"]))
    return out


def cmd_game(args) -> tuple[dict, int]:
    h, src = _load_hamiltonian(args)
    game = _build_game(args, h)
    inner_h = game.h_prime if isinstance(game, WrappedGame) else h
    p1 = parse_strategy(args.p1, 1, inner_h)
    p2 = parse_strategy(args.p2, 2, inner_h)
    out = _run_engines(args, game, p1, p2, args.rounds)
    if isinstance(game, HamiltonianTest):
        out["omega_h"] = omega_h(h, args.p)
    inputs = {"hamiltonian": src, "game": args.game, "p": args.p, "t": args.t, "p1": args.p1,
              "p2": args.p2, "engine": args.engine, "rounds": args.rounds,
              "alpha": args.alpha, "beta": args.beta, "eta_prime": args.eta_prime}
    return {"inputs": inputs, "outputs": out}, EXIT_OK


def cmd_amplify(args) -> tuple[dict, int]:
    h, src = _load_hamiltonian(args)
    alpha = args.alpha if args.alpha is not None else h.alpha
    beta = args.beta if args.beta is not None else h.beta
    if alpha is None or beta is None:
        raise UsageError("amplify needs --alpha and --beta (or thresholds in the file)")
    amp = hl.amplify(h, alpha, beta)
    lam_in = hl.ground_energy(amp.shift.hamiltonian)
    lam_out = hl.ground_energy(amp.unscaled) if amp.unscaled.n <= args.diag_cap else None
    out = {
        "a": amp.a, "rescale": amp.rescale, "shift": amp.shift.shift, "scale": amp.shift.scale,
        "n_out": amp.hamiltonian.n, "m_out": amp.hamiltonian.m, "k_out": amp.hamiltonian.k,
        "lambda0_in": lam_in, "lambda0_out": lam_out,
        "lambda0_out_closed_form": 1 - (1 + 1 / amp.a - lam_in) ** amp.a,
    }
    if args.output_hamiltonian:
        hl.dump(amp.hamiltonian, args.output_hamiltonian)
        out["written"] = args.output_hamiltonian
    return {"inputs": {"hamiltonian": src, "alpha": alpha, "beta": beta}, "outputs": out}, EXIT_OK


def cmd_c2h(args) -> tuple[dict, int]:
    circuit = c2h.load(args.circuit)
    rep = c2h.kitaev_check(circuit, args.epsilon)
    h = c2h.build_hq(circuit, include_output=not args.no_output)
    fams = {lab: len(h.family(lab)) for lab in ("init", "prop", "clock", "output")}
    out = {"report": rep.to_dict(), "families": fams, "pauli_terms": len(h.pauli_terms()),
           "ground_energy_selected": h.ground_energy(), "is_xz": h.is_xz}
    code = EXIT_OK if rep.completeness_ok else EXIT_NEGATIVE
    return {"inputs": {"circuit": _file_input(args.circuit), "epsilon": args.epsilon,
                       "include_output": not args.no_output}, "outputs": out}, code


def cmd_reltime(args) -> tuple[dict, int]:
    if args.schedule:
        sched = rel.load(args.schedule)
        src: dict = {"schedule": _file_input(args.schedule)}
    elif args.agents:
        rng = np.random.default_rng(args.seed)
        qs = [bytes(rng.integers(0, 256, 16, dtype=np.uint8)) for _ in range(2)]
        keys = [bytes(rng.integers(0, 256, 16, dtype=np.uint8)) for _ in range(2)]
        sched = rel.agent_schedule(args.t0, args.t1, qs, keys)
        src = {"schedule": "agents"}
    else:
        sched = rel.honest_schedule(args.t0, args.t1)
        src = {"schedule": "honest"}
    verdict = rel.validate(sched)
    results = rel.intercept_search(sched, rel.attack_grid(sched.t0, args.attack_grid))
    feasible = [r.x for r in results if r.feasible]
    infeasible = [r.x for r in results if not r.feasible]
    out = {
        "verdict": verdict.to_dict(),
        "green_zone_violations": [[lab, [e.to_list() for e in ch]] for lab, ch in rel.green_zone_violations(sched)],
        "attack_grid": {
            "points": len(results), "feasible": len(feasible),
            "max_feasible_x": max(feasible) if feasible else None,
            "min_infeasible_x": min(infeasible) if infeasible else None,
            "analytic_boundary": sched.t0 / 2,
        },
    }
    if args.dump_schedule:
        rel.dump(sched, args.dump_schedule)
    inputs = {**src, "t0": sched.t0, "t1": sched.t1, "attack_grid": args.attack_grid, "agents": args.agents}
    return {"inputs": inputs, "outputs": out}, EXIT_OK if verdict.ok else EXIT_NEGATIVE


def cmd_magic_square(args) -> tuple[dict, int]:
    value, rows, cols = classical_value()
    game = MagicSquareGame()
    p1, p2 = parse_strategy(args.p1, 1, None), parse_strategy(args.p2, 2, None)
    out = {"classical_value": value, "classical_witness": {"rows": rows, "columns": cols}}
    out.update(_run_engines(args, game, p1, p2, args.rounds))
    return {"inputs": {"p1": args.p1, "p2": args.p2, "engine": args.engine, "rounds": args.rounds},
            "outputs": out}, EXIT_OK


COMMANDS = {"diag": cmd_diag, "game": cmd_game, "amplify": cmd_amplify, "c2h": cmd_c2h,
            "reltime": cmd_reltime, "magic-square": cmd_magic_square}


# ---------------------------------------------------------------- parser

def _add_hamiltonian(p):
    p.add_argument("hamiltonian", nargs="?", help="Hamiltonian file")
    p.add_argument("--term", action="append", metavar="'GAMMA LETTERS'", help="inline term (repeatable)")


def _add_engine(p, rounds=10_000):
    p.add_argument("--engine", choices=("exact", "mc", "both"), default="exact")
    p.add_argument("--rounds", type=int, default=rounds)
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="reldeleg", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("-o", "--output", help="write the record here instead of stdout")

    p = sub.add_parser("diag", help="exact diagonalization of an XZ Hamiltonian")
    _add_hamiltonian(p)
    p.add_argument("--levels", type=int, default=8)
    common(p)

    p = sub.add_parser("game", help="play the Hamiltonian Test or one of its parts")
    _add_hamiltonian(p)
    p.add_argument("--game", choices=("hamiltonian", "energy", "pbt", "wrapped"), default="hamiltonian")
    p.add_argument("-p", "--p", type=float, default=0.5, help="energy-test probability")
    p.add_argument("-t", "--t", type=int, default=None, help="EPR pairs")
    p.add_argument("--p1", default="honest")
    p.add_argument("--p2", default="honest")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--eta-prime", type=float, default=0.05)
    _add_engine(p)
    common(p)

    p = sub.add_parser("amplify", help="gap amplification with spectral check")
    _add_hamiltonian(p)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--diag-cap", type=int, default=12)
    p.add_argument("--output-hamiltonian", help="write the normal-form amplified instance")
    common(p)

    p = sub.add_parser("c2h", help="clock Hamiltonian of a circuit file")
    p.add_argument("circuit")
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--no-output", action="store_true")
    common(p)

    p = sub.add_parser("reltime", help="validate a space-time schedule and search intercept attacks")
    p.add_argument("--t0", type=float, default=1.0)
    p.add_argument("--t1", type=float, default=0.1)
    p.add_argument("--attack-grid", type=int, default=100)
    p.add_argument("--agents", action="store_true", help="use trusted agents with one-time pads")
    p.add_argument("--schedule", help="load a schedule file instead of generating one")
    p.add_argument("--dump-schedule", help="write the schedule used")
    common(p)

    p = sub.add_parser("magic-square", help="classical and quantum Magic Square values")
    p.add_argument("--p1", default="honest")
    p.add_argument("--p2", default="honest")
    _add_engine(p)
    common(p)

    p = sub.add_parser("run", help="run a JSON descriptor {'command': ..., 'args': {...}}")
    p.add_argument("descriptor")
    p.add_argument("-o", "--output")
    return parser


def descriptor_argv(desc: dict) -> list[str]:
    """Turn ``{"command": "game", "args": {"p": 0.5, "term": [...]}}`` into argv."""
    cmd = desc.get("command") or desc.get("subcommand")
    if cmd not in SUBCOMMANDS:
        raise UsageError(f"descriptor command must be one of {SUBCOMMANDS}, got {cmd!r}")
    argv = [cmd]
    args = dict(desc.get("args", {}))
    positional = args.pop("positional", None) or args.pop("input", None)
    if positional:
        argv += [str(positional)] if not isinstance(positional, list) else [str(x) for x in positional]
    for key, val in sorted(args.items()):
        flag = "--" + key.replace("_", "-")
        if isinstance(val, bool):
            if val:
                argv.append(flag)
        elif isinstance(val, list):
            for item in val:
                argv += [flag, str(item)]
        elif val is not None:
            argv += [flag, str(val)]
    return argv


def _dispatch(args) -> tuple[dict, int]:
    if args.command == "run":
        desc = json.loads(Path(args.descriptor).read_text())
        inner = build_parser().parse_args(descriptor_argv(desc))
        record, code = _dispatch(inner)
        record["descriptor"] = desc
        return record, code
    record, code = COMMANDS[args.command](args)
    record = {"command": args.command, "seed": getattr(args, "seed", None), "version": __version__, **record}
    record["status"] = "ok" if code == EXIT_OK else "negative"
    return record, code


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), stream=sys.stderr)
    try:
        record, code = _dispatch(args)
    except (UsageError, StrategyError, NotAnalyzable, ValueError, KeyError, OSError) as exc:
        record = {"command": args.command, "status": "error", "error": type(exc).__name__, "message": str(exc)}
        code = EXIT_ERROR
    text = render(record)
    if getattr(args, "output", None):
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
