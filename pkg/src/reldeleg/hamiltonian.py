"""XZ local Hamiltonians, the dense spectral oracle and gap amplification."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .pauli import DEFAULT_DENSE_CAP, DimensionCapError, PauliString, apply_pauli, dense_matrix

log = logging.getLogger(__name__)

DEFAULT_EXPANSION_CAP = 250_000
_ZERO = 1e-14


class HamiltonianFormatError(ValueError):
    pass


@dataclass(frozen=True)
class XZHamiltonian:
    """``H = (1/m) sum_l gamma_l H_l`` with every ``H_l`` an XZ string on ``n`` qubits.

    ``terms`` holds ``(gamma_l, H_l)`` pairs; the strings carry coefficient 1.
    ``normal_form`` reports whether every ``|gamma_l| <= 1``.
    """

    n: int
    terms: tuple[tuple[float, PauliString], ...]
    k: int | None = None
    alpha: float | None = None
    beta: float | None = None

    def __post_init__(self):
        terms = []
        for gamma, h in self.terms:
            if not isinstance(h, PauliString):
                h = PauliString(h)
            if len(h) != self.n:
                raise ValueError(f"term {h.letters} has length {len(h)}, expected {self.n}")
            if not h.is_xz:
                raise ValueError(f"term {h.letters} contains Y; not an XZ string")
            if not math.isfinite(gamma):
                raise ValueError("gamma must be finite")
            terms.append((float(gamma), h.with_coefficient(1.0)))
        if not terms:
            raise ValueError("a Hamiltonian needs at least one term")
        object.__setattr__(self, "terms", tuple(terms))
        weight = max(h.weight for _, h in terms)
        if self.k is None:
            object.__setattr__(self, "k", weight)
        elif weight > self.k:
            raise ValueError(f"term weight {weight} exceeds locality bound k={self.k}")
        if (self.alpha is None) != (self.beta is None):
            raise ValueError("alpha and beta must be given together")
        if self.alpha is not None and not self.alpha < self.beta:
            raise ValueError("need alpha < beta")

    @property
    def m(self) -> int:
        return len(self.terms)

    @property
    def normal_form(self) -> bool:
        return all(abs(g) <= 1.0 for g, _ in self.terms)

    @property
    def gamma_abs_mean(self) -> float:
        """``(1/m) sum |gamma_l|``."""
        return sum(abs(g) for g, _ in self.terms) / self.m

    def operator_terms(self) -> dict[str, float]:
        """Merged operator coefficients ``gamma_l / m`` keyed by letters."""
        out: dict[str, float] = {}
        for g, h in self.terms:
            out[h.letters] = out.get(h.letters, 0.0) + g / self.m
        return out

    def matrix(self, cap: int = DEFAULT_DENSE_CAP) -> np.ndarray:
        if self.n > cap:
            raise DimensionCapError(f"{self.n} qubits exceeds dense cap {cap}")
        dim = 1 << self.n
        out = np.zeros((dim, dim), dtype=complex)
        for letters, c in self.operator_terms().items():
            out += c * dense_matrix(PauliString(letters), cap)
        return out

    def energy(self, amplitudes: np.ndarray) -> float:
        """``<psi|H|psi>`` evaluated term by term (no dense matrix)."""
        psi = np.asarray(amplitudes, dtype=complex)
        total = 0.0
        for letters, c in self.operator_terms().items():
            total += c * np.vdot(psi, apply_pauli(PauliString(letters), psi)).real
        return float(total)

    def with_thresholds(self, alpha: float, beta: float) -> XZHamiltonian:
        return XZHamiltonian(self.n, self.terms, self.k, alpha, beta)


def from_operator(
    n: int, coefficients: Mapping[str, float], k: int | None = None,
    alpha: float | None = None, beta: float | None = None,
) -> XZHamiltonian:
    """Build the ``1/m``-normalized form of ``sum_s c_s s``; ``gamma = m * c``."""
    items = [(s, c) for s, c in coefficients.items() if abs(c) > _ZERO]
    if not items:
        items = [("I" * n, 0.0)]
    m = len(items)
    terms = tuple((m * c, PauliString(s)) for s, c in items)
    if k is not None:
        k = max(k, max(h.weight for _, h in terms))
    return XZHamiltonian(n, terms, k, alpha, beta)


def _check(h: XZHamiltonian, cap: int):
    if h.n > cap:
        raise DimensionCapError(f"{h.n} qubits exceeds dense cap {cap}")


def spectrum(h: XZHamiltonian, cap: int = DEFAULT_DENSE_CAP) -> np.ndarray:
    _check(h, cap)
    return np.linalg.eigvalsh(h.matrix(cap))


def ground_energy(h: XZHamiltonian, cap: int = DEFAULT_DENSE_CAP) -> float:
    return float(spectrum(h, cap)[0])


def operator_norm(h: XZHamiltonian, cap: int = DEFAULT_DENSE_CAP) -> float:
    return float(np.max(np.abs(spectrum(h, cap))))


@dataclass(frozen=True)
class GroundState:
    energy: float
    vector: np.ndarray
    degeneracy: int


def ground_state(h: XZHamiltonian, cap: int = DEFAULT_DENSE_CAP, tol: float = 1e-9) -> GroundState:
    """Lowest eigenpair; ties resolved by taking eigh's first column.

    The global phase is fixed so the largest-magnitude amplitude is real
    and positive.
    """
    _check(h, cap)
    vals, vecs = np.linalg.eigh(h.matrix(cap))
    deg = int(np.sum(vals < vals[0] + tol))
    if deg > 1:
        log.info("ground space of dimension %d; using the first eigenvector", deg)
    v = vecs[:, 0]
    j = int(np.argmax(np.abs(v)))
    v = v * (abs(v[j]) / v[j])
    return GroundState(float(vals[0]), v, deg)


def eigenstates(h: XZHamiltonian, cap: int = DEFAULT_DENSE_CAP) -> tuple[np.ndarray, np.ndarray]:
    _check(h, cap)
    return np.linalg.eigh(h.matrix(cap))


@dataclass(frozen=True)
class ShiftScale:
    """``hamiltonian = (original + shift * I) / scale``."""

    hamiltonian: XZHamiltonian
    shift: float
    scale: float

    def to_original(self, energy: float) -> float:
        return energy * self.scale - self.shift


def shift_scale_nonneg(
    h: XZHamiltonian, require_normal_form: bool = False, cap: int = DEFAULT_DENSE_CAP
) -> ShiftScale:
    """Shift and scale so that ``lambda_0 >= 0`` and ``||H|| <= 1``."""
    if require_normal_form and not h.normal_form:
        raise ValueError("Hamiltonian is not in normal form (|gamma| > 1)")
    vals = spectrum(h, cap)
    shift = max(0.0, -float(vals[0]))
    scale = max(1.0, float(np.max(np.abs(vals + shift))))
    if shift == 0.0 and scale == 1.0:
        return ShiftScale(h, 0.0, 1.0)
    ops = h.operator_terms()
    ident = "I" * h.n
    ops[ident] = ops.get(ident, 0.0) + shift
    ops = {s: c / scale for s, c in ops.items()}
    return ShiftScale(from_operator(h.n, ops, h.k, h.alpha, h.beta), shift, scale)


def amplification_power(alpha: float, beta: float) -> int:
    """``a = ceil(1 / (beta - alpha))``, guarded against float round-off."""
    if not alpha < beta:
        raise ValueError("need alpha < beta")
    return max(1, math.ceil(1.0 / (beta - alpha) - 1e-9))


@dataclass(frozen=True)
class Amplified:
    """Result of :func:`amplify`.

    ``hamiltonian`` is the normal-form instance ``H' / rescale`` consumed by
    the games; ``unscaled`` is ``H'`` itself, so
    ``lambda_0(H') = rescale * lambda_0(hamiltonian)``.
    """

    hamiltonian: XZHamiltonian
    unscaled: XZHamiltonian
    a: int
    rescale: float
    shift: ShiftScale


def _tensor_power(block: dict[str, float], a: int, cap: int) -> dict[str, float]:
    if len(block) ** a > cap:
        raise ValueError(f"expansion of {len(block)}^{a} terms exceeds cap {cap}")
    out = {"": 1.0}
    for _ in range(a):
        nxt: dict[str, float] = {}
        for s, c in out.items():
            for t, d in block.items():
                key = s + t
                nxt[key] = nxt.get(key, 0.0) + c * d
        out = nxt
    return out


def amplify(
    h: XZHamiltonian, alpha: float, beta: float,
    max_terms: int = DEFAULT_EXPANSION_CAP, cap: int = DEFAULT_DENSE_CAP,
) -> Amplified:
    """``H' = I - (I - (H - I/a))^{(x) a}`` on ``n * a`` qubits.

    ``h`` is first passed through :func:`shift_scale_nonneg`.
    """
    a = amplification_power(alpha, beta)
    ss = shift_scale_nonneg(h, cap=cap)
    base = ss.hamiltonian
    n = base.n
    ident = "I" * n
    block = {s: -c for s, c in base.operator_terms().items()}
    block[ident] = block.get(ident, 0.0) + 1.0 + 1.0 / a
    block = {s: c for s, c in block.items() if abs(c) > _ZERO}
    power = _tensor_power(block, a, max_terms)
    full_ident = "I" * (n * a)
    ops = {s: -c for s, c in power.items()}
    ops[full_ident] = ops.get(full_ident, 0.0) + 1.0
    for s in ops:
        if "Y" in s:
            raise AssertionError("amplification produced a Y letter")
    k = None if base.k is None else base.k * a
    unscaled = from_operator(n * a, ops, k)
    rho = max(1.0, max(abs(g) for g, _ in unscaled.terms))
    if rho > 1.0:
        # divide the gammas directly so the largest lands on exactly +-1
        scaled = XZHamiltonian(n * a, tuple((g / rho, p) for g, p in unscaled.terms), unscaled.k)
    else:
        scaled = unscaled
    return Amplified(scaled, unscaled, a, rho, ss)


# ---------------------------------------------------------------- file format

_HEADER = "# reldeleg hamiltonian v1"


def dumps(h: XZHamiltonian) -> str:
    lines = [_HEADER, f"n {h.n}", f"k {h.k}"]
    if h.alpha is not None:
        lines += [f"alpha {h.alpha!r}", f"beta {h.beta!r}"]
    lines += [f"term {g!r} {p.letters}" for g, p in h.terms]
    return "\n".join(lines) + "\n"


def loads(text: str) -> XZHamiltonian:
    fields: dict[str, str] = {}
    terms = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        key = parts[0]
        try:
            if key == "term":
                if len(parts) != 3:
                    raise HamiltonianFormatError(f"line {lineno}: expected 'term <gamma> <letters>'")
                terms.append((float(parts[1]), PauliString(parts[2])))
            elif key in ("n", "k", "alpha", "beta") and len(parts) == 2:
                if key in fields:
                    raise HamiltonianFormatError(f"line {lineno}: duplicate field {key!r}")
                fields[key] = parts[1]
            else:
                raise HamiltonianFormatError(f"line {lineno}: unrecognized record {line!r}")
        except ValueError as exc:
            if isinstance(exc, HamiltonianFormatError):
                raise
            raise HamiltonianFormatError(f"line {lineno}: {exc}") from exc
    if "n" not in fields:
        raise HamiltonianFormatError("missing header field 'n'")
    alpha = float(fields["alpha"]) if "alpha" in fields else None
    beta = float(fields["beta"]) if "beta" in fields else None
    k = int(fields["k"]) if "k" in fields else None
    try:
        return XZHamiltonian(int(fields["n"]), tuple(terms), k, alpha, beta)
    except ValueError as exc:
        raise HamiltonianFormatError(str(exc)) from exc


def load(path) -> XZHamiltonian:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def dump(h: XZHamiltonian, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(h))


def hamiltonian(terms: Iterable[tuple[float, str]], **kw) -> XZHamiltonian:
    """Shorthand: ``hamiltonian([(1, "XZ"), (0.5, "ZI")])``."""
    terms = tuple((float(g), PauliString(s)) for g, s in terms)
    return XZHamiltonian(len(terms[0][1]), terms, **kw)
