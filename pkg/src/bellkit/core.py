"""Two-qubit state vectors, one-particle operators, and their four-dimensional lifts.

States are dense complex vectors in the computational basis ordered
|00>, |01>, |10>, |11>; the basis index of |ab> is 2*a + b, where the first
bit belongs to particle A and the second to particle B.  One-particle
operators act on a single qubit and are lifted to the pair with `lift_a`
and `lift_b`; the entangling change of basis between the computational and
Bell bases is `bell_operator`.

All values are immutable; every function is pure.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Literal, Union

import numpy as np

__all__ = [
    "EPS_NORM",
    "EPS_OP",
    "EPS_ZERO",
    "INV_SQRT2",
    "Particle",
    "SingleQubitState",
    "TwoQubitState",
    "SingleQubitOperator",
    "TwoQubitOperator",
    "Operator",
    "basis_state",
    "tensor",
    "apply1",
    "apply2",
    "lift_a",
    "lift_b",
    "compose",
    "named_operator",
    "OPERATOR_NAMES",
    "bell_operator",
    "projector",
    "inner",
    "norm",
    "normalize",
    "states_close",
    "states_equal_up_to_phase",
    "format_real",
    "state_text",
]

# Comparison tolerances; fixed here and reused by every other module.
EPS_NORM = 1e-9   # normalization checks
EPS_OP = 1e-9     # operator property checks (unitarity, projector laws)
EPS_ZERO = 1e-12  # treat amplitudes/norms at or below this as exactly zero

# Canonical double for 1/sqrt(2); sqrt(0.5) rounds to this exact value.
INV_SQRT2 = math.sqrt(0.5)

Particle = Literal["A", "B"]


def _as_amplitude(value: complex, label: str) -> complex:
    z = complex(value)
    if not cmath.isfinite(z):
        raise ValueError(f"{label} must be finite, got {z!r}")
    return z


@dataclass(frozen=True)
class SingleQubitState:
    """Amplitudes (amp0, amp1) over the one-particle basis |0>, |1>."""

    amp0: complex
    amp1: complex

    def __post_init__(self) -> None:
        object.__setattr__(self, "amp0", _as_amplitude(self.amp0, "amp0"))
        object.__setattr__(self, "amp1", _as_amplitude(self.amp1, "amp1"))

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.amp0, self.amp1], dtype=complex)

    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))

    @classmethod
    def from_vector(cls, vec: np.ndarray) -> "SingleQubitState":
        v = np.asarray(vec, dtype=complex).reshape(2)
        return cls(complex(v[0]), complex(v[1]))


@dataclass(frozen=True)
class TwoQubitState:
    """Amplitudes g(ab) over |00>, |01>, |10>, |11>.

    `subnormalized` is derived at construction: it records that the vector's
    norm differs from 1 by more than EPS_NORM.  Projections return their
    result verbatim rather than silently renormalizing, so transient values
    with this flag set do occur; renormalize with `normalize` when needed.
    """

    g00: complex
    g01: complex
    g10: complex
    g11: complex
    subnormalized: bool = field(init=False)

    def __post_init__(self) -> None:
        for name in ("g00", "g01", "g10", "g11"):
            object.__setattr__(self, name, _as_amplitude(getattr(self, name), name))
        object.__setattr__(self, "subnormalized", abs(self.norm() - 1.0) > EPS_NORM)

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.g00, self.g01, self.g10, self.g11], dtype=complex)

    @property
    def amplitudes(self) -> tuple[complex, complex, complex, complex]:
        return (self.g00, self.g01, self.g10, self.g11)

    def norm(self) -> float:
        return math.sqrt(
            abs(self.g00) ** 2 + abs(self.g01) ** 2 + abs(self.g10) ** 2 + abs(self.g11) ** 2
        )

    @classmethod
    def from_vector(cls, vec: np.ndarray) -> "TwoQubitState":
        v = np.asarray(vec, dtype=complex).reshape(4)
        return cls(complex(v[0]), complex(v[1]), complex(v[2]), complex(v[3]))


def basis_state(index: int) -> TwoQubitState:
    """Computational basis state |ab> with index = 2*a + b."""
    if index not in (0, 1, 2, 3):
        raise ValueError(f"basis index must be 0..3, got {index}")
    amps = [0j, 0j, 0j, 0j]
    amps[index] = 1 + 0j
    return TwoQubitState(*amps)


class _MatrixOperator:
    """Immutable wrapper around a read-only complex matrix."""

    _shape: tuple[int, int] = (0, 0)
    __slots__ = ("_matrix",)

    def __init__(self, matrix) -> None:
        m = np.array(matrix, dtype=complex)
        if m.shape != self._shape:
            raise ValueError(f"expected a {self._shape[0]}x{self._shape[1]} matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m.view(float))):
            raise ValueError("operator entries must be finite")
        m.flags.writeable = False
        object.__setattr__(self, "_matrix", m)

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    def entry(self, row: int, col: int) -> complex:
        return complex(self._matrix[row, col])

    def is_unitary(self, tol: float = EPS_OP) -> bool:
        m = self._matrix
        eye = np.eye(self._shape[0], dtype=complex)
        return bool(np.max(np.abs(m.conj().T @ m - eye)) <= tol)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, type(self)):
            return NotImplemented
        return bool(np.array_equal(self._matrix, other._matrix))

    def __hash__(self) -> int:
        return hash((type(self).__name__, self._matrix.tobytes()))

    def __setattr__(self, name: str, value) -> None:
        raise AttributeError(f"{type(self).__name__} is immutable")

    def __repr__(self) -> str:
        rows = "; ".join(
            " ".join(f"{z.real:+g}{z.imag:+g}i" for z in row) for row in self._matrix
        )
        return f"{type(self).__name__}([{rows}])"


class SingleQubitOperator(_MatrixOperator):
    """2x2 complex operator on one particle."""

    _shape = (2, 2)


class TwoQubitOperator(_MatrixOperator):
    """4x4 complex operator on the pair."""

    _shape = (4, 4)

    def is_projector(self, tol: float = EPS_OP) -> bool:
        m = self._matrix
        return bool(
            np.max(np.abs(m @ m - m)) <= tol and np.max(np.abs(m.conj().T - m)) <= tol
        )


Operator = Union[SingleQubitOperator, TwoQubitOperator]

# The four named one-particle operators: identity, value flip, and the two
# sign branches diag(1, +1) / diag(1, -1).  t_plus coincides with identity.
_NAMED_OPERATORS: dict[str, SingleQubitOperator] = {
    "identity": SingleQubitOperator([[1, 0], [0, 1]]),
    "flip": SingleQubitOperator([[0, 1], [1, 0]]),
    "t_plus": SingleQubitOperator([[1, 0], [0, 1]]),
    "t_minus": SingleQubitOperator([[1, 0], [0, -1]]),
}

OPERATOR_NAMES: tuple[str, ...] = tuple(_NAMED_OPERATORS)

_BELL_OPERATOR = TwoQubitOperator(
    np.array(
        [
            [1, 0, 0, 1],
            [0, 1, 1, 0],
            [0, 1, -1, 0],
            [1, 0, 0, -1],
        ],
        dtype=complex,
    )
    * INV_SQRT2
)

_EYE2 = np.eye(2, dtype=complex)


def named_operator(name: str) -> SingleQubitOperator:
    """Look up one of: identity, flip, t_plus, t_minus."""
    try:
        return _NAMED_OPERATORS[name]
    except KeyError:
        known = ", ".join(OPERATOR_NAMES)
        raise ValueError(f"unknown operator name {name!r} (known: {known})") from None


def bell_operator() -> TwoQubitOperator:
    """Self-inverse unitary mapping the computational basis to the Bell basis."""
    return _BELL_OPERATOR


def projector(particle: Particle, value: int) -> TwoQubitOperator:
    """Projector onto the subspace where `particle` has the given bit value."""
    if value not in (0, 1):
        raise ValueError(f"projector value must be 0 or 1, got {value}")
    p = np.zeros((2, 2), dtype=complex)
    p[value, value] = 1
    if particle == "A":
        return TwoQubitOperator(np.kron(p, _EYE2))
    if particle == "B":
        return TwoQubitOperator(np.kron(_EYE2, p))
    raise ValueError(f"particle must be 'A' or 'B', got {particle!r}")


def tensor(a: SingleQubitState, b: SingleQubitState) -> TwoQubitState:
    """Product state with g(ij) = a_i * b_j; normalized iff both inputs are."""
    return TwoQubitState(
        a.amp0 * b.amp0,
        a.amp0 * b.amp1,
        a.amp1 * b.amp0,
        a.amp1 * b.amp1,
    )


def apply1(op: SingleQubitOperator, s: SingleQubitState) -> SingleQubitState:
    return SingleQubitState.from_vector(op.matrix @ s.vector)


def apply2(op: TwoQubitOperator, s: TwoQubitState) -> TwoQubitState:
    return TwoQubitState.from_vector(op.matrix @ s.vector)


def lift_a(op: SingleQubitOperator) -> TwoQubitOperator:
    """Act with `op` on particle A and leave B untouched.

    The lifted matrix carries op(i, j) at the entries (2i+k, 2j+k), k in {0,1}.
    """
    return TwoQubitOperator(np.kron(op.matrix, _EYE2))


def lift_b(op: SingleQubitOperator) -> TwoQubitOperator:
    """Act with `op` on particle B: block-diagonal with one copy of op per A value."""
    return TwoQubitOperator(np.kron(_EYE2, op.matrix))


def compose(f: Operator, g: Operator) -> Operator:
    """Operator product f.g: applying the result equals applying g, then f."""
    if type(f) is not type(g):
        raise ValueError("compose requires two operators of the same dimension")
    return type(f)(f.matrix @ g.matrix)


def inner(s: TwoQubitState, t: TwoQubitState) -> complex:
    """Inner product <s|t>, conjugate-linear in the first argument."""
    return complex(np.vdot(s.vector, t.vector))


def norm(s: TwoQubitState) -> float:
    return s.norm()


def normalize(s: TwoQubitState) -> TwoQubitState:
    n = s.norm()
    if n <= EPS_ZERO:
        raise ValueError("cannot normalize a state with (near-)zero norm")
    return TwoQubitState(s.g00 / n, s.g01 / n, s.g10 / n, s.g11 / n)


def states_close(s: TwoQubitState, t: TwoQubitState, tol: float = EPS_NORM) -> bool:
    """Componentwise equality within tol (phase-sensitive)."""
    return all(abs(x - y) <= tol for x, y in zip(s.amplitudes, t.amplitudes))


def states_equal_up_to_phase(s: TwoQubitState, t: TwoQubitState, tol: float = EPS_NORM) -> bool:
    """True when the normalized states satisfy |<s|t>| = 1 within tol."""
    return abs(abs(inner(s, t)) - 1.0) <= tol


def format_real(x: float) -> str:
    """Canonical text for a double: 17 significant digits, round-trip exact."""
    return format(float(x), ".17g")


def state_text(s: TwoQubitState) -> str:
    """Canonical rendering: g00 g01 g10 g11 as alternating re/im, .17g each."""
    parts: list[str] = []
    for z in s.amplitudes:
        parts.append(format_real(z.real))
        parts.append(format_real(z.imag))
    return " ".join(parts)
