"""Gate set of the conversion stage and the bounded search for the
xi -> Dicke conversion sequence.

CX flips the polarization target when the path control is |1>; CZBAR applies
sigma-z to the target when the control is |0>. Both match the half-wave-plate
realizations of the conversion stage; PHASE models the glass-plate phases.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .register import HADAMARD, PAULI_I, PAULI_X, PAULI_Z, PureState, apply_gate

GATE_KINDS = ("H", "X", "Z", "PHASE", "CX", "CZBAR")

_P0 = np.array([[1, 0], [0, 0]], dtype=complex)
_P1 = np.array([[0, 0], [0, 1]], dtype=complex)


@dataclass(frozen=True)
class GateSpec:
    """One gate: kind, target label, optional control label / phase angle."""

    kind: str
    target: str
    control: str | None = None
    phi: float | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.kind in ("CX", "CZBAR") and self.control is None:
            raise ValueError(f"{self.kind} gate needs a control label")
        if self.kind not in ("CX", "CZBAR") and self.control is not None:
            raise ValueError(f"{self.kind} gate takes no control label")
        if self.kind == "PHASE" and self.phi is None:
            raise ValueError("PHASE gate needs an angle")
        if self.kind != "PHASE" and self.phi is not None:
            raise ValueError(f"{self.kind} gate takes no angle")

    @property
    def labels(self) -> tuple[str, ...]:
        if self.control is not None:
            return (self.control, self.target)
        return (self.target,)

    def matrix(self) -> np.ndarray:
        if self.kind == "H":
            return HADAMARD
        if self.kind == "X":
            return PAULI_X
        if self.kind == "Z":
            return PAULI_Z
        if self.kind == "PHASE":
            return np.array([[1, 0], [0, np.exp(1j * self.phi)]])
        if self.kind == "CX":
            return np.kron(_P0, PAULI_I) + np.kron(_P1, PAULI_X)
        return np.kron(_P1, PAULI_I) + np.kron(_P0, PAULI_Z)

    def is_self_inverse(self) -> bool:
        m = self.matrix()
        return bool(np.abs(m @ m - np.eye(m.shape[0])).max() < 1e-12)

    def to_line(self) -> str:
        parts = [self.kind, self.control if self.control is not None else "-", self.target]
        if self.phi is not None:
            parts.append(repr(self.phi))
        return " ".join(parts)

    @classmethod
    def from_line(cls, line: str) -> "GateSpec":
        parts = line.split()
        if len(parts) not in (3, 4):
            raise ValueError(f"cannot parse gate line {line!r}")
        kind, control, target = parts[0], parts[1], parts[2]
        phi = float(parts[3]) if len(parts) == 4 else None
        return cls(kind=kind, target=target, control=None if control == "-" else control, phi=phi)


@dataclass(frozen=True)
class Circuit:
    """Ordered gate sequence; applied first step first."""

    steps: tuple[GateSpec, ...] = ()

    @property
    def depth(self) -> int:
        return len(self.steps)

    def to_text(self) -> str:
        return "\n".join(step.to_line() for step in self.steps) + ("\n" if self.steps else "")

    @classmethod
    def from_text(cls, text: str) -> "Circuit":
        steps = tuple(GateSpec.from_line(line) for line in text.splitlines() if line.strip())
        return cls(steps)


def run_circuit(state, circuit: Circuit):
    """Apply the circuit steps in order; unitary overall."""
    for step in circuit.steps:
        state = apply_gate(state, step.matrix(), step.labels)
    return state


def conversion_pool() -> tuple[GateSpec, ...]:
    """The conversion-stage gate pool: path Hadamards, path-controlled CX and
    CZBAR onto the matching polarization qubit, and pi phases on the paths."""
    return (
        GateSpec("H", "c"),
        GateSpec("H", "d"),
        GateSpec("CX", "a", control="c"),
        GateSpec("CX", "b", control="d"),
        GateSpec("CZBAR", "a", control="c"),
        GateSpec("CZBAR", "b", control="d"),
        GateSpec("PHASE", "c", phi=math.pi),
        GateSpec("PHASE", "d", phi=math.pi),
    )


@dataclass(frozen=True)
class ConversionSearch:
    """Outcome of the breadth-first conversion search."""

    found: bool
    circuit: Circuit | None
    fidelity: float
    best_fidelity: float
    best_circuit: Circuit
    states_explored: int
    max_depth: int


def _canonical_key(amps: np.ndarray) -> bytes:
    idx = int(np.argmax(np.abs(amps)))
    phase = amps[idx] / abs(amps[idx])
    canon = np.round(amps / phase, 9) + 0.0
    return canon.tobytes()


def find_conversion_circuit(
    source: PureState,
    target: PureState,
    pool: tuple[GateSpec, ...] | None = None,
    max_depth: int = 8,
    tol: float = 1e-9,
) -> ConversionSearch:
    """Breadth-first search for a pool sequence mapping source to target.

    Deterministic: fixed pool order, lexicographic tie-break by construction,
    and duplicate states (up to global phase) pruned. Immediate repeats of
    self-inverse gates are skipped. Exhaustion returns a not-found result
    carrying the best fidelity seen.
    """
    if pool is None:
        pool = conversion_pool()
    if max_depth > 8:
        raise ValueError("conversion search is bounded at depth 8")
    self_inverse = {gate: gate.is_self_inverse() for gate in pool}

    def fid(amps: np.ndarray) -> float:
        return float(abs(np.vdot(target.amplitudes, amps)) ** 2)

    start = source.amplitudes
    best_f, best_path = fid(start), ()
    if best_f >= 1.0 - tol:
        return ConversionSearch(True, Circuit(()), best_f, best_f, Circuit(()), 1, max_depth)

    seen = {_canonical_key(start)}
    queue = deque([(start, ())])
    explored = 1
    while queue:
        amps, path = queue.popleft()
        if len(path) == max_depth:
            continue
        for gate in pool:
            if path and path[-1] == gate and self_inverse[gate]:
                continue
            nxt = apply_gate(PureState(source.layout, amps), gate.matrix(), gate.labels).amplitudes
            key = _canonical_key(nxt)
            if key in seen:
                continue
            seen.add(key)
            explored += 1
            new_path = path + (gate,)
            f = fid(nxt)
            if f > best_f:
                best_f, best_path = f, new_path
            if f >= 1.0 - tol:
                circ = Circuit(new_path)
                return ConversionSearch(True, circ, f, f, circ, explored, max_depth)
            queue.append((nxt, new_path))
    return ConversionSearch(
        False, None, 0.0, best_f, Circuit(best_path), explored, max_depth)
