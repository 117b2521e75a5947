"""Dense linear algebra for labeled multi-qubit registers.

States are immutable values over an ordered register of labeled qubits.
Basis ordering is big-endian in layout order: the first label is the most
significant bit of the computational-basis index.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

NORM_TOL = 1e-10
PSD_TOL = -1e-8
BRANCH_TOL = 1e-12

PAULI_I = np.array([[1, 0], [0, 1]], dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)

for _m in (PAULI_I, PAULI_X, PAULI_Y, PAULI_Z, HADAMARD):
    _m.setflags(write=False)


class RegisterError(ValueError):
    """Contract violation on a register operation."""


class ImpossibleBranchError(RegisterError):
    """Projection onto an outcome whose probability is numerically zero."""

    def __init__(self, message: str, probability: float):
        super().__init__(message)
        self.probability = probability


@dataclass(frozen=True)
class RegisterLayout:
    """Ordered qubit labels; position in the tuple fixes the tensor index."""

    labels: tuple[str, ...]

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        object.__setattr__(self, "labels", labels)
        if not labels:
            raise RegisterError("register needs at least one qubit")
        if len(set(labels)) != len(labels):
            dup = next(x for x in labels if labels.count(x) > 1)
            raise RegisterError(f"duplicate qubit label {dup!r}")

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int:
        return 2 ** len(self.labels)

    def position(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise RegisterError(f"unknown qubit label {label!r} (register has {self.labels})") from None

    def positions(self, labels: Iterable[str]) -> tuple[int, ...]:
        return tuple(self.position(x) for x in labels)

    def drop(self, labels: Iterable[str]) -> "RegisterLayout":
        gone = set(labels)
        kept = tuple(x for x in self.labels if x not in gone)
        return RegisterLayout(kept)


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=complex, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized complex amplitude vector over a labeled register."""

    layout: RegisterLayout
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _freeze(np.asarray(self.amplitudes).reshape(-1))
        if amps.shape != (self.layout.dim,):
            raise RegisterError(
                f"amplitude vector has length {amps.shape[0]}, layout needs {self.layout.dim}")
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > NORM_TOL:
            raise RegisterError(f"state norm {norm} deviates from 1 beyond {NORM_TOL}")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n(self) -> int:
        return self.layout.n

    @property
    def labels(self) -> tuple[str, ...]:
        return self.layout.labels

    def amplitude(self, bits: str) -> complex:
        return complex(self.amplitudes[int(bits, 2)])

    def density(self) -> "MixedState":
        return MixedState(self.layout, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True, eq=False)
class MixedState:
    """Hermitian, unit-trace, positive-semidefinite operator over a register."""

    layout: RegisterLayout
    matrix: np.ndarray
    _validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        mat = _freeze(np.asarray(self.matrix))
        d = self.layout.dim
        if mat.shape != (d, d):
            raise RegisterError(f"matrix shape {mat.shape} does not match register dimension {d}")
        if self._validate:
            if np.abs(mat - mat.conj().T).max() > NORM_TOL:
                raise RegisterError("matrix is not Hermitian within 1e-10")
            tr = complex(np.trace(mat))
            if abs(tr - 1.0) > NORM_TOL:
                raise RegisterError(f"trace {tr} deviates from 1 beyond {NORM_TOL}")
            lo = float(np.linalg.eigvalsh(mat).min())
            if lo < PSD_TOL:
                raise RegisterError(f"matrix has eigenvalue {lo} below PSD tolerance {PSD_TOL}")
        object.__setattr__(self, "matrix", mat)

    @property
    def n(self) -> int:
        return self.layout.n

    @property
    def labels(self) -> tuple[str, ...]:
        return self.layout.labels

    def density(self) -> "MixedState":
        return self


State = Union[PureState, MixedState]


def basis_ket(bits: str, labels: Sequence[str]) -> PureState:
    """Computational-basis state, e.g. basis_ket("01", ("a", "b"))."""
    layout = RegisterLayout(tuple(labels))
    if len(bits) != layout.n:
        raise RegisterError(f"bitstring {bits!r} does not match {layout.n} qubits")
    amps = np.zeros(layout.dim, dtype=complex)
    amps[int(bits, 2)] = 1.0
    return PureState(layout, amps)


def single_qubit(amplitudes: Sequence[complex], label: str) -> PureState:
    return PureState(RegisterLayout((label,)), np.asarray(amplitudes, dtype=complex))


def from_terms(terms: Sequence[tuple[str, complex]], labels: Sequence[str]) -> PureState:
    """State from (bitstring, unnormalized amplitude) terms; normalized on build."""
    layout = RegisterLayout(tuple(labels))
    amps = np.zeros(layout.dim, dtype=complex)
    for bits, coeff in terms:
        amps[int(bits, 2)] += coeff
    return PureState(layout, amps / np.linalg.norm(amps))


def tensor(s1: State, s2: State) -> State:
    """Kronecker composition; layouts concatenate, label sets must be disjoint."""
    overlap = set(s1.labels) & set(s2.labels)
    if overlap:
        raise RegisterError(f"duplicate qubit label {sorted(overlap)[0]!r} in tensor product")
    layout = RegisterLayout(s1.labels + s2.labels)
    if isinstance(s1, PureState) and isinstance(s2, PureState):
        return PureState(layout, np.kron(s1.amplitudes, s2.amplitudes))
    m1 = s1.density().matrix
    m2 = s2.density().matrix
    return MixedState(layout, np.kron(m1, m2))


def _check_unitary(gate: np.ndarray, k: int) -> np.ndarray:
    gate = np.asarray(gate, dtype=complex)
    d = 2 ** k
    if gate.shape != (d, d):
        raise RegisterError(f"gate shape {gate.shape} does not act on {k} qubits")
    if np.abs(gate.conj().T @ gate - np.eye(d)).max() > NORM_TOL:
        raise RegisterError("gate matrix is not unitary within 1e-10")
    return gate


def _apply_to_axes(tensor_arr: np.ndarray, gate: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    k = len(axes)
    g = gate.reshape((2,) * (2 * k))
    out = np.tensordot(g, tensor_arr, axes=(list(range(k, 2 * k)), list(axes)))
    return np.moveaxis(out, range(k), axes)


def apply_gate(state: State, gate: np.ndarray, labels: Sequence[str] | str) -> State:
    """Embed a k-qubit unitary at the named positions and apply it."""
    if isinstance(labels, str):
        labels = (labels,)
    pos = state.layout.positions(labels)
    if len(set(pos)) != len(pos):
        raise RegisterError("gate labels must be distinct")
    gate = _check_unitary(gate, len(pos))
    n = state.n
    if isinstance(state, PureState):
        t = state.amplitudes.reshape((2,) * n)
        t = _apply_to_axes(t, gate, pos)
        return PureState(state.layout, t.reshape(-1))
    t = state.matrix.reshape((2,) * (2 * n))
    t = _apply_to_axes(t, gate, pos)
    t = _apply_to_axes(t, gate.conj(), [n + p for p in pos])
    return MixedState(state.layout, t.reshape(state.layout.dim, state.layout.dim))


def _projection_ket(onto: np.ndarray | str, k: int) -> np.ndarray:
    if isinstance(onto, str):
        if len(onto) != k:
            raise RegisterError(f"projection bitstring {onto!r} does not match {k} qubits")
        vec = np.zeros(2 ** k, dtype=complex)
        vec[int(onto, 2)] = 1.0
        return vec
    vec = np.asarray(onto, dtype=complex).reshape(-1)
    if vec.shape != (2 ** k,):
        raise RegisterError(f"projection ket has length {vec.shape[0]}, expected {2 ** k}")
    if abs(np.linalg.norm(vec) - 1.0) > NORM_TOL:
        raise RegisterError("projection ket is not normalized")
    return vec


def project(state: State, labels: Sequence[str] | str, onto: np.ndarray | str):
    """Project the named qubits onto a ket.

    Returns (probability, post-state on the remaining labels); the post-state
    is renormalized. Raises ImpossibleBranchError when the branch probability
    is below 1e-12.
    """
    if isinstance(labels, str):
        labels = (labels,)
    pos = state.layout.positions(labels)
    ket = _projection_ket(onto, len(pos))
    rest = state.layout.drop(labels)
    if rest.labels == ():
        raise RegisterError("projection must leave at least one qubit in the register")
    n = state.n
    kt = ket.reshape((2,) * len(pos))
    if isinstance(state, PureState):
        t = state.amplitudes.reshape((2,) * n)
        out = np.tensordot(kt.conj(), t, axes=(list(range(len(pos))), list(pos)))
        amp = out.reshape(-1)
        prob = float(np.real(np.vdot(amp, amp)))
        if prob < BRANCH_TOL:
            raise ImpossibleBranchError(
                f"projection of {tuple(labels)} has probability {prob}", prob)
        return prob, PureState(rest, amp / np.sqrt(prob))
    t = state.matrix.reshape((2,) * (2 * n))
    out = np.tensordot(kt.conj(), t, axes=(list(range(len(pos))), list(pos)))
    # after the row contraction the column axes sit behind the n - k kept rows
    col_axes = [(n - len(pos)) + p for p in pos]
    out = np.tensordot(out, kt, axes=(col_axes, list(range(len(pos)))))
    d = rest.dim
    mat = out.reshape(d, d)
    prob = float(np.real(np.trace(mat)))
    if prob < BRANCH_TOL:
        raise ImpossibleBranchError(
            f"projection of {tuple(labels)} has probability {prob}", prob)
    return prob, MixedState(rest, mat / prob)


def partial_trace(state: State, keep: Sequence[str] | str) -> MixedState:
    """Reduced density operator on the kept labels (layout order preserved)."""
    if isinstance(keep, str):
        keep = (keep,)
    if not keep:
        raise RegisterError("partial trace must keep at least one qubit")
    keep_pos = state.layout.positions(keep)
    n = state.n
    drop_pos = [i for i in range(n) if i not in keep_pos]
    kept_layout = RegisterLayout(tuple(x for x in state.labels if x in set(keep)))
    d = kept_layout.dim
    if isinstance(state, PureState):
        t = state.amplitudes.reshape((2,) * n)
        rho = np.tensordot(t, t.conj(), axes=(drop_pos, drop_pos))
        return MixedState(kept_layout, rho.reshape(d, d))
    t = state.matrix.reshape((2,) * (2 * n))
    for p in sorted(drop_pos, reverse=True):
        t = np.trace(t, axis1=p, axis2=p + t.ndim // 2)
    return MixedState(kept_layout, t.reshape(d, d))


def permute_to(state: State, label_order: Sequence[str]) -> State:
    """Same state re-expressed with the register labels in a new order."""
    order = tuple(label_order)
    if set(order) != set(state.labels) or len(order) != state.n:
        raise RegisterError(f"label order {order} is not a permutation of {state.labels}")
    perm = state.layout.positions(order)
    layout = RegisterLayout(order)
    n = state.n
    if isinstance(state, PureState):
        t = state.amplitudes.reshape((2,) * n).transpose(perm)
        return PureState(layout, t.reshape(-1))
    t = state.matrix.reshape((2,) * (2 * n))
    t = t.transpose(tuple(perm) + tuple(n + p for p in perm))
    return MixedState(layout, t.reshape(layout.dim, layout.dim))


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(mat)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def _aligned_pair(s1: State, s2: State) -> tuple[State, State]:
    if s1.labels == s2.labels:
        return s1, s2
    if set(s1.labels) == set(s2.labels):
        return s1, permute_to(s2, s1.labels)
    if s1.layout.dim != s2.layout.dim:
        raise RegisterError(
            f"dimension mismatch: {s1.layout.dim} vs {s2.layout.dim}")
    return s1, s2


def fidelity(s1: State, s2: State) -> float:
    """State fidelity in the squared-overlap convention.

    pure/pure |<psi|phi>|^2, pure/mixed <psi|rho|psi>, mixed/mixed Uhlmann
    (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
    """
    s1, s2 = _aligned_pair(s1, s2)
    if isinstance(s1, PureState) and isinstance(s2, PureState):
        return float(abs(np.vdot(s1.amplitudes, s2.amplitudes)) ** 2)
    if isinstance(s1, PureState):
        val = np.real(s1.amplitudes.conj() @ s2.matrix @ s1.amplitudes)
        return float(np.clip(val, 0.0, 1.0))
    if isinstance(s2, PureState):
        return fidelity(s2, s1)
    root = _psd_sqrt(s1.matrix)
    inner = root @ s2.matrix @ root
    vals = np.clip(np.linalg.eigvalsh(inner), 0.0, None)
    return float(min(np.sum(np.sqrt(vals)) ** 2, 1.0))


def states_close(s1: State, s2: State, tol: float = 1e-10) -> bool:
    """Equality up to global phase, via fidelity."""
    return fidelity(s1, s2) >= 1.0 - tol
