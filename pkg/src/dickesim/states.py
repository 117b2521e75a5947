"""Constructors for the named states of the protocol family.

Logical encoding for the hyperentangled resource: H, r -> 0 and V, l -> 1.
Register order for four-qubit states is (a, b, c, d) = (polarization A,
polarization B, path A, path B); the client qubit carries label X.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .register import (
    MixedState,
    PureState,
    RegisterError,
    RegisterLayout,
    fidelity,
    from_terms,
    permute_to,
)

RESOURCE_LABELS = ("a", "b", "c", "d")
CLIENT_LABEL = "X"
DEFAULT_LABELS = ("a", "b", "c", "d", "e", "f", "g", "h")

_ENCODING = {"H": "0", "V": "1", "r": "0", "l": "1"}


@dataclass(frozen=True)
class ClientParams:
    """Client qubit cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>, optionally dephased.

    Dephasing multiplies the density-matrix off-diagonals by (1 - dephase_lambda).
    """

    theta: float
    phi: float = 0.0
    dephase_lambda: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError(f"theta={self.theta} outside [0, pi]")
        if not 0.0 <= self.dephase_lambda <= 1.0:
            raise ValueError(f"dephase_lambda={self.dephase_lambda} outside [0, 1]")

    @property
    def alpha(self) -> float:
        return math.cos(self.theta / 2)

    @property
    def beta(self) -> complex:
        return complex(np.exp(1j * self.phi) * math.sin(self.theta / 2))


@dataclass(frozen=True)
class WernerParams:
    """Weight p of the pure Dicke component in the white-noise mixture."""

    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p={self.p} outside [0, 1]")


def dicke(n: int, k: int, labels: tuple[str, ...] | None = None) -> PureState:
    """Equal superposition of all weight-k n-bit strings, amplitude 1/sqrt(C(n,k))."""
    if not 0 <= k <= n:
        raise ValueError(f"excitation count k={k} outside [0, {n}]")
    if not 1 <= n <= 8:
        raise ValueError(f"qubit count n={n} outside [1, 8]")
    if labels is None:
        labels = DEFAULT_LABELS[:n]
    amps = np.zeros(2 ** n, dtype=complex)
    for idx in range(2 ** n):
        if bin(idx).count("1") == k:
            amps[idx] = 1.0
    return PureState(RegisterLayout(tuple(labels)), amps / np.linalg.norm(amps))


_BELL_TERMS = {
    "psi+": (("01", 1), ("10", 1)),
    "psi-": (("01", 1), ("10", -1)),
    "phi+": (("00", 1), ("11", 1)),
    "phi-": (("00", 1), ("11", -1)),
}


def bell(which: str, labels: tuple[str, str] = ("a", "b")) -> PureState:
    """Bell-basis element; which is one of psi+, psi-, phi+, phi-."""
    if which not in _BELL_TERMS:
        raise ValueError(f"unknown Bell selector {which!r}; expected one of {sorted(_BELL_TERMS)}")
    return from_terms(_BELL_TERMS[which], labels)


def _encode(physical: str) -> str:
    return "".join(_ENCODING[ch] for ch in physical)


def xi_state() -> PureState:
    """Hyperentangled source state [|HH>(|rl>-|lr>) + 2|VV>|rl>]/sqrt(6) on (a,b,c,d)."""
    terms = [
        (_encode("HH") + _encode("rl"), 1),
        (_encode("HH") + _encode("lr"), -1),
        (_encode("VV") + _encode("rl"), 2),
    ]
    return from_terms(terms, RESOURCE_LABELS)


def dicke_physical() -> PureState:
    """Two-excitation four-qubit Dicke state written in the physical carrier basis.

    [|HHll> + |VVrr> + (|VH>+|HV>)(|rl>+|lr>)]/sqrt(6) with register order
    (a, b, c, d) = (pol A, pol B, path A, path B).
    """
    terms = [(_encode("HH") + _encode("ll"), 1), (_encode("VV") + _encode("rr"), 1)]
    for pol in ("VH", "HV"):
        for path in ("rl", "lr"):
            terms.append((_encode(pol) + _encode(path), 1))
    return from_terms(terms, RESOURCE_LABELS)


def physical_logical_permutation() -> tuple[str, ...]:
    """Label order mapping the physical-basis state onto dicke(4, 2).

    Searched over all 4! orders rather than hardcoded; the first match in
    lexicographic order is returned (the Dicke state is permutation
    symmetric, so the search lands on the identity order).
    """
    target = dicke(4, 2, RESOURCE_LABELS)
    phys = dicke_physical()
    for order in permutations(RESOURCE_LABELS):
        candidate = permute_to(phys, order)
        relabeled = PureState(target.layout, candidate.amplitudes)
        if fidelity(relabeled, target) >= 1.0 - 1e-10:
            return order
    raise RegisterError("no label permutation maps the physical state onto dicke(4, 2)")


def werner_dicke(p: float | WernerParams) -> MixedState:
    """Werner-like resource p |D><D| + (1-p) I/16 on (a, b, c, d)."""
    if isinstance(p, WernerParams):
        p = p.p
    params = WernerParams(float(p))
    d42 = dicke(4, 2, RESOURCE_LABELS)
    proj = np.outer(d42.amplitudes, d42.amplitudes.conj())
    mat = params.p * proj + (1 - params.p) * np.eye(16) / 16
    return MixedState(d42.layout, mat)


def werner_weight_for_fidelity(target_fidelity: float) -> float:
    """Invert F(p) = p + (1-p)/16 for the mixture weight p."""
    p = (target_fidelity - 1 / 16) / (15 / 16)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"fidelity {target_fidelity} needs p={p} outside [0, 1]")
    return p


def client_ket(params: ClientParams, label: str = CLIENT_LABEL) -> PureState:
    """Pure client state; requires dephase_lambda = 0."""
    if params.dephase_lambda != 0.0:
        raise ValueError("client_ket is only defined for dephase_lambda = 0")
    return PureState(RegisterLayout((label,)), np.array([params.alpha, params.beta]))


def client_state(params: ClientParams, label: str = CLIENT_LABEL) -> MixedState:
    """Client density matrix with off-diagonals scaled by (1 - dephase_lambda)."""
    amps = np.array([params.alpha, params.beta])
    rho = np.outer(amps, amps.conj())
    scale = 1.0 - params.dephase_lambda
    mat = np.array([[rho[0, 0], rho[0, 1] * scale], [rho[1, 0] * scale, rho[1, 1]]])
    return MixedState(RegisterLayout((label,)), mat)
