"""Branch-resolved 1->3 telecloning and open-destination teleportation.

Both protocols tensor a client qubit X onto the four-qubit resource, apply
CX with X as control and the port as target, and post-select projective
outcomes. Clone and receiver fidelities are evaluated against the client's
actual input state (equal to the pure target ket whenever the client is
pure), matching how the experiment scores its output states.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .register import (
    ImpossibleBranchError,
    MixedState,
    PAULI_I,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    PureState,
    RegisterError,
    State,
    apply_gate,
    fidelity,
    partial_trace,
    project,
    tensor,
)
from .states import (
    CLIENT_LABEL,
    ClientParams,
    RESOURCE_LABELS,
    WernerParams,
    client_ket,
    client_state,
    dicke,
    werner_dicke,
)

BELL_LABELS = ("phi+", "phi-", "psi+", "psi-")
PAULI_LABELS = {"I": PAULI_I, "X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}
BRANCH_SUM_TOL = 1e-9

_CX = np.kron(np.array([[1, 0], [0, 0]]), PAULI_I) + np.kron(np.array([[0, 0], [0, 1]]), PAULI_X)
_KET_PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
_KET_MINUS = np.array([1, -1], dtype=complex) / np.sqrt(2)
_KET0 = np.array([1, 0], dtype=complex)
_KET1 = np.array([0, 1], dtype=complex)

# (sigma-x outcome on the control, sigma-z outcome on the target) -> Bell element
_XZ_TO_BELL = {("+", "0"): "phi+", ("-", "0"): "phi-", ("+", "1"): "psi+", ("-", "1"): "psi-"}


class CorrectionSearchError(RuntimeError):
    """No single Pauli restores the canonical post-measurement state."""

    def __init__(self, message: str, branch: str):
        super().__init__(message)
        self.branch = branch


@dataclass(frozen=True, eq=False)
class BranchOutcome:
    """One measurement branch: label, probability, post-selected state, correction."""

    outcome_label: str
    probability: float
    post_state: State | None
    correction: str | None = None

    def to_json_dict(self) -> dict:
        return {
            "outcome": self.outcome_label,
            "probability": self.probability,
            "correction": self.correction,
        }


@dataclass(frozen=True, eq=False)
class QtcResult:
    """Telecloning run: corrected branches and per-branch, per-clone fidelities."""

    branches: tuple[BranchOutcome, ...]
    clone_labels: tuple[str, ...]
    clone_fidelities: dict
    average_clone_fidelity: float
    port: str

    def to_json_dict(self) -> dict:
        return {
            "port": self.port,
            "clone_labels": list(self.clone_labels),
            "branches": [b.to_json_dict() for b in self.branches],
            "clone_fidelities": {k: dict(v) for k, v in self.clone_fidelities.items()},
            "average_clone_fidelity": self.average_clone_fidelity,
        }


@dataclass(frozen=True, eq=False)
class OdtResult:
    """Open-destination run: post-selected receiver state and bookkeeping."""

    projection_used: str
    receiver: str
    port: str
    success_probability: float
    sodt_probability: float
    receiver_state: MixedState
    teleport_fidelity: float
    intermediate_state: State
    intermediate_labels: tuple[str, ...]
    alternative_outcomes: tuple[tuple[str, float], ...]

    def to_json_dict(self) -> dict:
        return {
            "projection": self.projection_used,
            "receiver": self.receiver,
            "port": self.port,
            "success_probability": self.success_probability,
            "sodt_probability": self.sodt_probability,
            "teleport_fidelity": self.teleport_fidelity,
            "alternative_outcomes": {k: v for k, v in self.alternative_outcomes},
        }


def bell_measure(state: State, q1: str, q2: str) -> list[BranchOutcome]:
    """Bell measurement on (q1, q2): CX then sigma-x on q1 and sigma-z on q2.

    All four branches are returned in the fixed order phi+, phi-, psi+, psi-;
    a branch whose probability vanishes carries post_state None.
    """
    if q1 == q2:
        raise RegisterError("Bell measurement needs two distinct qubits")
    rotated = _apply_cx(state, q1, q2)
    outcomes = {}
    for x_label, x_ket in (("+", _KET_PLUS), ("-", _KET_MINUS)):
        for z_label, z_ket in (("0", _KET0), ("1", _KET1)):
            bell_label = _XZ_TO_BELL[(x_label, z_label)]
            onto = np.kron(x_ket, z_ket)
            try:
                prob, post = project(rotated, (q1, q2), onto)
            except ImpossibleBranchError as err:
                prob, post = max(err.probability, 0.0), None
            outcomes[bell_label] = BranchOutcome(bell_label, prob, post)
    branches = [outcomes[label] for label in BELL_LABELS]
    total = sum(b.probability for b in branches)
    if abs(total - 1.0) > BRANCH_SUM_TOL:
        raise RegisterError(f"branch probabilities sum to {total}, not 1")
    return branches


def _apply_cx(state: State, control: str, target: str) -> State:
    return apply_gate(state, _CX, (control, target))


def _apply_same_pauli(state: State, pauli: str, labels) -> State:
    out = state
    for label in labels:
        out = apply_gate(out, PAULI_LABELS[pauli], (label,))
    return out


def _canonical_teleclone_target(alpha: complex, beta: complex, labels) -> PureState:
    d1 = dicke(3, 1, tuple(labels))
    d2 = dicke(3, 2, tuple(labels))
    amps = alpha * d1.amplitudes + beta * d2.amplitudes
    return PureState(d1.layout, amps / np.linalg.norm(amps))


@lru_cache(maxsize=8)
def _correction_table_cached(port: str, resource_labels: tuple[str, ...]) -> tuple[tuple[str, str], ...]:
    resource = dicke(4, 2, resource_labels)
    table = _derive_correction_table(resource, port)
    return tuple(sorted(table.items()))


def derive_correction_table(resource: PureState, port: str = "b") -> dict[str, str]:
    """Map each Bell outcome to the Pauli P with P^{x3} restoring the canonical state.

    Derived by exhaustive search at two generic client amplitudes rather than
    transcribed; requires the ideal Dicke resource.
    """
    if not isinstance(resource, PureState) or fidelity(resource, dicke(4, 2, resource.labels)) < 1 - 1e-9:
        raise RegisterError("correction table is defined for the ideal Dicke resource")
    if resource.labels == RESOURCE_LABELS:
        return dict(_correction_table_cached(port, resource.labels))
    return _derive_correction_table(resource, port)


def _derive_correction_table(resource: PureState, port: str) -> dict[str, str]:
    samples = (ClientParams(theta=0.8, phi=0.37), ClientParams(theta=2.1, phi=2.0))
    clone_labels = tuple(x for x in resource.labels if x != port)
    table: dict[str, str] = {}
    for params in samples:
        full = tensor(client_ket(params), resource)
        branches = bell_measure(full, CLIENT_LABEL, port)
        target = _canonical_teleclone_target(params.alpha, params.beta, clone_labels)
        for branch in branches:
            winners = set()
            for pauli in PAULI_LABELS:
                corrected = _apply_same_pauli(branch.post_state, pauli, clone_labels)
                if fidelity(corrected, target) >= 1 - 1e-9:
                    winners.add(pauli)
            if not winners:
                raise CorrectionSearchError(
                    f"no Pauli corrects outcome {branch.outcome_label}", branch.outcome_label)
            if branch.outcome_label in table:
                winners &= {table[branch.outcome_label]}
                if not winners:
                    raise CorrectionSearchError(
                        f"correction for {branch.outcome_label} is sample-dependent",
                        branch.outcome_label)
            table[branch.outcome_label] = sorted(winners)[0]
    return table


def qtc_theory_fidelity(theta: float) -> float:
    """Closed-form clone fidelity (9 - cos 2 theta)/12 for a pure client."""
    if not 0.0 <= theta <= math.pi:
        raise ValueError(f"theta={theta} outside [0, pi]")
    return (9.0 - math.cos(2.0 * theta)) / 12.0


def run_qtc(client: ClientParams, resource: State | None = None, port: str = "b") -> QtcResult:
    """Run 1->3 telecloning: Bell-measure (X, port), correct, score the clones.

    Clone fidelities are taken against the client's input state; for a pure
    client that is the target ket itself. The density-matrix path is used as
    soon as either the resource or the client is mixed.
    """
    if resource is None:
        resource = dicke(4, 2, RESOURCE_LABELS)
    if port not in resource.labels:
        raise RegisterError(f"port {port!r} not in resource labels {resource.labels}")
    clone_labels = tuple(x for x in resource.labels if x != port)
    table = derive_correction_table(dicke(4, 2, resource.labels), port)

    pure_path = isinstance(resource, PureState) and client.dephase_lambda == 0.0
    client_in: State = client_ket(client) if pure_path else client_state(client)
    full = tensor(client_in, resource)
    raw_branches = bell_measure(full, CLIENT_LABEL, port)

    branches = []
    fidelities: dict[str, dict[str, float]] = {}
    average = 0.0
    for branch in raw_branches:
        pauli = table[branch.outcome_label]
        if branch.post_state is None:
            branches.append(BranchOutcome(branch.outcome_label, branch.probability, None, pauli))
            continue
        corrected = _apply_same_pauli(branch.post_state, pauli, clone_labels)
        branches.append(BranchOutcome(branch.outcome_label, branch.probability, corrected, pauli))
        per_clone = {}
        for label in clone_labels:
            reduced = partial_trace(corrected, (label,))
            per_clone[label] = fidelity(client_in, reduced)
        fidelities[branch.outcome_label] = per_clone
        average += branch.probability * (sum(per_clone.values()) / len(per_clone))
    return QtcResult(
        branches=tuple(branches),
        clone_labels=clone_labels,
        clone_fidelities=fidelities,
        average_clone_fidelity=float(average),
        port=port,
    )


def qtc_mixed_band(theta: float, p: "float | WernerParams", dephase_lambda: float,
                   p_uncertainty: float = 0.0, phi: float = 0.0,
                   port: str = "b") -> tuple[float, float]:
    """Telecloning-fidelity interval for a dephased client over Werner weight p +- dp."""
    if isinstance(p, WernerParams):
        p = p.p
    if p_uncertainty < 0:
        raise ValueError("p_uncertainty must be non-negative")
    lo = min(max(p - p_uncertainty, 0.0), 1.0)
    hi = min(max(p + p_uncertainty, 0.0), 1.0)
    params = ClientParams(theta=theta, phi=phi, dephase_lambda=dephase_lambda)
    values = []
    for weight in sorted({lo, hi}):
        if weight == 1.0 and dephase_lambda == 0.0:
            resource: State = dicke(4, 2, RESOURCE_LABELS)
        else:
            resource = werner_dicke(weight)
        values.append(run_qtc(params, resource, port).average_clone_fidelity)
    return (min(values), max(values))


def run_odt(client: ClientParams, resource: State | None = None, port: str = "b",
            receiver: str = "a", sodt_projection: str = "01") -> OdtResult:
    """Open-destination teleportation with post-selection on |+1> of (X, port).

    The two non-participating server qubits are projected onto the chosen
    computational pattern; the remaining alternative (X, port) outcomes are
    enumerated with their probabilities but left uncorrected.
    """
    if resource is None:
        resource = dicke(4, 2, RESOURCE_LABELS)
    if sodt_projection not in ("01", "10"):
        raise ValueError(f"sodt_projection must be '01' or '10', got {sodt_projection!r}")
    if receiver == port:
        raise RegisterError("receiver and port must be distinct")
    for label in (receiver, port):
        if label not in resource.labels:
            raise RegisterError(f"{label!r} not in resource labels {resource.labels}")
    sodt = tuple(x for x in resource.labels if x not in (receiver, port))

    pure_path = isinstance(resource, PureState) and client.dephase_lambda == 0.0
    client_in: State = client_ket(client) if pure_path else client_state(client)
    full = tensor(client_in, resource)
    full = _apply_cx(full, CLIENT_LABEL, port)

    prob_sodt, after_sodt = project(full, sodt, sodt_projection)
    plus_one = np.kron(_KET_PLUS, _KET1)
    prob_accept, receiver_post = project(after_sodt, (CLIENT_LABEL, port), plus_one)

    alternatives = []
    for x_label, x_ket in (("+", _KET_PLUS), ("-", _KET_MINUS)):
        for z_label, z_ket in (("0", _KET0), ("1", _KET1)):
            if (x_label, z_label) == ("+", "1"):
                continue
            try:
                alt_prob, _ = project(after_sodt, (CLIENT_LABEL, port), np.kron(x_ket, z_ket))
            except ImpossibleBranchError as err:
                alt_prob = max(err.probability, 0.0)
            alternatives.append((f"{x_label}{z_label}", float(alt_prob)))

    receiver_mixed = receiver_post.density() if isinstance(receiver_post, PureState) else receiver_post
    return OdtResult(
        projection_used=sodt_projection,
        receiver=receiver,
        port=port,
        success_probability=float(prob_sodt * prob_accept),
        sodt_probability=float(prob_sodt),
        receiver_state=receiver_mixed,
        teleport_fidelity=fidelity(client_in, receiver_mixed),
        intermediate_state=after_sodt,
        intermediate_labels=after_sodt.labels,
        alternative_outcomes=tuple(alternatives),
    )
