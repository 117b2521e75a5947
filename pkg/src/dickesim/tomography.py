"""Finite-statistics layer: Poisson coincidence counts, correlator and witness
estimation, and linear-inversion state tomography with a PSD projection.

Counts are drawn per outcome as Poisson(N * p), matching coincidence
counting; every stochastic record carries its seed. Exact records (counts
equal to N * p) represent the infinite-statistics limit and propagate zero
uncertainty.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .register import (
    HADAMARD,
    MixedState,
    PAULI_I,
    PureState,
    RegisterLayout,
    State,
    apply_gate,
    fidelity,
)
from .witnesses import Observable, WitnessReport, pauli_matrix

_AXIS_TOL = 1e-12


class MissingSettingError(LookupError):
    """Records do not cover a setting required by the estimator."""

    def __init__(self, message: str, missing: tuple[str, ...]):
        super().__init__(message)
        self.missing = missing


def _axis_letter(axis) -> str:
    """Normalize an axis spec to X/Y/Z; path-phase angles map onto the equator."""
    if isinstance(axis, str):
        if axis not in ("X", "Y", "Z"):
            raise ValueError(f"unknown measurement axis {axis!r}")
        return axis
    phi = float(axis)
    if abs(phi) < _AXIS_TOL:
        return "X"
    if abs(phi - math.pi / 2) < _AXIS_TOL:
        return "Y"
    return f"P({phi!r})"


def _axis_unitary(axis) -> np.ndarray:
    """Basis-change unitary whose rows are the measurement bras."""
    if isinstance(axis, str):
        if axis == "Z":
            return PAULI_I
        if axis == "X":
            return HADAMARD
        if axis == "Y":
            return np.array([[1, -1j], [1, 1j]]) / np.sqrt(2)
        raise ValueError(f"unknown measurement axis {axis!r}")
    phi = float(axis)
    return np.array([[1, np.exp(-1j * phi)], [1, -np.exp(-1j * phi)]]) / np.sqrt(2)


@dataclass(frozen=True)
class MeasurementSetting:
    """Per-qubit measurement bases: X, Y, Z, or a path-phase angle in radians."""

    axes: tuple

    def __post_init__(self):
        axes = tuple(self.axes)
        for axis in axes:
            _axis_unitary(axis)
        object.__setattr__(self, "axes", axes)

    @property
    def n(self) -> int:
        return len(self.axes)

    def letters(self) -> tuple[str, ...]:
        return tuple(_axis_letter(a) for a in self.axes)

    def key(self) -> str:
        return "|".join(self.letters())


@dataclass(frozen=True, eq=False)
class CountsRecord:
    """Simulated coincidence counts for one measurement setting."""

    setting: MeasurementSetting
    counts: dict
    total_requested: float
    seed: int | None
    exact: bool = False

    def __post_init__(self):
        for outcome, value in self.counts.items():
            if len(outcome) != self.setting.n or set(outcome) - {"0", "1"}:
                raise ValueError(f"bad outcome key {outcome!r}")
            if value < 0:
                raise ValueError(f"negative count for outcome {outcome!r}")
            if not self.exact and value != int(value):
                raise ValueError("stochastic counts must be integers")

    @property
    def total(self) -> float:
        return float(sum(self.counts.values()))

    def to_csv_rows(self) -> list[tuple[str, str, str]]:
        key = self.setting.key()
        return [(key, outcome, repr(self.counts[outcome])) for outcome in sorted(self.counts)]

    def to_json_dict(self) -> dict:
        return {
            "setting": self.setting.key(),
            "counts": {k: self.counts[k] for k in sorted(self.counts)},
            "total_requested": self.total_requested,
            "seed": self.seed,
            "exact": self.exact,
        }


def born_probabilities(state: State, setting: MeasurementSetting) -> np.ndarray:
    """Outcome probabilities of measuring every qubit in the setting's bases."""
    if setting.n != state.n:
        raise ValueError(f"setting covers {setting.n} qubits, state has {state.n}")
    rotated = state
    for label, axis in zip(state.labels, setting.axes):
        rotated = apply_gate(rotated, _axis_unitary(axis), (label,))
    if isinstance(rotated, PureState):
        probs = np.abs(rotated.amplitudes) ** 2
    else:
        probs = np.real(np.diag(rotated.matrix))
    probs = np.clip(probs, 0.0, None)
    return probs / probs.sum()


def _outcome_strings(n: int) -> list[str]:
    return [format(i, f"0{n}b") for i in range(2 ** n)]


def simulate_counts(state: State, setting: MeasurementSetting, n: int, seed: int) -> CountsRecord:
    """Poisson(N * p) draw per outcome; deterministic under the given seed."""
    if n < 1:
        raise ValueError("total_requested must be at least 1")
    probs = born_probabilities(state, setting)
    rng = np.random.default_rng(seed)
    draws = rng.poisson(n * probs)
    counts = {o: int(c) for o, c in zip(_outcome_strings(setting.n), draws)}
    return CountsRecord(setting=setting, counts=counts, total_requested=float(n), seed=seed)


def exact_counts(state: State, setting: MeasurementSetting, n: float = 1.0) -> CountsRecord:
    """Infinite-statistics record: counts equal N * p exactly."""
    probs = born_probabilities(state, setting)
    counts = {o: float(n * p) for o, p in zip(_outcome_strings(setting.n), probs)}
    return CountsRecord(setting=setting, counts=counts, total_requested=float(n),
                        seed=None, exact=True)


def _string_compatible(pauli_string: str, letters: Sequence[str]) -> bool:
    return all(p == "I" or p == l for p, l in zip(pauli_string, letters))


def estimate_correlator(records: Iterable[CountsRecord], pauli_string: str) -> tuple[float, float]:
    """Estimate <P> for a Pauli string, pooling every compatible record.

    Identity positions marginalize, so a string like XI is estimated from all
    of XX, XY, XZ. Value is the parity-weighted count ratio over the pooled
    counts; the uncertainty follows from Poisson fluctuations of the two
    parity classes, sqrt((1 - v^2)/T).
    """
    matching = [r for r in records
                if r.setting.n == len(pauli_string)
                and _string_compatible(pauli_string, r.setting.letters())]
    if not matching:
        raise MissingSettingError(
            f"no record covers Pauli string {pauli_string!r}", (pauli_string,))
    active = [i for i, p in enumerate(pauli_string) if p != "I"]
    signed = 0.0
    total = 0.0
    for record in matching:
        for outcome, count in record.counts.items():
            parity = -1.0 if sum(int(outcome[i]) for i in active) % 2 else 1.0
            signed += parity * count
        total += record.total
    if total <= 0:
        raise ValueError("records have zero total counts")
    value = signed / total
    if all(r.exact for r in matching):
        return float(value), 0.0
    return float(value), float(math.sqrt(max(1.0 - value ** 2, 0.0) / total))


def estimate_witness(records: Iterable[CountsRecord], observable: Observable) -> WitnessReport:
    """Witness expectation from local-setting records, errors in quadrature."""
    if observable.settings is None:
        raise ValueError("observable carries no settings decomposition")
    records = list(records)
    missing = []
    value = 0.0
    variance = 0.0
    for coeff, string in observable.settings:
        if set(string) == {"I"}:
            value += coeff
            continue
        try:
            v, u = estimate_correlator(records, string)
        except MissingSettingError:
            missing.append(string)
            continue
        value += coeff * v
        variance += (coeff * u) ** 2
    if missing:
        raise MissingSettingError(
            f"records missing settings for {len(missing)} Pauli strings: {missing}",
            tuple(missing))
    return WitnessReport.build(
        witness=observable.name or "witness",
        value=value,
        uncertainty=math.sqrt(variance),
        parameters={"n_settings": len({s for _, s in observable.settings if set(s) != {'I'}})},
    )


def _required_pauli_settings(k: int) -> list[tuple[str, ...]]:
    return [letters for letters in itertools.product("XYZ", repeat=k)]


def tomography_linear(records: Iterable[CountsRecord],
                      labels: Sequence[str] | None = None) -> MixedState:
    """Linear-inversion reconstruction rho = 2^-k sum <P> P, then PSD clip.

    Requires records covering all 3^k Pauli settings for k <= 2 qubits.
    Negative eigenvalues from shot noise are clipped to zero and the trace
    renormalized.
    """
    records = list(records)
    if not records:
        raise ValueError("no records supplied")
    k = records[0].setting.n
    if k > 2:
        raise ValueError("linear inversion is provided for 1 or 2 qubits")
    have = {r.setting.letters() for r in records}
    needed = _required_pauli_settings(k)
    absent = [s for s in needed if s not in have]
    if absent:
        raise MissingSettingError(
            f"records missing {len(absent)} of {len(needed)} Pauli settings",
            tuple("".join(s) for s in absent))
    dim = 2 ** k
    rho = np.zeros((dim, dim), dtype=complex)
    for combo in itertools.product("IXYZ", repeat=k):
        string = "".join(combo)
        if set(string) == {"I"}:
            expectation = 1.0
        else:
            expectation, _ = estimate_correlator(records, string)
        rho += expectation * pauli_matrix(string)
    rho /= dim
    rho = _project_psd(rho)
    layout = RegisterLayout(tuple(labels) if labels is not None else tuple(f"q{i}" for i in range(k)))
    return MixedState(layout, rho)


def _project_psd(rho: np.ndarray) -> np.ndarray:
    """Clip negative eigenvalues and restore the trace.

    Each clipped deficit is spread uniformly over the remaining (larger)
    eigenvalues, walking them in ascending order; this is the standard
    trace-restoring projection and loses less fidelity than a global
    rescale of the spectrum.
    """
    rho = (rho + rho.conj().T) / 2
    vals, vecs = np.linalg.eigh(rho)
    lam = vals.real.copy()
    for i in range(len(lam)):
        if lam[i] < 0:
            remaining = len(lam) - i - 1
            if remaining:
                lam[i + 1:] += lam[i] / remaining
            lam[i] = 0.0
    lam = np.clip(lam, 0.0, None)
    total = lam.sum()
    if total <= 0:
        raise ValueError("reconstruction collapsed to the zero matrix")
    lam /= total
    return (vecs * lam) @ vecs.conj().T


def _resample(record: CountsRecord, rng: np.random.Generator) -> CountsRecord:
    counts = {o: int(rng.poisson(c)) for o, c in record.counts.items()}
    if sum(counts.values()) == 0:
        counts = dict(record.counts)
    return CountsRecord(setting=record.setting, counts=counts,
                        total_requested=record.total_requested, seed=None, exact=record.exact)


def fidelity_with_error(records: Iterable[CountsRecord], target: State,
                        trials: int = 100, seed: int = 0) -> tuple[float, float]:
    """Reconstruction fidelity against a target with a parametric bootstrap.

    Each trial redraws every outcome count from Poisson centered on the
    observed value and repeats the inversion; exact records bootstrap to a
    zero-width uncertainty. Trial seeds derive from (seed, trial index).
    """
    if trials < 10:
        raise ValueError("need at least 10 bootstrap trials")
    records = list(records)
    base = tomography_linear(records, labels=target.labels)
    point = fidelity(base, target)
    if all(r.exact for r in records):
        return float(point), 0.0
    values = np.empty(trials)
    for t in range(trials):
        rng = np.random.default_rng((seed, t))
        redrawn = [_resample(r, rng) if not r.exact else r for r in records]
        values[t] = fidelity(tomography_linear(redrawn, labels=target.labels), target)
    return float(np.mean(values)), float(np.std(values))


def records_to_csv(records: Iterable[CountsRecord]) -> str:
    lines = ["setting,outcome,count"]
    for record in records:
        for setting, outcome, count in record.to_csv_rows():
            lines.append(f"{setting},{outcome},{count}")
    return "\n".join(lines) + "\n"


def records_to_json(records: Iterable[CountsRecord]) -> str:
    return json.dumps([r.to_json_dict() for r in records], indent=2, sort_keys=True)
