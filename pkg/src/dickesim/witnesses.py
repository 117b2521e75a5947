"""Collective-spin operators, entanglement witnesses, biseparability bounds.

The four-qubit fidelity witness is kept in two forms: the literal transcription
(which evaluates positive everywhere, minimum eigenvalue ~2) and a
reconstructed variant shifted so its ideal-state expectation is -1, the value
a tight fidelity witness must reach. Both are exposed; neither silently
replaces the other.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from .register import PAULI_I, PAULI_X, PAULI_Y, PAULI_Z, PureState, State
from .states import dicke

PAULI_BY_CHAR = {"I": PAULI_I, "X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}
SETTING_TOL = 1e-10

# reference measured second moments of the collective spin, with uncertainties
MEASURED_J2 = {"jx2": 2.568, "jy2": 2.617, "jz2": 0.039}
MEASURED_J2_ERR = {"jx2": 0.015, "jy2": 0.011, "jz2": 0.028}


class SeesawConvergenceError(RuntimeError):
    """A see-saw restart failed to converge within the iteration cap."""

    def __init__(self, message: str, best_value: float, diagnostics: dict):
        super().__init__(message)
        self.best_value = best_value
        self.diagnostics = diagnostics


def pauli_matrix(string: str) -> np.ndarray:
    """Kronecker product of single-qubit Paulis, e.g. "XXI" or "ZZZZ"."""
    out = np.array([[1.0 + 0j]])
    for ch in string:
        out = np.kron(out, PAULI_BY_CHAR[ch])
    return out


def pauli_decompose(matrix: np.ndarray, tol: float = 1e-12) -> list[tuple[float, str]]:
    """Real coefficients of a Hermitian operator in the Pauli-string basis."""
    n = int(round(math.log2(matrix.shape[0])))
    coeffs = []
    for combo in itertools.product("IXYZ", repeat=n):
        s = "".join(combo)
        c = float(np.real(np.sum(pauli_matrix(s).T * matrix))) / 2 ** n
        if abs(c) > tol:
            coeffs.append((c, s))
    return coeffs


@dataclass(frozen=True, eq=False)
class Observable:
    """Hermitian operator, optionally with a local-setting Pauli decomposition."""

    matrix: np.ndarray
    settings: tuple[tuple[float, str], ...] | None = None
    name: str = ""
    reconstructed: bool = False

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=complex, copy=True)
        if np.abs(mat - mat.conj().T).max() > SETTING_TOL:
            raise ValueError("observable matrix is not Hermitian within 1e-10")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)
        if self.settings is not None:
            # agreement with the matrix is surfaced by decomposition_check,
            # not silently enforced here
            object.__setattr__(self, "settings", tuple((float(c), s) for c, s in self.settings))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def expectation(self, state: State) -> float:
        if isinstance(state, PureState):
            return float(np.real(state.amplitudes.conj() @ self.matrix @ state.amplitudes))
        return float(np.real(np.trace(state.matrix @ self.matrix)))


@dataclass(frozen=True, eq=False)
class CollectiveSpinSet:
    """J_k = sum_i sigma_i^k / 2 and S_k = (J_k^2 - 1)/2 for one register size."""

    n: int
    jx: Observable
    jy: Observable
    jz: Observable
    sx: Observable
    sy: Observable
    sz: Observable


def _collective_matrix(n: int, sigma: np.ndarray) -> np.ndarray:
    total = np.zeros((2 ** n, 2 ** n), dtype=complex)
    for i in range(n):
        ops = [sigma if j == i else PAULI_I for j in range(n)]
        term = np.array([[1.0 + 0j]])
        for op in ops:
            term = np.kron(term, op)
        total += term
    return total / 2.0


@lru_cache(maxsize=None)
def collective_spin(n: int) -> CollectiveSpinSet:
    """Collective spin operators for an n-qubit register."""
    if not 1 <= n <= 8:
        raise ValueError(f"register size n={n} outside [1, 8]")
    mats = {}
    for axis, sigma in (("x", PAULI_X), ("y", PAULI_Y), ("z", PAULI_Z)):
        j = _collective_matrix(n, sigma)
        s = (j @ j - np.eye(2 ** n)) / 2.0
        mats[f"j{axis}"] = Observable(j, name=f"J{axis}")
        mats[f"s{axis}"] = Observable(s, name=f"S{axis}")
    return CollectiveSpinSet(n=n, jx=mats["jx"], jy=mats["jy"], jz=mats["jz"],
                             sx=mats["sx"], sy=mats["sy"], sz=mats["sz"])


def _axis_settings(matrix: np.ndarray) -> tuple[tuple[float, str], ...]:
    return tuple(pauli_decompose(matrix))


@lru_cache(maxsize=None)
def witness_wm() -> Observable:
    """Four-qubit collective-spin witness, literal transcription.

    [24 I + Jx^2 Sx + Jy^2 Sy + Jz^2 (31 I - 7 Jz^2)] / 12. As written this
    operator is positive on every state (ideal-state expectation 2.75, minimum
    eigenvalue 2.0); see witness_wm_calibrated for the usable variant.
    """
    cs = collective_spin(4)
    eye = np.eye(16)
    jx2 = cs.jx.matrix @ cs.jx.matrix
    jy2 = cs.jy.matrix @ cs.jy.matrix
    jz2 = cs.jz.matrix @ cs.jz.matrix
    mat = (24 * eye + jx2 @ cs.sx.matrix + jy2 @ cs.sy.matrix
           + jz2 @ (31 * eye - 7 * jz2)) / 12
    return Observable(mat, settings=_axis_settings(mat), name="W_m (transcribed)")


@lru_cache(maxsize=None)
def witness_wm_calibrated() -> Observable:
    """Reconstructed variant of the collective-spin witness.

    Identity-shifted so the ideal Dicke-state expectation is exactly -1,
    the value at which the fidelity bound (2 - <W>)/3 reaches 1. Labeled
    reconstructed: the shift restores the calibration, not a certified
    biseparability bound.
    """
    base = witness_wm()
    ideal = base.expectation(dicke(4, 2))
    mat = base.matrix - (ideal + 1.0) * np.eye(16)
    return Observable(mat, settings=_axis_settings(mat),
                      name="W_m (reconstructed)", reconstructed=True)


class FidelityBound(NamedTuple):
    value: float
    clamped: bool


def fidelity_bound_from_wm(value: float) -> FidelityBound:
    """Fidelity lower bound F >= (2 - <W_m>)/3, clamped to [0, 1] with a flag."""
    raw = (2.0 - value) / 3.0
    clipped = min(max(raw, 0.0), 1.0)
    return FidelityBound(clipped, clipped != raw)


def witness_wcs(gamma: float, b4: float) -> Observable:
    """Generalized collective-spin witness b4(gamma) I - (Jx^2 + Jy^2 + gamma Jz^2)."""
    cs = collective_spin(4)
    mat = b4 * np.eye(16) - (cs.jx.matrix @ cs.jx.matrix + cs.jy.matrix @ cs.jy.matrix
                             + gamma * cs.jz.matrix @ cs.jz.matrix)
    return Observable(mat, settings=_axis_settings(mat), name=f"W_cs(gamma={gamma})")


def propagate_wcs_error(gamma: float, d_jx2: float, d_jy2: float, d_jz2: float) -> float:
    """Quadrature propagation sqrt(dJx2^2 + dJy2^2 + gamma^2 dJz2^2)."""
    for name, dev in (("d_jx2", d_jx2), ("d_jy2", d_jy2), ("d_jz2", d_jz2)):
        if dev < 0:
            raise ValueError(f"{name}={dev} must be non-negative")
    return math.sqrt(d_jx2 ** 2 + d_jy2 ** 2 + gamma ** 2 * d_jz2 ** 2)


BIPARTITIONS_4 = (
    ((0,), (1, 2, 3)),
    ((1,), (0, 2, 3)),
    ((2,), (0, 1, 3)),
    ((3,), (0, 1, 2)),
    ((0, 1), (2, 3)),
    ((0, 2), (1, 3)),
    ((0, 3), (1, 2)),
)


def _spin_operator(gamma: float) -> np.ndarray:
    cs = collective_spin(4)
    return (cs.jx.matrix @ cs.jx.matrix + cs.jy.matrix @ cs.jy.matrix
            + gamma * cs.jz.matrix @ cs.jz.matrix)


def _haar_ket(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def _conditioned_operator(op8: np.ndarray, fixed_axes: Sequence[int], fixed_vec: np.ndarray) -> np.ndarray:
    """<v|A|v> contracted over the fixed factor; returns the operator on the rest."""
    k = len(fixed_axes)
    vt = fixed_vec.reshape((2,) * k)
    out = np.tensordot(op8, vt, axes=([4 + a for a in fixed_axes], list(range(k))))
    out = np.tensordot(vt.conj(), out, axes=(list(range(k)), list(fixed_axes)))
    d = 2 ** (4 - k)
    return out.reshape(d, d)


@dataclass(frozen=True)
class BisepBoundResult:
    """Biseparability bound with its see-saw and grid-oracle estimates."""

    gamma: float
    value: float
    seesaw_value: float
    grid_value: float
    per_bipartition: tuple[tuple[str, float], ...]
    restarts: int
    max_iterations_used: int


GEOMETRIC_TAIL_TOL = 1e-9
CAP_REMAINDER_TOL = 1e-6


def _seesaw_once(op8: np.ndarray, part_a: Sequence[int], part_b: Sequence[int],
                 rng: np.random.Generator, max_iter: int, tol: float) -> tuple[float, int]:
    vb = _haar_ket(rng, 2 ** len(part_b))
    prev = -np.inf
    prev_delta = np.inf
    remainder = np.inf
    slow_ratios: list[float] = []
    for it in range(1, max_iter + 1):
        ma = _conditioned_operator(op8, part_b, vb)
        va = np.linalg.eigh(ma)[1][:, -1]
        mb = _conditioned_operator(op8, part_a, va)
        vals, vecs = np.linalg.eigh(mb)
        vb = vecs[:, -1]
        value = float(vals[-1])
        delta = abs(value - prev)
        if delta < tol:
            return value, it
        # Near a degenerate optimum (boundary gamma values) the iteration
        # contracts with rate r -> 1 and the step criterion is out of reach.
        # Once three consecutive ratios sit in the slow regime, the remaining
        # improvement is bounded by delta * r / (1 - r); stop when that
        # projection is negligible.
        if np.isfinite(prev_delta) and prev_delta > 0:
            ratio = delta / prev_delta
            if 0.8 < ratio < 1.0:
                slow_ratios.append(ratio)
                r = max(slow_ratios[-3:])
                remainder = delta * r / (1.0 - r)
                if len(slow_ratios) >= 3 and remainder < GEOMETRIC_TAIL_TOL:
                    return value, it
            else:
                slow_ratios.clear()
                remainder = np.inf
        prev, prev_delta = value, delta
    if remainder < CAP_REMAINDER_TOL:
        # power-law tail at a degenerate boundary: the value is converged to
        # well below every tolerance this bound is used at
        return prev, max_iter
    raise SeesawConvergenceError(
        f"see-saw did not converge within {max_iter} iterations",
        best_value=prev,
        diagnostics={"partition": (tuple(part_a), tuple(part_b)), "iterations": max_iter},
    )


def _coherent_ket(theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Batch of single-qubit kets cos(t/2)|0> + e^{i p} sin(t/2)|1>, shape (N, 2)."""
    return np.stack([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)], axis=-1)


def _grid_bound(gamma: float, points: int = 18) -> float:
    """Coarse grid over products of spin-coherent factors; independent lower oracle."""
    op = _spin_operator(gamma)
    thetas = np.linspace(0.0, math.pi, points)
    phis = np.linspace(0.0, 2 * math.pi, points, endpoint=False)
    tt, pp = np.meshgrid(thetas, phis, indexing="ij")
    single = _coherent_ket(tt.ravel(), pp.ravel())          # (K, 2)
    pair = np.einsum("ka,kb->kab", single, single).reshape(-1, 4)
    triple = np.einsum("kab,kc->kabc", pair.reshape(-1, 2, 2), single).reshape(-1, 8)
    best = -np.inf
    for left, right in ((single, triple), (pair, pair)):
        states = np.einsum("ia,jb->ijab", left, right).reshape(left.shape[0] * right.shape[0], 16)
        vals = np.real(np.einsum("si,ij,sj->s", states.conj(), op, states))
        best = max(best, float(vals.max()))
    return best


@lru_cache(maxsize=None)
def biseparable_bound_result(gamma: float, restarts: int = 24, seed: int = 20120917,
                             max_iter: int = 2000, tol: float = 1e-12) -> BisepBoundResult:
    """Maximum of <Jx^2 + Jy^2 + gamma Jz^2> over pure biseparable four-qubit states.

    Alternating top-eigenvector see-saw over every 1|3 and 2|2 bipartition with
    multi-start, cross-checked against a coarse spin-coherent grid. See-saw
    iterates are feasible states, so both estimates bound the maximum from
    below; the larger one is returned.
    """
    if gamma > 0:
        raise ValueError(f"gamma={gamma} must be non-positive")
    if gamma < -10:
        raise ValueError(f"gamma={gamma} below supported range -10")
    if restarts < 20:
        raise ValueError("need at least 20 restarts")
    op8 = _spin_operator(gamma).reshape((2,) * 8)
    rng = np.random.default_rng(seed)
    per_part = []
    iters_used = 0
    for part_a, part_b in BIPARTITIONS_4:
        best = -np.inf
        for _ in range(restarts):
            value, iters = _seesaw_once(op8, part_a, part_b, rng, max_iter, tol)
            iters_used = max(iters_used, iters)
            best = max(best, value)
        label = f"{''.join(map(str, part_a))}|{''.join(map(str, part_b))}"
        per_part.append((label, best))
    seesaw_value = max(v for _, v in per_part)
    grid_value = _grid_bound(gamma)
    return BisepBoundResult(
        gamma=gamma,
        value=max(seesaw_value, grid_value),
        seesaw_value=seesaw_value,
        grid_value=grid_value,
        per_bipartition=tuple(per_part),
        restarts=restarts,
        max_iterations_used=iters_used,
    )


def biseparable_bound(gamma: float, **kwargs) -> float:
    """b4(gamma): see biseparable_bound_result."""
    return biseparable_bound_result(gamma, **kwargs).value


def random_biseparable_moments(n_samples: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Sample pure biseparable states; returns (<Jx^2 + Jy^2>, <Jz^2>) arrays.

    Each sample draws a random bipartition and Haar-random factor states.
    The moments let callers assemble <Jx^2 + Jy^2 + gamma Jz^2> for any gamma.
    """
    rng = np.random.default_rng(seed)
    cs = collective_spin(4)
    op_xy = cs.jx.matrix @ cs.jx.matrix + cs.jy.matrix @ cs.jy.matrix
    op_z = cs.jz.matrix @ cs.jz.matrix
    xy = np.empty(n_samples)
    zz = np.empty(n_samples)
    for i in range(n_samples):
        part_a, part_b = BIPARTITIONS_4[rng.integers(len(BIPARTITIONS_4))]
        va = _haar_ket(rng, 2 ** len(part_a))
        vb = _haar_ket(rng, 2 ** len(part_b))
        # kron orders axes as (part_a, part_b); transpose puts qubit i at axis i
        order = list(part_a) + list(part_b)
        vec = np.kron(va, vb).reshape((2,) * 4).transpose(np.argsort(order)).reshape(-1)
        xy[i] = np.real(vec.conj() @ op_xy @ vec)
        zz[i] = np.real(vec.conj() @ op_z @ vec)
    return xy, zz


def _permutation_patterns(pattern: str) -> list[str]:
    """Distinct position permutations of a Pauli pattern, e.g. ZII -> ZII, IZI, IIZ."""
    return sorted(set("".join(p) for p in itertools.permutations(pattern)))


def _d3_rearranged_terms(k: int) -> list[tuple[float, str]]:
    """The rearranged eight-group decomposition of the D3 projector witness.

    Written for k=1; the k=2 form follows by conjugating every qubit with
    sigma-x, which flips the sign of terms with an odd number of Y or Z.
    """
    groups = [
        (13.0, "III"),
        (3.0, "ZZZ"),
        (-1.0, "ZII"),
        (1.0, "ZZI"),
        (-2.0, "XXI"),
        (-2.0, "YYI"),
        (-2.0, "XXZ"),
        (-2.0, "YYZ"),
    ]
    terms = []
    for coeff, pattern in groups:
        for string in _permutation_patterns(pattern):
            sign = 1.0
            if k == 2:
                flips = sum(1 for ch in string if ch in "YZ")
                sign = -1.0 if flips % 2 else 1.0
            terms.append((coeff * sign / 24.0, string))
    return terms


def witness_projector_d3(k: int) -> Observable:
    """Fidelity witness (2/3) I - |D3(k)><D3(k)| with its eight-group settings."""
    if k not in (1, 2):
        raise ValueError(f"excitation number k={k} must be 1 or 2")
    d3 = dicke(3, k)
    mat = (2.0 / 3.0) * np.eye(8) - np.outer(d3.amplitudes, d3.amplitudes.conj())
    return Observable(mat, settings=tuple(_d3_rearranged_terms(k)), name=f"W_D3({k})")


def witness_projector_d3_optimal(k: int) -> Observable:
    """Same witness carrying the five-setting decomposition, expanded to Paulis.

    The five settings are ZZZ and the four tilted products (1 + Z + s L)^x3
    for L in {X, Y}, s in {+, -}. The two-Pauli product term of the published
    five-setting form carries no axis superscript; it is read as ZZ, under
    which the expansion reproduces the projector exactly.
    """
    if k not in (1, 2):
        raise ValueError(f"excitation number k={k} must be 1 or 2")
    coeffs: dict[str, float] = {}

    def add(coeff: float, string: str) -> None:
        if k == 2:
            flips = sum(1 for ch in string if ch in "YZ")
            coeff = -coeff if flips % 2 else coeff
        coeffs[string] = coeffs.get(string, 0.0) + coeff

    add(17.0, "III")
    add(7.0, "ZZZ")
    for string in _permutation_patterns("ZII"):
        add(3.0, string)
    for string in _permutation_patterns("ZZI"):
        add(5.0, string)
    for axis in ("X", "Y"):
        for sign in (1.0, -1.0):
            # (I + Z + s L)^{x3} expands over letter choices per qubit
            for letters in itertools.product(("I", "Z", axis), repeat=3):
                weight = sign ** sum(1 for ch in letters if ch == axis)
                add(-weight, "".join(letters))
    terms = tuple((c / 24.0, s) for s, c in sorted(coeffs.items()) if abs(c) > 1e-15)
    d3 = dicke(3, k)
    mat = (2.0 / 3.0) * np.eye(8) - np.outer(d3.amplitudes, d3.amplitudes.conj())
    return Observable(mat, settings=terms, name=f"W_D3({k}) five-setting")


def fidelity_bound_from_d3_witness(value: float) -> FidelityBound:
    """Projector-witness bound F >= 2/3 - <W>, clamped to [0, 1] with a flag."""
    raw = 2.0 / 3.0 - value
    clipped = min(max(raw, 0.0), 1.0)
    return FidelityBound(clipped, clipped != raw)


@dataclass(frozen=True)
class DecompositionCheck:
    max_deviation: float
    equal: bool


def decomposition_check(observable: Observable) -> DecompositionCheck:
    """Rebuild the matrix from the settings list; report the max-norm deviation."""
    if observable.settings is None:
        raise ValueError("observable carries no settings decomposition")
    rebuilt = sum(c * pauli_matrix(s) for c, s in observable.settings)
    dev = float(np.abs(rebuilt - observable.matrix).max())
    return DecompositionCheck(max_deviation=dev, equal=dev <= SETTING_TOL)


@dataclass(frozen=True)
class WitnessReport:
    """One witness evaluation: value, uncertainty, verdict, optional bound."""

    witness: str
    parameters: dict
    value: float
    uncertainty: float
    verdict: str
    fidelity_bound: float | None = None
    sigma_multiplier: float = 1.0

    @classmethod
    def build(cls, witness: str, value: float, uncertainty: float,
              parameters: dict | None = None, fidelity_bound: float | None = None,
              sigma_multiplier: float = 1.0) -> "WitnessReport":
        if uncertainty < 0:
            raise ValueError("uncertainty must be non-negative")
        entangled = value + sigma_multiplier * uncertainty < 0
        return cls(
            witness=witness,
            parameters=dict(parameters or {}),
            value=float(value),
            uncertainty=float(uncertainty),
            verdict="multipartite-entangled" if entangled else "inconclusive",
            fidelity_bound=fidelity_bound,
            sigma_multiplier=sigma_multiplier,
        )

    def to_json_dict(self) -> dict:
        return {
            "witness": self.witness,
            "parameters": self.parameters,
            "value": self.value,
            "uncertainty": self.uncertainty,
            "verdict": self.verdict,
            "fidelity_bound": self.fidelity_bound,
        }
