"""Krylov-subspace dimension from Gramian determinants.

The overlaps <psi_0|U^l|psi_0> fill the first row of a Hermitian Toeplitz
matrix; its determinant hits zero exactly when the iterated states become
linearly dependent, and the first k where that happens is the number of
distinct eigenphases the initial state spans.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, InconclusiveRankError
from .statevector import (
    Circuit,
    Gate,
    QuantumState,
    apply_circuit,
    gate_matrix,
    inner_product,
    resolve_angle,
    sample_counts,
)
from .utils import derive_seed

DEFAULT_THRESHOLD = 1e-6


@dataclass
class GramianMatrix:
    k: int
    row: np.ndarray  # <psi_0|psi_l> for l = 0..k

    def matrix(self) -> np.ndarray:
        dim = self.k + 1
        g = np.empty((dim, dim), dtype=np.complex128)
        for l in range(dim):
            for lp in range(dim):
                g[l, lp] = self.row[lp - l] if lp >= l else np.conj(self.row[l - lp])
        return g


@dataclass
class NeigResult:
    n_eig: int
    determinants: list
    method: str
    shots: int | None
    threshold: float


def evolve_step(u, state: QuantumState) -> QuantumState:
    """One application of U, given either a circuit or a dense matrix."""
    if isinstance(u, Circuit):
        return apply_circuit(state, u)
    return QuantumState(state.n_qubits, np.asarray(u) @ state.amplitudes)


def controlled_circuit(circ: Circuit, params=None) -> Circuit:
    """Circuit on n+1 qubits applying `circ` when the new qubit 0 is |1>."""
    gates = []
    for g in circ.gates:
        if g.kind == "gphase":
            gates.append(Gate("phase", (0,), angle=resolve_angle(g, params)))
            continue
        m = gate_matrix(g, params)
        dim = m.shape[0]
        blocked = np.eye(2 * dim, dtype=np.complex128)
        blocked[dim:, dim:] = m
        targets = (0,) + tuple(t + 1 for t in g.targets)
        gates.append(Gate("unitary", targets, matrix=blocked))
    return Circuit(circ.n_qubits + 1, gates, 0)


def _hadamard_joint(u, psi0: QuantumState, params=None):
    """(|0> + |1> U^l |.>)/sqrt(2)-style joint register, advanced lazily."""
    n = psi0.n_qubits
    amps = np.kron(np.array([1.0, 1.0]) / np.sqrt(2.0), psi0.amplitudes)
    joint = QuantumState(n + 1, amps.astype(np.complex128))
    if isinstance(u, Circuit):
        step = controlled_circuit(u, params)
    else:
        dim = 2**n
        blocked = np.eye(2 * dim, dtype=np.complex128)
        blocked[dim:, dim:] = np.asarray(u)
        step = Circuit(n + 1, [Gate("unitary", tuple(range(n + 1)), matrix=blocked)], 0)
    return joint, step


_H_GATE = Gate("h", (0,))
_SDG_GATE = Gate("phase", (0,), angle=-np.pi / 2)


def _ancilla_z(joint: QuantumState, imaginary: bool, shots, seed):
    """<Z> of the ancilla after the closing Hadamard (S^dag first for Im)."""
    state = joint
    if imaginary:
        state = apply_circuit(
            state, Circuit(state.n_qubits, [_SDG_GATE, _H_GATE], 0)
        )
    else:
        state = apply_circuit(state, Circuit(state.n_qubits, [_H_GATE], 0))
    if shots is None:
        probs = np.abs(state.amplitudes) ** 2
        half = len(probs) // 2
        return float(probs[:half].sum() - probs[half:].sum())
    counts = sample_counts(state, shots, seed)
    n0 = sum(c for b, c in counts.items() if b[0] == "0")
    return (2 * n0 - shots) / shots


def overlap_row(
    u,
    psi0: QuantumState,
    k: int,
    method: str = "exact",
    shots: int | None = None,
    seed: int = 0,
) -> np.ndarray:
    """Entries <psi_0|U^l|psi_0> for l = 0..k.

    "exact" takes inner products of the iterated states; "hadamard" runs the
    ancilla-controlled interference circuit and reads Re/Im off the ancilla.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if method == "exact":
        row = np.empty(k + 1, dtype=np.complex128)
        row[0] = 1.0
        state = psi0
        for l in range(1, k + 1):
            state = evolve_step(u, state)
            row[l] = inner_product(psi0, state)
        return row
    if method != "hadamard":
        raise ValueError(f"method must be 'exact' or 'hadamard', got {method!r}")
    if shots is None:
        raise ConfigError("hadamard method needs a shot count")
    joint, step = _hadamard_joint(u, psi0)
    row = np.empty(k + 1, dtype=np.complex128)
    row[0] = 1.0
    for l in range(1, k + 1):
        joint = apply_circuit(joint, step)
        re = _ancilla_z(joint, False, shots, derive_seed(seed, "re", l))
        im = _ancilla_z(joint, True, shots, derive_seed(seed, "im", l))
        row[l] = re + 1j * im
    return row


def build_gramian(row) -> GramianMatrix:
    row = np.asarray(row, dtype=np.complex128)
    if abs(row[0] - 1.0) > 0.1:
        raise ValueError(f"row[0] should be ~1 (got {row[0]})")
    return GramianMatrix(len(row) - 1, row)


def determinant(g: GramianMatrix) -> float:
    """det of the assembled matrix; Hermitian input makes it real."""
    det = np.linalg.det(g.matrix())
    if abs(det.imag) > 1e-10:
        raise ValueError(f"determinant has imaginary residue {det.imag}")
    return float(det.real)


def _det_row_gradient(row):
    """Numerical d(det)/d(Re row_l), d(det)/d(Im row_l) for l >= 1."""
    base = determinant(build_gramian(row))
    h = 1e-6
    grads = []
    for l in range(1, len(row)):
        pr = row.copy()
        pr[l] += h
        d_re = (determinant(build_gramian(pr)) - base) / h
        pi = row.copy()
        pi[l] += 1j * h
        d_im = (determinant(build_gramian(pi)) - base) / h
        grads.append((d_re, d_im))
    return grads


def shot_threshold(row, shots, k, base=DEFAULT_THRESHOLD) -> float:
    """Noise-aware cutoff: max(base, 5 k sigma_det), sigma from per-entry
    shot variance propagated to first order."""
    var = 0.0
    for (d_re, d_im), entry in zip(_det_row_gradient(row), row[1:]):
        v_re = max(0.0, 1.0 - entry.real**2) / shots
        v_im = max(0.0, 1.0 - entry.imag**2) / shots
        var += d_re**2 * v_re + d_im**2 * v_im
    return max(base, 5.0 * k * np.sqrt(var))


def find_neig(
    u,
    psi0: QuantumState,
    k_max: int,
    threshold: float = DEFAULT_THRESHOLD,
    method: str = "exact",
    shots: int | None = None,
    seed: int = 0,
) -> NeigResult:
    """Smallest k with |det G(k)| <= threshold, growing the row incrementally."""
    if k_max < 1:
        raise ValueError(f"k_max must be >= 1, got {k_max}")
    if threshold <= 0:
        raise ValueError(f"threshold must be > 0, got {threshold}")
    if method == "hadamard" and shots is None:
        raise ConfigError("hadamard method needs a shot count")

    row = [1.0 + 0.0j]
    dets = []
    if method == "exact":
        state = psi0
        joint = step = None
    else:
        joint, step = _hadamard_joint(u, psi0)
    for k in range(1, k_max + 1):
        if method == "exact":
            state = evolve_step(u, state)
            row.append(inner_product(psi0, state))
        else:
            joint = apply_circuit(joint, step)
            re = _ancilla_z(joint, False, shots, derive_seed(seed, "re", k))
            im = _ancilla_z(joint, True, shots, derive_seed(seed, "im", k))
            row.append(re + 1j * im)
        arr = np.asarray(row)
        det = determinant(build_gramian(arr))
        dets.append(det)
        cut = threshold
        if method == "hadamard":
            cut = shot_threshold(arr, shots, k, threshold)
        if abs(det) <= cut:
            return NeigResult(k, dets, method, shots, cut)
    raise InconclusiveRankError(
        f"no determinant dropped below {threshold} by k_max={k_max}",
        determinants=dets,
    )
