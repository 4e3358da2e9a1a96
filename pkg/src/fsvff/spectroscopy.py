"""Eigenvector extraction, eigenvalue gaps, and depth-reduced QPE/QEE.

After training, W^dag rotates the initial state into a few computational
basis states; their D-phases carry the eigenvalues. Replacing the
controlled U^(2^j) of textbook phase estimation with the rescaled diagonal
makes the controlled block's gate count independent of the exponent.
"""

from dataclasses import dataclass

import numpy as np

from .ansatz import (
    DiagonalAnsatz,
    FsvffAnsatz,
    mask_qubits,
    phase_exponents,
)
from .exceptions import (
    AmbiguousBranchError,
    ConfigError,
    ExtractionError,
    UnreliablePhaseError,
)
from .gramian import controlled_circuit
from .noise import NoiseModel, from_pure, noisy_circuit, readout_probabilities
from .statevector import (
    Circuit,
    Gate,
    QuantumState,
    apply_circuit,
    bind_circuit,
    bitstring_of,
    index_of,
    sample_counts,
    zero_state,
)
from .utils import derive_seed


def wrap_phase(x: float) -> float:
    """Map to (-pi, pi]."""
    y = (x + np.pi) % (2 * np.pi) - np.pi
    return np.pi if y == -np.pi else y


@dataclass
class SpectrumEstimate:
    eigen_basis_states: list
    eigen_vectors: list
    phases: np.ndarray  # anchored to the first peak, in (-pi, pi]
    energies_relative: np.ndarray
    delta_t: float
    probabilities: np.ndarray


@dataclass
class QpeResult:
    precision_bits: int
    distribution: dict
    variation_distance_to_ideal: float


def extract_eigvectors(
    ansatz: FsvffAnsatz,
    psi0: QuantumState,
    shots: int,
    seed: int = 0,
    threshold: float = 0.02,
) -> SpectrumEstimate:
    """Sample W^dag|psi_0>, keep peaks above `threshold` of the shots, and
    return W|v_k> with the relative D-phase of each kept basis state.

    Degenerate eigenvalues may spread one Krylov direction over several
    equal-phase peaks; all are reported, none collapsed."""
    rotated = apply_circuit(psi0, ansatz.w, ansatz.theta, adjoint=True)
    counts = sample_counts(rotated, shots, derive_seed(seed, "extract"))
    peaks = [
        (c, b) for b, c in counts.items() if c >= threshold * shots
    ]
    if not peaks:
        raise ExtractionError(
            f"no basis state reached {threshold:.3%} of {shots} shots"
        )
    peaks.sort(key=lambda t: (-t[0], t[1]))
    expo = phase_exponents(ansatz.d)
    dt = ansatz.d.delta_t
    states, vectors, phases, probs = [], [], [], []
    for c, b in peaks:
        idx = index_of(b)
        basis = zero_state(ansatz.n_qubits)
        basis.amplitudes[0] = 0.0
        basis.amplitudes[idx] = 1.0
        vectors.append(apply_circuit(basis, ansatz.w, ansatz.theta))
        states.append(b)
        phases.append(dt * expo[idx])
        probs.append(c / shots)
    anchor = phases[0]
    rel = np.array([wrap_phase(p - anchor) for p in phases])
    return SpectrumEstimate(
        states, vectors, rel, -rel / dt, dt, np.array(probs)
    )


def _phase_of_state(ansatz, bits, delta_t):
    expo = phase_exponents(ansatz.d)
    return expo[index_of(bits)] * delta_t


def gaps_from_gamma(
    ansatz: FsvffAnsatz,
    delta_t: float,
    pairs,
    second_ansatz: FsvffAnsatz | None = None,
    second_delta_t: float | None = None,
    g_max: float | None = None,
    tol: float = 1e-6,
) -> np.ndarray:
    """Energy gap for each (bitstring_a, bitstring_b) pair from the relative
    D-phase. A diagonal phase only fixes the gap modulo 2 pi / delta_t; a
    second diagonalization at an incommensurate delta_t picks the branch."""
    gaps = []
    for a, b in pairs:
        phi1 = wrap_phase(
            _phase_of_state(ansatz, a, delta_t) - _phase_of_state(ansatz, b, delta_t)
        )
        if second_ansatz is None:
            gaps.append(-phi1 / delta_t)
            continue
        dt2 = second_delta_t if second_delta_t is not None else second_ansatz.d.delta_t
        phi2 = wrap_phase(
            _phase_of_state(second_ansatz, a, dt2)
            - _phase_of_state(second_ansatz, b, dt2)
        )
        window = g_max if g_max is not None else 2 * np.pi / max(delta_t, dt2)
        cands1 = _branch_candidates(-phi1, delta_t, window)
        cands2 = _branch_candidates(-phi2, dt2, window)
        matches = [
            g1
            for g1 in cands1
            if any(abs(g1 - g2) < tol * max(1.0, abs(g1)) for g2 in cands2)
        ]
        if len(matches) != 1:
            raise AmbiguousBranchError(
                f"pair ({a},{b}): {len(matches)} consistent branches in "
                f"|gap| <= {window:.4g}",
                candidates=matches or list(cands1),
            )
        gaps.append(matches[0])
    return np.array(gaps)


def _branch_candidates(phi, dt, window):
    base = phi / dt
    spacing = 2 * np.pi / dt
    m_lo = int(np.floor((-window - base) / spacing))
    m_hi = int(np.ceil((window - base) / spacing))
    return [base + m * spacing for m in range(m_lo, m_hi + 1) if abs(base + m * spacing) <= window]


def controlled_diag_circuit(
    d: DiagonalAnsatz, t: float, control: int = 0, offset: int = 1
) -> Circuit:
    """Gates applying diag(t) to the system (qubits shifted by `offset`)
    when `control` is |1>. Per Z-string: one ancilla phase plus one
    two-qubit phase across the parity ladder; gate count independent of t."""
    gates = []
    n = d.n_qubits
    for mask, gamma in zip(d.z_masks, d.gammas):
        qs = [q + offset for q in mask_qubits(n, mask)]
        for a, b in zip(qs, qs[1:]):
            gates.append(Gate("cnot", (a, b)))
        gates.append(Gate("phase", (control,), angle=gamma * t))
        gates.append(Gate("phase", (control, qs[-1]), angle=-2.0 * gamma * t))
        for a, b in reversed(list(zip(qs, qs[1:]))):
            gates.append(Gate("cnot", (a, b)))
    return Circuit(n + offset, gates, 0)


def qft_circuit(t: int, inverse: bool = False) -> Circuit:
    """Textbook QFT on t qubits (MSB-first), swaps built from CNOT triples."""
    gates = []
    for i in range(t):
        gates.append(Gate("h", (i,)))
        for j in range(i + 1, t):
            gates.append(
                Gate("phase", (j, i), angle=np.pi / 2 ** (j - i))
            )
    for i in range(t // 2):
        j = t - 1 - i
        gates.extend(
            [Gate("cnot", (i, j)), Gate("cnot", (j, i)), Gate("cnot", (i, j))]
        )
    circ = Circuit(t, gates, 0)
    if inverse:
        from .statevector import adjoint_circuit

        circ = adjoint_circuit(circ)
    return circ


def _shift_gates(circ: Circuit, offset: int, new_n: int) -> list:
    return [
        Gate(
            g.kind,
            tuple(q + offset for q in g.targets),
            param_index=g.param_index,
            angle=g.angle,
            matrix=g.matrix,
        )
        for g in circ.gates
    ]


def qpe_circuit(
    target,
    eigenstate_prep: Circuit,
    precision_bits: int,
    delta_t: float,
) -> Circuit:
    """Register of `precision_bits` qubits in front of the system register.

    With an FsvffAnsatz target the controlled evolution is the rescaled
    diagonal (enhanced mode, constant depth per bit); with a Circuit target
    it is the controlled step circuit repeated 2^j times."""
    t = precision_bits
    enhanced = isinstance(target, FsvffAnsatz)
    n = target.n_qubits if enhanced else target.n_qubits
    total = t + n
    gates = list(_shift_gates(eigenstate_prep, t, total))
    gates.extend(Gate("h", (i,)) for i in range(t))
    for i in range(t):
        power = 2 ** (t - 1 - i)
        if enhanced:
            ctrl = controlled_diag_circuit(target.d, power * delta_t, i, t)
            gates.extend(ctrl.gates)
        else:
            step = controlled_circuit(bind_circuit(target, None))
            remap = {0: i}
            for q in range(1, n + 1):
                remap[q] = t + q - 1
            for _ in range(power):
                for g in step.gates:
                    gates.append(
                        Gate(
                            g.kind,
                            tuple(remap[q] for q in g.targets),
                            angle=g.angle,
                            matrix=g.matrix,
                        )
                    )
    if enhanced:
        gates.extend(_shift_gates(bind_circuit(target.w, target.theta), t, total))
    gates.extend(_shift_gates(qft_circuit(t, inverse=True), 0, total))
    return Circuit(total, gates, 0)


def ideal_qpe_distribution(fraction: float, precision_bits: int) -> dict:
    """Closed-form register distribution for eigenphase 2 pi fraction."""
    t = precision_bits
    dim = 2**t
    out = {}
    for m in range(dim):
        delta = fraction - m / dim
        num = np.sin(np.pi * dim * delta)
        den = np.sin(np.pi * delta)
        p = 1.0 / dim**2 * (num / den) ** 2 if abs(den) > 1e-15 else 1.0
        out[bitstring_of(m, t)] = float(p)
    total = sum(out.values())
    return {b: p / total for b, p in out.items()}


def qpe(
    target,
    eigenstate_prep: Circuit,
    precision_bits: int,
    delta_t: float,
    shots: int | None = None,
    path: str = "pure",
    model: NoiseModel | None = None,
    seed: int = 0,
) -> QpeResult:
    if not 1 <= precision_bits <= 8:
        raise ValueError(f"precision_bits must be in [1, 8], got {precision_bits}")
    circ = qpe_circuit(target, eigenstate_prep, precision_bits, delta_t)
    t = precision_bits
    if path == "noisy":
        if model is None:
            raise ConfigError("noisy path needs a noise model")
        rho = noisy_circuit(from_pure(zero_state(circ.n_qubits)), circ, None, model)
        probs = readout_probabilities(rho, model)
    else:
        state = apply_circuit(zero_state(circ.n_qubits), circ)
        probs = np.abs(state.amplitudes) ** 2
    reg = probs.reshape(2**t, -1).sum(axis=1)
    if shots is not None:
        rng = np.random.default_rng(derive_seed(seed, "qpe"))
        draws = rng.multinomial(shots, reg / reg.sum())
        reg = draws / shots
    distribution = {
        bitstring_of(m, t): float(p) for m, p in enumerate(reg) if p > 0
    }
    fraction = _target_fraction(target, eigenstate_prep, delta_t)
    ideal = ideal_qpe_distribution(fraction, t)
    vd = variation_distance(distribution, ideal)
    return QpeResult(t, distribution, vd)


def _target_fraction(target, eigenstate_prep, delta_t) -> float:
    """True eigenphase fraction of the controlled step on the prepared state."""
    n = target.n_qubits
    prepared = apply_circuit(zero_state(n), bind_circuit(eigenstate_prep, None))
    if isinstance(target, FsvffAnsatz):
        idx = int(np.argmax(np.abs(prepared.amplitudes)))
        phi = phase_exponents(target.d)[idx] * delta_t
    else:
        stepped = apply_circuit(prepared, target)
        amp = complex(np.vdot(prepared.amplitudes, stepped.amplitudes))
        phi = float(np.angle(amp))
    return (phi / (2 * np.pi)) % 1.0


def qee(
    ansatz: FsvffAnsatz,
    basis_state: str,
    delta_t: float,
    shots: int | None = None,
    seed: int = 0,
) -> float:
    """Single-ancilla phase readout of <v_k|D|v_k>; returns the phase in
    (-pi, pi]."""
    n = ansatz.n_qubits
    prep = [Gate("x", (q + 1,)) for q, b in enumerate(basis_state) if b == "1"]
    ctrl = controlled_diag_circuit(ansatz.d, delta_t, 0, 1)
    base = prep + [Gate("h", (0,))] + list(ctrl.gates)
    re = _ancilla_expectation(
        Circuit(n + 1, base + [Gate("h", (0,))], 0), shots, derive_seed(seed, "re")
    )
    im = _ancilla_expectation(
        Circuit(
            n + 1,
            base + [Gate("phase", (0,), angle=-np.pi / 2), Gate("h", (0,))],
            0,
        ),
        shots,
        derive_seed(seed, "im"),
    )
    amp = np.hypot(re, im)
    if amp < 0.1:
        raise UnreliablePhaseError(
            f"Hadamard-test amplitude {amp:.3f} too small for a phase estimate"
        )
    return wrap_phase(float(np.arctan2(im, re)))


def _ancilla_expectation(circ: Circuit, shots, seed) -> float:
    state = apply_circuit(zero_state(circ.n_qubits), circ)
    if shots is None:
        probs = np.abs(state.amplitudes) ** 2
        half = len(probs) // 2
        return float(probs[:half].sum() - probs[half:].sum())
    counts = sample_counts(state, shots, seed)
    n0 = sum(c for b, c in counts.items() if b[0] == "0")
    return (2 * n0 - shots) / shots


def variation_distance(p: dict, q: dict) -> float:
    """(1/2) sum |p - q| over the union of supports."""
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)
