"""Density-matrix simulation with Kraus channels.

Channels follow the gates they tag (1- and 2-qubit arities separately);
an optional all-qubit depolarizing channel can run after every gate, and
readout bit-flips apply only when probabilities are read out.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .ansatz import FsvffAnsatz, diag_circuit
from .cost import TrainingSet, u_power_states
from .exceptions import ChannelError, ConfigError, ShapeError, SizeError
from .statevector import (
    Circuit,
    QuantumState,
    adjoint_circuit,
    bind_circuit,
    embed_unitary,
    gate_matrix,
)

MAX_DENSITY_QUBITS = 8

_P1 = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


@dataclass
class DensityMatrix:
    n_qubits: int
    matrix: np.ndarray = field(repr=False)

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)

    def copy(self):
        return DensityMatrix(self.n_qubits, self.matrix.copy())


def from_pure(state: QuantumState) -> DensityMatrix:
    if state.n_qubits > MAX_DENSITY_QUBITS:
        raise SizeError(
            f"density path limited to {MAX_DENSITY_QUBITS} qubits, got {state.n_qubits}"
        )
    a = state.amplitudes
    return DensityMatrix(state.n_qubits, np.outer(a, a.conj()))


def depolarizing_kraus(p: float, n_qubits: int = 1) -> list:
    """rho -> (1-p) rho + p I/2^k: uniform over all 4^k Pauli products with
    the identity keeping the extra 1-p."""
    if not 0 <= p <= 1:
        raise ChannelError(f"probability {p} outside [0, 1]")
    labels = ["I", "X", "Y", "Z"]
    ops = []
    import itertools

    strings = list(itertools.product(labels, repeat=n_qubits))
    d2 = len(strings)
    for s in strings:
        k = np.array([[1.0]], dtype=np.complex128)
        for letter in s:
            k = np.kron(k, _P1[letter])
        weight = p / d2 + ((1.0 - p) if all(c == "I" for c in s) else 0.0)
        ops.append(np.sqrt(weight) * k)
    return ops


def bitflip_kraus(p: float) -> list:
    if not 0 <= p <= 1:
        raise ChannelError(f"probability {p} outside [0, 1]")
    return [np.sqrt(1 - p) * _P1["I"], np.sqrt(p) * _P1["X"]]


def amplitude_damping_kraus(gamma: float) -> list:
    if not 0 <= gamma <= 1:
        raise ChannelError(f"probability {gamma} outside [0, 1]")
    k0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]], dtype=np.complex128)
    k1 = np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=np.complex128)
    return [k0, k1]


@dataclass
class NoiseModel:
    per_gate: dict = field(default_factory=dict)  # arity -> Kraus list
    measurement_flip: float = 0.0
    per_qubit_idle: list | None = None
    global_depolarizing: float = 0.0

    def __post_init__(self):
        for arity, kraus in self.per_gate.items():
            _check_completeness(kraus, 2**arity)
        if self.per_qubit_idle is not None:
            _check_completeness(self.per_qubit_idle, 2)


def _check_completeness(kraus, dim):
    acc = np.zeros((dim, dim), dtype=np.complex128)
    for k in kraus:
        if k.shape != (dim, dim):
            raise ChannelError(f"Kraus operator shape {k.shape}, expected {(dim, dim)}")
        acc += k.conj().T @ k
    if np.abs(acc - np.eye(dim)).max() > 1e-10:
        raise ChannelError("Kraus operators do not sum to identity")


def default_model() -> NoiseModel:
    """Demo noise: depolarizing 1e-3 per 1-qubit gate, 1e-2 per 2-qubit gate,
    1% readout flips."""
    return NoiseModel(
        per_gate={1: depolarizing_kraus(1e-3, 1), 2: depolarizing_kraus(1e-2, 2)},
        measurement_flip=0.01,
    )


def zero_model() -> NoiseModel:
    return NoiseModel()


def model_from_file(path) -> NoiseModel:
    """JSON noise model: named presets with probabilities, or explicit Kraus
    matrices as nested [re, im] pairs."""
    with open(path) as fh:
        spec = json.load(fh)
    return model_from_dict(spec)


def model_from_dict(spec: dict) -> NoiseModel:
    per_gate = {}
    if "preset" in spec:
        name = spec["preset"]
        if name == "depolarizing":
            if "p1" in spec:
                per_gate[1] = depolarizing_kraus(spec["p1"], 1)
            if "p2" in spec:
                per_gate[2] = depolarizing_kraus(spec["p2"], 2)
        elif name == "bitflip":
            per_gate[1] = bitflip_kraus(spec.get("p1", 0.0))
        elif name == "amplitude_damping":
            per_gate[1] = amplitude_damping_kraus(spec.get("gamma", 0.0))
        elif name != "none":
            raise ConfigError(f"unknown noise preset {name!r}")
    for key, arity in (("kraus1", 1), ("kraus2", 2)):
        if key in spec:
            ops = [
                np.array([[complex(re, im) for re, im in row] for row in op])
                for op in spec[key]
            ]
            per_gate[arity] = ops
    return NoiseModel(
        per_gate=per_gate,
        measurement_flip=spec.get("measurement_flip", 0.0),
        global_depolarizing=spec.get("global_depolarizing", 0.0),
    )


def apply_channel(rho: DensityMatrix, kraus, targets) -> DensityMatrix:
    """rho <- sum_K K rho K^dag on the target qubits."""
    dim = 2 ** len(targets)
    _check_completeness(kraus, dim)
    out = np.zeros_like(rho.matrix)
    for k in kraus:
        kf = embed_unitary(k, targets, rho.n_qubits)
        out += kf @ rho.matrix @ kf.conj().T
    return DensityMatrix(rho.n_qubits, out)


def _global_depolarize(mat, p, n):
    return (1 - p) * mat + p * np.trace(mat).real * np.eye(2**n) / 2**n


def noisy_circuit(
    rho: DensityMatrix, circuit: Circuit, params=None, model: NoiseModel | None = None
) -> DensityMatrix:
    """Unitary conjugation per gate, each followed by its arity's channel."""
    if rho.n_qubits != circuit.n_qubits:
        raise ShapeError("density matrix and circuit qubit counts differ")
    if rho.n_qubits > MAX_DENSITY_QUBITS:
        raise SizeError(f"density path limited to {MAX_DENSITY_QUBITS} qubits")
    model = model or zero_model()
    mat = rho.matrix.copy()
    n = rho.n_qubits
    for g in circuit.gates:
        if g.kind == "gphase":
            continue  # global phase: no effect on rho, no gate noise attached
        gm = gate_matrix(g, params)
        gf = embed_unitary(gm, g.targets, n)
        mat = gf @ mat @ gf.conj().T
        kraus = model.per_gate.get(len(g.targets))
        if kraus is not None:
            state = DensityMatrix(n, mat)
            mat = apply_channel(state, kraus, g.targets).matrix
        if model.global_depolarizing:
            mat = _global_depolarize(mat, model.global_depolarizing, n)
    return DensityMatrix(n, mat)


def readout_probabilities(rho: DensityMatrix, model: NoiseModel | None = None):
    """Diagonal populations pushed through independent per-qubit bit flips."""
    probs = np.real(np.diag(rho.matrix)).copy()
    f = model.measurement_flip if model else 0.0
    if f:
        n = rho.n_qubits
        conf = np.array([[1 - f, f], [f, 1 - f]])
        t = probs.reshape((2,) * n)
        for axis in range(n):
            t = np.moveaxis(
                np.tensordot(conf, np.moveaxis(t, axis, 0), axes=(1, 0)), 0, axis
            )
        probs = t.reshape(-1)
    return probs


def ansatz_step_circuit(ansatz: FsvffAnsatz, t: float) -> Circuit:
    """Explicit gates for W diag(t) W^dag."""
    w_bound = bind_circuit(ansatz.w, ansatz.theta)
    gates = (
        list(adjoint_circuit(w_bound).gates)
        + list(diag_circuit(ansatz.d, t).gates)
        + list(w_bound.gates)
    )
    return Circuit(ansatz.n_qubits, gates, 0)


def echo_circuit(ts: TrainingSet, ansatz: FsvffAnsatz, k: int) -> Circuit:
    """prep, U^k, V(k)^dag, prep^dag: the all-zeros return probability of
    this circuit is the k-th cost term."""
    if not isinstance(ts.u_step, Circuit):
        raise ConfigError("noisy cost needs the step unitary as a circuit")
    if ts.preparation is None:
        raise ConfigError("noisy cost needs a preparation circuit")
    n = ts.psi0.n_qubits
    gates = list(ts.preparation.gates)
    u_bound = bind_circuit(ts.u_step, None)
    for _ in range(k):
        gates.extend(u_bound.gates)
    gates.extend(ansatz_step_circuit(ansatz, -k * ansatz.d.delta_t).gates)
    gates.extend(adjoint_circuit(bind_circuit(ts.preparation, None)).gates)
    return Circuit(n, gates, 0)


def noisy_cost(
    ts: TrainingSet,
    ansatz: FsvffAnsatz,
    model: NoiseModel,
    cost_variant: str = "global",
) -> float:
    """Cost with every echo circuit run through the noise model."""
    n = ts.psi0.n_qubits
    rho0 = from_pure(QuantumState(n, _zero_vec(n)))
    terms = []
    for k in range(1, ts.n_eig + 1):
        circ = echo_circuit(ts, ansatz, k)
        rho = noisy_circuit(rho0, circ, None, model)
        probs = readout_probabilities(rho, model)
        if cost_variant == "global":
            terms.append(probs[0])
        elif cost_variant == "local":
            t = probs.reshape((2,) * n)
            per_qubit = [
                t.sum(axis=tuple(a for a in range(n) if a != j))[0]
                for j in range(n)
            ]
            terms.append(float(np.mean(per_qubit)))
        else:
            raise ConfigError(f"no noisy path for cost variant {cost_variant!r}")
    return float(1.0 - np.mean(terms))


def _zero_vec(n):
    v = np.zeros(2**n, dtype=np.complex128)
    v[0] = 1.0
    return v


@dataclass
class SweepResult:
    grid: np.ndarray
    clean: np.ndarray
    noisy: np.ndarray

    @property
    def argmin_clean(self) -> float:
        return float(self.grid[int(np.argmin(self.clean))])

    @property
    def argmin_noisy(self) -> float:
        return float(self.grid[int(np.argmin(self.noisy))])


def resilience_sweep(ts, ansatz_family, model: NoiseModel, grid) -> SweepResult:
    """Clean vs noisy cost along a 1-parameter ansatz slice."""
    from .cost import cost_global

    grid = np.asarray(grid, dtype=float)
    if len(grid) < 2:
        raise ValueError("grid needs at least 2 points")
    clean = np.empty(len(grid))
    noisy = np.empty(len(grid))
    for i, g in enumerate(grid):
        a = ansatz_family(g)
        clean[i] = cost_global(ts, a).value
        noisy[i] = noisy_cost(ts, a, model)
    return SweepResult(grid, clean, noisy)
