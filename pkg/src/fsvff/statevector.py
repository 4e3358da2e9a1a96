"""Dense pure-state simulator.

Conventions (fixed package-wide):
  * qubit 0 is the leftmost character of a bitstring and the most
    significant bit of the amplitude index, so "10" -> index 0b10;
  * rotations follow R(theta) = exp(-i theta sigma / 2), and
    RZZ(theta) = exp(-i theta Z(x)Z / 2);
  * GIVENS(theta) is the identity on {|00>,|11>} and the rotation
    [[cos, -sin], [sin, cos]] on the ordered pair (|01>, |10>);
  * PHASE(theta) multiplies the all-ones substate of its targets by
    e^{i theta}; GPHASE(theta) is the global phase e^{i theta}.
"""

from dataclasses import dataclass, field

import numpy as np

from . import backend
from .exceptions import BindingError, ParseError, ShapeError, SizeError

MAX_QUBITS = 24
MAX_DENSE_QUBITS = 12

ROTATION_KINDS = ("rx", "ry", "rz", "rzz")
PARAMETRIC_KINDS = ROTATION_KINDS + ("givens", "phase", "gphase")
FIXED_KINDS = ("cnot", "h", "x")

_INV_SQRT2 = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class Gate:
    """One circuit element; angle comes from `angle` or `params[param_index]`."""

    kind: str
    targets: tuple
    param_index: int | None = None
    angle: float | None = None
    matrix: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        if self.kind in PARAMETRIC_KINDS:
            if (self.param_index is None) == (self.angle is None):
                raise BindingError(
                    f"{self.kind} gate needs exactly one of param_index/angle"
                )
        elif self.kind in FIXED_KINDS:
            if self.param_index is not None or self.angle is not None:
                raise BindingError(f"{self.kind} gate takes no parameter")
        elif self.kind == "unitary":
            if self.matrix is None:
                raise BindingError("unitary gate needs an explicit matrix")
            dim = 2 ** len(self.targets)
            if self.matrix.shape != (dim, dim):
                raise ShapeError(
                    f"unitary matrix shape {self.matrix.shape} does not match "
                    f"{len(self.targets)} targets"
                )
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(set(self.targets)) != len(self.targets):
            raise ShapeError(f"repeated target in {self.targets}")
        expected = {
            "cnot": 2,
            "rzz": 2,
            "givens": 2,
            "h": 1,
            "x": 1,
            "rx": 1,
            "ry": 1,
            "rz": 1,
            "gphase": 0,
        }.get(self.kind)
        if expected is not None and len(self.targets) != expected:
            raise ShapeError(
                f"{self.kind} gate expects {expected} targets, got {len(self.targets)}"
            )
        if self.kind == "phase" and not self.targets:
            raise ShapeError("phase gate needs at least one target")


@dataclass(frozen=True, eq=False)
class Circuit:
    n_qubits: int
    gates: tuple = ()
    n_params: int = 0

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if any(t >= self.n_qubits or t < 0 for t in g.targets):
                raise ShapeError(
                    f"gate targets {g.targets} outside {self.n_qubits} qubits"
                )
            if g.param_index is not None and not (0 <= g.param_index < self.n_params):
                raise BindingError(
                    f"param index {g.param_index} outside [0, {self.n_params})"
                )

    def __len__(self):
        return len(self.gates)


@dataclass(eq=False)
class QuantumState:
    n_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def copy(self):
        return QuantumState(self.n_qubits, self.amplitudes.copy())

    def norm(self):
        return float(np.linalg.norm(self.amplitudes))


def zero_state(n: int) -> QuantumState:
    """|0...0> on n qubits."""
    if not 1 <= n <= MAX_QUBITS:
        raise SizeError(f"qubit count {n} outside [1, {MAX_QUBITS}]")
    amps = np.zeros(2**n, dtype=np.complex128)
    amps[0] = 1.0
    return QuantumState(n, amps)


def basis_state(bits: str) -> QuantumState:
    """Computational basis state from a bitstring, leftmost bit = qubit 0."""
    if not bits:
        raise ParseError("empty bitstring")
    if set(bits) - {"0", "1"}:
        raise ParseError(f"bitstring {bits!r} has characters outside {{0,1}}")
    state = zero_state(len(bits))
    state.amplitudes[0] = 0.0
    state.amplitudes[int(bits, 2)] = 1.0
    return state


def index_of(bits: str) -> int:
    return int(bits, 2)


def bitstring_of(index: int, n: int) -> str:
    return format(index, f"0{n}b")


def resolve_angle(gate: Gate, params) -> float:
    if gate.angle is not None:
        return float(gate.angle)
    if params is None or gate.param_index >= len(params):
        raise BindingError(
            f"cannot resolve parameter {gate.param_index} for {gate.kind} gate"
        )
    return float(params[gate.param_index])


def gate_matrix(gate: Gate, params=None, adjoint: bool = False) -> np.ndarray:
    """Dense matrix of one gate, 2^k x 2^k for k targets."""
    kind = gate.kind
    if kind == "unitary":
        return gate.matrix.conj().T if adjoint else gate.matrix
    if kind == "h":
        return np.array([[1, 1], [1, -1]], dtype=np.complex128) * _INV_SQRT2
    if kind == "x":
        return np.array([[0, 1], [1, 0]], dtype=np.complex128)
    if kind == "cnot":
        return np.array(
            [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]],
            dtype=np.complex128,
        )
    theta = resolve_angle(gate, params)
    if adjoint:
        theta = -theta
    half = theta / 2.0
    c, s = np.cos(half), np.sin(half)
    if kind == "rx":
        return np.array([[c, -1j * s], [-1j * s, c]])
    if kind == "ry":
        return np.array([[c, -s], [s, c]], dtype=np.complex128)
    if kind == "rz":
        return np.array([[np.exp(-1j * half), 0], [0, np.exp(1j * half)]])
    if kind == "rzz":
        e_m, e_p = np.exp(-1j * half), np.exp(1j * half)
        return np.diag([e_m, e_p, e_p, e_m]).astype(np.complex128)
    if kind == "givens":
        ct, st = np.cos(theta), np.sin(theta)
        m = np.eye(4, dtype=np.complex128)
        m[1, 1] = ct
        m[1, 2] = -st
        m[2, 1] = st
        m[2, 2] = ct
        return m
    if kind == "phase":
        dim = 2 ** len(gate.targets)
        m = np.eye(dim, dtype=np.complex128)
        m[-1, -1] = np.exp(1j * theta)
        return m
    if kind == "gphase":
        return np.array([[np.exp(1j * theta)]])
    raise ValueError(f"unknown gate kind {kind!r}")


def gate_matrix_derivative(gate: Gate, params=None) -> np.ndarray:
    """d(gate matrix)/d(angle) at the resolved angle."""
    theta = resolve_angle(gate, params)
    half = theta / 2.0
    c, s = np.cos(half), np.sin(half)
    kind = gate.kind
    if kind == "rx":
        return 0.5 * np.array([[-s, -1j * c], [-1j * c, -s]])
    if kind == "ry":
        return 0.5 * np.array([[-s, -c], [c, -s]], dtype=np.complex128)
    if kind == "rz":
        e_m, e_p = np.exp(-1j * half), np.exp(1j * half)
        return 0.5 * np.diag([-1j * e_m, 1j * e_p])
    if kind == "rzz":
        e_m, e_p = np.exp(-1j * half), np.exp(1j * half)
        return 0.5 * np.diag([-1j * e_m, 1j * e_p, 1j * e_p, -1j * e_m])
    if kind == "givens":
        ct, st = np.cos(theta), np.sin(theta)
        m = np.zeros((4, 4), dtype=np.complex128)
        m[1, 1] = -st
        m[1, 2] = -ct
        m[2, 1] = ct
        m[2, 2] = -st
        return m
    if kind == "phase":
        dim = 2 ** len(gate.targets)
        m = np.zeros((dim, dim), dtype=np.complex128)
        m[-1, -1] = 1j * np.exp(1j * theta)
        return m
    if kind == "gphase":
        return np.array([[1j * np.exp(1j * theta)]])
    raise ValueError(f"no angle derivative for {kind!r} gates")


def _apply_gate_inplace(amps, n, gate, params, adjoint=False):
    kind = gate.kind
    if kind == "gphase":
        theta = resolve_angle(gate, params)
        amps *= np.exp(1j * (-theta if adjoint else theta))
        return
    if kind == "cnot":
        backend.apply_cnot(amps, n, gate.targets[0], gate.targets[1])
        return
    m = gate_matrix(gate, params, adjoint)
    k = len(gate.targets)
    if k == 1:
        backend.apply_1q(amps, n, gate.targets[0], m)
    elif k == 2:
        backend.apply_2q(amps, n, gate.targets[0], gate.targets[1], m)
    else:
        backend.apply_kq(amps, n, gate.targets, m)


def apply_gate(state: QuantumState, gate: Gate, params=None) -> QuantumState:
    """New state with the gate's unitary applied on its target qubits."""
    if any(t >= state.n_qubits for t in gate.targets):
        raise ShapeError(f"gate targets {gate.targets} exceed {state.n_qubits} qubits")
    out = state.copy()
    _apply_gate_inplace(out.amplitudes, out.n_qubits, gate, params)
    return out


def apply_circuit_inplace(amps, n, circuit, params=None, adjoint=False):
    if params is not None and len(params) != circuit.n_params:
        raise BindingError(
            f"parameter vector length {len(params)} != n_params {circuit.n_params}"
        )
    if params is None and circuit.n_params:
        raise BindingError(f"circuit needs {circuit.n_params} parameters, got none")
    gates = reversed(circuit.gates) if adjoint else circuit.gates
    for g in gates:
        kind = g.kind
        if kind == "gphase":
            theta = resolve_angle(g, params)
            amps *= np.exp(1j * (-theta if adjoint else theta))
            continue
        if kind == "cnot":
            backend.apply_cnot(amps, n, g.targets[0], g.targets[1])
            continue
        m = gate_matrix(g, params, adjoint)
        k = len(g.targets)
        if k == 1:
            backend.apply_1q(amps, n, g.targets[0], m)
        elif k == 2:
            backend.apply_2q(amps, n, g.targets[0], g.targets[1], m)
        else:
            backend.apply_kq(amps, n, g.targets, m)


def apply_circuit(
    state: QuantumState, circuit: Circuit, params=None, adjoint: bool = False
) -> QuantumState:
    """Apply gates in order; `adjoint` reverses the order and daggers each gate."""
    if state.n_qubits != circuit.n_qubits:
        raise ShapeError(
            f"state has {state.n_qubits} qubits, circuit {circuit.n_qubits}"
        )
    out = state.copy()
    apply_circuit_inplace(out.amplitudes, out.n_qubits, circuit, params, adjoint)
    return out


def inner_product(a: QuantumState, b: QuantumState) -> complex:
    """<a|b>."""
    if a.n_qubits != b.n_qubits:
        raise ShapeError(f"qubit counts differ: {a.n_qubits} vs {b.n_qubits}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def overlap_squared(a: QuantumState, b: QuantumState) -> float:
    return float(abs(inner_product(a, b)) ** 2)


def sample_counts(state: QuantumState, shots: int, seed: int) -> dict:
    """Measurement counts in the computational basis, deterministic per seed."""
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    probs = np.abs(state.amplitudes) ** 2
    probs = probs / probs.sum()
    rng = np.random.default_rng(seed)
    draws = rng.multinomial(shots, probs)
    n = state.n_qubits
    return {
        bitstring_of(i, n): int(c) for i, c in enumerate(draws) if c
    }


def _apply_matrix_block(m, targets, arr, n):
    """Apply a small matrix on the row-index qubits of a (2^n, cols) array."""
    k = len(targets)
    v = arr.reshape((2,) * n + (-1,))
    v = np.moveaxis(v, targets, range(k))
    shape = v.shape
    block = m @ v.reshape(2**k, -1)
    v = np.moveaxis(block.reshape(shape), range(k), targets)
    return v.reshape(2**n, -1)


def dense_unitary(circuit: Circuit, params=None) -> np.ndarray:
    """Full 2^n x 2^n matrix of the circuit."""
    n = circuit.n_qubits
    if n > MAX_DENSE_QUBITS:
        raise SizeError(f"dense unitary limited to {MAX_DENSE_QUBITS} qubits, got {n}")
    if params is not None and len(params) != circuit.n_params:
        raise BindingError(
            f"parameter vector length {len(params)} != n_params {circuit.n_params}"
        )
    if params is None and circuit.n_params:
        raise BindingError(f"circuit needs {circuit.n_params} parameters, got none")
    u = np.eye(2**n, dtype=np.complex128)
    for g in circuit.gates:
        if g.kind == "gphase":
            u = u * np.exp(1j * resolve_angle(g, params))
            continue
        m = gate_matrix(g, params)
        u = _apply_matrix_block(m, g.targets, u, n)
    return u


def embed_unitary(m: np.ndarray, targets, n: int) -> np.ndarray:
    """Small unitary on `targets` as a full 2^n x 2^n matrix."""
    return _apply_matrix_block(m, tuple(targets), np.eye(2**n, dtype=np.complex128), n)


def bind_circuit(circuit: Circuit, params) -> Circuit:
    """Resolve every parameterized gate to a fixed angle."""
    gates = []
    for g in circuit.gates:
        if g.param_index is not None:
            gates.append(
                Gate(g.kind, g.targets, angle=resolve_angle(g, params))
            )
        else:
            gates.append(g)
    return Circuit(circuit.n_qubits, gates, 0)


def adjoint_circuit(circuit: Circuit) -> Circuit:
    """Explicit dagger of a fixed-angle circuit: reversed order, each gate
    inverted."""
    gates = []
    for g in reversed(circuit.gates):
        if g.kind in ("h", "x", "cnot"):
            gates.append(g)
        elif g.kind == "unitary":
            gates.append(Gate("unitary", g.targets, matrix=g.matrix.conj().T))
        else:
            if g.param_index is not None:
                raise BindingError("bind parameters before taking the adjoint")
            gates.append(Gate(g.kind, g.targets, angle=-g.angle))
    return Circuit(circuit.n_qubits, gates, 0)
