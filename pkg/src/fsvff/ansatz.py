"""The diagonal-form ansatz V = W(theta) D(gamma, dt) W(theta)^dag.

D is kept analytic: each entry of gamma multiplies a Z-string (given as an
amplitude-index bitmask) and is stored per unit time, so evolving N steps
just scales the accumulated phase by N * delta_t. `diag_circuit` realizes
the same operator as gates when an explicit circuit is needed.
"""

import dataclasses
from dataclasses import dataclass

import numpy as np

from .exceptions import ParseError, ShapeError
from .statevector import (
    Circuit,
    Gate,
    QuantumState,
    apply_circuit_inplace,
    dense_unitary,
)

GATE_DICTIONARY = ("rz", "rzz", "givens")

_ANGLE_PERIOD = {
    "rx": 4 * np.pi,
    "ry": 4 * np.pi,
    "rz": 4 * np.pi,
    "rzz": 4 * np.pi,
    "givens": 2 * np.pi,
    "phase": 2 * np.pi,
    "gphase": 2 * np.pi,
}
_IDENTITY_TOL = 1e-12


@dataclass(frozen=True)
class DiagonalAnsatz:
    n_qubits: int
    z_masks: tuple
    gammas: np.ndarray
    delta_t: float

    def __post_init__(self):
        object.__setattr__(self, "z_masks", tuple(int(m) for m in self.z_masks))
        object.__setattr__(self, "gammas", np.asarray(self.gammas, dtype=float))
        if len(self.z_masks) != len(self.gammas):
            raise ShapeError(
                f"{len(self.gammas)} gammas for {len(self.z_masks)} Z-strings"
            )
        for m in self.z_masks:
            if not 0 < m < 2**self.n_qubits:
                raise ShapeError(f"Z-mask {m:#b} outside {self.n_qubits} qubits")

    def with_gammas(self, gammas):
        return dataclasses.replace(self, gammas=np.asarray(gammas, dtype=float))


@dataclass(frozen=True)
class FsvffAnsatz:
    w: Circuit
    d: DiagonalAnsatz
    theta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "theta", np.asarray(self.theta, dtype=float))
        if self.w.n_params != len(self.theta):
            raise ShapeError(
                f"{len(self.theta)} thetas for {self.w.n_params} circuit parameters"
            )
        if self.w.n_qubits != self.d.n_qubits:
            raise ShapeError("W and D act on different qubit counts")

    @property
    def n_qubits(self):
        return self.w.n_qubits

    @property
    def gammas(self):
        return self.d.gammas

    def with_params(self, theta=None, gammas=None):
        out = self
        if theta is not None:
            out = dataclasses.replace(out, theta=np.asarray(theta, dtype=float))
        if gammas is not None:
            out = dataclasses.replace(out, d=out.d.with_gammas(gammas))
        return out


def mask_for_qubit(n: int, qubit: int) -> int:
    return 1 << (n - 1 - qubit)


def mask_qubits(n: int, mask: int):
    return tuple(q for q in range(n) if mask & (1 << (n - 1 - q)))


def phase_exponents(d: DiagonalAnsatz) -> np.ndarray:
    """Per-unit-time phase of each basis state: sum_q gamma_q (-1)^parity(b & mask_q)."""
    idx = np.arange(2**d.n_qubits, dtype=np.uint64)
    expo = np.zeros(len(idx))
    for mask, gamma in zip(d.z_masks, d.gammas):
        parity = np.bitwise_count(idx & np.uint64(mask)) & 1
        expo += gamma * np.where(parity, -1.0, 1.0)
    return expo


def diagonal_at_time(d: DiagonalAnsatz, t: float) -> np.ndarray:
    return np.exp(1j * t * phase_exponents(d))


def diagonal_unitary(d: DiagonalAnsatz, steps: int) -> np.ndarray:
    """Diagonal of D^steps; N-step scaling is exact phase multiplication."""
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")
    return diagonal_at_time(d, steps * d.delta_t)


def apply_v_time(
    ansatz: FsvffAnsatz, state: QuantumState, t: float, adjoint: bool = False
) -> QuantumState:
    """W diag(t) W^dag |state>, with diag conjugated when adjoint."""
    if state.n_qubits != ansatz.n_qubits:
        raise ShapeError(
            f"state has {state.n_qubits} qubits, ansatz {ansatz.n_qubits}"
        )
    out = state.copy()
    amps = out.amplitudes
    apply_circuit_inplace(amps, out.n_qubits, ansatz.w, ansatz.theta, adjoint=True)
    diag = diagonal_at_time(ansatz.d, t)
    amps *= diag.conj() if adjoint else diag
    apply_circuit_inplace(amps, out.n_qubits, ansatz.w, ansatz.theta, adjoint=False)
    return out


def apply_v(
    ansatz: FsvffAnsatz, state: QuantumState, steps: int, adjoint: bool = False
) -> QuantumState:
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")
    return apply_v_time(ansatz, state, steps * ansatz.d.delta_t, adjoint)


def dense_v(ansatz: FsvffAnsatz, steps: int = 1) -> np.ndarray:
    """Dense matrix of W D^steps W^dag."""
    wm = dense_unitary(ansatz.w, ansatz.theta)
    return (wm * diagonal_unitary(ansatz.d, steps)) @ wm.conj().T


def dense_v_time(ansatz: FsvffAnsatz, t: float) -> np.ndarray:
    wm = dense_unitary(ansatz.w, ansatz.theta)
    return (wm * diagonal_at_time(ansatz.d, t)) @ wm.conj().T


def hardware_xy_ansatz(delta_t: float = 0.5) -> FsvffAnsatz:
    """Two-qubit ansatz used on hardware: W = RZ, RY on qubit 0 then CNOT;
    D = one Z-string on qubit 0. Two thetas, one gamma."""
    w = Circuit(
        2,
        [
            Gate("rz", (0,), param_index=0),
            Gate("ry", (0,), param_index=1),
            Gate("cnot", (0, 1)),
        ],
        n_params=2,
    )
    d = DiagonalAnsatz(2, (mask_for_qubit(2, 0),), np.zeros(1), delta_t)
    return FsvffAnsatz(w, d, np.zeros(2))


def single_z_diagonal(n: int, delta_t: float) -> DiagonalAnsatz:
    """One Z-string per qubit, all gammas zero."""
    masks = tuple(mask_for_qubit(n, q) for q in range(n))
    return DiagonalAnsatz(n, masks, np.zeros(n), delta_t)


def layered_ansatz(n: int, layers: int, delta_t: float) -> FsvffAnsatz:
    """Hardware-efficient W: per layer RY+RZ on every qubit then a CNOT chain,
    closed by a final RY+RZ layer; D has one Z-string per qubit."""
    gates = []
    p = 0
    for _ in range(layers):
        for q in range(n):
            gates.append(Gate("ry", (q,), param_index=p))
            gates.append(Gate("rz", (q,), param_index=p + 1))
            p += 2
        for q in range(n - 1):
            gates.append(Gate("cnot", (q, q + 1)))
    for q in range(n):
        gates.append(Gate("ry", (q,), param_index=p))
        gates.append(Gate("rz", (q,), param_index=p + 1))
        p += 2
    w = Circuit(n, gates, n_params=p)
    return FsvffAnsatz(w, single_z_diagonal(n, delta_t), np.zeros(p))


def diag_circuit(d: DiagonalAnsatz, t: float) -> Circuit:
    """Gate realization of diag(t): one Z-string rotation per gamma term.

    Gate count is independent of t, which is what makes fast-forwarding a
    constant-depth operation."""
    gates = []
    n = d.n_qubits
    for mask, gamma in zip(d.z_masks, d.gammas):
        qs = mask_qubits(n, mask)
        angle = -2.0 * gamma * t
        for a, b in zip(qs, qs[1:]):
            gates.append(Gate("cnot", (a, b)))
        gates.append(Gate("rz", (qs[-1],), angle=angle))
        for a, b in reversed(list(zip(qs, qs[1:]))):
            gates.append(Gate("cnot", (a, b)))
    return Circuit(n, gates, 0)


def _random_targets(kind, n, rng, nearest_neighbor_only):
    if kind == "rz":
        return (int(rng.integers(0, n)),)
    if nearest_neighbor_only:
        a = int(rng.integers(0, n - 1))
        return (a, a + 1)
    pair = rng.choice(n, size=2, replace=False)
    return (int(pair[0]), int(pair[1]))


def insert_identity_gates(
    w: Circuit,
    positions,
    kinds,
    rng_seed: int,
    nearest_neighbor_only: bool = False,
) -> Circuit:
    """Insert parameterized gates at the given positions, angles starting at 0.

    New parameter slots are appended after the existing ones in position
    order; the realized unitary is unchanged until those angles move."""
    positions = list(positions)
    kinds = list(kinds)
    if len(positions) != len(kinds):
        raise ShapeError("positions and kinds must have equal length")
    for pos in positions:
        if not 0 <= pos <= len(w.gates):
            raise IndexError(f"insert position {pos} outside [0, {len(w.gates)}]")
    rng = np.random.default_rng(rng_seed)
    new_gates = [
        Gate(kind, _random_targets(kind, w.n_qubits, rng, nearest_neighbor_only),
             param_index=w.n_params + i)
        for i, kind in enumerate(kinds)
    ]
    gates = list(w.gates)
    order = sorted(range(len(positions)), key=lambda i: positions[i], reverse=True)
    for i in order:
        gates.insert(positions[i], new_gates[i])
    return Circuit(w.n_qubits, gates, w.n_params + len(new_gates))


def remove_gate(w: Circuit, index: int) -> Circuit:
    """Drop one gate and compact the parameter indices above it."""
    if not 0 <= index < len(w.gates):
        raise IndexError(f"gate index {index} outside [0, {len(w.gates)})")
    removed = w.gates[index]
    gates = []
    for i, g in enumerate(w.gates):
        if i == index:
            continue
        if (
            removed.param_index is not None
            and g.param_index is not None
            and g.param_index > removed.param_index
        ):
            g = dataclasses.replace(g, param_index=g.param_index - 1)
        gates.append(g)
    n_params = w.n_params - (1 if removed.param_index is not None else 0)
    return Circuit(w.n_qubits, gates, n_params)


def _wrapped(angle, period):
    return (angle + period / 2.0) % period - period / 2.0


def _compress_resolved(entries):
    """entries: [(gate, angle_or_None)] with parametric angles resolved.
    Returns the compressed list after merge/cancel passes."""
    changed = True
    while changed:
        changed = False
        out = []
        for gate, angle in entries:
            if out:
                prev_gate, prev_angle = out[-1]
                if (
                    gate.kind in _ANGLE_PERIOD
                    and prev_gate.kind == gate.kind
                    and prev_gate.targets == gate.targets
                ):
                    out[-1] = (prev_gate, prev_angle + angle)
                    changed = True
                    continue
                if (
                    gate.kind in ("h", "x", "cnot")
                    and prev_gate.kind == gate.kind
                    and prev_gate.targets == gate.targets
                ):
                    out.pop()
                    changed = True
                    continue
            out.append((gate, angle))
        pruned = [
            (g, a)
            for g, a in out
            if not (
                g.kind in _ANGLE_PERIOD
                and abs(_wrapped(a, _ANGLE_PERIOD[g.kind])) < _IDENTITY_TOL
            )
        ]
        if len(pruned) != len(out):
            changed = True
        entries = pruned
    return entries


def compress_adjacent(w: Circuit, theta=None):
    """Merge consecutive same-kind same-target rotations, drop identity-angle
    gates and involution pairs.

    With `theta` given, parametric gates participate too; the result is then
    `(circuit, theta)` with freshly indexed parameters."""
    if theta is None:
        entries = []
        for g in w.gates:
            if g.kind in _ANGLE_PERIOD and g.param_index is not None:
                entries.append((g, None))
            else:
                entries.append((g, g.angle if g.kind in _ANGLE_PERIOD else None))
        # parametric gates are opaque without values: compress fixed runs only
        out = []
        run = []
        for g, a in entries:
            if a is None and g.kind in _ANGLE_PERIOD:
                out.extend(_compress_resolved(run))
                out.append((g, None))
                run = []
            else:
                run.append((g, a if a is not None else None))
        out.extend(_compress_resolved(run))
        gates = []
        for g, a in out:
            if g.kind in _ANGLE_PERIOD and g.param_index is None:
                gates.append(dataclasses.replace(g, angle=a))
            else:
                gates.append(g)
        return Circuit(w.n_qubits, gates, w.n_params)
    theta = np.asarray(theta, dtype=float)
    entries = []
    for g in w.gates:
        if g.kind in _ANGLE_PERIOD:
            a = g.angle if g.angle is not None else float(theta[g.param_index])
            entries.append((g, a))
        else:
            entries.append((g, None))
    compressed = _compress_resolved(entries)
    gates = []
    values = []
    for g, a in compressed:
        if g.kind in _ANGLE_PERIOD:
            gates.append(
                dataclasses.replace(g, param_index=len(values), angle=None)
            )
            values.append(a)
        else:
            gates.append(g)
    return Circuit(w.n_qubits, gates, len(values)), np.array(values)


def format_ansatz(ansatz: FsvffAnsatz) -> str:
    """Line-oriented text form: gates, THETA values, GAMMA block, DELTA_T."""
    n = ansatz.n_qubits
    lines = [f"QUBITS {n}"]
    for g in ansatz.w.gates:
        targets = ",".join(str(t + 1) for t in g.targets)
        if g.kind == "unitary":
            raise ParseError("explicit-matrix gates are not serializable")
        if g.param_index is not None:
            lines.append(f"{g.kind.upper()} {targets} p{g.param_index}")
        elif g.angle is not None:
            lines.append(f"{g.kind.upper()} {targets} {float(g.angle)!r}")
        else:
            lines.append(f"{g.kind.upper()} {targets}")
    lines.append("THETA " + " ".join(repr(float(v)) for v in ansatz.theta))
    lines.append("GAMMA")
    for mask, gamma in zip(ansatz.d.z_masks, ansatz.d.gammas):
        lines.append(f"{format(mask, f'0{n}b')} {float(gamma)!r}")
    lines.append(f"DELTA_T {float(ansatz.d.delta_t)!r}")
    return "\n".join(lines) + "\n"


def parse_ansatz(text: str) -> FsvffAnsatz:
    n = None
    gates = []
    theta = []
    masks = []
    gammas = []
    delta_t = None
    in_gamma = False
    n_params = 0
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        head = parts[0].upper()
        if head == "QUBITS":
            n = int(parts[1])
            continue
        if head == "THETA":
            theta = [float(v) for v in parts[1:]]
            continue
        if head == "GAMMA":
            in_gamma = True
            continue
        if head == "DELTA_T":
            delta_t = float(parts[1])
            in_gamma = False
            continue
        if in_gamma:
            if len(parts) != 2:
                raise ParseError(f"line {lineno}: expected `mask value`")
            masks.append(int(parts[0], 2))
            gammas.append(float(parts[1]))
            continue
        if n is None:
            raise ParseError(f"line {lineno}: QUBITS must come first")
        kind = head.lower()
        targets = tuple(int(t) - 1 for t in parts[1].split(",")) if len(parts) > 1 else ()
        param_index = None
        angle = None
        if len(parts) > 2:
            token = parts[2]
            if token.startswith("p"):
                param_index = int(token[1:])
                n_params = max(n_params, param_index + 1)
            else:
                angle = float(token)
        try:
            gates.append(Gate(kind, targets, param_index=param_index, angle=angle))
        except Exception as exc:
            raise ParseError(f"line {lineno}: {exc}") from exc
    if n is None or delta_t is None:
        raise ParseError("ansatz text needs QUBITS and DELTA_T lines")
    w = Circuit(n, gates, max(n_params, len(theta)))
    d = DiagonalAnsatz(n, tuple(masks), np.array(gammas), delta_t)
    return FsvffAnsatz(w, d, np.array(theta, dtype=float))
