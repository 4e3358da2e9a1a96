"""Training objectives and their analytic gradients.

The global cost averages Loschmidt-echo overlaps between k Trotter steps
and k applications of the trained V over k = 1..n_eig; the local variant
measures one qubit at a time and sandwiches the global one; the randomized
variant draws evolution times from a biased continuum instead of a step
grid. theta gradients use the two-sided parameter-shift rule (pi/2 shifts
applied separately to the left and right W); gamma gradients shift the
accumulated diagonal angle once per term, picking up the k factor.
"""

from dataclasses import dataclass

import numpy as np

from .ansatz import FsvffAnsatz, diagonal_at_time
from .exceptions import ConfigError, ShapeError, UnsupportedParameterError
from .gramian import evolve_step
from .statevector import (
    Circuit,
    Gate,
    QuantumState,
    apply_circuit,
    inner_product,
    overlap_squared,
    sample_counts,
    zero_state,
)
from .utils import derive_seed, rng_stream

_SQRT2 = np.sqrt(2.0)
# one-sided shift rules: [(angle shift, coefficient)]
_PAULI_SHIFTS = ((np.pi / 2, 0.5), (-np.pi / 2, -0.5))
_GIVENS_SHIFTS = (
    (np.pi / 4, 1.0),
    (-np.pi / 4, -1.0),
    (np.pi / 2, (1.0 - _SQRT2) / 2.0),
    (-np.pi / 2, -(1.0 - _SQRT2) / 2.0),
)
_SHIFT_RULES = {
    "rx": _PAULI_SHIFTS,
    "ry": _PAULI_SHIFTS,
    "rz": _PAULI_SHIFTS,
    "rzz": _PAULI_SHIFTS,
    "givens": _GIVENS_SHIFTS,
}


@dataclass
class TrainingSet:
    """Initial state, one-step unitary, subspace dimension, optional prep
    circuit (needed for shot-mode Loschmidt circuits) and optional
    continuous-time oracle t -> dense U(t) (needed for the randomized cost
    and exact-evolution references). delta_t is the step duration of
    u_step."""

    psi0: QuantumState
    u_step: object  # Circuit or dense ndarray
    n_eig: int
    preparation: Circuit | None = None
    continuous: object = None
    delta_t: float | None = None

    def __post_init__(self):
        if self.n_eig < 1:
            raise ValueError(f"n_eig must be >= 1, got {self.n_eig}")
        if isinstance(self.u_step, Circuit):
            if self.u_step.n_qubits != self.psi0.n_qubits:
                raise ShapeError("u_step and psi0 qubit counts differ")
        else:
            self.u_step = np.asarray(self.u_step)
            if self.u_step.shape != (len(self.psi0.amplitudes),) * 2:
                raise ShapeError("dense u_step does not match psi0 dimension")
        if self.preparation is not None:
            prepared = apply_circuit(zero_state(self.psi0.n_qubits), self.preparation)
            if (
                np.abs(prepared.amplitudes - self.psi0.amplitudes).max() > 1e-10
            ):
                raise ShapeError("preparation circuit does not produce psi0")


def preparation_for_bits(bits: str) -> Circuit:
    """X gates flipping |0..0> into the given basis state."""
    gates = [Gate("x", (q,)) for q, b in enumerate(bits) if b == "1"]
    return Circuit(len(bits), gates, 0)


@dataclass
class CostValue:
    value: float
    per_term: np.ndarray
    variant: str
    shots: int | None = None


def u_power_states(ts: TrainingSet, k_max: int):
    """[psi_0, U psi_0, ..., U^k_max psi_0]."""
    states = [ts.psi0]
    for _ in range(k_max):
        states.append(evolve_step(ts.u_step, states[-1]))
    return states


def evolved_state(ts: TrainingSet, t: float) -> QuantumState:
    """U(t) psi_0 from the continuous-time oracle."""
    if ts.continuous is None:
        raise ConfigError("training set has no continuous-time evolution oracle")
    u = np.asarray(ts.continuous(t))
    return QuantumState(ts.psi0.n_qubits, u @ ts.psi0.amplitudes)


class _Workspace:
    """Caches W^dag psi_0 and W^dag U^k psi_0 per theta vector within one
    gradient evaluation; overlaps reduce to diagonal-weighted dot products."""

    def __init__(self, ts, ansatz, u_states):
        self.ts = ts
        self.ansatz = ansatz
        self.u_states = u_states
        self._left = {}
        self._right = {}

    def _wdag(self, theta, state):
        out = state.copy()
        from .statevector import apply_circuit_inplace

        apply_circuit_inplace(
            out.amplitudes, out.n_qubits, self.ansatz.w, theta, adjoint=True
        )
        return out.amplitudes

    def left(self, key, theta):
        if key not in self._left:
            self._left[key] = self._wdag(theta, self.ts.psi0)
        return self._left[key]

    def right(self, key, theta, k):
        kk = (key, k)
        if kk not in self._right:
            self._right[kk] = self._wdag(theta, self.u_states[k])
        return self._right[kk]


def _ansatz_diag(ansatz, t, extra=None):
    diag = diagonal_at_time(ansatz.d, t)
    if extra is not None:
        diag = diag * extra
    return diag


def loschmidt_overlap(
    ts: TrainingSet,
    ansatz: FsvffAnsatz,
    k: int,
    shots: int | None = None,
    seed: int = 0,
) -> float:
    """|<psi_0| (V^dag)^k U^k |psi_0>|^2; shot mode returns the all-zeros
    frequency of the echo circuit."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    state = ts.psi0
    for _ in range(k):
        state = evolve_step(ts.u_step, state)
    return _echo_probability(ts, ansatz, state, k * ansatz.d.delta_t, shots, seed, k)


def _echo_probability(ts, ansatz, evolved, t, shots, seed, tag):
    from .ansatz import apply_v_time

    if shots is None:
        v_psi = apply_v_time(ansatz, ts.psi0, t)
        return overlap_squared(v_psi, evolved)
    echoed = apply_v_time(ansatz, evolved, t, adjoint=True)
    if ts.preparation is not None:
        echoed = apply_circuit(echoed, ts.preparation, adjoint=True)
    else:
        # unwind the initial state directly: valid when psi0 is a basis state
        idx = int(np.argmax(np.abs(ts.psi0.amplitudes)))
        if abs(abs(ts.psi0.amplitudes[idx]) - 1.0) > 1e-10:
            raise ConfigError("shot mode needs a preparation circuit")
        flip = Circuit(
            evolved.n_qubits,
            [Gate("x", (q,)) for q in range(evolved.n_qubits) if (idx >> (evolved.n_qubits - 1 - q)) & 1],
            0,
        )
        echoed = apply_circuit(echoed, flip)
    counts = sample_counts(echoed, shots, derive_seed(seed, "echo", tag))
    zeros = "0" * echoed.n_qubits
    return counts.get(zeros, 0) / shots


def cost_global(
    ts: TrainingSet,
    ansatz: FsvffAnsatz,
    shots: int | None = None,
    seed: int = 0,
    k_indices=None,
) -> CostValue:
    """1 - mean_k |<psi_0|(V^dag)^k U^k|psi_0>|^2 over k = 1..n_eig."""
    ks = list(k_indices) if k_indices is not None else list(range(1, ts.n_eig + 1))
    states = u_power_states(ts, max(ks))
    over = np.array(
        [
            _echo_probability(
                ts, ansatz, states[k], k * ansatz.d.delta_t, shots, seed, k
            )
            for k in ks
        ]
    )
    return CostValue(float(1.0 - over.mean()), over, "global", shots)


def _zero_marginals(state: QuantumState) -> np.ndarray:
    """P(qubit j = 0) for every j."""
    n = state.n_qubits
    probs = np.abs(state.amplitudes.reshape((2,) * n)) ** 2
    return np.array(
        [probs.sum(axis=tuple(a for a in range(n) if a != j))[0] for j in range(n)]
    )


def cost_local(
    ts: TrainingSet,
    ansatz: FsvffAnsatz,
    shots: int | None = None,
    seed: int = 0,
) -> CostValue:
    """Per-qubit echo cost; sandwiches the global cost between itself and
    n times itself."""
    from .ansatz import apply_v_time

    n = ts.psi0.n_qubits
    states = u_power_states(ts, ts.n_eig)
    locals_ = np.zeros(n)
    for k in range(1, ts.n_eig + 1):
        echoed = apply_v_time(
            ansatz, states[k], k * ansatz.d.delta_t, adjoint=True
        )
        if ts.preparation is not None:
            echoed = apply_circuit(echoed, ts.preparation, adjoint=True)
        else:
            idx = int(np.argmax(np.abs(ts.psi0.amplitudes)))
            if abs(abs(ts.psi0.amplitudes[idx]) - 1.0) > 1e-10:
                raise ConfigError("local cost needs a preparation circuit")
            flip = Circuit(
                n,
                [Gate("x", (q,)) for q in range(n) if (idx >> (n - 1 - q)) & 1],
                0,
            )
            echoed = apply_circuit(echoed, flip)
        if shots is None:
            p0 = _zero_marginals(echoed)
        else:
            counts = sample_counts(
                echoed, shots, derive_seed(seed, "local", k)
            )
            p0 = np.zeros(n)
            for b, c in counts.items():
                for j in range(n):
                    if b[j] == "0":
                        p0[j] += c
            p0 /= shots
        locals_ += 1.0 - p0
    locals_ /= ts.n_eig
    return CostValue(float(locals_.mean()), locals_, "local", shots)


def draw_times(batch: int, bias: float, rng) -> np.ndarray:
    u = rng.uniform(-1.0, 1.0, batch)
    return np.sign(u) * np.abs(u) ** bias


def cost_randomized(
    ts: TrainingSet,
    ansatz: FsvffAnsatz,
    batch: int,
    t_max: float,
    bias: float = 0.75,
    rng_seed: int = 0,
    shots: int | None = None,
    r_values=None,
) -> CostValue:
    """1 - mean_r |<psi_0| V(-r t_max) U(r t_max) |psi_0>|^2 with r drawn
    from [-1,1] and |r| biased toward the edges."""
    if batch < 1:
        raise ValueError(f"batch must be >= 1, got {batch}")
    if t_max <= 0:
        raise ValueError(f"t_max must be > 0, got {t_max}")
    if r_values is None:
        r_values = draw_times(batch, bias, rng_stream(rng_seed, "rand-cost"))
    over = np.empty(len(r_values))
    for i, r in enumerate(r_values):
        t = r * t_max
        over[i] = _echo_probability(
            ts, ansatz, evolved_state(ts, t), t, shots, rng_seed, ("r", i)
        )
    return CostValue(float(1.0 - over.mean()), over, "randomized", shots)


def _parameter_gate(ansatz, l):
    owners = [g for g in ansatz.w.gates if g.param_index == l]
    if not owners:
        raise UnsupportedParameterError(f"no gate carries parameter {l}")
    if len(owners) > 1:
        raise UnsupportedParameterError(f"parameter {l} is shared by several gates")
    return owners[0]


def _terms_for(ts, ansatz, k_indices, r_values, t_max):
    """[(time, scale, evolved state)] for the active cost terms; scale is the
    chain-rule factor on the accumulated diagonal angle."""
    if r_values is not None:
        return [
            (r * t_max, r * t_max, evolved_state(ts, r * t_max)) for r in r_values
        ]
    ks = list(k_indices) if k_indices is not None else list(range(1, ts.n_eig + 1))
    states = u_power_states(ts, max(ks))
    dt = ansatz.d.delta_t
    return [(k * dt, k * dt, states[k]) for k in ks]


def _shot_cost(ts, ansatz, terms, shots, seed, tag):
    over = [
        _echo_probability(ts, ansatz, st, t, shots, seed, (tag, i))
        for i, (t, _, st) in enumerate(terms)
    ]
    return 1.0 - float(np.mean(over))


def _grad_theta_terms(ts, ansatz, l, terms, shots, seed, rule):
    """One-parameter theta gradient over the given cost terms."""
    if shots is not None:
        total = 0.0
        from .ansatz import apply_v_time  # noqa: F401  (parity with exact path)

        for side in ("left", "right"):
            for s, cf in rule:
                shifted = _shifted_cost_shot(
                    ts, ansatz, l, side, s, terms, shots, seed
                )
                total += cf * shifted
        return total
    ws = _Workspace(ts, ansatz, None)
    theta = ansatz.theta
    x0 = ws.left("base", theta)
    y0 = [ws._wdag(theta, st) for (_, _, st) in terms]
    # the echo applies (V^dag)^k, so the in-overlap diagonal is conjugated
    diags = [_ansatz_diag(ansatz, t).conj() for (t, _, _) in terms]
    total = 0.0
    for s, cf in rule:
        theta_s = theta.copy()
        theta_s[l] += s
        xs = ws._wdag(theta_s, ts.psi0)
        # left-shifted cost
        over_left = np.mean(
            [abs(np.vdot(xs, d * y)) ** 2 for d, y in zip(diags, y0)]
        )
        # right-shifted cost
        over_right = np.mean(
            [
                abs(np.vdot(x0, d * ws._wdag(theta_s, st))) ** 2
                for d, (_, _, st) in zip(diags, terms)
            ]
        )
        total += cf * ((1.0 - over_left) + (1.0 - over_right))
    return total


def _shifted_cost_shot(ts, ansatz, l, side, s, terms, shots, seed):
    """Shot-mode evaluation of the cost with parameter l shifted on one side."""
    theta = ansatz.theta.copy()
    theta_s = theta.copy()
    theta_s[l] += s
    thetaL, thetaR = (theta_s, theta) if side == "left" else (theta, theta_s)
    over = []
    for i, (t, _, st) in enumerate(terms):
        out = st.copy()
        from .statevector import apply_circuit_inplace

        apply_circuit_inplace(out.amplitudes, out.n_qubits, ansatz.w, thetaR, adjoint=True)
        out.amplitudes *= _ansatz_diag(ansatz, t).conj()
        apply_circuit_inplace(out.amplitudes, out.n_qubits, ansatz.w, thetaL, adjoint=False)
        # echo back through the preparation and read the all-zeros frequency
        if ts.preparation is not None:
            out = apply_circuit(out, ts.preparation, adjoint=True)
        counts = sample_counts(
            out, shots, derive_seed(seed, "grad", side, l, s, i)
        )
        over.append(counts.get("0" * out.n_qubits, 0) / shots)
    return 1.0 - float(np.mean(over))


def _grad_gamma_terms(ts, ansatz, l, terms, shots, seed):
    """One-parameter gamma gradient: shift the accumulated angle of diagonal
    term l by -+ pi/2 (in rotation convention) once per cost term, weight by
    the term's evolution time."""
    mask = ansatz.d.z_masks[l]
    idx = np.arange(2**ansatz.n_qubits, dtype=np.uint64)
    signs = np.where(np.bitwise_count(idx & np.uint64(mask)) & 1, -1.0, 1.0)
    plus = np.exp(1j * (np.pi / 4) * signs)
    if shots is None:
        ws = _Workspace(ts, ansatz, None)
        theta = ansatz.theta
        x0 = ws.left("base", theta)
        total = 0.0
        for t, scale, st in terms:
            y = ws._wdag(theta, st)
            d_in = _ansatz_diag(ansatz, t).conj()
            c_plus = 1.0 - abs(np.vdot(x0, d_in * plus.conj() * y)) ** 2
            c_minus = 1.0 - abs(np.vdot(x0, d_in * plus * y)) ** 2
            total += scale * (c_plus - c_minus)
        return total / len(terms)
    total = 0.0
    for i, (t, scale, st) in enumerate(terms):
        probs = []
        for sgn, extra in (("p", plus), ("m", plus.conj())):
            out = st.copy()
            from .statevector import apply_circuit_inplace

            apply_circuit_inplace(
                out.amplitudes, out.n_qubits, ansatz.w, ansatz.theta, adjoint=True
            )
            out.amplitudes *= (_ansatz_diag(ansatz, t) * extra).conj()
            apply_circuit_inplace(
                out.amplitudes, out.n_qubits, ansatz.w, ansatz.theta, adjoint=False
            )
            if ts.preparation is not None:
                out = apply_circuit(out, ts.preparation, adjoint=True)
            counts = sample_counts(
                out, shots, derive_seed(seed, "gradg", l, sgn, i)
            )
            probs.append(counts.get("0" * out.n_qubits, 0) / shots)
        total += scale * ((1.0 - probs[0]) - (1.0 - probs[1]))
    return total / len(terms)


def grad_theta(
    ts: TrainingSet,
    ansatz: FsvffAnsatz,
    l: int,
    shots: int | None = None,
    seed: int = 0,
) -> float:
    """d(global cost)/d theta_l by the four-term pi/2 shift rule."""
    gate = _parameter_gate(ansatz, l)
    if gate.kind not in ("rx", "ry", "rz", "rzz"):
        raise UnsupportedParameterError(
            f"parameter {l} drives a {gate.kind} gate; the pi/2 rule covers "
            "Pauli rotations only"
        )
    terms = _terms_for(ts, ansatz, None, None, None)
    return float(
        _grad_theta_terms(ts, ansatz, l, terms, shots, seed, _PAULI_SHIFTS)
    )


def grad_gamma(
    ts: TrainingSet,
    ansatz: FsvffAnsatz,
    l: int,
    shots: int | None = None,
    seed: int = 0,
) -> float:
    """d(global cost)/d gamma_l; the shift applies to the accumulated angle
    of the k-step diagonal, so term k carries a factor k."""
    if not 0 <= l < len(ansatz.gammas):
        raise UnsupportedParameterError(f"gamma index {l} out of range")
    terms = _terms_for(ts, ansatz, None, None, None)
    return float(_grad_gamma_terms(ts, ansatz, l, terms, shots, seed))


def _apply_gate_state(vec, n, gate, params, adjoint=False):
    from .statevector import _apply_gate_inplace

    out = vec.copy()
    _apply_gate_inplace(out, n, gate, params, adjoint)
    return out


def _adjoint_gradient(ts, ansatz, terms):
    """Exact-path gradient by forward/backward circuit sweeps: same value as
    the shift rules, O(gates) instead of O(gates^2) per evaluation."""
    from . import backend
    from .statevector import gate_matrix_derivative

    w = ansatz.w
    theta = ansatz.theta
    n = ansatz.n_qubits
    gates = w.gates
    p_count = len(theta)
    n_terms = len(terms)
    # backward sweep from psi_0: beta[l] has gates l+1..P peeled off
    beta = [None] * (len(gates) + 1)
    beta[len(gates)] = ts.psi0.amplitudes.copy()
    for i in range(len(gates) - 1, -1, -1):
        beta[i] = _apply_gate_state(beta[i + 1], n, gates[i], theta, adjoint=True)
    x = beta[0]
    # masks for gamma derivative
    idx = np.arange(2**n, dtype=np.uint64)
    sign_rows = np.array(
        [
            np.where(np.bitwise_count(idx & np.uint64(m)) & 1, -1.0, 1.0)
            for m in ansatz.d.z_masks
        ]
    )
    g_theta = np.zeros(p_count)
    g_gamma = np.zeros(len(ansatz.gammas))
    dmats = {}
    for i, g in enumerate(gates):
        if g.param_index is not None:
            dmats[i] = gate_matrix_derivative(g, theta)
    for t, scale, st in terms:
        d_in = _ansatz_diag(ansatz, t).conj()
        # backward sweep from the evolved state
        mu = [None] * (len(gates) + 1)
        mu[len(gates)] = st.amplitudes.copy()
        for i in range(len(gates) - 1, -1, -1):
            mu[i] = _apply_gate_state(mu[i + 1], n, gates[i], theta, adjoint=True)
        y = mu[0]
        o = np.vdot(x, d_in * y)
        # gamma: d(o)/d gamma_l = x^dag (-i t s_l d y)
        if len(g_gamma):
            base = d_in * y
            do_g = (sign_rows * (x.conj() * (-1j * t) * base)).sum(axis=1)
            g_gamma += (-2.0 / n_terms) * np.real(np.conj(o) * do_g)
        if p_count:
            kappa = d_in * y
            rho = d_in.conj() * x
            for i, g in enumerate(gates):
                if g.param_index is not None:
                    dg = dmats[i]
                    dk = kappa.copy()
                    k_g = len(g.targets)
                    if k_g == 1:
                        backend.apply_1q(dk, n, g.targets[0], dg)
                    elif k_g == 2:
                        backend.apply_2q(dk, n, g.targets[0], g.targets[1], dg)
                    else:
                        backend.apply_kq(dk, n, g.targets, dg)
                    a_term = np.vdot(beta[i + 1], dk)
                    dr = rho.copy()
                    if k_g == 1:
                        backend.apply_1q(dr, n, g.targets[0], dg)
                    elif k_g == 2:
                        backend.apply_2q(dr, n, g.targets[0], g.targets[1], dg)
                    else:
                        backend.apply_kq(dr, n, g.targets, dg)
                    b_term = np.conj(np.vdot(mu[i + 1], dr))
                    g_theta[g.param_index] += (-2.0 / n_terms) * np.real(
                        np.conj(o) * (a_term + b_term)
                    )
                kappa = _apply_gate_state(kappa, n, g, theta)
                rho = _apply_gate_state(rho, n, g, theta)
    return g_theta, g_gamma


def gradient_vector(
    ts: TrainingSet,
    ansatz: FsvffAnsatz,
    variant: str = "global",
    shots: int | None = None,
    seed: int = 0,
    k_indices=None,
    r_values=None,
    t_max: float | None = None,
    method: str = "auto",
):
    """(d cost/d theta, d cost/d gamma) for the requested variant.

    Exact mode defaults to the sweep-based evaluation; shot mode and
    method="shift" use the parameter-shift rules (two-frequency rule for
    GIVENS parameters). Both compute the same derivative."""
    if variant == "randomized":
        if r_values is None:
            raise ConfigError("randomized gradient needs the drawn r values")
        terms = _terms_for(ts, ansatz, None, r_values, t_max)
    elif variant == "global":
        terms = _terms_for(ts, ansatz, k_indices, None, None)
    else:
        raise ConfigError(f"no gradient path for variant {variant!r}")
    if shots is None and method in ("auto", "adjoint"):
        return _adjoint_gradient(ts, ansatz, terms)
    g_theta = np.zeros(len(ansatz.theta))
    for l in range(len(ansatz.theta)):
        gate = _parameter_gate(ansatz, l)
        rule = _SHIFT_RULES.get(gate.kind)
        if rule is None:
            raise UnsupportedParameterError(
                f"no shift rule for {gate.kind} gates"
            )
        g_theta[l] = _grad_theta_terms(ts, ansatz, l, terms, shots, seed, rule)
    g_gamma = np.zeros(len(ansatz.gammas))
    for l in range(len(ansatz.gammas)):
        g_gamma[l] = _grad_gamma_terms(ts, ansatz, l, terms, shots, seed)
    return g_theta, g_gamma


def cost_eval(
    ts: TrainingSet,
    ansatz: FsvffAnsatz,
    variant: str = "global",
    shots: int | None = None,
    seed: int = 0,
    k_indices=None,
    r_values=None,
    t_max: float | None = None,
    batch: int | None = None,
    bias: float = 0.75,
) -> CostValue:
    if variant == "global":
        return cost_global(ts, ansatz, shots, seed, k_indices)
    if variant == "local":
        return cost_local(ts, ansatz, shots, seed)
    if variant == "randomized":
        return cost_randomized(
            ts, ansatz, batch or 2, t_max, bias, seed, shots, r_values
        )
    raise ConfigError(f"unknown cost variant {variant!r}")
