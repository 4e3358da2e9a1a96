import numpy as np
import pytest
from scipy import stats

from fsvff import backend
from fsvff import statevector as sv
from fsvff.exceptions import BindingError, ParseError, ShapeError, SizeError

from conftest import dense_circuit_oracle, kron_embed, random_circuit, random_state


def test_zero_state_definitions():
    assert np.array_equal(sv.zero_state(1).amplitudes, [1, 0])
    assert np.array_equal(sv.zero_state(2).amplitudes, [1, 0, 0, 0])
    s3 = sv.zero_state(3)
    assert len(s3.amplitudes) == 8 and abs(s3.norm() - 1) < 1e-15


def test_zero_state_size_error():
    with pytest.raises(SizeError):
        sv.zero_state(0)
    with pytest.raises(SizeError):
        sv.zero_state(25)


def test_basis_state_convention():
    s = sv.basis_state("10")
    assert s.amplitudes[0b10] == 1.0
    s = sv.basis_state("1100")
    assert s.amplitudes[0b1100] == 1.0
    assert np.array_equal(sv.basis_state("0").amplitudes, [1, 0])


def test_basis_state_parse_error():
    with pytest.raises(ParseError):
        sv.basis_state("102")
    with pytest.raises(ParseError):
        sv.basis_state("")


def test_apply_gate_textbook():
    assert np.allclose(
        sv.apply_gate(sv.basis_state("0"), sv.Gate("x", (0,))).amplitudes, [0, 1]
    )
    s = sv.basis_state("0")
    out = sv.apply_gate(s, sv.Gate("rz", (0,), angle=0.0))
    assert np.allclose(out.amplitudes, s.amplitudes)
    bell_in = sv.QuantumState(2, np.array([1, 0, 1, 0]) / np.sqrt(2))
    out = sv.apply_gate(bell_in, sv.Gate("cnot", (0, 1)))
    assert np.allclose(out.amplitudes, np.array([1, 0, 0, 1]) / np.sqrt(2))


def test_apply_circuit_empty_and_adjoint():
    rng = np.random.default_rng(0)
    state = random_state(3, rng)
    empty = sv.Circuit(3, [], 0)
    assert np.allclose(sv.apply_circuit(state, empty).amplitudes, state.amplitudes)
    circ = random_circuit(3, rng, depth=20)
    params = rng.uniform(-np.pi, np.pi, circ.n_params)
    fwd = sv.apply_circuit(state, circ, params)
    back = sv.apply_circuit(fwd, circ, params, adjoint=True)
    assert np.abs(back.amplitudes - state.amplitudes).max() < 1e-10


def test_apply_circuit_matches_dense_oracle():
    rng = np.random.default_rng(1)
    for _ in range(25):
        n = int(rng.integers(1, 6))
        circ = random_circuit(n, rng, depth=int(rng.integers(1, 12)))
        params = rng.uniform(-np.pi, np.pi, circ.n_params)
        state = random_state(n, rng)
        out = sv.apply_circuit(state, circ, params)
        oracle = dense_circuit_oracle(circ, params) @ state.amplitudes
        assert np.abs(out.amplitudes - oracle).max() < 1e-10


def test_hardware_ansatz_against_dense_product():
    from fsvff.ansatz import hardware_xy_ansatz

    hw = hardware_xy_ansatz()
    theta = np.array([0.37, 1.2])
    state = sv.basis_state("10")
    out = sv.apply_circuit(state, hw.w, theta)
    oracle = dense_circuit_oracle(hw.w, theta) @ state.amplitudes
    assert np.abs(out.amplitudes - oracle).max() < 1e-10


def test_norm_preserved_over_random_circuits():
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 7))
        circ = random_circuit(n, rng, depth=int(rng.integers(1, 51)))
        params = rng.uniform(-np.pi, np.pi, circ.n_params)
        out = sv.apply_circuit(random_state(n, rng), circ, params)
        worst = max(worst, abs(out.norm() - 1.0))
    assert worst < 1e-9


def test_inner_product():
    rng = np.random.default_rng(3)
    s = random_state(3, rng)
    assert abs(sv.inner_product(s, s) - 1) < 1e-12
    assert sv.inner_product(sv.basis_state("00"), sv.basis_state("11")) == 0
    a, b = random_state(2, rng), random_state(2, rng)
    assert abs(sv.inner_product(a, b) - np.conj(sv.inner_product(b, a))) < 1e-14
    with pytest.raises(ShapeError):
        sv.inner_product(random_state(2, rng), random_state(3, rng))


def test_trotter_overlap_frozen_value():
    # <10|U|10> for the first-order Trotter step of the 2-qubit XY chain at
    # dt = 0.5 equals cos(1); value frozen from the dense matrix-exponential
    # oracle.
    from fsvff.hamiltonian import TrotterSpec, build_xy, trotter_circuit

    circ = trotter_circuit(build_xy(2), TrotterSpec("first", 0.5))
    s = sv.basis_state("10")
    val = sv.inner_product(s, sv.apply_circuit(s, circ))
    assert abs(val - 0.5403023058681395) < 1e-12


def test_sample_counts_deterministic_and_exact():
    assert sv.sample_counts(sv.basis_state("01"), 100, 7) == {"01": 100}
    plus = sv.QuantumState(1, np.array([1, 1]) / np.sqrt(2))
    c1 = sv.sample_counts(plus, 10**6, 3)
    c2 = sv.sample_counts(plus, 10**6, 3)
    assert c1 == c2
    sigma = np.sqrt(10**6 * 0.25)
    assert abs(c1["0"] - 5e5) < 5 * sigma


def test_sample_counts_chi_square():
    rng = np.random.default_rng(4)
    for trial in range(5):
        state = random_state(3, rng)
        probs = np.abs(state.amplitudes) ** 2
        counts = sv.sample_counts(state, 10**5, trial)
        obs = np.array([counts.get(sv.bitstring_of(i, 3), 0) for i in range(8)])
        keep = probs > 1e-12
        chi2 = float(np.sum((obs[keep] - 1e5 * probs[keep]) ** 2 / (1e5 * probs[keep])))
        crit = stats.chi2.ppf(0.999, keep.sum() - 1)
        assert chi2 < crit


def test_dense_unitary_examples():
    h = sv.Circuit(1, [sv.Gate("h", (0,))], 0)
    assert np.allclose(
        sv.dense_unitary(h), np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    )
    assert np.allclose(sv.dense_unitary(sv.Circuit(2, [], 0)), np.eye(4))
    cc = sv.Circuit(2, [sv.Gate("cnot", (0, 1)), sv.Gate("cnot", (0, 1))], 0)
    assert np.allclose(sv.dense_unitary(cc), np.eye(4))


def test_dense_unitary_matches_oracle_and_adjoint_property():
    rng = np.random.default_rng(5)
    for _ in range(10):
        n = int(rng.integers(1, 5))
        circ = random_circuit(n, rng, depth=10)
        params = rng.uniform(-np.pi, np.pi, circ.n_params)
        u = sv.dense_unitary(circ, params)
        assert np.abs(u @ u.conj().T - np.eye(2**n)).max() < 1e-10
        assert np.abs(u - dense_circuit_oracle(circ, params)).max() < 1e-10
        state = random_state(n, rng)
        adj = sv.apply_circuit(state, circ, params, adjoint=True)
        assert np.abs(adj.amplitudes - u.conj().T @ state.amplitudes).max() < 1e-10


def test_dense_unitary_size_guard():
    with pytest.raises(SizeError):
        sv.dense_unitary(sv.Circuit(13, [], 0))


def test_gate_validation_errors():
    with pytest.raises(BindingError):
        sv.Gate("rz", (0,))
    with pytest.raises(BindingError):
        sv.Gate("rz", (0,), param_index=0, angle=1.0)
    with pytest.raises(BindingError):
        sv.Gate("cnot", (0, 1), angle=0.3)
    with pytest.raises(ShapeError):
        sv.Gate("cnot", (1, 1))
    circ = sv.Circuit(2, [sv.Gate("rz", (0,), param_index=0)], 1)
    with pytest.raises(BindingError):
        sv.apply_circuit(sv.zero_state(2), circ, [])
    with pytest.raises(ShapeError):
        sv.apply_circuit(sv.zero_state(3), circ, [0.1])


def test_gate_matrices_unitary():
    rng = np.random.default_rng(6)
    for kind in ("rx", "ry", "rz", "rzz", "givens", "phase"):
        targets = (0,) if kind in ("rx", "ry", "rz", "phase") else (0, 1)
        g = sv.Gate(kind, targets, angle=float(rng.uniform(-2 * np.pi, 2 * np.pi)))
        m = sv.gate_matrix(g)
        assert np.abs(m @ m.conj().T - np.eye(m.shape[0])).max() < 1e-12


def test_kernel_backends_agree():
    numpy_k = backend.get_kernels("numpy")
    numba_k = backend.get_kernels("numba")
    rng = np.random.default_rng(7)
    for n in (1, 2, 4, 6):
        amps = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
        amps /= np.linalg.norm(amps)
        for _ in range(20):
            a1 = amps.copy()
            a2 = amps.copy()
            which = rng.integers(0, 3)
            if which == 0 or n < 2:
                q = int(rng.integers(0, n))
                m = sv.gate_matrix(sv.Gate("ry", (q,), angle=rng.uniform(-3, 3)))
                numpy_k.apply_1q(a1, n, q, m)
                numba_k.apply_1q(a2, n, q, m)
            elif which == 1:
                qs = rng.choice(n, 2, replace=False)
                m = sv.gate_matrix(
                    sv.Gate("givens", tuple(qs), angle=rng.uniform(-3, 3))
                )
                numpy_k.apply_2q(a1, n, int(qs[0]), int(qs[1]), m)
                numba_k.apply_2q(a2, n, int(qs[0]), int(qs[1]), m)
            else:
                qs = rng.choice(n, 2, replace=False)
                numpy_k.apply_cnot(a1, n, int(qs[0]), int(qs[1]))
                numba_k.apply_cnot(a2, n, int(qs[0]), int(qs[1]))
            assert np.abs(a1 - a2).max() < 1e-13
            amps = a1


def test_embed_unitary_matches_kron_oracle():
    rng = np.random.default_rng(8)
    for _ in range(10):
        n = int(rng.integers(2, 5))
        k = int(rng.integers(1, 3))
        targets = tuple(int(q) for q in rng.choice(n, k, replace=False))
        a = rng.normal(size=(2**k, 2**k)) + 1j * rng.normal(size=(2**k, 2**k))
        q, _ = np.linalg.qr(a)
        assert np.abs(
            sv.embed_unitary(q, targets, n) - kron_embed(q, targets, n)
        ).max() < 1e-12
