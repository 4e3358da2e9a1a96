import numpy as np
import pytest
from scipy.linalg import expm

from fsvff import hamiltonian as ham
from fsvff import statevector as sv
from fsvff.exceptions import ParseError, ShapeError, SizeError

from conftest import random_state


def pauli_kron(letters):
    m = np.array([[1.0]], dtype=complex)
    for letter in letters:
        m = np.kron(m, ham._PAULI[letter])
    return m


def test_build_xy_terms():
    h2 = ham.build_xy(2)
    assert sorted(h2.terms) == [(1.0, "XX"), (1.0, "YY")]
    assert len(ham.build_xy(3).terms) == 4
    with pytest.raises(SizeError):
        ham.build_xy(1)


def test_xy_spectrum_oracle():
    # dense diagonalization oracle fixes the literal convention:
    # 2-qubit spectrum {-2, 0, 0, 2}, so the |10> subspace gap is 4
    evals = np.linalg.eigvalsh(ham.dense_matrix(ham.build_xy(2)))
    assert np.allclose(sorted(evals), [-2, 0, 0, 2], atol=1e-12)
    evals3 = np.linalg.eigvalsh(ham.dense_matrix(ham.build_xy(3)))
    assert abs(max(evals3) - 2 * np.sqrt(2)) < 1e-12


def test_dense_matrix_hermitian():
    rng = np.random.default_rng(0)
    for _ in range(5):
        n = int(rng.integers(1, 5))
        terms = []
        for _ in range(int(rng.integers(1, 6))):
            letters = "".join(rng.choice(list("IXYZ"), n))
            terms.append((float(rng.normal()), letters))
        m = ham.dense_matrix(ham.PauliSum(n, terms))
        assert np.abs(m - m.conj().T).max() < 1e-12


def test_exact_evolution():
    h = ham.build_xy(2)
    m = ham.dense_matrix(h)
    assert np.allclose(ham.exact_evolution(h, 0.0), np.eye(4), atol=1e-14)
    u = ham.exact_evolution(h, 0.5)
    assert np.abs(u @ u.conj().T - np.eye(4)).max() < 1e-10
    assert np.abs(u - expm(-0.5j * m)).max() < 1e-12
    assert np.abs(u @ ham.exact_evolution(h, -0.5) - np.eye(4)).max() < 1e-10


def test_trotter_single_term_exact():
    hz = ham.PauliSum(1, [(1.0, "Z")])
    circ = ham.trotter_circuit(hz, ham.TrotterSpec("first", 0.7))
    assert np.allclose(
        sv.dense_unitary(circ),
        np.diag([np.exp(-0.7j), np.exp(0.7j)]),
        atol=1e-14,
    )


def test_trotter_first_order_is_term_product():
    h = ham.build_xy(2)
    circ = ham.trotter_circuit(h, ham.TrotterSpec("first", 0.5))
    u = sv.dense_unitary(circ)
    oracle = np.eye(4, dtype=complex)
    for c, letters in h.terms:
        oracle = expm(-0.5j * c * pauli_kron(letters)) @ oracle
    assert np.abs(u - oracle).max() < 1e-12


def test_trotter_error_halving():
    # the 2-qubit chain's XX and YY terms commute, making its Trotter step
    # exact; the halving law needs the 3-site chain
    h2 = ham.build_xy(2)
    u2 = sv.dense_unitary(ham.trotter_circuit(h2, ham.TrotterSpec("first", 0.5)))
    assert np.linalg.norm(u2 - ham.exact_evolution(h2, 0.5), 2) < 1e-12

    h = ham.build_xy(3)

    def err(order, dt):
        u = sv.dense_unitary(ham.trotter_circuit(h, ham.TrotterSpec(order, dt)))
        return np.linalg.norm(u - ham.exact_evolution(h, dt), 2)

    e1, e2 = err("first", 0.5), err("first", 0.25)
    assert 3.0 < e1 / e2 < 5.0
    s1, s2 = err("second", 0.5), err("second", 0.25)
    assert 6.0 < s1 / s2 < 10.0


def test_trotter_convergence_slopes():
    h = ham.build_xy(3)
    dts = np.array([0.4, 0.2, 0.1, 0.05])
    for order, target in (("first", 2.0), ("second", 3.0)):
        errs = [
            np.linalg.norm(
                sv.dense_unitary(ham.trotter_circuit(h, ham.TrotterSpec(order, dt)))
                - ham.exact_evolution(h, dt),
                2,
            )
            for dt in dts
        ]
        slope = np.polyfit(np.log(dts), np.log(errs), 1)[0]
        assert abs(slope - target) < 0.1, (order, slope)


def test_trotter_substeps():
    h = ham.build_xy(2)
    u6 = sv.dense_unitary(
        ham.trotter_circuit(h, ham.TrotterSpec("second", 1.0, n_substeps=6))
    )
    u1 = sv.dense_unitary(
        ham.trotter_circuit(h, ham.TrotterSpec("second", 1.0 / 6.0))
    )
    assert np.abs(u6 - np.linalg.matrix_power(u1, 6)).max() < 1e-12


def test_fermi_hubbard_structure():
    fh = ham.build_fermi_hubbard(4, 1.0, 2.0)
    assert fh.n_qubits == 8
    h = ham.dense_matrix(fh)
    n_up = ham.dense_matrix(ham.number_operator(8, range(4)))
    n_dn = ham.dense_matrix(ham.number_operator(8, range(4, 8)))
    assert np.abs(h @ n_up - n_up @ h).max() < 1e-10
    assert np.abs(h @ n_dn - n_dn @ h).max() < 1e-10
    with pytest.raises(SizeError):
        ham.build_fermi_hubbard(1, 1.0, 2.0)


def test_fermi_hubbard_free_spectrum():
    # J=1, U=0: single-particle energies are -+J per spin species; the
    # many-body spectrum is every subset sum
    fh = ham.build_fermi_hubbard(2, 1.0, 0.0)
    evals = np.round(np.linalg.eigvalsh(ham.dense_matrix(fh)), 9)
    assert set(evals) == {-2.0, -1.0, -0.0, 0.0, 1.0, 2.0} - {-0.0} or set(
        np.abs(evals)
    ) <= {0.0, 1.0, 2.0}
    singles = np.linalg.eigvalsh(np.array([[0.0, -1.0], [-1.0, 0.0]]))
    sums = set()
    for occ in range(16):
        e = 0.0
        for i, s in enumerate(list(singles) + list(singles)):
            if occ >> i & 1:
                e += s
        sums.add(round(e, 9))
    assert set(evals) <= {round(s, 9) for s in sums}


def test_fermi_hubbard_interaction_only():
    fh = ham.build_fermi_hubbard(2, 0.0, 2.0)
    m = ham.dense_matrix(fh)
    assert np.abs(m - np.diag(np.diag(m))).max() < 1e-12
    assert set(np.round(np.linalg.eigvalsh(m), 9)) == {0.0, 2.0, 4.0}


def test_expectation():
    hz = ham.PauliSum(1, [(1.0, "Z")])
    assert ham.expectation(hz, sv.zero_state(1)) == 1.0
    h2 = ham.build_xy(2)
    assert abs(ham.expectation(h2, sv.basis_state("00"))) < 1e-12
    plus = sv.QuantumState(2, np.array([0, 1, 1, 0]) / np.sqrt(2))
    dense = ham.dense_matrix(h2)
    oracle = float(np.real(plus.amplitudes.conj() @ dense @ plus.amplitudes))
    assert abs(ham.expectation(h2, plus) - oracle) < 1e-10
    assert abs(oracle - 2.0) < 1e-12
    with pytest.raises(ShapeError):
        ham.expectation(h2, sv.zero_state(3))


def test_apply_pauli_string_matches_kron():
    rng = np.random.default_rng(1)
    for _ in range(20):
        n = int(rng.integers(1, 6))
        letters = "".join(rng.choice(list("IXYZ"), n))
        state = random_state(n, rng)
        out = ham.apply_pauli_string(state.amplitudes, letters)
        assert np.abs(out - pauli_kron(letters) @ state.amplitudes).max() < 1e-12


def test_pauli_text_round_trip():
    h = ham.build_fermi_hubbard(2, 1.0, 2.0)
    parsed = ham.parse_pauli_sum(ham.format_pauli_sum(h))
    assert parsed.terms == h.terms
    assert parsed.n_qubits == h.n_qubits


def test_pauli_text_errors():
    with pytest.raises(ParseError):
        ham.parse_pauli_sum("1.0\n")
    with pytest.raises(ParseError):
        ham.parse_pauli_sum("x XXI\n")
    with pytest.raises(ParseError):
        ham.parse_pauli_sum("1.0 XX\n2.0 XXX\n")
    with pytest.raises(ParseError):
        ham.parse_pauli_sum("")
    parsed = ham.parse_pauli_sum("# comment\n1.0 XXI\n\n-0.5 IZZ\n")
    assert parsed.terms == [(1.0, "XXI"), (-0.5, "IZZ")]
