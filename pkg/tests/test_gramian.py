import numpy as np
import pytest

from fsvff import gramian as gr
from fsvff import hamiltonian as ham
from fsvff import statevector as sv
from fsvff.exceptions import ConfigError, InconclusiveRankError

from conftest import random_state


def xy_exact_u(n, dt=0.5):
    return ham.exact_evolution(ham.build_xy(n), dt)


def test_overlap_row_first_entry_and_eigenstate():
    u = xy_exact_u(2)
    row = gr.overlap_row(u, sv.basis_state("00"), 4)
    assert row[0] == 1.0
    assert np.allclose(np.abs(row), 1.0, atol=1e-12)  # |00> is an eigenstate


def test_overlap_row_hadamard_vs_exact():
    circ = ham.trotter_circuit(ham.build_xy(2), ham.TrotterSpec("first", 0.5))
    psi0 = sv.basis_state("10")
    exact = gr.overlap_row(circ, psi0, 3)
    sampled = gr.overlap_row(circ, psi0, 3, method="hadamard", shots=10**5, seed=42)
    assert np.abs(exact - sampled).max() < 3 * 3 / np.sqrt(10**5)
    with pytest.raises(ConfigError):
        gr.overlap_row(circ, psi0, 3, method="hadamard")


def test_build_gramian_toeplitz():
    g = gr.build_gramian(np.array([1.0 + 0j]))
    assert g.matrix().shape == (1, 1) and g.matrix()[0, 0] == 1.0
    c = 0.3 + 0.4j
    g2 = gr.build_gramian(np.array([1.0, c]))
    m = g2.matrix()
    assert np.allclose(m, [[1, c], [np.conj(c), 1]])
    assert abs(gr.determinant(g2) - (1 - abs(c) ** 2)) < 1e-14


def test_gramian_matches_pairwise_oracle():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    u, _ = np.linalg.qr(a)
    psi = random_state(3, rng)
    row = gr.overlap_row(u, psi, 4)
    m = gr.build_gramian(row).matrix()
    states = [psi.amplitudes]
    for _ in range(4):
        states.append(u @ states[-1])
    direct = np.array(
        [[np.vdot(states[i], states[j]) for j in range(5)] for i in range(5)]
    )
    assert np.abs(m - direct).max() < 1e-10


def cofactor_det(m):
    if m.shape == (1, 1):
        return m[0, 0]
    total = 0.0 + 0.0j
    for j in range(m.shape[1]):
        minor = np.delete(np.delete(m, 0, axis=0), j, axis=1)
        total += (-1) ** j * m[0, j] * cofactor_det(minor)
    return total


def test_determinant_examples_and_cofactor_oracle():
    eye3 = gr.GramianMatrix(2, np.array([1.0, 0.0, 0.0], dtype=complex))
    assert gr.determinant(eye3) == 1.0
    dep = gr.build_gramian(np.array([1.0, 1.0]))
    assert abs(gr.determinant(dep)) < 1e-14
    u = xy_exact_u(2)
    row = gr.overlap_row(u, sv.basis_state("10"), 2)
    g = gr.build_gramian(row)
    assert abs(gr.determinant(g) - np.real(cofactor_det(g.matrix()))) < 1e-12


XY_CASES = [
    (2, "00", 1, 0.5),
    (2, "10", 2, 0.5),
    (4, "1100", 5, 0.5),
    (5, "11100", 9, 0.6),
]


@pytest.mark.parametrize("n,bits,expected,dt", XY_CASES)
def test_find_neig_xy_cases(n, bits, expected, dt):
    u = xy_exact_u(n, dt)
    res = gr.find_neig(u, sv.basis_state(bits), k_max=20)
    assert res.n_eig == expected
    assert abs(res.determinants[-1]) <= res.threshold


def test_find_neig_superposition():
    psi = sv.QuantumState(2, np.zeros(4, dtype=complex))
    psi.amplitudes[0b00] = psi.amplitudes[0b10] = 1 / np.sqrt(2)
    res = gr.find_neig(xy_exact_u(2), psi, 10)
    assert res.n_eig == 3


def test_find_neig_six_qubit_aliased_step():
    # |111000> exactly spans 14 distinct eigenvalues, two at weight ~9e-4;
    # at dt = 2 pi / (E_max - E_7) those two alias onto in-window energies
    # and the Krylov dimension of U(dt) is exactly 12
    h = ham.build_xy(6)
    evals, evecs = np.linalg.eigh(ham.dense_matrix(h))
    psi = sv.basis_state("111000")
    w = np.abs(evecs.conj().T @ psi.amplitudes) ** 2
    groups = {}
    for ev, wt in zip(np.round(evals, 9), w):
        groups[ev] = groups.get(ev, 0.0) + wt
    supported = sorted(ev for ev, wt in groups.items() if wt > 1e-12)
    assert len(supported) == 14
    dt = 2 * np.pi / (supported[-1] - supported[8])
    res = gr.find_neig(xy_exact_u(6, dt), psi, 20)
    assert res.n_eig == 12
    assert abs(res.determinants[11]) < 1e-8
    assert res.determinants[10] > 1e-3


def test_find_neig_hadamard_mode():
    circ = ham.trotter_circuit(ham.build_xy(2), ham.TrotterSpec("first", 0.5))
    res = gr.find_neig(
        circ, sv.basis_state("10"), 10, method="hadamard", shots=10**5, seed=7
    )
    assert res.n_eig == 2
    assert res.method == "hadamard" and res.shots == 10**5
    assert res.threshold >= 1e-6  # shot-noise-aware cutoff


def test_find_neig_inconclusive():
    rng = np.random.default_rng(1)
    a = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
    u, _ = np.linalg.qr(a)
    with pytest.raises(InconclusiveRankError) as err:
        gr.find_neig(u, random_state(4, rng), k_max=5)
    assert len(err.value.determinants) == 5


def test_determinants_monotone_psd():
    for n, bits, expected, dt in XY_CASES:
        u = xy_exact_u(n, dt)
        row = gr.overlap_row(u, sv.basis_state(bits), expected + 3)
        dets = [
            gr.determinant(gr.build_gramian(row[: k + 1]))
            for k in range(1, expected + 4)
        ]
        assert all(d >= -1e-10 for d in dets)
        below = [abs(d) <= 1e-6 for d in dets]
        first = below.index(True)
        assert all(below[first:])  # once dependent, stays dependent


def test_degenerate_spectrum_counts_unique_eigenvalues():
    # diagonal H with eigenvalues (2.5, 0.5, 2.0, ..., 1.0, ...) on the
    # support of psi0: the repeated value collapses two directions into one
    h = ham.PauliSum(3, [(0.75, "ZII"), (0.25, "IZI"), (1.0, "IIZ"), (0.5, "III")])
    energies = np.diag(ham.dense_matrix(h)).real
    psi = sv.QuantumState(3, np.zeros(8, dtype=complex))
    support = (0, 1, 2, 4)
    for i in support:
        psi.amplitudes[i] = 0.5
    unique = len(set(np.round(energies[list(support)], 9)))
    assert unique == 3  # indices 1 and 4 share E = 0.5... adjust below
    u = np.diag(np.exp(-0.5j * energies))
    res = gr.find_neig(u, psi, 10)
    assert res.n_eig == unique


def test_shot_threshold_scales_down_with_shots():
    row = np.array([1.0, 0.5 + 0.1j, -0.2 + 0.3j])
    t_small = gr.shot_threshold(row, 10**6, 2)
    t_big = gr.shot_threshold(row, 10**2, 2)
    assert t_big > t_small >= 1e-6
