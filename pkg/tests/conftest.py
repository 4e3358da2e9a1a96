import numpy as np
import pytest

from fsvff import ansatz as az
from fsvff import cost as co
from fsvff import hamiltonian as ham
from fsvff import pipelines as pl
from fsvff import statevector as sv


def random_state(n, rng):
    a = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    a /= np.linalg.norm(a)
    return sv.QuantumState(n, a)


def random_circuit(n, rng, depth=8, kinds=("rx", "ry", "rz", "rzz", "givens", "cnot", "h")):
    gates = []
    p = 0
    for _ in range(depth):
        kind = rng.choice(kinds)
        if kind in ("rx", "ry", "rz", "h", "x"):
            targets = (int(rng.integers(0, n)),)
        else:
            if n < 2:
                continue
            q = rng.choice(n, size=2, replace=False)
            targets = (int(q[0]), int(q[1]))
        if kind in ("cnot", "h", "x"):
            gates.append(sv.Gate(kind, targets))
        else:
            gates.append(sv.Gate(kind, targets, param_index=p))
            p += 1
    return sv.Circuit(n, gates, p)


def kron_embed(m, targets, n):
    """Independent oracle: embed a small matrix by explicit index arithmetic."""
    k = len(targets)
    dim = 2**n
    full = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        colbits = [(col >> (n - 1 - q)) & 1 for q in range(n)]
        loc_in = 0
        for t in targets:
            loc_in = (loc_in << 1) | colbits[t]
        for loc_out in range(2**k):
            amp = m[loc_out, loc_in]
            if amp == 0:
                continue
            outbits = list(colbits)
            for i, t in enumerate(targets):
                outbits[t] = (loc_out >> (k - 1 - i)) & 1
            row = 0
            for b in outbits:
                row = (row << 1) | b
            full[row, col] += amp
    return full


def dense_circuit_oracle(circ, params=None):
    """Per-gate kron products multiplied in order; independent of the
    package's block-apply path."""
    u = np.eye(2**circ.n_qubits, dtype=complex)
    for g in circ.gates:
        gm = sv.gate_matrix(g, params)
        if g.kind == "gphase":
            u = gm[0, 0] * u
        else:
            u = kron_embed(gm, g.targets, circ.n_qubits) @ u
    return u


@pytest.fixture(scope="session")
def trained_2q():
    """Hardware-ansatz diagonalization of the 2-qubit XY Trotter step,
    polished to the numerical floor."""
    trained, res, ts = pl.train_hardware_xy(seed=3)
    assert res.final_cost < 1e-12
    return trained, res, ts


@pytest.fixture(scope="session")
def trained_3q():
    """Layered-ansatz diagonalization of the 3-qubit XY first-order Trotter
    step at delta_t = 1."""
    trained, res, ts = pl.train_layered_xy(3, "110", seed=2)
    assert res.final_cost < 1e-10
    return trained, res, ts
