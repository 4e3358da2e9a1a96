"""Pure-numpy gate kernels.

Amplitude layout: qubit 0 is the most significant bit of the array index,
so ``amps.reshape((2,) * n)`` exposes qubit q as tensor axis q. All kernels
mutate ``amps`` in place.
"""

import numpy as np


def apply_1q(amps, n, q, m):
    lo = 1 << (n - 1 - q)
    v = amps.reshape(-1, 2, lo)
    amps[:] = np.einsum("ab,hbl->hal", m, v).reshape(-1)


def apply_2q(amps, n, q0, q1, m):
    # q0 is the high bit of the 4x4 matrix's local index
    apply_kq(amps, n, (q0, q1), m)


def apply_cnot(amps, n, qc, qt):
    v = amps.reshape((2,) * n)
    c1 = tuple(1 if q == qc else slice(None) for q in range(n))
    sub = v[c1]
    axis = qt if qt < qc else qt - 1
    v[c1] = np.flip(sub, axis=axis)


def apply_kq(amps, n, targets, m):
    k = len(targets)
    v = amps.reshape((2,) * n)
    v = np.moveaxis(v, targets, range(k))
    block = m @ v.reshape(2**k, -1)
    v = np.moveaxis(block.reshape((2,) * n), range(k), targets)
    amps[:] = v.reshape(-1)


def apply_diag(amps, diag):
    amps *= diag
