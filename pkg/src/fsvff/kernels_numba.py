"""Numba-jitted gate kernels.

Same contract as kernels_numpy: in-place on a complex128 vector, qubit 0 is
the most significant index bit. Sequential loops keep results bitwise
deterministic; bit-insertion enumerates each 2- or 4-amplitude block once.
"""

import numpy as np
from numba import njit

from . import kernels_numpy


@njit(cache=True)
def _apply_1q_pos(amps, pos, m00, m01, m10, m11):
    bit = 1 << pos
    low = bit - 1
    for i in range(amps.shape[0] >> 1):
        i0 = ((i & ~low) << 1) | (i & low)
        i1 = i0 | bit
        a0 = amps[i0]
        a1 = amps[i1]
        amps[i0] = m00 * a0 + m01 * a1
        amps[i1] = m10 * a0 + m11 * a1


@njit(cache=True)
def _apply_2q_pos(amps, pos_hi, pos_lo, m):
    bh = 1 << pos_hi
    bl = 1 << pos_lo
    pa = max(pos_hi, pos_lo)
    pb = min(pos_hi, pos_lo)
    lowa = (1 << pa) - 1
    lowb = (1 << pb) - 1
    for i in range(amps.shape[0] >> 2):
        t = ((i & ~lowb) << 1) | (i & lowb)
        base = ((t & ~lowa) << 1) | (t & lowa)
        i1 = base | bl
        i2 = base | bh
        i3 = i1 | bh
        a0 = amps[base]
        a1 = amps[i1]
        a2 = amps[i2]
        a3 = amps[i3]
        amps[base] = m[0, 0] * a0 + m[0, 1] * a1 + m[0, 2] * a2 + m[0, 3] * a3
        amps[i1] = m[1, 0] * a0 + m[1, 1] * a1 + m[1, 2] * a2 + m[1, 3] * a3
        amps[i2] = m[2, 0] * a0 + m[2, 1] * a1 + m[2, 2] * a2 + m[2, 3] * a3
        amps[i3] = m[3, 0] * a0 + m[3, 1] * a1 + m[3, 2] * a2 + m[3, 3] * a3


@njit(cache=True)
def _apply_cnot_pos(amps, pos_c, pos_t):
    bc = 1 << pos_c
    bt = 1 << pos_t
    pa = max(pos_c, pos_t)
    pb = min(pos_c, pos_t)
    lowa = (1 << pa) - 1
    lowb = (1 << pb) - 1
    for i in range(amps.shape[0] >> 2):
        t = ((i & ~lowb) << 1) | (i & lowb)
        base = ((t & ~lowa) << 1) | (t & lowa)
        i10 = base | bc
        i11 = i10 | bt
        tmp = amps[i10]
        amps[i10] = amps[i11]
        amps[i11] = tmp


def apply_1q(amps, n, q, m):
    pos = n - 1 - q
    _apply_1q_pos(amps, pos, m[0, 0], m[0, 1], m[1, 0], m[1, 1])


def apply_2q(amps, n, q0, q1, m):
    _apply_2q_pos(amps, n - 1 - q0, n - 1 - q1, np.ascontiguousarray(m))


def apply_cnot(amps, n, qc, qt):
    _apply_cnot_pos(amps, n - 1 - qc, n - 1 - qt)


# k >= 3 targets are rare (controlled two-qubit gates in Hadamard tests);
# the numpy path is fine there.
apply_kq = kernels_numpy.apply_kq
apply_diag = kernels_numpy.apply_diag
