"""Kernel backend selection.

The statevector hot loops ship in two implementations: numba-jitted
(kernels_numba) and pure numpy (kernels_numpy). The env var FSVFF_KERNELS
picks one: "numba", "numpy", or "auto" (default; numba when importable).
`benchmarks/bench_kernels.py` compares the two.
"""

import os

from . import kernels_numpy

_requested = os.environ.get("FSVFF_KERNELS", "auto").lower()
if _requested not in ("auto", "numba", "numpy"):
    raise ValueError(
        f"FSVFF_KERNELS must be 'auto', 'numba' or 'numpy', got {_requested!r}"
    )

if _requested == "numpy":
    _impl = kernels_numpy
    _name = "numpy"
else:
    try:
        from . import kernels_numba as _impl

        _name = "numba"
    except ImportError:
        if _requested == "numba":
            raise
        _impl = kernels_numpy
        _name = "numpy"


def active_kernels() -> str:
    """Name of the kernel set in use ("numba" or "numpy")."""
    return _name


def get_kernels(name=None):
    """Kernel module by name; default is the active one."""
    if name is None or name == _name:
        return _impl
    if name == "numpy":
        return kernels_numpy
    if name == "numba":
        from . import kernels_numba

        return kernels_numba
    raise ValueError(f"unknown kernel set {name!r}")


apply_1q = _impl.apply_1q
apply_2q = _impl.apply_2q
apply_cnot = _impl.apply_cnot
apply_kq = _impl.apply_kq
apply_diag = _impl.apply_diag
