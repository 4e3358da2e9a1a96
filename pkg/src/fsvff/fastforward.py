"""Fast-forwarded evolution versus iterated Trotter: fidelity curves,
high-fidelity times, the fast-forwarding ratio, and the N^2 error bound.

The bound is checked on the subspace blocks: with B an orthonormal basis of
the Krylov space of (U, psi_0), U_par = B^dag U B and V_par = B^dag V B obey
1 - F_N <= N^2 ||U_par - V_par||_inf^2 for the projected echo fidelity."""

from dataclasses import dataclass

import numpy as np

from .ansatz import FsvffAnsatz, apply_v, dense_v
from .cost import TrainingSet
from .exceptions import ConfigError, SizeError
from .noise import (
    DensityMatrix,
    NoiseModel,
    ansatz_step_circuit,
    from_pure,
    noisy_circuit,
)
from .statevector import Circuit, QuantumState, dense_unitary, overlap_squared


@dataclass
class FidelityCurve:
    delta_t: float
    steps: np.ndarray
    fidelity: np.ndarray
    reference: str  # "exact_h" | "iterated_trotter"
    path: str  # "pure" | "noisy"


@dataclass
class FastForwardReport:
    curve: FidelityCurve
    t_ff: int
    t_trot: int
    ratio: float
    bound_constant: float


def _dense_u(ts: TrainingSet) -> np.ndarray:
    if isinstance(ts.u_step, Circuit):
        return dense_unitary(ts.u_step)
    return np.asarray(ts.u_step)


def unitary_power_states(u: np.ndarray, psi0: np.ndarray, n_max: int):
    """psi, U psi, ..., U^n_max psi via the eigenphases (u must be unitary)."""
    evals, evecs = np.linalg.eig(u)
    # re-orthonormalize the eigenbasis: eig on a normal matrix can return
    # slightly non-orthogonal vectors inside degenerate clusters
    q, _ = np.linalg.qr(evecs)
    # rotating within degenerate clusters is harmless for powers; project
    # phases onto the new basis by Rayleigh quotient
    phases = np.einsum("ij,jk,ki->i", q.conj().T, u, q)
    coef = q.conj().T @ psi0
    out = np.empty((n_max + 1, len(psi0)), dtype=np.complex128)
    acc = np.ones_like(phases)
    for n in range(n_max + 1):
        out[n] = q @ (acc * coef)
        acc = acc * phases
    return out


def reference_states(ts: TrainingSet, n_max: int, reference: str, delta_t: float):
    psi0 = ts.psi0.amplitudes
    if reference == "iterated_trotter":
        return unitary_power_states(_dense_u(ts), psi0, n_max)
    if reference == "exact_h":
        if ts.continuous is None:
            raise ConfigError("exact_h reference needs a continuous-time oracle")
        u1 = np.asarray(ts.continuous(delta_t))
        return unitary_power_states(u1, psi0, n_max)
    raise ConfigError(f"unknown reference {reference!r}")


def fidelity_curve(
    ansatz: FsvffAnsatz,
    ts: TrainingSet,
    n_max: int,
    reference: str = "iterated_trotter",
    path: str = "pure",
    model: NoiseModel | None = None,
) -> FidelityCurve:
    """F(N) between the fast-forwarded state after N steps and the reference
    evolution; the noisy path runs the constant-depth circuit through the
    model and scores <psi_ref| rho |psi_ref>."""
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    if path == "noisy" and model is None:
        raise ConfigError("noisy path needs a noise model")
    dt = ansatz.d.delta_t
    refs = reference_states(ts, n_max, reference, dt)
    steps = np.arange(n_max + 1)
    fid = np.empty(n_max + 1)
    if path == "pure":
        for n in steps:
            sim = apply_v(ansatz, ts.psi0, int(n))
            fid[n] = abs(np.vdot(refs[n], sim.amplitudes)) ** 2
    else:
        rho0 = from_pure(ts.psi0)
        for n in steps:
            circ = ansatz_step_circuit(ansatz, int(n) * dt)
            rho = noisy_circuit(rho0, circ, None, model)
            fid[n] = float(np.real(refs[n].conj() @ rho.matrix @ refs[n]))
    return FidelityCurve(dt, steps, fid, reference, path)


def iterated_trotter_curve(
    ts: TrainingSet,
    n_max: int,
    path: str = "pure",
    model: NoiseModel | None = None,
) -> FidelityCurve:
    """Baseline: apply the step circuit N times. Pure path scores against the
    exact evolution (Trotter error only); noisy path scores against the
    noiseless iterated-Trotter state, with circuit depth growing in N."""
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    if not isinstance(ts.u_step, Circuit):
        raise ConfigError("iterated-Trotter curve needs the step as a circuit")
    steps = np.arange(n_max + 1)
    fid = np.empty(n_max + 1)
    dt = ts.delta_t or 0.0
    if path == "pure":
        if ts.continuous is None or ts.delta_t is None:
            raise ConfigError(
                "pure iterated-Trotter curve needs the exact oracle and delta_t"
            )
        refs = reference_states(ts, n_max, "exact_h", ts.delta_t)
        state = ts.psi0
        fid[0] = overlap_squared(QuantumState(ts.psi0.n_qubits, refs[0]), state)
        from .statevector import apply_circuit

        for n in range(1, n_max + 1):
            state = apply_circuit(state, ts.u_step)
            fid[n] = abs(np.vdot(refs[n], state.amplitudes)) ** 2
        return FidelityCurve(dt, steps, fid, "exact_h", "pure")
    if model is None:
        raise ConfigError("noisy path needs a noise model")
    refs = reference_states(ts, n_max, "iterated_trotter", dt)
    rho = from_pure(ts.psi0)
    fid[0] = float(np.real(refs[0].conj() @ rho.matrix @ refs[0]))
    for n in range(1, n_max + 1):
        rho = noisy_circuit(rho, ts.u_step, None, model)
        fid[n] = float(np.real(refs[n].conj() @ rho.matrix @ refs[n]))
    return FidelityCurve(dt, steps, fid, "iterated_trotter", "noisy")


def high_fidelity_time(curve: FidelityCurve, delta: float) -> int:
    """Largest N with F(N') >= 1-delta for all N' <= N; the first crossing
    governs even if the curve recovers later."""
    if not 0 < delta < 1:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    level = 1.0 - delta
    for n, f in zip(curve.steps, curve.fidelity):
        if f < level:
            return max(int(n) - 1, 0)
    return int(curve.steps[-1])


def gram_schmidt_basis(vectors) -> np.ndarray:
    """Orthonormal columns spanning the given vectors, with
    re-orthogonalization; near-dependent vectors are dropped."""
    basis = []
    for v in vectors:
        w = np.array(v, dtype=np.complex128)
        for b in basis:
            w = w - b * np.vdot(b, w)
        for b in basis:  # second pass for numerical safety
            w = w - b * np.vdot(b, w)
        nrm = np.linalg.norm(w)
        if nrm > 1e-9:
            basis.append(w / nrm)
    return np.array(basis).T


def error_bound_check(
    ansatz: FsvffAnsatz, ts: TrainingSet, n_max: int
) -> tuple:
    """(||U_par - V_par||_inf, largest relative bound violation)."""
    n = ts.psi0.n_qubits
    if n > 8:
        raise SizeError("error bound check limited to 8 qubits")
    u = _dense_u(ts)
    psi0 = ts.psi0.amplitudes
    vecs = [psi0]
    for _ in range(ts.n_eig - 1):
        vecs.append(u @ vecs[-1])
    basis = gram_schmidt_basis(vecs)
    u_par = basis.conj().T @ u @ basis
    v_par = basis.conj().T @ dense_v(ansatz, 1) @ basis
    # the echo fidelity ignores a global phase of V, so align it before
    # taking the norm; the bound stays valid for any fixed alignment
    tr = np.trace(v_par.conj().T @ u_par)
    if abs(tr) > 1e-12:
        v_par = v_par * (tr / abs(tr))
    a = float(np.linalg.norm(u_par - v_par, 2))
    coords = basis.conj().T @ psi0
    uvec = coords.copy()
    vvec = coords.copy()
    worst = 0.0
    for n_step in range(1, n_max + 1):
        uvec = u_par @ uvec
        vvec = v_par @ vvec
        infid = 1.0 - abs(np.vdot(vvec, uvec)) ** 2
        bound = (n_step * a) ** 2
        worst = max(worst, (infid - bound - 1e-10) / max(bound, 1e-10))
    return a, max(worst, 0.0)


def echo_fidelity(ts: TrainingSet, ansatz: FsvffAnsatz, tau: int) -> float:
    """|<psi_0|(V^dag)^tau U^tau|psi_0>|^2 from dense powers."""
    refs = unitary_power_states(_dense_u(ts), ts.psi0.amplitudes, tau)
    sim = apply_v(ansatz, ts.psi0, tau)
    return float(abs(np.vdot(sim.amplitudes, refs[tau])) ** 2)


def loglog_quadratic_fit(steps, infidelity, floor=1e-14):
    """(slope, r_squared) of log(1-F) vs log(N) over points above the floor."""
    steps = np.asarray(steps, dtype=float)
    infid = np.asarray(infidelity, dtype=float)
    keep = (steps > 0) & (infid > floor)
    x = np.log(steps[keep])
    y = np.log(infid[keep])
    if len(x) < 3:
        raise ValueError("not enough points above the floor for a fit")
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    return float(slope), 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
