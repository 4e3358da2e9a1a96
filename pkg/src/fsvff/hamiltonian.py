"""Pauli-string Hamiltonians, exact dense evolution, and Trotter circuits.

Letter j of a Pauli string acts on qubit j (qubit 0 = index MSB). Trotter
circuits exponentiate terms in construction order: XX sweep then YY sweep
for the XY chain, hopping then interaction for Fermi-Hubbard.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import ParseError, ShapeError, SizeError
from .statevector import MAX_DENSE_QUBITS, Circuit, Gate, QuantumState

_PAULI = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


@dataclass(frozen=True)
class PauliString:
    n_qubits: int
    letters: str

    def __post_init__(self):
        if len(self.letters) != self.n_qubits:
            raise ShapeError(
                f"{len(self.letters)} letters for {self.n_qubits} qubits"
            )
        if set(self.letters) - set("IXYZ"):
            raise ParseError(f"bad Pauli letters {self.letters!r}")


@dataclass
class PauliSum:
    n_qubits: int
    terms: list  # [(coefficient, letters)]

    def __post_init__(self):
        for coeff, letters in self.terms:
            if len(letters) != self.n_qubits:
                raise ShapeError(
                    f"term {letters!r} does not span {self.n_qubits} qubits"
                )
            if set(letters) - set("IXYZ"):
                raise ParseError(f"bad Pauli letters {letters!r}")
            if not np.isfinite(coeff):
                raise ValueError(f"non-finite coefficient {coeff}")


@dataclass(frozen=True)
class TrotterSpec:
    order: str
    delta_t: float
    n_substeps: int = 1

    def __post_init__(self):
        if self.order not in ("first", "second"):
            raise ValueError(f"order must be 'first' or 'second', got {self.order!r}")
        if not np.isfinite(self.delta_t) or self.delta_t == 0:
            raise ValueError(f"delta_t must be finite nonzero, got {self.delta_t}")
        if self.n_substeps < 1:
            raise ValueError(f"n_substeps must be >= 1, got {self.n_substeps}")


def build_xy(n: int) -> PauliSum:
    """Open XY chain: sum_j X_j X_{j+1} + Y_j Y_{j+1}, unit couplings."""
    if n < 2:
        raise SizeError(f"XY chain needs n >= 2, got {n}")
    terms = []
    for letter in "XY":
        for j in range(n - 1):
            s = ["I"] * n
            s[j] = letter
            s[j + 1] = letter
            terms.append((1.0, "".join(s)))
    return PauliSum(n, terms)


def build_fermi_hubbard(L: int, J: float, U: float) -> PauliSum:
    """1D Hubbard chain on 2L qubits via Jordan-Wigner.

    Qubits 0..L-1 hold spin-up site occupations, L..2L-1 spin-down;
    |1> = occupied. Open boundaries; hopping -J, on-site repulsion U.
    """
    if L < 2:
        raise SizeError(f"Fermi-Hubbard needs L >= 2 sites, got {L}")
    n = 2 * L
    terms = []
    for offset in (0, L):
        for j in range(L - 1):
            for letter in "XY":
                s = ["I"] * n
                s[offset + j] = letter
                s[offset + j + 1] = letter
                terms.append((-J / 2.0, "".join(s)))
    if U != 0.0:
        terms.append((U * L / 4.0, "I" * n))
        for j in range(L):
            up, dn = j, j + L
            s = ["I"] * n
            s[up] = "Z"
            terms.append((-U / 4.0, "".join(s)))
            s = ["I"] * n
            s[dn] = "Z"
            terms.append((-U / 4.0, "".join(s)))
            s = ["I"] * n
            s[up] = "Z"
            s[dn] = "Z"
            terms.append((U / 4.0, "".join(s)))
    return PauliSum(n, terms)


def number_operator(n_qubits: int, qubits) -> PauliSum:
    """Sum over `qubits` of (I - Z)/2."""
    qubits = tuple(qubits)
    terms = [(len(qubits) / 2.0, "I" * n_qubits)]
    for q in qubits:
        s = ["I"] * n_qubits
        s[q] = "Z"
        terms.append((-0.5, "".join(s)))
    return PauliSum(n_qubits, terms)


def _string_masks(letters: str):
    n = len(letters)
    xmask = zmask = 0
    n_y = 0
    for j, letter in enumerate(letters):
        bit = 1 << (n - 1 - j)
        if letter in "XY":
            xmask |= bit
        if letter in "ZY":
            zmask |= bit
        if letter == "Y":
            n_y += 1
    return xmask, zmask, n_y


def apply_pauli_string(vec: np.ndarray, letters: str) -> np.ndarray:
    """P @ vec for one Pauli string, without building the dense matrix."""
    n = len(letters)
    xmask, zmask, n_y = _string_masks(letters)
    idx = np.arange(2**n, dtype=np.uint64)
    parity = np.bitwise_count(idx & np.uint64(zmask)) & 1
    phases = (1j**n_y) * np.where(parity, -1.0, 1.0)
    out = np.empty_like(vec)
    out[idx ^ np.uint64(xmask)] = phases * vec
    return out


def dense_matrix(h: PauliSum) -> np.ndarray:
    if h.n_qubits > MAX_DENSE_QUBITS:
        raise SizeError(
            f"dense matrix limited to {MAX_DENSE_QUBITS} qubits, got {h.n_qubits}"
        )
    dim = 2**h.n_qubits
    out = np.zeros((dim, dim), dtype=np.complex128)
    for coeff, letters in h.terms:
        m = np.array([[coeff]], dtype=np.complex128)
        for letter in letters:
            m = np.kron(m, _PAULI[letter])
        out += m
    return out


def exact_evolution(h: PauliSum, t: float) -> np.ndarray:
    """exp(-i H t) by dense eigendecomposition."""
    hm = dense_matrix(h)
    evals, evecs = np.linalg.eigh(hm)
    return (evecs * np.exp(-1j * t * evals)) @ evecs.conj().T


def expectation(h: PauliSum, state: QuantumState) -> float:
    """<psi|H|psi>."""
    if h.n_qubits != state.n_qubits:
        raise ShapeError(
            f"operator on {h.n_qubits} qubits, state on {state.n_qubits}"
        )
    acc = 0.0 + 0.0j
    for coeff, letters in h.terms:
        acc += coeff * np.vdot(state.amplitudes, apply_pauli_string(state.amplitudes, letters))
    if abs(acc.imag) > 1e-10:
        raise ValueError(f"expectation has imaginary residue {acc.imag}")
    return float(acc.real)


def _term_gadget(coeff: float, letters: str, tau: float) -> list:
    """Gates realizing exp(-i coeff P tau) exactly."""
    active = [j for j, letter in enumerate(letters) if letter != "I"]
    if not active:
        return [Gate("gphase", (), angle=-coeff * tau)]
    gates = []
    for j in active:
        if letters[j] == "X":
            gates.append(Gate("h", (j,)))
        elif letters[j] == "Y":
            gates.append(Gate("rx", (j,), angle=np.pi / 2))
    for a, b in zip(active, active[1:]):
        gates.append(Gate("cnot", (a, b)))
    gates.append(Gate("rz", (active[-1],), angle=2.0 * coeff * tau))
    for a, b in reversed(list(zip(active, active[1:]))):
        gates.append(Gate("cnot", (a, b)))
    for j in reversed(active):
        if letters[j] == "X":
            gates.append(Gate("h", (j,)))
        elif letters[j] == "Y":
            gates.append(Gate("rx", (j,), angle=-np.pi / 2))
    return gates


def trotter_circuit(h: PauliSum, spec: TrotterSpec) -> Circuit:
    """Product-formula circuit for exp(-i H delta_t)."""
    tau = spec.delta_t / spec.n_substeps
    substep = []
    if spec.order == "first":
        for coeff, letters in h.terms:
            substep.extend(_term_gadget(coeff, letters, tau))
    else:
        for coeff, letters in h.terms:
            substep.extend(_term_gadget(coeff, letters, tau / 2.0))
        for coeff, letters in reversed(h.terms):
            substep.extend(_term_gadget(coeff, letters, tau / 2.0))
    return Circuit(h.n_qubits, substep * spec.n_substeps, 0)


def format_pauli_sum(h: PauliSum) -> str:
    lines = [f"{coeff!r} {letters}" for coeff, letters in h.terms]
    return "\n".join(lines) + "\n"


def parse_pauli_sum(text: str) -> PauliSum:
    """One term per line: `coeff letter-string`, e.g. `1.0 XXI`."""
    terms = []
    n = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"line {lineno}: expected `coeff letters`, got {raw!r}")
        try:
            coeff = float(parts[0])
        except ValueError as exc:
            raise ParseError(f"line {lineno}: bad coefficient {parts[0]!r}") from exc
        letters = parts[1].upper()
        if n is None:
            n = len(letters)
        elif len(letters) != n:
            raise ParseError(
                f"line {lineno}: {len(letters)} letters, expected {n}"
            )
        terms.append((coeff, letters))
    if not terms:
        raise ParseError("no Pauli terms found")
    return PauliSum(n, terms)
