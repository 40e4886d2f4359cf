"""Dense multi-qubit linear algebra primitives.

Everything here works on plain complex numpy arrays. Qubit 0 is the most
significant tensor factor, i.e. the leftmost operand of every Kronecker
product; this convention is fixed globally.
"""

import functools
from dataclasses import dataclass, field

import numpy as np

# Pauli matrices and the single-qubit identity.
I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

PAULI = {"I": I2, "X": SIGMA_X, "Y": SIGMA_Y, "Z": SIGMA_Z}

HERM_ATOL = 1e-10
TRACE_ATOL = 1e-10
PSD_ATOL = 1e-9
UNITARY_ATOL = 1e-9


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product; dimensions multiply."""
    return np.kron(a, b)


def kron_all(*factors: np.ndarray) -> np.ndarray:
    """Left-to-right Kronecker product of any number of factors."""
    out = factors[0]
    for f in factors[1:]:
        out = np.kron(out, f)
    return out


def num_qubits(matrix: np.ndarray) -> int:
    dim = matrix.shape[0]
    n = dim.bit_length() - 1
    if matrix.shape != (dim, dim) or 2**n != dim:
        raise ValueError(f"matrix shape {matrix.shape} is not square power-of-2")
    return n


@functools.lru_cache(maxsize=None)
def pauli_embed(axis: str, site: int, n: int) -> np.ndarray:
    """sigma_axis on `site`, identity on all other qubits; dimension 2^n.

    Results are cached and returned read-only; copy before mutating.
    """
    if not 0 <= site < n:
        raise ValueError(f"site {site} out of range for {n} qubits")
    factors = [I2] * n
    factors[site] = PAULI[axis]
    out = kron_all(*factors)
    out.flags.writeable = False
    return out


def partial_trace(rho: np.ndarray, keep, n: int | None = None) -> np.ndarray:
    """Reduced state on the kept qubits, in their original relative order.

    `keep` is any iterable of qubit indices; duplicates are rejected.
    """
    if n is None:
        n = num_qubits(rho)
    keep = sorted(keep)
    if len(keep) != len(set(keep)):
        raise ValueError("duplicate indices in keep")
    if not keep:
        raise ValueError("keep must be nonempty")
    if keep[0] < 0 or keep[-1] >= n:
        raise ValueError(f"keep indices {keep} out of range for {n} qubits")
    traced = [q for q in range(n) if q not in keep]
    t = rho.reshape([2] * (2 * n))
    nq = n
    # Descending order: earlier (smaller) indices stay valid after each trace.
    for q in sorted(traced, reverse=True):
        t = np.trace(t, axis1=q, axis2=q + nq)
        nq -= 1
    d = 2 ** len(keep)
    return t.reshape(d, d)


def permute_qubits(rho: np.ndarray, order: list[int]) -> np.ndarray:
    """Reorder tensor factors so that current qubit `order[p]` lands at `p`.

    `order` lists, for each output position, which input qubit goes there.
    """
    n = num_qubits(rho)
    if sorted(order) != list(range(n)):
        raise ValueError(f"order {order} is not a permutation of 0..{n - 1}")
    axes = list(order) + [q + n for q in order]
    d = 2**n
    return rho.reshape([2] * (2 * n)).transpose(axes).reshape(d, d)


def expectation(rho: np.ndarray, obs: np.ndarray, imag_tol: float = 1e-10) -> float:
    """Tr[obs . rho] for Hermitian obs; rejects a non-negligible imaginary part."""
    if rho.shape != obs.shape:
        raise ValueError(f"dimension mismatch: rho {rho.shape}, obs {obs.shape}")
    val = np.trace(obs @ rho)
    if abs(val.imag) > imag_tol:
        raise ValueError(f"expectation has imaginary part {val.imag:.3e}; state corrupted")
    return float(val.real)


def is_hermitian(m: np.ndarray, atol: float = HERM_ATOL) -> bool:
    return bool(np.max(np.abs(m - m.conj().T)) <= atol)


def is_unitary(m: np.ndarray, atol: float = UNITARY_ATOL) -> bool:
    return bool(np.max(np.abs(m @ m.conj().T - np.eye(m.shape[0]))) <= atol)


def check_density_matrix(rho: np.ndarray, herm_atol: float = HERM_ATOL,
                         trace_atol: float = TRACE_ATOL, psd_atol: float = PSD_ATOL) -> None:
    """Raise ValueError unless rho is Hermitian, unit-trace and numerically PSD."""
    num_qubits(rho)
    if not np.all(np.isfinite(rho.view(float))):
        raise ValueError("density matrix has non-finite entries")
    if not is_hermitian(rho, herm_atol):
        raise ValueError("density matrix not Hermitian within tolerance")
    tr = np.trace(rho)
    if abs(tr - 1.0) > trace_atol:
        raise ValueError(f"trace {tr} deviates from 1 beyond tolerance")
    w = np.linalg.eigvalsh(rho)
    if w[0] < -psd_atol:
        raise ValueError(f"minimum eigenvalue {w[0]:.3e} below PSD tolerance")


@dataclass(frozen=True)
class HermitianOperator:
    """Hamiltonian with its spectral decomposition cached for exact evolution."""

    matrix: np.ndarray
    eigenvalues: np.ndarray = field(init=False, repr=False)
    eigenvectors: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not is_hermitian(self.matrix):
            raise ValueError("operator not Hermitian within tolerance")
        w, v = np.linalg.eigh(self.matrix)
        object.__setattr__(self, "eigenvalues", w)
        object.__setattr__(self, "eigenvectors", v)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def herm_expm(h: HermitianOperator, t: float) -> np.ndarray:
    """exp(-i H t) via the cached spectral decomposition; exactly unitary up to eigensolver error."""
    phases = np.exp(-1j * h.eigenvalues * t)
    v = h.eigenvectors
    return (v * phases) @ v.conj().T


def zero_state(n: int) -> np.ndarray:
    """Density matrix of the pure product state |0...0> on n qubits."""
    d = 2**n
    rho = np.zeros((d, d), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def maximally_mixed(n: int) -> np.ndarray:
    d = 2**n
    return np.eye(d, dtype=complex) / d


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Half the trace norm of a - b."""
    w = np.linalg.eigvalsh(a - b)
    return float(0.5 * np.sum(np.abs(w)))
