"""Quantum channels for the collision model: partial swaps, depolarization, Kraus maps."""

from dataclasses import dataclass, field

import numpy as np

import functools

from .qcore import num_qubits, pauli_embed

CPTP_ATOL = 1e-10


@dataclass(frozen=True)
class KrausChannel:
    """Completely positive trace-preserving map as a list of Kraus operators."""

    operators: list = field(default_factory=list)
    label: str = ""

    def __post_init__(self):
        if not self.operators:
            raise ValueError("channel needs at least one Kraus operator")
        if not verify_cptp(self.operators, CPTP_ATOL):
            raise ValueError(f"Kraus operators of '{self.label}' are not trace-preserving")

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]


def verify_cptp(operators, tol: float = CPTP_ATOL) -> bool:
    """True iff sum_i K_i^dag K_i is the identity to `tol` entrywise."""
    dim = operators[0].shape[0]
    acc = sum(k.conj().T @ k for k in operators)
    return bool(np.max(np.abs(acc - np.eye(dim))) <= tol)


@functools.lru_cache(maxsize=None)
def swap_embedded(pair: tuple[int, int], n: int) -> np.ndarray:
    """SWAP between the two given qubits, identity elsewhere.

    Uses SWAP = (II + XX + YY + ZZ)/2 on the pair. Cached, read-only.
    """
    a, b = pair
    if a == b:
        raise ValueError("swap pair must be distinct qubits")
    d = 2**n
    out = np.eye(d, dtype=complex)
    for axis in "XYZ":
        out = out + pauli_embed(axis, a, n) @ pauli_embed(axis, b, n)
    out /= 2
    out.flags.writeable = False
    return out


def partial_swap(chi: float, pair: tuple[int, int], n: int) -> np.ndarray:
    """cos(chi) I + i sin(chi) SWAP on the given pair, embedded in n qubits."""
    if not 0 <= chi <= np.pi / 2:
        raise ValueError(f"chi={chi} outside [0, pi/2]")
    d = 2**n
    return np.cos(chi) * np.eye(d, dtype=complex) + 1j * np.sin(chi) * swap_embedded(pair, n)


def depolarizing_kraus(lam: float, site: int, n: int) -> list[np.ndarray]:
    """Four-operator single-qubit depolarizing channel embedded on `site`."""
    if not 0 <= lam <= 1:
        raise ValueError(f"lambda={lam} outside [0, 1]")
    d = 2**n
    ops = [np.sqrt(1 - 3 * lam / 4) * np.eye(d, dtype=complex)]
    for axis in "XYZ":
        ops.append(np.sqrt(lam / 4) * pauli_embed(axis, site, n))
    return ops


def depolarize_qubit(rho: np.ndarray, lam: float, site: int) -> np.ndarray:
    """Apply the depolarizing channel of strength lam to one qubit of rho.

    Same four-operator Kraus sum as depolarizing_kraus, with the scalar
    prefactors pulled out so the embedded Paulis stay cached.
    """
    if not 0 <= lam <= 1:
        raise ValueError(f"lambda={lam} outside [0, 1]")
    n = num_qubits(rho)
    out = (1 - 3 * lam / 4) * rho
    for axis in "XYZ":
        sigma = pauli_embed(axis, site, n)
        out += (lam / 4) * (sigma @ rho @ sigma)
    return out


def apply_kraus(rho: np.ndarray, channel: KrausChannel) -> np.ndarray:
    if rho.shape[0] != channel.dim:
        raise ValueError(f"dimension mismatch: rho {rho.shape[0]}, channel {channel.dim}")
    out = np.zeros_like(rho)
    for k in channel.operators:
        out += k @ rho @ k.conj().T
    return out


def apply_unitary(rho: np.ndarray, u: np.ndarray) -> np.ndarray:
    if rho.shape != u.shape:
        raise ValueError(f"dimension mismatch: rho {rho.shape}, u {u.shape}")
    return u @ rho @ u.conj().T
