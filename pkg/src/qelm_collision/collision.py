"""Tunable non-Markovian collision model.

System qubits occupy tensor positions 0..n_sys-1, bath qubits
n_sys..n_sys+n_bath-1. One collision step applies, in order:

  1. a partial swap of strength chi between each system qubit and its
     corresponding bath qubit,
  2. a depolarizing channel of strength lam on every bath qubit,
  3. unitary evolution of the bath under its Heisenberg Hamiltonian for dt,
  4. unitary evolution of the system under its Heisenberg Hamiltonian for dt.

At lam = 1 the bath is reset to the maximally mixed state each step and the
reduced system dynamics is a Markovian map that `derive_markov_map` extracts
explicitly.
"""

from dataclasses import dataclass, field

import numpy as np

from . import channels, qcore
from .qcore import HermitianOperator


@dataclass(frozen=True)
class CollisionConfig:
    """All parameters of one collision-model realization."""

    chi: float
    lam: float
    j_sys: tuple = ()
    j_bath: tuple = ()
    n_sys: int = 2
    n_bath: int = 2
    j_scale: float = 1.0
    dt: float = 1.0
    boundary: str = "open"  # "open" or "periodic"
    sys_init: np.ndarray | None = None  # defaults to |0...0>
    bath_init: np.ndarray | None = None  # defaults to maximally mixed
    seed: int = 0

    def __post_init__(self):
        if self.n_sys != self.n_bath or self.n_sys < 1:
            raise ValueError("need n_sys == n_bath >= 1")
        if not 0 <= self.chi <= np.pi / 2:
            raise ValueError(f"chi={self.chi} outside [0, pi/2]")
        if not 0 <= self.lam <= 1:
            raise ValueError(f"lambda={self.lam} outside [0, 1]")
        if self.boundary not in ("open", "periodic"):
            raise ValueError(f"unknown boundary {self.boundary!r}")
        nb = num_bonds(self.n_sys, self.boundary)
        for name, j in (("j_sys", self.j_sys), ("j_bath", self.j_bath)):
            if len(j) != nb:
                raise ValueError(f"{name} has {len(j)} entries, expected {nb}")
            if any(abs(v) > self.j_scale + 1e-12 for v in j):
                raise ValueError(f"{name} entries exceed j_scale={self.j_scale}")

    @property
    def n_total(self) -> int:
        return self.n_sys + self.n_bath

    def initial_state(self) -> np.ndarray:
        sys0 = self.sys_init if self.sys_init is not None else qcore.zero_state(self.n_sys)
        bath0 = self.bath_init if self.bath_init is not None else qcore.maximally_mixed(self.n_bath)
        return qcore.kron(sys0, bath0)


def num_bonds(n: int, boundary: str) -> int:
    if n == 1:
        return 0
    return n if boundary == "periodic" else n - 1


def build_heisenberg(couplings, n: int, boundary: str = "open") -> HermitianOperator:
    """Isotropic Heisenberg chain (1/2) sum_bonds J (XX + YY + ZZ)."""
    nb = num_bonds(n, boundary)
    if len(couplings) != nb:
        raise ValueError(f"{len(couplings)} couplings for {nb} bonds")
    d = 2**n
    h = np.zeros((d, d), dtype=complex)
    for bond, j in enumerate(couplings):
        a, b = bond, (bond + 1) % n
        for axis in "XYZ":
            h += 0.5 * j * qcore.pauli_embed(axis, a, n) @ qcore.pauli_embed(axis, b, n)
    return HermitianOperator(h)


def sample_couplings(rng: np.random.Generator, n_bonds: int, j_scale: float) -> np.ndarray:
    """Independent uniform draws on [-j_scale, j_scale]."""
    if j_scale < 0:
        raise ValueError("j_scale must be nonnegative")
    return rng.uniform(-j_scale, j_scale, size=n_bonds)


@dataclass(frozen=True)
class StepOperators:
    """Unitaries precomputed once per configuration and reused every step."""

    swaps: list = field(default_factory=list)
    u_bath: np.ndarray | None = None
    u_sys: np.ndarray | None = None


def step_operators(cfg: CollisionConfig) -> StepOperators:
    n = cfg.n_total
    swaps = [channels.partial_swap(cfg.chi, (m, cfg.n_sys + m), n) for m in range(cfg.n_sys)]
    h_sys = build_heisenberg(cfg.j_sys, cfg.n_sys, cfg.boundary)
    h_bath = build_heisenberg(cfg.j_bath, cfg.n_bath, cfg.boundary)
    u_sys = qcore.kron(qcore.herm_expm(h_sys, cfg.dt), np.eye(2**cfg.n_bath))
    u_bath = qcore.kron(np.eye(2**cfg.n_sys), qcore.herm_expm(h_bath, cfg.dt))
    return StepOperators(swaps=swaps, u_bath=u_bath, u_sys=u_sys)


def collision_step(rho_sb: np.ndarray, cfg: CollisionConfig,
                   ops: StepOperators | None = None) -> np.ndarray:
    """One four-phase collision step on the joint system-bath state."""
    if rho_sb.shape[0] != 2**cfg.n_total:
        raise ValueError("joint state dimension does not match config")
    if ops is None:
        ops = step_operators(cfg)
    rho = rho_sb
    for p in ops.swaps:
        rho = channels.apply_unitary(rho, p)
    for m in range(cfg.n_bath):
        rho = channels.depolarize_qubit(rho, cfg.lam, cfg.n_sys + m)
    rho = channels.apply_unitary(rho, ops.u_bath)
    rho = channels.apply_unitary(rho, ops.u_sys)
    return rho


@dataclass(frozen=True)
class Trajectory:
    """Reduced system states after each of `steps` collision steps."""

    states: list
    config: CollisionConfig
    steps: int


def generate_trajectory(cfg: CollisionConfig, steps: int,
                        ops: StepOperators | None = None) -> Trajectory:
    if steps < 1:
        raise ValueError("need at least one collision step")
    if ops is None:
        ops = step_operators(cfg)
    keep = range(cfg.n_sys)
    rho = cfg.initial_state()
    states = []
    for _ in range(steps):
        rho = collision_step(rho, cfg, ops)
        states.append(qcore.partial_trace(rho, keep, cfg.n_total))
    return Trajectory(states=states, config=cfg, steps=steps)


@dataclass(frozen=True)
class MarkovMap:
    """Linear map on vectorized (row-major) system density matrices."""

    matrix: np.ndarray
    dim: int

    def apply(self, rho_s: np.ndarray) -> np.ndarray:
        return (self.matrix @ rho_s.reshape(-1)).reshape(self.dim, self.dim)


def derive_markov_map(cfg: CollisionConfig) -> MarkovMap:
    """One-step system map at lam = 1, where the bath is reset each step.

    Built by pushing the matrix-unit basis through a single collision step
    with the bath fixed at the maximally mixed state.
    """
    if cfg.lam != 1:
        raise ValueError("the system map only closes over system states at lambda = 1")
    ops = step_operators(cfg)
    d = 2**cfg.n_sys
    mixed = qcore.maximally_mixed(cfg.n_bath)
    keep = range(cfg.n_sys)
    phi = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = 1.0
            out = collision_step(qcore.kron(e, mixed), cfg, ops)
            phi[:, i * d + j] = qcore.partial_trace(out, keep, cfg.n_total).reshape(-1)
    return MarkovMap(matrix=phi, dim=d)
