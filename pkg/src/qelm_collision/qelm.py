"""Reservoir half of the QELM: transverse-field Ising network, state injection,
evolution, Pauli measurement, and feature augmentation.

The reservoir is reset for every input (one-shot feature map); temporal memory
lives entirely in the feature concatenation done by `augment`.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from . import qcore
from .qcore import HermitianOperator

EXTENSIONS = ("none", "past_step", "fixed_step", "extra_observable")


@dataclass(frozen=True)
class ReservoirConfig:
    """Fixed reservoir parameters for one realization."""

    j_matrix: np.ndarray  # symmetric, zero diagonal, entries in [-j_scale/2, j_scale/2]
    n_res: int = 5
    h: float = 1.0
    j_scale: float = 1.0
    evolve_time: float = 10.0
    input_sites: tuple = (0, 1)
    ancilla_init: np.ndarray | None = None  # defaults to |0...0> on the non-input sites
    seed: int = 0

    def __post_init__(self):
        j = np.asarray(self.j_matrix)
        if j.shape != (self.n_res, self.n_res):
            raise ValueError(f"j_matrix shape {j.shape}, expected ({self.n_res}, {self.n_res})")
        if np.max(np.abs(j - j.T)) > 1e-12 or np.max(np.abs(np.diag(j))) > 1e-12:
            raise ValueError("j_matrix must be symmetric with zero diagonal")
        if np.max(np.abs(j)) > self.j_scale / 2 + 1e-12:
            raise ValueError(f"j_matrix entries exceed j_scale/2 = {self.j_scale / 2}")
        sites = tuple(self.input_sites)
        if len(set(sites)) != len(sites) or any(not 0 <= s < self.n_res for s in sites):
            raise ValueError(f"bad input_sites {sites} for {self.n_res} reservoir qubits")

    @property
    def n_ancilla(self) -> int:
        return self.n_res - len(self.input_sites)


def sample_reservoir_couplings(rng: np.random.Generator, n_res: int,
                               j_scale: float = 1.0) -> np.ndarray:
    """Symmetric coupling matrix, each pair drawn uniformly from [-j_scale/2, j_scale/2]."""
    j = np.zeros((n_res, n_res))
    for i in range(n_res):
        for k in range(i + 1, n_res):
            j[i, k] = j[k, i] = rng.uniform(-j_scale / 2, j_scale / 2)
    return j


def build_reservoir_hamiltonian(cfg: ReservoirConfig) -> HermitianOperator:
    """All-to-all Ising coupling in X plus a transverse field in Z."""
    n = cfg.n_res
    d = 2**n
    h = np.zeros((d, d), dtype=complex)
    for i in range(n):
        for k in range(i + 1, n):
            if cfg.j_matrix[i][k] != 0:
                h += cfg.j_matrix[i][k] * qcore.pauli_embed("X", i, n) @ qcore.pauli_embed("X", k, n)
        h += cfg.h * qcore.pauli_embed("Z", i, n)
    return HermitianOperator(h)


def inject(rho_in: np.ndarray, cfg: ReservoirConfig) -> np.ndarray:
    """Place rho_in on the input sites, the ancilla state on the rest."""
    n_in = qcore.num_qubits(rho_in)
    if n_in != len(cfg.input_sites):
        raise ValueError(f"input has {n_in} qubits, config expects {len(cfg.input_sites)}")
    ancilla = cfg.ancilla_init if cfg.ancilla_init is not None else qcore.zero_state(cfg.n_ancilla)
    rest = [q for q in range(cfg.n_res) if q not in cfg.input_sites]
    joint = qcore.kron(rho_in, ancilla)
    # Tensor position p of `joint` currently holds reservoir qubit layout[p].
    layout = list(cfg.input_sites) + rest
    order = [layout.index(q) for q in range(cfg.n_res)]
    return qcore.permute_qubits(joint, order)


def evolve_and_measure(rho_res: np.ndarray, h_res: HermitianOperator, t: float,
                       bases: str = "Z") -> np.ndarray:
    """Evolve under exp(-i H t) and return single-qubit Pauli expectations.

    `bases` is a string of axis labels; the output concatenates, per axis,
    the expectations on every reservoir qubit.
    """
    if rho_res.shape[0] != h_res.dim:
        raise ValueError("state and Hamiltonian dimensions differ")
    n = qcore.num_qubits(rho_res)
    u = qcore.herm_expm(h_res, t)
    evolved = u @ rho_res @ u.conj().T
    return np.array([
        qcore.expectation(evolved, qcore.pauli_embed(axis, i, n))
        for axis in bases for i in range(n)
    ])


class QELMFeatureMap(TransformerMixin, BaseEstimator):
    """One-shot reservoir feature map over a sequence of input states.

    transform() takes a list of system density matrices (or a Trajectory)
    and returns (raw_z, raw_x): two (K, n_res) arrays of Z- and X-basis
    expectations of the evolved reservoir. X features are computed alongside
    Z so the extra-observable extension needs no second evolution.
    """

    def __init__(self, config: ReservoirConfig):
        self.config = config

    def fit(self, X=None, y=None):
        cfg = self.config
        h_res = build_reservoir_hamiltonian(cfg)
        self.unitary_ = qcore.herm_expm(h_res, cfg.evolve_time)
        n = cfg.n_res
        self.observables_ = {
            axis: [qcore.pauli_embed(axis, i, n) for i in range(n)] for axis in "ZX"
        }
        return self

    def transform(self, X):
        if not hasattr(self, "unitary_"):
            self.fit()
        states = X.states if hasattr(X, "states") else X
        if len(states) == 0:
            raise ValueError("empty trajectory")
        u = self.unitary_
        raw_z, raw_x = [], []
        for rho_s in states:
            evolved = u @ inject(rho_s, self.config) @ u.conj().T
            raw_z.append([qcore.expectation(evolved, o) for o in self.observables_["Z"]])
            raw_x.append([qcore.expectation(evolved, o) for o in self.observables_["X"]])
        return np.array(raw_z), np.array(raw_x)


def features_for_trajectory(traj, cfg: ReservoirConfig):
    """Z- and X-basis feature vectors for every state of a trajectory."""
    return QELMFeatureMap(cfg).fit().transform(traj)


def augment(raw_z: np.ndarray, raw_x: np.ndarray, k: int, mode: str,
            k1: int = 1) -> np.ndarray:
    """Feature vector at collision step k (1-based) under the given extension.

    none            -> z_k
    past_step       -> (z_k, z_{k-1}),  requires k >= 2
    fixed_step      -> (z_k, z_{k1}),   requires k1 <= k
    extra_observable-> (z_k, x_k)
    """
    n_steps = len(raw_z)
    if not 1 <= k <= n_steps:
        raise ValueError(f"step {k} out of range 1..{n_steps}")
    zk = raw_z[k - 1]
    if mode == "none":
        return np.array(zk)
    if mode == "past_step":
        if k < 2:
            raise ValueError("past_step extension needs k >= 2")
        return np.concatenate([zk, raw_z[k - 2]])
    if mode == "fixed_step":
        if not 1 <= k1 <= k:
            raise ValueError(f"fixed_step reference k1={k1} must satisfy 1 <= k1 <= k")
        return np.concatenate([zk, raw_z[k1 - 1]])
    if mode == "extra_observable":
        return np.concatenate([zk, raw_x[k - 1]])
    raise ValueError(f"unknown extension mode {mode!r}")


def valid_steps(mode: str, n_steps: int, k1: int = 1) -> list[int]:
    """Collision steps at which the extension is defined."""
    if mode == "past_step":
        return list(range(2, n_steps + 1))
    if mode == "fixed_step":
        return list(range(k1, n_steps + 1))
    return list(range(1, n_steps + 1))
