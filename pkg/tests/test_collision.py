import numpy as np
import pytest

from qelm_collision import qcore
from qelm_collision.channels import apply_unitary, swap_embedded, partial_swap
from qelm_collision.collision import (
    CollisionConfig,
    build_heisenberg,
    collision_step,
    derive_markov_map,
    generate_trajectory,
    sample_couplings,
    step_operators,
)

RNG = np.random.default_rng(11)


def random_density(n_qubits, rng=RNG):
    d = 2**n_qubits
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def make_config(chi=0.4, lam=0.3, j_sys=(0.5,), j_bath=(-0.3,), **kw):
    return CollisionConfig(chi=chi, lam=lam, j_sys=j_sys, j_bath=j_bath, **kw)


class TestBuildHeisenberg:
    def test_two_site_spectrum(self):
        h = build_heisenberg([1.0], 2, "open")
        # Direct diagonalization of (1/2)(XX + YY + ZZ): singlet at -3/2, triplet at 1/2.
        w = np.sort(np.linalg.eigvalsh(h.matrix))
        assert np.allclose(w, [-1.5, 0.5, 0.5, 0.5], atol=1e-12)

    def test_zero_couplings(self):
        h = build_heisenberg([0.0, 0.0], 3, "open")
        assert np.allclose(h.matrix, 0.0)

    def test_periodic_two_sites_both_bonds_coincide(self):
        j1, j2 = 0.4, -0.9
        per = build_heisenberg([j1, j2], 2, "periodic")
        single = build_heisenberg([j1 + j2], 2, "open")
        assert np.allclose(per.matrix, single.matrix, atol=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            build_heisenberg([1.0, 2.0], 2, "open")


class TestSampleCouplings:
    def test_zero_scale(self):
        rng = np.random.default_rng(0)
        assert np.all(sample_couplings(rng, 5, 0.0) == 0.0)

    def test_determinism(self):
        a = sample_couplings(np.random.default_rng(3), 4, 1.0)
        b = sample_couplings(np.random.default_rng(3), 4, 1.0)
        assert np.array_equal(a, b)

    def test_uniform_law(self):
        draws = sample_couplings(np.random.default_rng(1), 100_000, 2.0)
        assert np.all(np.abs(draws) <= 2.0)
        # Uniform on [-2, 2]: sigma of the mean = (4/sqrt(12)) / sqrt(n).
        assert abs(np.mean(draws)) < 3 * (4 / np.sqrt(12)) / np.sqrt(len(draws))


class TestCollisionStep:
    def test_all_identity_phases(self):
        cfg = make_config(chi=0.0, lam=0.0, dt=0.0)
        rho = cfg.initial_state()
        assert np.allclose(collision_step(rho, cfg), rho, atol=1e-12)

    def test_chi_zero_decouples(self):
        cfg = make_config(chi=0.0, lam=0.0)
        rho = cfg.initial_state()
        out = collision_step(rho, cfg)
        # System marginal evolves unitarily under its own Hamiltonian alone.
        u_s = qcore.herm_expm(build_heisenberg(cfg.j_sys, 2, "open"), cfg.dt)
        expected_sys = apply_unitary(qcore.partial_trace(rho, [0, 1], 4), u_s)
        assert np.allclose(qcore.partial_trace(out, [0, 1], 4), expected_sys, atol=1e-12)

    def test_lambda_one_resets_bath(self):
        cfg = make_config(lam=1.0)
        rho = qcore.kron(random_density(2), random_density(2))
        out = collision_step(rho, cfg)
        assert np.allclose(qcore.partial_trace(out, [2, 3], 4),
                           qcore.maximally_mixed(2), atol=1e-10)

    def test_state_valid_after_every_phase(self):
        cfg = make_config(chi=0.7, lam=0.4)
        ops = step_operators(cfg)
        rho = qcore.kron(random_density(2), random_density(2))
        for p in ops.swaps:
            rho = apply_unitary(rho, p)
            qcore.check_density_matrix(rho)
        from qelm_collision.channels import depolarize_qubit
        for m in range(2):
            rho = depolarize_qubit(rho, cfg.lam, 2 + m)
            qcore.check_density_matrix(rho)
        for u in (ops.u_bath, ops.u_sys):
            rho = apply_unitary(rho, u)
            qcore.check_density_matrix(rho)

    def test_swap_order_irrelevant(self):
        # The per-pair partial swaps act on disjoint pairs and commute.
        rho = random_density(4)
        p0 = partial_swap(0.8, (0, 2), 4)
        p1 = partial_swap(0.8, (1, 3), 4)
        assert np.allclose(apply_unitary(apply_unitary(rho, p0), p1),
                           apply_unitary(apply_unitary(rho, p1), p0), atol=1e-12)

    def test_full_swap_exchanges_marginals(self):
        cfg = make_config(chi=np.pi / 2, lam=0.0, dt=0.0)
        sys0, bath0 = random_density(2), random_density(2)
        cfg = make_config(chi=np.pi / 2, lam=0.0, dt=0.0, sys_init=sys0, bath_init=bath0)
        out = collision_step(cfg.initial_state(), cfg)
        assert qcore.trace_distance(qcore.partial_trace(out, [0, 1], 4), bath0) < 1e-10
        assert qcore.trace_distance(qcore.partial_trace(out, [2, 3], 4), sys0) < 1e-10


class TestGenerateTrajectory:
    def test_chi_zero_pure_system_evolution(self):
        sys0 = random_density(2)
        cfg = make_config(chi=0.0, lam=0.5, sys_init=sys0)
        traj = generate_trajectory(cfg, 5)
        u_s = qcore.herm_expm(build_heisenberg(cfg.j_sys, 2, "open"), cfg.dt)
        expected = sys0
        purity0 = np.trace(sys0 @ sys0).real
        for state in traj.states:
            expected = apply_unitary(expected, u_s)
            assert np.allclose(state, expected, atol=1e-12)
            assert np.trace(state @ state).real == pytest.approx(purity0, abs=1e-10)

    def test_unit_trace_every_step(self):
        traj = generate_trajectory(make_config(), 8)
        for state in traj.states:
            assert abs(np.trace(state) - 1.0) <= 1e-10
            qcore.check_density_matrix(state)

    def test_bath_purity_at_lambda_one(self):
        cfg = make_config(lam=1.0)
        ops = step_operators(cfg)
        rho = cfg.initial_state()
        for _ in range(4):
            rho = collision_step(rho, cfg, ops)
            bath = qcore.partial_trace(rho, [2, 3], 4)
            purity = np.trace(bath @ bath).real
            assert purity == pytest.approx(0.25, abs=1e-10)

    def test_determinism(self):
        cfg = make_config()
        a = generate_trajectory(cfg, 6)
        b = generate_trajectory(cfg, 6)
        for sa, sb in zip(a.states, b.states):
            assert np.array_equal(sa, sb)

    def test_zero_steps_rejected(self):
        with pytest.raises(ValueError):
            generate_trajectory(make_config(), 0)


class TestDeriveMarkovMap:
    def test_identity_at_trivial_config(self):
        cfg = make_config(chi=0.0, lam=1.0, dt=0.0)
        phi = derive_markov_map(cfg)
        assert np.allclose(phi.matrix, np.eye(16), atol=1e-12)

    def test_trace_preserving(self):
        phi = derive_markov_map(make_config(lam=1.0))
        for _ in range(5):
            out = phi.apply(random_density(2))
            assert np.trace(out) == pytest.approx(1.0, abs=1e-12)

    def test_matches_single_collision_step(self):
        cfg = make_config(chi=0.9, lam=1.0)
        phi = derive_markov_map(cfg)
        ops = step_operators(cfg)
        for _ in range(20):
            rho_s = random_density(2)
            joint = collision_step(qcore.kron(rho_s, qcore.maximally_mixed(2)), cfg, ops)
            direct = qcore.partial_trace(joint, [0, 1], 4)
            assert qcore.trace_distance(phi.apply(rho_s), direct) < 1e-12

    def test_iterated_map_matches_trajectory(self):
        cfg = make_config(chi=0.6, lam=1.0)
        traj = generate_trajectory(cfg, 6)
        rho = qcore.zero_state(2)
        phi = derive_markov_map(cfg)
        for state in traj.states:
            rho = phi.apply(rho)
            assert qcore.trace_distance(rho, state) < 1e-9

    def test_rejects_lambda_below_one(self):
        with pytest.raises(ValueError):
            derive_markov_map(make_config(lam=0.5))


class TestConfigValidation:
    def test_bad_chi(self):
        with pytest.raises(ValueError):
            make_config(chi=3.0)

    def test_bad_lambda(self):
        with pytest.raises(ValueError):
            make_config(lam=-0.1)

    def test_coupling_length(self):
        with pytest.raises(ValueError):
            make_config(j_sys=(0.1, 0.2))

    def test_coupling_bound(self):
        with pytest.raises(ValueError):
            make_config(j_sys=(1.5,), j_scale=1.0)

    def test_periodic_bond_count(self):
        cfg = CollisionConfig(chi=0.1, lam=0.1, j_sys=(0.1, 0.2), j_bath=(0.1, 0.2),
                              boundary="periodic")
        assert cfg.boundary == "periodic"
