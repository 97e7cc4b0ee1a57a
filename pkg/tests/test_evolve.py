import numpy as np
import pytest

from qdsps.bath import PhononParams
from qdsps.evolve import Generator, TimeGrid, Trajectory, integrate, rhs, run_until_decayed
from qdsps.models import DissipatorKind, PulseParams, TwoLevelCavityModel
from qdsps.units import uev_to_radps

NOBATH = PhononParams(alpha=0.0)
KAPPA = uev_to_radps(50)
G = uev_to_radps(20)
GAMMA = uev_to_radps(1)


def cavity_only(kappa=KAPPA, gamma=0.0):
    return TwoLevelCavityModel(
        delta_l=0.0, g=0.0, kappa=kappa, gamma=gamma, n_max=2,
        pulse=PulseParams(area=0.0, tau_p=1.0), bath=NOBATH,
    )


def jaynes_cummings(g=G):
    return TwoLevelCavityModel(
        delta_l=0.0, g=g, kappa=0.0, gamma=0.0, n_max=2,
        pulse=PulseParams(area=0.0, tau_p=1.0), bath=NOBATH,
    )


def fock_state(model, qd, n):
    ket = model.space.basis_state(qd, n)
    return np.outer(ket, ket.conj())


class TestTimeGrid:
    def test_non_integer_steps_rejected(self):
        with pytest.raises(ValueError, match="integer"):
            TimeGrid(0.0, 1.0, 0.3)

    def test_bad_dt(self):
        with pytest.raises(ValueError):
            TimeGrid(0.0, 1.0, -0.1)

    def test_n_steps(self):
        assert TimeGrid(0.0, 2.0, 0.01).n_steps == 200


class TestRhs:
    def test_traceless(self):
        m = cavity_only()
        rng = np.random.default_rng(0)
        x = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        rho = x @ x.conj().T
        rho /= np.trace(rho)
        out = rhs(rho, 1.0, m, DissipatorKind.NONE)
        assert abs(np.trace(out)) < 1e-14

    def test_cavity_decay_rate(self):
        m = cavity_only()
        rho = fock_state(m, 0, 1)
        out = rhs(rho, 0.0, m, DissipatorKind.NONE)
        dn = np.real(np.einsum("ij,ji->", m.n_ph, out))
        assert np.isclose(dn, -KAPPA * 1.0, rtol=1e-12)

    def test_phonon_term_is_diagonal_without_drive(self):
        # Without a pulse the scattering term cannot move exciton population.
        m = TwoLevelCavityModel(
            delta_l=0.0, g=0.0, kappa=0.0, gamma=GAMMA, n_max=2,
            pulse=PulseParams(area=0.0, tau_p=1.0), bath=PhononParams(),
        )
        rho = fock_state(m, 1, 0)
        out = rhs(rho, 0.0, m, DissipatorKind.WEAK_FULL)
        dpop = np.real(np.einsum("ij,ji->", m.n_x, out))
        assert np.isclose(dpop, -GAMMA, rtol=1e-10)


class TestIntegrate:
    def test_cavity_decay_analytic(self):
        m = cavity_only()
        dt = 0.01 / KAPPA
        grid = TimeGrid(0.0, round(60.0 / dt) * dt, dt, sample_stride=100)
        traj = integrate(fock_state(m, 0, 1), grid, m, DissipatorKind.NONE)
        err = np.max(np.abs(traj.observables["photon"] - np.exp(-KAPPA * traj.times)))
        assert err < 1e-8

    def test_vacuum_rabi(self):
        m = jaynes_cummings()
        grid = TimeGrid(0.0, 120.0, 0.01, sample_stride=100)
        traj = integrate(fock_state(m, 1, 0), grid, m, DissipatorKind.NONE)
        err = np.max(np.abs(traj.observables["photon"] - np.sin(G * traj.times) ** 2))
        assert err < 1e-6

    def test_resonant_pi_pulse_inversion(self):
        m = TwoLevelCavityModel(
            delta_l=0.0, g=0.0, kappa=0.0, gamma=0.0, n_max=2,
            pulse=PulseParams(area=np.pi, tau_p=2.0), bath=NOBATH,
        )
        grid = TimeGrid(0.0, 14.0, 0.01, sample_stride=100)
        traj = integrate(m.ground_state(), grid, m, DissipatorKind.NONE)
        assert abs(traj.observables["exciton"][-1] - 1.0) < 1e-4

    def test_fourth_order_convergence(self):
        # A stiffer coupling keeps the errors above the roundoff floor.
        m = jaynes_cummings(g=0.6)
        rho0 = fock_state(m, 1, 0)
        errs = []
        for dt in (0.16, 0.08):
            grid = TimeGrid(0.0, 48.0, dt, sample_stride=round(4.8 / dt))
            ref = TimeGrid(0.0, 48.0, dt / 8, sample_stride=round(4.8 / (dt / 8)))
            run = integrate(rho0, grid, m, DissipatorKind.NONE)
            ref_run = integrate(rho0, ref, m, DissipatorKind.NONE)
            errs.append(np.max(np.abs(run.observables["photon"] - ref_run.observables["photon"])))
        order = np.log2(errs[0] / errs[1])
        assert 3.4 < order < 4.6

    def test_drift_diagnostics(self):
        m = TwoLevelCavityModel(
            delta_l=0.0, g=G, kappa=KAPPA, gamma=GAMMA, n_max=2,
            pulse=PulseParams(area=np.pi, tau_p=2.0), bath=PhononParams(),
        )
        grid = TimeGrid(0.0, 120.0, 0.01, sample_stride=100)
        traj = integrate(m.ground_state(), grid, m, DissipatorKind.WEAK_FULL)
        assert traj.trace_drift < 1e-8
        assert traj.herm_drift < 1e-10

    def test_deterministic(self):
        m = jaynes_cummings()
        grid = TimeGrid(0.0, 10.0, 0.01, sample_stride=10)
        a = integrate(fock_state(m, 1, 0), grid, m, DissipatorKind.NONE)
        b = integrate(fock_state(m, 1, 0), grid, m, DissipatorKind.NONE)
        assert np.array_equal(a.states, b.states)

    def test_unstable_step_aborts(self):
        m = cavity_only()
        with pytest.warns(UserWarning, match="dt"):
            grid = TimeGrid(0.0, 4000.0, 40.0, sample_stride=1)
            with pytest.raises(RuntimeError):
                integrate(fock_state(m, 0, 1), grid, m, DissipatorKind.NONE)

    def test_stage_memoization_is_invisible(self):
        m = TwoLevelCavityModel(
            delta_l=0.0, g=G, kappa=KAPPA, gamma=0.0, n_max=2,
            pulse=PulseParams(area=np.pi, tau_p=2.0), bath=PhononParams(),
        )
        grid = TimeGrid(0.0, 8.0, 0.01, sample_stride=100)
        shared = integrate(m.ground_state(), grid, m, DissipatorKind.WEAK_FULL,
                           generator=Generator(m, DissipatorKind.WEAK_FULL))
        fresh = integrate(m.ground_state(), grid, m, DissipatorKind.WEAK_FULL)
        assert np.array_equal(shared.states, fresh.states)


class TestRunUntilDecayed:
    def test_cavity_decay_termination(self):
        m = cavity_only(gamma=GAMMA)
        traj = run_until_decayed(fock_state(m, 0, 1), m, DissipatorKind.NONE,
                                 dt=0.02, sample_stride=50)
        expected = -np.log(1e-6) / KAPPA
        assert abs(traj.final_time - expected) < 2.0
        assert not traj.warnings

    def test_zero_excitation_terminates_immediately(self):
        m = cavity_only(gamma=GAMMA)
        traj = run_until_decayed(m.ground_state(), m, DissipatorKind.NONE,
                                 dt=0.02, sample_stride=50)
        assert traj.final_time <= 1.0 + 1e-9

    def test_t_max_warning(self):
        m = cavity_only(gamma=GAMMA)
        traj = run_until_decayed(fock_state(m, 0, 1), m, DissipatorKind.NONE,
                                 dt=0.02, sample_stride=50, t_max=20.0)
        assert any("t_max" in w for w in traj.warnings)

    def test_concat(self):
        m = cavity_only(gamma=GAMMA)
        grid1 = TimeGrid(0.0, 10.0, 0.01, sample_stride=100)
        grid2 = TimeGrid(10.0, 20.0, 0.01, sample_stride=100)
        a = integrate(fock_state(m, 0, 1), grid1, m, DissipatorKind.NONE)
        b = integrate(a.final_state, grid2, m, DissipatorKind.NONE)
        full = Trajectory.concat(a, b)
        direct = integrate(fock_state(m, 0, 1), TimeGrid(0.0, 20.0, 0.01, sample_stride=100),
                           m, DissipatorKind.NONE)
        assert np.allclose(full.times, direct.times)
        assert np.max(np.abs(full.states - direct.states)) < 1e-12
