import numpy as np
import pytest
from hypothesis import given, settings

from vdlab.dynamics import (
    amplitudes,
    build_b_bundle,
    c_commutator_residual,
    equations_of_motion,
    evolve,
    f_log_derivative,
    hamiltonian,
    integrate,
    lax_residual,
    log_amplitude_jacobian,
    sample_times,
)
from vdlab.laxcore import PhasePoint, build_bundle, lax_inverse, lax_spectrum
from vdlab.sampling import random_case

from .conftest import couplings, phase_points


def fd_gradient_lambda(f, p, h=1e-6):
    g = np.empty(p.n)
    for a in range(p.n):
        e = np.zeros(p.n)
        e[a] = h
        g[a] = (f(PhasePoint(p.lam + e, p.theta)) - f(PhasePoint(p.lam - e, p.theta))) / (2 * h)
    return g


class TestHamiltonian:
    def test_example_value(self, example_n1):
        assert hamiltonian(*example_n1) == pytest.approx(1.1007, abs=1e-4)
        assert hamiltonian(*example_n1) == pytest.approx(1.1007024643172325, rel=1e-13)

    @given(phase_points(n_max=5), couplings)
    def test_half_trace(self, p, c):
        b = build_bundle(p, c)
        H = hamiltonian(p, c)
        assert abs(H - np.trace(b.L).real / 2) < 1e-10 * max(1.0, H)

    @given(phase_points(), couplings)
    def test_rest_is_minimum(self, p, c):
        rest = PhasePoint(p.lam, np.zeros(p.n))
        H0 = hamiltonian(rest, c)
        assert H0 == pytest.approx(np.sum(amplitudes(p.lam, c.mu, c.nu)), rel=1e-13)
        assert hamiltonian(p, c) >= H0

    @given(phase_points(n_max=4), couplings)
    def test_jacobian_matches_finite_differences(self, p, c):
        J = log_amplitude_jacobian(p.lam, c.mu, c.nu)
        h = 1e-6
        for a in range(p.n):
            e = np.zeros(p.n)
            e[a] = h
            fd = (np.log(amplitudes(p.lam + e, c.mu, c.nu)) - np.log(amplitudes(p.lam - e, c.mu, c.nu))) / (2 * h)
            np.testing.assert_allclose(J[:, a], fd, atol=1e-6 * max(1.0, np.max(np.abs(fd))))


class TestEquationsOfMotion:
    def test_rest_has_no_velocity(self, example_n2):
        p, c = example_n2
        lam_dot, _ = equations_of_motion(PhasePoint(p.lam, [0.0, 0.0]), c)
        assert np.all(lam_dot == 0.0)

    @given(phase_points(), couplings)
    def test_velocity_is_sinh_times_amplitude(self, p, c):
        lam_dot, _ = equations_of_motion(p, c)
        np.testing.assert_allclose(lam_dot, np.sinh(p.theta) * amplitudes(p.lam, c.mu, c.nu), rtol=1e-13)

    @given(phase_points(n_min=2, n_max=3), couplings)
    def test_theta_dot_is_minus_grad_h(self, p, c):
        _, theta_dot = equations_of_motion(p, c)
        fd = -fd_gradient_lambda(lambda q: hamiltonian(q, c), p)
        assert np.max(np.abs(theta_dot - fd)) < 1e-6 * max(1.0, np.max(np.abs(fd)))


class TestBMatrix:
    @given(phase_points(n_max=5), couplings)
    def test_split_and_algebra(self, p, c):
        b = build_bundle(p, c)
        bb = build_b_bundle(p, c, b)
        scale = max(1.0, np.max(np.abs(b.L)))
        np.testing.assert_allclose(bb.D + bb.Y, (b.L - lax_inverse(b.L)) / 2, atol=1e-10 * scale)
        assert np.max(np.abs(bb.B + bb.B.conj().T)) < 1e-12 * scale
        assert c_commutator_residual(bb, p.n) < 1e-12 * scale

    @given(phase_points(), couplings)
    def test_diagonal_part(self, p, c):
        bb = build_b_bundle(p, c)
        u = amplitudes(p.lam, c.mu, c.nu)
        d = np.diag(bb.D).real
        np.testing.assert_allclose(d, np.concatenate([np.sinh(p.theta) * u, -np.sinh(p.theta) * u]), atol=1e-10 * max(1, np.max(np.abs(d))))

    def test_n1_entries(self, example_n1):
        p, c = example_n1
        b = build_bundle(p, c)
        bb = build_b_bundle(p, c, b)
        y12 = (b.L - lax_inverse(b.L))[0, 1] / 2
        assert bb.Y[0, 1] == pytest.approx(y12, abs=1e-14)
        assert bb.Z[0, 1] == pytest.approx(y12 / np.sinh(1.6), abs=1e-14)
        assert bb.Bperp[0, 1] == pytest.approx(-y12 / np.tanh(1.6), abs=1e-14)
        assert bb.Y[0, 0] == 0 and bb.Z[1, 1] == 0

    @given(phase_points(), couplings)
    def test_f_derivative_matrix_form(self, p, c):
        b = build_bundle(p, c)
        bb = build_b_bundle(p, c, b)
        phi = f_log_derivative(p, c)
        rhs = (bb.Z - bb.Bm) @ b.F
        assert np.max(np.abs(phi * b.F - rhs)) < 1e-9 * max(1.0, np.max(np.abs(rhs)))

    @given(phase_points(), couplings)
    def test_f_derivative_at_rest(self, p, c):
        q = PhasePoint(p.lam, np.zeros(p.n))
        phi = f_log_derivative(q, c)
        np.testing.assert_allclose(phi[p.n :], -phi[: p.n], atol=1e-12 * max(1.0, np.max(np.abs(phi))))

    def test_f_derivative_along_flow(self, example_n2):
        p, c = example_n2
        h = 1e-4
        ys = evolve(p, c, [h, -h], tol=1e-13)
        Fp = build_bundle(PhasePoint.from_vector(ys[0]), c).F
        Fm = build_bundle(PhasePoint.from_vector(ys[1]), c).F
        F0 = build_bundle(p, c).F
        fd = (Fp - Fm) / (2 * h) / F0
        assert np.max(np.abs(fd - f_log_derivative(p, c))) < 1e-6


class TestIntegration:
    def test_sample_grid_ends_exactly(self):
        ts = sample_times(-1.0, 1.05, 0.5)
        assert ts[0] == -1.0 and ts[-1] == 1.05
        assert np.all(np.diff(ts) > 0)

    def test_tolerance_range(self, example_n1):
        with pytest.raises(ValueError):
            integrate(*example_n1, 0.0, 1.0, 0.5, tol=1e-3)

    def test_energy_n1(self, example_n1):
        p, c = example_n1
        tr = integrate(p, c, 0.0, 5.0, 0.25)
        assert np.max(np.abs(tr.energy - tr.energy[0])) < 1e-8 * tr.energy[0]

    def test_isospectral_n3(self):
        p, c = random_case(3, 3)
        tr = integrate(p, c, -10.0, 10.0, 1.0)
        assert np.max(np.abs(tr.theta_hat - tr.theta_hat[0])) < 1e-7
        # p is the state at t0 = -10, so the last sample is 20 time units later
        np.testing.assert_allclose(tr.lam[-1], evolve(p, c, [20.0])[0, :3], atol=1e-6)

    def test_time_reversal(self, example_n2):
        p, c = example_n2
        fwd = evolve(p, c, [4.0])[0]
        back = evolve(PhasePoint.from_vector(fwd), c, [-4.0])[0]
        np.testing.assert_allclose(back, p.as_vector(), atol=1e-6)

    def test_evolve_both_directions(self, example_n2):
        p, c = example_n2
        times = [2.0, -1.0, 0.0, 0.5, -3.0]
        ys = evolve(p, c, times)
        np.testing.assert_array_equal(ys[2], p.as_vector())
        ref = integrate(p, c, 0.0, 2.0, 0.5)
        np.testing.assert_allclose(ys[0], np.concatenate([ref.lam[-1], ref.theta[-1]]), atol=1e-8)

    @settings(max_examples=10)
    @given(phase_points(n_max=4, theta_max=1.0), couplings)
    def test_power_traces_conserved(self, p, c):
        ys = evolve(p, c, [1.0, -1.0])
        L0 = build_bundle(p, c).L
        for y in ys:
            L1 = build_bundle(PhasePoint.from_vector(y), c).L
            for m in range(1, 5):
                t0 = np.trace(np.linalg.matrix_power(L0, m)).real
                t1 = np.trace(np.linalg.matrix_power(L1, m)).real
                assert abs(t1 - t0) < 1e-8 * max(1.0, abs(t0))


class TestLaxEquation:
    def test_residual_small_at_moderate_point(self, example_n2):
        p, c = example_n2
        assert lax_residual(p, c, 1e-4) < 1e-6

    @settings(max_examples=10)
    @given(phase_points(n_max=4), couplings)
    def test_second_order_convergence(self, p, c):
        r1 = lax_residual(p, c, 1e-3)
        r2 = lax_residual(p, c, 5e-4)
        assert 3.5 <= r1 / r2 <= 4.5

    def test_spectrum_constant_near_initial_point(self, example_n2):
        p, c = example_n2
        y = evolve(p, c, [0.3])[0]
        th0 = lax_spectrum(build_bundle(p, c))
        th1 = lax_spectrum(build_bundle(PhasePoint.from_vector(y), c))
        np.testing.assert_allclose(th1, th0, atol=1e-9)
