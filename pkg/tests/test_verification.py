"""Dispersion, reference oracle, convergence, and residual checks."""

import numpy as np
import pytest

from qlgas.derivatives import SpectralDerivatives
from qlgas.engine import LatticeConfig
from qlgas.errors import OracleError
from qlgas.interaction import london_potential
from qlgas.params import PhysicalParams
from qlgas.verification import (
    ConvergenceProblem,
    ConvergenceReport,
    analytic_doublet_plane_wave,
    convergence_study,
    dispersion_scan,
    field_strength_check,
    proca_residual,
    reference_dirac_solve,
    reference_self_check,
    unit_circle_residual,
)


def make_cfg(n=64, m=0.2, ell=0.25, splitting="strang", m0=0.5):
    p = PhysicalParams(m=m, m0=m0, e=1.0, rho0=1.0, ell=ell)
    return LatticeConfig(dims=1, extents=(n,), params=p, splitting=splitting)


class TestDispersion:
    def test_massless_exact_light_cone(self):
        cfg = make_cfg(m=0.0, ell=0.125)
        ks = [0.5, 1.0, 2.0]
        for s in dispersion_scan(ks, cfg, block="psi"):
            assert abs(abs(s.omega_measured) - cfg.params.c * s.k) <= 1e-12

    def test_zero_momentum_massive_branch(self):
        # at k=0 the collide angle is the whole story:
        # omega = +-arcsin(m c^2 dt / hbar)/dt
        cfg = make_cfg(m=0.4, ell=0.25)
        p = cfg.params
        expected = np.arcsin(p.m * p.c**2 * p.tau / p.hbar) / p.tau
        for s in dispersion_scan([0.0], cfg, block="psi"):
            assert abs(s.omega_measured) == pytest.approx(expected, abs=1e-12)

    def test_massive_dispersion_second_order_in_ell(self):
        k = 0.7
        m = 0.3
        errs, ells = [], []
        for ell in (0.2, 0.1, 0.05, 0.025):
            cfg = make_cfg(m=m, ell=ell)
            p = cfg.params
            samples = dispersion_scan([k], cfg, block="psi")
            w = max(s.omega_measured for s in samples)
            target = (p.c * k) ** 2 + (m * p.c**2 / p.hbar) ** 2
            errs.append(abs(w**2 - target))
            ells.append(ell)
        slope = np.polyfit(np.log(ells), np.log(errs), 1)[0]
        assert slope >= 1.8

    def test_phi_block_mass_at_zero_momentum(self):
        errs, ells = [], []
        for ell in (0.2, 0.1, 0.05, 0.025):
            cfg = make_cfg(m=0.1, ell=ell, m0=0.5)
            p = cfg.params
            samples = dispersion_scan([0.0], cfg, block="phi")
            w = max(s.omega_measured for s in samples)
            target = (p.doublet_mass * p.c**2 / p.hbar) ** 2
            errs.append(abs(w**2 - target))
            ells.append(ell)
        slope = np.polyfit(np.log(ells), np.log(errs), 1)[0]
        assert slope >= 1.8

    def test_branches_come_in_pairs(self):
        cfg = make_cfg(m=0.25)
        samples = dispersion_scan([0.9], cfg, block="psi")
        ws = sorted(s.omega_measured for s in samples)
        assert ws[0] == pytest.approx(-ws[3], abs=1e-12)
        assert ws[1] == pytest.approx(-ws[2], abs=1e-12)

    def test_branch_continuity_no_ambiguity_on_fine_scan(self):
        cfg = make_cfg(m=0.25)
        ks = np.linspace(0.0, 1.5, 25)
        samples = dispersion_scan(ks, cfg, block="psi")
        branches = {}
        for s in samples:
            branches.setdefault(s.branch, []).append(s.omega_measured)
        for vals in branches.values():
            jumps = np.abs(np.diff(vals))
            assert np.max(jumps) < 0.2  # smooth branch, no crossing mislabels

    def test_unit_circle(self):
        cfg = make_cfg(m=0.3)
        ks = np.linspace(0, 2.0, 8)
        assert unit_circle_residual(cfg, ks, A_uniform=np.array([0.2, 0.1, 0, 0])) <= 1e-12


class TestReferenceSolver:
    def test_massless_chiral_packet_translates(self):
        n, L = 128, 16.0
        ell = L / n
        p = PhysicalParams(m=0.0, m0=0.5, e=1.0, rho0=1.0, ell=ell)
        x = np.arange(n) * ell
        envelope = np.exp(-0.5 * ((x - L / 2) / 1.5) ** 2).astype(complex)
        # alpha_x = sx x sx eigenvector with eigenvalue +1 moves right
        psi0 = np.zeros((n, 4), complex)
        psi0[:, 0] = envelope / np.sqrt(2)
        psi0[:, 3] = envelope / np.sqrt(2)
        T = 2.0
        out = reference_dirac_solve(psi0, None, T, ell, p, dt_max=ell / 8)
        shift_sites = int(round(T * p.c / ell))
        expected = np.roll(psi0, shift_sites, axis=0)
        assert np.max(np.abs(out - expected)) <= 1e-6

    def test_plane_wave_phase_rotation(self):
        n, L = 64, 2 * np.pi * 4
        ell = L / n
        m = 0.35
        p = PhysicalParams(m=m, m0=0.5, e=1.0, rho0=1.0, ell=ell)
        x = np.arange(n) * ell
        k = 2 * np.pi * 3 / L
        # eigenvector of H(k) from the analytic symbol
        from qlgas.algebra import ALPHA, GAMMA

        h = p.c * p.hbar * k * ALPHA[0] + m * p.c**2 * GAMMA[0]
        w, v = np.linalg.eigh(h)
        omega = np.sqrt((p.c * k) ** 2 + (m * p.c**2 / p.hbar) ** 2)
        assert w[-1] == pytest.approx(p.hbar * omega, rel=1e-12)
        psi0 = np.exp(1j * k * x)[:, None] * v[:, -1]
        T = 1.7
        out = reference_dirac_solve(psi0, None, T, ell, p, dt_max=p.tau / 16)
        expected = np.exp(-1j * omega * T) * psi0
        assert np.max(np.abs(out - expected)) <= 1e-8

    def test_constant_scalar_potential_adds_phase(self):
        n, L = 64, 16.0
        ell = L / n
        p = PhysicalParams(m=0.2, m0=0.5, e=1.0, rho0=1.0, ell=ell)
        x = np.arange(n) * ell
        psi0 = np.zeros((n, 4), complex)
        psi0[:, 0] = np.exp(-0.5 * ((x - L / 2) / 2.0) ** 2)
        a0 = 0.6
        A = np.zeros((n, 4))
        A[:, 0] = a0
        T = 1.0
        free = reference_dirac_solve(psi0, None, T, ell, p, dt_max=p.tau / 32)
        gauged = reference_dirac_solve(psi0, A, T, ell, p, dt_max=p.tau / 32)
        # uniform A0 commutes with H: pure extra phase of magnitude e a0 T/hbar
        phase = np.exp(-1j * p.e * a0 * T / p.hbar)
        assert np.max(np.abs(gauged - phase * free)) <= 1e-9

    def test_self_check_passes(self):
        n, L = 32, 8.0
        ell = L / n
        p = PhysicalParams(m=0.3, m0=0.5, e=1.0, rho0=1.0, ell=ell)
        x = np.arange(n) * ell
        psi0 = np.zeros((n, 4), complex)
        psi0[:, 0] = np.exp(1j * x * 2 * np.pi / L)
        order = reference_self_check(psi0, None, 1.0, ell, p, base_dt=p.tau / 2)
        assert order >= 3.5

    def test_self_check_rejects_bad_order(self):
        # coax the reference into its asymptotically wrong regime by feeding
        # an absurdly large base step where RK4 is unstable
        n, L = 16, 8.0
        ell = L / n
        p = PhysicalParams(m=0.9, m0=0.5, e=1.0, rho0=1.0, ell=ell)
        x = np.arange(n) * ell
        psi0 = np.zeros((n, 4), complex)
        psi0[:, 0] = np.exp(1j * x * 2 * np.pi / L)
        with pytest.raises(OracleError):
            reference_self_check(psi0, None, 60.0, ell, p, base_dt=40.0)


def gaussian_packet(L, width=None, kcarrier=2.0, weights=(1.0, 0.3, 0.2, 0.1)):
    width = width or L / 12

    def f(x):
        env = np.exp(-0.5 * ((x - L / 2) / width) ** 2) * np.exp(1j * kcarrier * x)
        out = np.outer(env, np.asarray(weights, complex))
        return out / np.linalg.norm(out)

    return f


class TestConvergence:
    def test_massless_free_is_at_floor(self):
        L = 16.0
        prob = ConvergenceProblem(
            L=L,
            make_params=lambda ell: PhysicalParams(m=0.0, m0=0.5, e=1.0, rho0=1.0, ell=ell),
            initial_psi=gaussian_packet(L),
            oracle_dt_factor=64.0,  # push the oracle below the floor
        )
        report = convergence_study(prob, [L / 64, L / 128])
        assert report.at_floor
        assert report.fitted_order is None

    def test_massive_free_second_order(self):
        L = 16.0
        prob = ConvergenceProblem(
            L=L,
            make_params=lambda ell: PhysicalParams(m=0.5, m0=0.5, e=1.0, rho0=1.0, ell=ell),
            initial_psi=gaussian_packet(L),
        )
        report = convergence_study(prob, [L / 64, L / 128, L / 256, L / 512])
        assert report.oracle_order >= 3.5
        assert report.monotone
        assert report.fitted_order >= 1.8

    def test_phi_block_against_analytic_plane_waves(self):
        L = 16.0
        k1 = 2 * np.pi / L

        def phi0(x):
            out = np.zeros((x.size, 8), complex)
            out[:, 0] = np.exp(1j * k1 * x)
            out[:, 5] = 0.5 * np.exp(-1j * k1 * x)
            return out / np.linalg.norm(out)

        prob = ConvergenceProblem(
            L=L,
            make_params=lambda ell: PhysicalParams(m=0.1, m0=0.5, e=1.0, rho0=1.0, ell=ell),
            initial_psi=None,
            block="phi",
            initial_phi=phi0,
        )
        report = convergence_study(prob, [L / 32, L / 64, L / 128, L / 256])
        assert report.monotone
        assert report.fitted_order >= 1.8

    def test_analytic_doublet_oracle_norm(self):
        p = PhysicalParams(m=0.1, m0=0.5, e=1.0, rho0=1.0, ell=0.1)
        rng = np.random.default_rng(0)
        v0 = rng.normal(size=8) + 1j * rng.normal(size=8)
        vt = analytic_doublet_plane_wave([0.7], v0, 3.0, p)
        assert np.linalg.norm(vt) == pytest.approx(np.linalg.norm(v0), rel=1e-12)


class TestProcaResidual:
    @staticmethod
    def _wave_levels(lam, omega, n=64, k=2.0):
        L = 2 * np.pi
        ell = L / n
        tau = 0.01
        x = np.arange(n) * ell
        levels = []
        for dt in (-tau, 0.0, tau):
            A = np.zeros((n, 4))
            A[:, 2] = np.cos(k * x - omega * (1.3 + dt))
            levels.append(A)
        return levels, tau, SpectralDerivatives((n,), ell), ell

    def test_zero_field(self):
        p = PhysicalParams(m=0.2, m0=0.5, e=1.0, rho0=1.0, ell=0.1)
        D = SpectralDerivatives((16,), 0.5)
        z = np.zeros((16, 4))
        assert proca_residual(z, z, z, 0.1, None, p, D) == 0.0

    def test_on_shell_wave_converges_second_order_in_tau(self):
        p = PhysicalParams(m=0.2, m0=0.5, e=1.0, rho0=1.0, ell=0.1)
        lam = p.lambda_L
        k = 2.0
        omega = np.sqrt((p.c * k) ** 2 + p.c**2 / lam**2)
        errs, taus = [], []
        for tau in (0.02, 0.01, 0.005):
            L = 2 * np.pi
            n = 64
            ell = L / n
            x = np.arange(n) * ell
            levels = []
            for dt in (-tau, 0.0, tau):
                A = np.zeros((n, 4))
                A[:, 2] = np.cos(k * x - omega * (1.3 + dt))
                levels.append(A)
            D = SpectralDerivatives((n,), ell)
            errs.append(proca_residual(levels[0], levels[1], levels[2], tau, None, p, D))
            taus.append(tau)
        slope = np.polyfit(np.log(taus), np.log(errs), 1)[0]
        assert slope >= 1.8

    def test_detuned_wave_fails(self):
        p = PhysicalParams(m=0.2, m0=0.5, e=1.0, rho0=1.0, ell=0.1)
        lam = p.lambda_L
        k = 2.0
        good = np.sqrt((p.c * k) ** 2 + p.c**2 / lam**2)
        levels, tau, D, _ = self._wave_levels(lam, 1.3 * good)
        bad = proca_residual(levels[0], levels[1], levels[2], tau, None, p, D)
        assert bad >= 1e-1


class TestFieldStrengthCheck:
    def test_zero_coupling_pure_gauge(self):
        n = 32
        L = 2 * np.pi
        ell = L / n
        x = np.arange(n) * ell
        D = SpectralDerivatives((n,), ell)
        # interaction off: m0 = 0 kills the bilinear side entirely
        p = PhysicalParams(m=0.2, m0=0.0, e=1.0, rho0=1.0, ell=ell)
        # pure gauge: A = grad(chi), A0 = 0, static
        A = np.zeros((n, 4))
        A[:, 1] = np.cos(x)  # gradient of sin(x) along the only active axis
        psi = np.tile(np.array([1, 0, 0, 0], complex), (n, 1))
        assert field_strength_check(psi, A, p, D) <= 1e-12

    def test_uniform_fields_measure_truncation(self):
        n = 16
        D = SpectralDerivatives((n,), 0.3)
        p = PhysicalParams(m=0.2, m0=0.5, e=1.0, rho0=1.0, ell=0.3)
        psi = np.tile(np.array([1, 0.2, 0.1, 0.05], complex), (n, 1))
        A = np.tile(np.array([0.4, 0.1, -0.2, 0.3]), (n, 1))
        res = field_strength_check(psi, A, p, D)
        assert res > 0.0
        # derivative side vanishes for uniform fields, so the residual is
        # exactly the magnitude of the bilinear side
        from qlgas.algebra import ETA, GAMMA
        from qlgas.interaction import commutator_bilinear, expectation

        B = commutator_bilinear(psi[0])
        W = np.einsum("ln,lk,k->n", B, ETA, A[0])
        g = np.array([expectation(psi[0], GAMMA[mu]) for mu in range(4)])
        fb = (
            1j
            * p.epsilon
            / (4 * p.ell * p.rho0)
            * (np.einsum("m,n->mn", g, W) - np.einsum("n,m->mn", g, W))
        )
        assert res == pytest.approx(float(np.max(np.abs(fb))), rel=1e-12)

    def test_residual_quadratic_in_eps_with_london_potential(self):
        n = 16
        D = SpectralDerivatives((n,), 0.3)
        psi = np.tile(np.array([1, 0.2, 0.1, 0.05], complex), (n, 1))
        errs, epses = [], []
        for m0 in (0.4, 0.2, 0.1):
            p = PhysicalParams(m=0.2, m0=m0, e=1.0, rho0=1.0, ell=0.3)
            A = london_potential(psi, p)
            errs.append(field_strength_check(psi, A, p, D))
            epses.append(p.epsilon)
        slope = np.polyfit(np.log(epses), np.log(errs), 1)[0]
        assert slope == pytest.approx(2.0, abs=0.2)
