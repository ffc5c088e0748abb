import dataclasses
import math
import warnings

import numpy as np
import pytest

from gbsq.diagnostics import (
    Accumulators,
    DivergenceWarning,
    NormRow,
    bernstein_ensemble_max,
    commutator_divergence_form,
    commutator_ensemble_max,
    commutator_estimate_ratio,
    commutator_R_u_grad,
    default_p3,
    ensemble_pair,
    g_energy_balance,
    g_energy_terms,
    g_field,
    log_commutator_norm,
    lq_window,
    monitor_row,
    perp_identity_residual,
    spacetime_window,
    uniqueness_functional,
    velocity_formulation_residual,
)
from gbsq.dynamics import State, SystemParams, integrate
from gbsq.fields import initial_fields, random_field
from gbsq.io import read_snapshot, write_snapshot
from gbsq.spectral import lp_norm, make_grid, velocity_from_vorticity


@pytest.fixture(scope="module")
def g64():
    return make_grid(64)


def seeded_state(n, seed=4, **kw):
    w, t = initial_fields("random", n, seed=seed, **kw)
    return State(0.0, w, t)


class TestGField:
    def test_no_temperature(self):
        w = random_field(32, 1)
        assert np.array_equal(g_field(w, np.zeros_like(w)), w)

    def test_pure_temperature(self, g64):
        G = g_field(np.zeros(g64.shape), np.sin(g64.x[0]))
        assert np.max(np.abs(G + np.cos(g64.x[0]))) < 1e-13

    def test_linearity(self):
        w1, w2, t1, t2 = (random_field(32, s) for s in range(4))
        lhs = g_field(2 * w1 - w2, 2 * t1 - t2)
        rhs = 2 * g_field(w1, t1) - g_field(w2, t2)
        assert np.max(np.abs(lhs - rhs)) < 1e-13

    def test_matches_spectral_construction(self):
        n = 32
        w, t = random_field(n, 5), random_field(n, 6)
        k = np.fft.fftfreq(n, 1.0 / n)
        k1, k2 = np.meshgrid(k, k, indexing="ij")
        k1[n // 2, :] = 0  # the Nyquist row carries no odd derivative
        kabs = np.hypot(np.fft.fftfreq(n, 1.0 / n)[:, None], np.fft.fftfreq(n, 1.0 / n)[None, :])
        sym = np.divide(1j * k1, kabs, out=np.zeros((n, n), complex), where=kabs > 0)
        G = np.fft.ifft2(np.fft.fft2(w) - sym * np.fft.fft2(t)).real
        assert np.max(np.abs(g_field(w, t) - G)) < 1e-13

    def test_grid_mismatch(self):
        with pytest.raises(ValueError):
            g_field(np.zeros((16, 16)), np.zeros((32, 32)))


class TestCommutator:
    def test_constant_velocity(self):
        u = np.stack([np.full((32, 32), 0.7), np.full((32, 32), -1.3)])
        assert np.max(np.abs(commutator_R_u_grad(u, random_field(32, 3)))) < 1e-12

    def test_constant_theta(self):
        u = velocity_from_vorticity(random_field(32, 3))
        assert np.max(np.abs(commutator_R_u_grad(u, np.full((32, 32), 2.0)))) < 1e-12

    def test_mean_zero(self):
        u = velocity_from_vorticity(random_field(64, 1), 0.2, 1.0)
        c = commutator_R_u_grad(u, random_field(64, 2))
        assert abs(np.mean(c)) < 1e-12

    def test_taylor_green_two_resolution(self):
        def at(n):
            g = make_grid(n)
            w = np.sin(g.x[0]) * np.sin(g.x[1])
            return commutator_R_u_grad(velocity_from_vorticity(w), np.cos(g.x[1]))

        a, b = at(64), at(128)
        assert np.max(np.abs(a - b[::2, ::2])) < 1e-10

    def test_divergence_form_agrees(self):
        u = velocity_from_vorticity(random_field(64, 10, kmax=10), 0.25, 1.0)
        th = random_field(64, 11, kmax=10)
        direct = commutator_R_u_grad(u, th)
        assert np.max(np.abs(commutator_divergence_form(u, th) - direct)) < 1e-11

    def test_compressible_velocity_warns(self, g64):
        u = np.stack([np.sin(g64.x[0]), np.zeros(g64.shape)])
        with pytest.warns(DivergenceWarning):
            commutator_R_u_grad(u, np.cos(g64.x[1]))

    def test_incompressible_velocity_is_silent(self):
        u = velocity_from_vorticity(random_field(32, 3))
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            commutator_R_u_grad(u, random_field(32, 4))


class TestGEnergyBalance:
    def test_zero_state(self):
        z = np.zeros((32, 32))
        assert g_energy_balance(State(0.0, z, z), State(0.1, z, z), SystemParams()) == 0.0

    def test_requires_critical_parameters(self):
        z = np.zeros((16, 16))
        with pytest.raises(ValueError):
            g_energy_terms(State(0, z, z), State(1, z, z), SystemParams(kappa=1))
        with pytest.raises(ValueError):
            g_energy_terms(State(1, z, z), State(1, z, z), SystemParams())

    def test_second_order_in_dt(self):
        w, t = initial_fields("random", 64, seed=3, amplitude=0.1, theta_amplitude=0.1)
        p = SystemParams()

        def worst(dt):
            out = [0.0]
            integrate(State(0.0, w, t), p, 0.02, dt,
                      callback=lambda a, b: out.__setitem__(0, max(out[0], g_energy_balance(a, b, p))))
            return out[0]

        r1, r2 = worst(2e-3), worst(1e-3)
        assert r1 < 4e-6 and r2 < 1e-6
        assert math.log2(r1 / r2) > 1.7

    def test_terms_have_expected_signs(self):
        w, t = initial_fields("random", 64, seed=3, amplitude=0.1, theta_amplitude=0.1)
        s0 = State(0.0, w, t)
        s1 = integrate(s0, SystemParams(), 1e-3, 1e-3)
        terms = g_energy_terms(s0, s1, SystemParams())
        assert terms.dissipation > 0
        assert terms.residual < 1e-3 * terms.dissipation


class TestVelocityFormulation:
    def test_taylor_green(self):
        s = State(0.0, *initial_fields("taylor_green", 64))
        assert velocity_formulation_residual(s, SystemParams())[1] < 1e-10

    def test_pure_buoyancy(self, g64):
        s = State(0.0, np.zeros(g64.shape), np.sin(g64.x[1]))
        assert velocity_formulation_residual(s, SystemParams())[1] < 1e-11

    def test_spectral_decay_with_resolution(self):
        p = SystemParams(sigma=0.25, gamma=1.0)
        r = [velocity_formulation_residual(seeded_state(n, kmax=24, spectral_slope=1.0), p)[1] for n in (64, 128)]
        assert r[0] / r[1] >= 1e2

    def test_residual_field_shape(self):
        res, norm = velocity_formulation_residual(seeded_state(32, kmax=6), SystemParams())
        assert res.shape == (2, 32, 32)
        assert norm == pytest.approx(lp_norm(res, 2))

    def test_perp_identity(self):
        for sg in ((0, 0), (0.25, 1.0)):
            assert perp_identity_residual(seeded_state(64), SystemParams(sigma=sg[0], gamma=sg[1])) < 1e-11


class TestWindows:
    def test_lq_window(self):
        assert lq_window(0.0, 0.0, 3)
        assert lq_window(0.0, 1.0, 3)
        assert not lq_window(0.4, 0.0, 3)
        assert lq_window(0.0, 0.0, 4)
        assert not lq_window(0.0, 1.0, 4)
        assert not lq_window(0.0, 0.0, 2)
        assert not lq_window(0.5, 0.0, 2.1)

    def test_spacetime_window(self):
        assert spacetime_window(0.0, 0.0, 3, 0.5)
        assert not spacetime_window(0.0, 0.0, 3, 1.0)
        assert not spacetime_window(0.3, 0.0, 3, 0.5)


class TestMonitorRow:
    def test_zero_state_row(self):
        z = np.zeros((32, 32))
        p, acc = SystemParams(), Accumulators()
        monitor_row(State(0.0, z, z), p, acc)
        row = monitor_row(State(0.1, z, z), p, acc, prev=State(0.0, z, z))
        vals = dataclasses.asdict(row)
        vals.pop("t")
        vals.pop("in_window")
        assert all(v == 0 for v in vals.values())

    def test_first_row_has_no_balance(self):
        row = monitor_row(seeded_state(32, kmax=6), SystemParams(), Accumulators())
        assert math.isnan(row.g_balance_residual)

    def test_layered_theta_columns_constant(self):
        s = State(0.0, *initial_fields("layered", 32))
        p, acc = SystemParams(), Accumulators()
        rows = [monitor_row(s, p, acc)]
        prev = s
        for _ in range(3):
            cur = integrate(prev, p, prev.t + 0.05, 0.05)
            rows.append(monitor_row(cur, p, acc, prev=prev))
            prev = cur
        for name in ("theta_linf", "theta_l2", "theta_besov"):
            vals = [getattr(r, name) for r in rows]
            assert max(vals) - min(vals) < 1e-12 * vals[0]

    def test_g_norm_from_snapshot(self, tmp_path):
        s = seeded_state(64)
        p = SystemParams(gamma=1.0)
        write_snapshot(tmp_path / "s.bin", s, p)
        back, _ = read_snapshot(tmp_path / "s.bin")
        row = monitor_row(back, p, Accumulators())
        # independent: FFT-based Riesz transform and rectangle-rule L² norm
        n = 64
        k = np.fft.fftfreq(n, 1.0 / n)
        k1, k2 = np.meshgrid(k, k, indexing="ij")
        kabs = np.hypot(k1, k2)
        k1[n // 2, :] = 0
        rt = np.fft.ifft2(np.divide(1j * k1, kabs, out=np.zeros((n, n), complex), where=kabs > 0)
                          * np.fft.fft2(s.theta)).real
        expect = math.sqrt(np.sum((s.omega - rt) ** 2) * (2 * math.pi / n) ** 2)
        assert row.g_l2 == pytest.approx(expect, rel=1e-12)

    def test_rows_are_pure(self, tmp_path):
        s = seeded_state(32, kmax=6)
        p = SystemParams()
        write_snapshot(tmp_path / "s.bin", s, p)
        a = monitor_row(s, p, Accumulators())
        b = monitor_row(read_snapshot(tmp_path / "s.bin")[0], p, Accumulators())
        assert np.array_equal(np.array(a.values()), np.array(b.values()), equal_nan=True)

    def test_rectangle_integrals(self):
        s0 = seeded_state(32, kmax=6)
        p, acc = SystemParams(), Accumulators()
        r0 = monitor_row(s0, p, acc)
        s1 = dataclasses.replace(s0, t=0.25)
        r1 = monitor_row(s1, p, acc)
        assert r0.g_dissipation_integral == 0
        assert r1.omega_besov_integral == pytest.approx(0.25 * r1.omega_besov)
        with pytest.raises(ValueError):
            monitor_row(s0, p, acc)

    def test_window_flag(self):
        s = seeded_state(32, kmax=6)
        assert monitor_row(s, SystemParams(), Accumulators(), q=3).in_window == 1
        assert monitor_row(s, SystemParams(sigma=0.4), Accumulators(), q=3).in_window == 0

    def test_columns_order(self):
        assert NormRow.columns()[:4] == ["t", "omega_l2", "omega_lq", "theta_linf"]


class TestCommutatorRatios:
    def test_zero_theta_rejected(self):
        w = random_field(32, 1)
        with pytest.raises(ValueError):
            commutator_estimate_ratio(w, np.zeros_like(w), 0.0, 0.5)

    @pytest.mark.parametrize("kw", [dict(sigma=0.5, s=0.2), dict(sigma=0.0, s=1.0), dict(sigma=0.0, s=0.5, p3=3)])
    def test_window_violations(self, kw):
        w, t = ensemble_pair(32, 0)
        with pytest.raises(ValueError):
            commutator_estimate_ratio(w, t, **kw)

    def test_scale_invariance(self):
        w, t = ensemble_pair(64, 3)
        a = commutator_estimate_ratio(w, t, 0.0, 0.5, 8)
        b = commutator_estimate_ratio(2 * w, 3 * t, 0.0, 0.5, 8)
        assert b == pytest.approx(a, rel=1e-12)

    def test_default_p3(self):
        assert default_p3(0.0, 0.5) == 8
        assert default_p3(0.4, 0.55) == 40

    def test_log_commutator_constant_theta(self):
        w = random_field(32, 2)
        num, den, ratio = log_commutator_norm(w, np.full((32, 32), 1.5), 1.0, 3)
        assert num < 1e-12 and den > 0

    def test_log_commutator_scaling(self):
        w, t = ensemble_pair(64, 5)
        a = log_commutator_norm(w, t, 1.0, 3)[2]
        b = log_commutator_norm(4 * w, 0.5 * t, 1.0, 3)[2]
        assert b == pytest.approx(a, rel=1e-12)

    def test_log_commutator_rejects_zero(self):
        with pytest.raises(ValueError):
            log_commutator_norm(np.zeros((16, 16)), random_field(16, 1, kmax=4), 1.0, 3)

    def test_ensembles_reproducible(self):
        assert commutator_ensemble_max(64, count=5) == commutator_ensemble_max(64, count=5)
        assert bernstein_ensemble_max(64, count=3) == bernstein_ensemble_max(64, count=3)


class TestUniqueness:
    def test_identical_states(self):
        s = seeded_state(32, kmax=6)
        row = uniqueness_functional(s, s)
        assert row.Y == 0.0

    def test_linear_in_theta_perturbation(self):
        s = seeded_state(64)
        bump = random_field(64, 77, kmax=6)
        y1 = uniqueness_functional(s, dataclasses.replace(s, theta=s.theta + 1e-6 * bump)).Y
        y2 = uniqueness_functional(s, dataclasses.replace(s, theta=s.theta + 2e-6 * bump)).Y
        assert y2 == pytest.approx(2 * y1, rel=1e-9)

    def test_y_is_sum(self):
        s = seeded_state(32, kmax=6)
        o = seeded_state(32, seed=9, kmax=6)
        row = uniqueness_functional(s, o)
        assert row.Y == row.theta_diff + row.v_diff

    def test_mismatch_errors(self):
        a = seeded_state(32, kmax=6)
        with pytest.raises(ValueError):
            uniqueness_functional(a, seeded_state(64, kmax=6))
        with pytest.raises(ValueError):
            uniqueness_functional(a, dataclasses.replace(a, t=1.0))

    def test_window_flag(self):
        s = seeded_state(32, kmax=6)
        assert uniqueness_functional(s, s, sigma=0.0).in_window == 1
        assert uniqueness_functional(s, s, sigma=0.2).in_window == 0
