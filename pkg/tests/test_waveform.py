import math

import numpy as np
import pytest

from conftest import random_waveform, small_instance
from madfrc import radar
from madfrc.comm_ci import build_ci_set, ci_margins
from madfrc.errors import InfeasibleScenarioError
from madfrc.firstorder import solve_subproblem_firstorder, subproblem_objective
from madfrc.testing import tiny_subproblem, tiny_system
from madfrc.waveform import (
    CcpOptions,
    SubproblemBuilder,
    Waveform,
    initialize_waveform,
    lemma1_minorizer,
    penalty_ccp,
    solve_convex_subproblem,
    surrogate_params,
)


def random_hpd(rng, n, floor=0.5):
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return A @ A.conj().T + floor * np.eye(n)


def true_quad(z, R):
    return float(np.real(z.conj() @ np.linalg.solve(R, z)))


class TestLemma1:
    def test_tangency_at_expansion_point(self, rng):
        for _ in range(10):
            n = int(rng.integers(2, 7))
            z0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            R0 = random_hpd(rng, n)
            assert lemma1_minorizer(z0, R0, z0, R0) == pytest.approx(
                true_quad(z0, R0), rel=1e-11
            )

    def test_identity_center_reduces_to_zero_bound(self, rng):
        n = 5
        z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        val = lemma1_minorizer(z, np.eye(n), np.zeros(n), np.eye(n))
        assert val == pytest.approx(0.0, abs=1e-12)
        assert val <= np.vdot(z, z).real

    def test_global_minorization_on_random_probes(self, rng):
        n = 6
        z0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        R0 = random_hpd(rng, n)
        for _ in range(1000):
            z = z0 + rng.standard_normal(n) + 1j * rng.standard_normal(n)
            R = R0 + random_hpd(rng, n, floor=0.0)
            true = true_quad(z, R)
            assert lemma1_minorizer(z, R, z0, R0) <= true + 1e-9 * max(1.0, abs(true))

    def test_rejects_indefinite_center(self, rng):
        n = 4
        z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        bad = -np.eye(n)
        with pytest.raises(np.linalg.LinAlgError):
            lemma1_minorizer(z, np.eye(n), z, bad)


class TestSurrogate:
    def test_single_target_closed_form(self, rng):
        cfg, real, ch = tiny_system(seed=2, n_targets=1, n_clutters=0,
                                    n_antennas=3, block_len=3)
        x_p = random_waveform(rng, 9, power=cfg.total_power)
        (p,) = surrogate_params(x_p, ch, real)
        zeta2 = real.target_powers[0]
        sig = real.noise_radar
        z_p = ch.apply_target(0, x_p)
        assert p.lowrank.shape[1] == 0
        expected_b = 2.0 * zeta2 / sig * ch.adjoint_target(0, z_p)
        assert np.abs(p.linear - expected_b).max() < 1e-10 * np.abs(expected_b).max()
        assert p.constant == pytest.approx(-zeta2 * np.vdot(z_p, z_p).real / sig, rel=1e-10)

    def test_tangency_to_true_sinr(self, rng):
        for seed in range(5):
            cfg, real, ch = small_instance(seed=seed)
            x_p = random_waveform(rng, ch.n_antennas * ch.block_len, power=cfg.total_power)
            params = surrogate_params(x_p, ch, real)
            for p in params:
                truth = radar.sinr_closed_form(x_p, ch, real, p.target_index)
                assert p.value(x_p) == pytest.approx(truth, rel=1e-9)

    def test_global_minorization_sampling(self, rng):
        cfg, real, ch = small_instance(seed=3)
        nm = ch.n_antennas * ch.block_len
        x_p = random_waveform(rng, nm, power=cfg.total_power)
        params = surrogate_params(x_p, ch, real)
        for _ in range(1000):
            x = random_waveform(rng, nm, power=cfg.total_power * rng.uniform(0.5, 1.5))
            for p in params:
                truth = radar.sinr_closed_form(x, ch, real, p.target_index)
                assert p.value(x) <= truth + 1e-9 * max(1.0, abs(truth))

    def test_quadratic_factor_matches_dense(self, rng):
        cfg, real, ch = small_instance(seed=4)
        nm = ch.n_antennas * ch.block_len
        x_p = random_waveform(rng, nm, power=cfg.total_power)
        params = surrogate_params(x_p, ch, real)
        x = random_waveform(rng, nm)
        for p in params:
            G = p.dense_quadratic()
            assert np.abs(G - G.conj().T).max() < 1e-12 * max(np.abs(G).max(), 1e-30)
            direct = float(np.real(x.conj() @ G @ x))
            via_factor = float(np.sum(np.abs(p.lowrank.conj().T @ x) ** 2))
            assert via_factor == pytest.approx(direct, rel=1e-10)


def power_iteration_sq_norm(ch, w, nm, iters=500, seed=0):
    """Largest squared singular value of the stacked target operator."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(nm) + 1j * rng.standard_normal(nm)
    v /= np.linalg.norm(v)
    value = 0.0
    for _ in range(iters):
        u = ch.adjoint_target(w, ch.apply_target(w, v))
        value = float(np.real(np.vdot(v, u)))
        norm = np.linalg.norm(u)
        if norm == 0:
            return 0.0
        v = u / norm
    return value


class TestSubproblem:
    def test_power_driver_without_users(self, rng):
        # No margins, caps at the loosest level: the solution runs to the
        # power sphere and the full CCP approaches the top-singular bound.
        cfg, real, ch = tiny_system(seed=5, n_targets=1, n_clutters=0, n_users=0,
                                    n_antennas=3, block_len=3)
        cfg = type(cfg)(**{**cfg.__dict__, "papr_cap": float(cfg.n_antennas),
                           "n_users": 0})
        nm = ch.n_antennas * ch.block_len
        x0 = initialize_waveform(ch, real, cfg, seed=1)
        params = surrogate_params(x0.x, ch, real)
        x, alpha, beta, info = solve_convex_subproblem(
            params, np.zeros((0, nm)), cfg.total_power, cfg.entry_cap,
            CcpOptions().mu_max, x0.x)
        assert beta <= 1e-6
        assert info["kkt_residual"] <= 1e-7

        sol = penalty_ccp(x0, ch, real, cfg)
        bound = real.target_powers[0] * power_iteration_sq_norm(ch, 0, nm) \
            * cfg.total_power / real.noise_radar
        assert sol.min_sinr <= bound * (1 + 1e-8)
        assert sol.min_sinr >= 0.95 * bound

    def test_huge_penalty_forces_power_equality(self, rng):
        cfg, real, ch = tiny_system(seed=6)
        x0 = initialize_waveform(ch, real, cfg, seed=2)
        cs = build_ci_set(ch, real, cfg.qos_linear)
        params = surrogate_params(x0.x, ch, real)
        x, alpha, beta, info = solve_convex_subproblem(
            params, cs.row_matrix(), cfg.total_power, cfg.entry_cap, 1e9, x0.x)
        assert beta <= 1e-6
        assert abs(np.vdot(x, x).real - cfg.total_power) <= 1e-6 * cfg.total_power

    def test_cross_solver_agreement_tiny(self):
        for seed in (11, 12, 13):
            report = tiny_subproblem(seed)
            assert report["rel_gap"] <= 1e-6
            assert report["kkt"] <= 1e-7

    def test_builder_reuse_matches_fresh_build(self, rng):
        cfg, real, ch = tiny_system(seed=7)
        cs = build_ci_set(ch, real, cfg.qos_linear)
        rows = cs.row_matrix()
        x0 = initialize_waveform(ch, real, cfg, seed=3)
        params = surrogate_params(x0.x, ch, real)
        rank = params[0].lowrank.shape[1]
        builder = SubproblemBuilder(rows, x0.x.size, cfg.total_power,
                                    cfg.entry_cap, len(params), rank)
        xa, aa, ba, _ = solve_convex_subproblem(
            params, rows, cfg.total_power, cfg.entry_cap, 10.0, x0.x, builder=builder)
        xb, ab, bb, _ = solve_convex_subproblem(
            params, rows, cfg.total_power, cfg.entry_cap, 10.0, x0.x)
        assert aa == pytest.approx(ab, rel=1e-6)
        assert np.abs(xa - xb).max() < 1e-5 * max(1.0, np.abs(xb).max())


class TestPenaltyCcp:
    def test_restart_at_fixed_point_converges_immediately(self):
        cfg, real, ch = tiny_system(seed=8)
        x0 = initialize_waveform(ch, real, cfg, seed=4)
        sol = penalty_ccp(x0, ch, real, cfg)
        assert sol.converged
        opts = CcpOptions(mu0=CcpOptions().mu_max)     # penalty already saturated
        again = penalty_ccp(sol.waveform, ch, real, cfg, opts)
        assert again.converged
        assert len(again.log) <= 2

    def test_ascent_after_penalty_saturation(self):
        for seed in (9, 10):
            cfg, real, ch = tiny_system(seed=seed, n_targets=2, n_clutters=1,
                                        n_antennas=3, block_len=3)
            x0 = initialize_waveform(ch, real, cfg, seed=5)
            sol = penalty_ccp(x0, ch, real, cfg)
            chi, _ = CcpOptions().resolved(cfg.total_power)
            mu_max = CcpOptions().mu_max
            settled = [rec for rec in sol.log
                       if rec["mu"] >= mu_max and rec["beta"] <= chi]
            values = [rec["min_sinr_true"] for rec in settled]
            for a, b in zip(values, values[1:]):
                assert b >= a - 1e-7 * max(1.0, abs(a))

    def test_terminal_residuals(self):
        cfg, real, ch = tiny_system(seed=11, n_targets=2, n_clutters=1,
                                    n_antennas=3, block_len=3)
        x0 = initialize_waveform(ch, real, cfg, seed=6)
        sol = penalty_ccp(x0, ch, real, cfg)
        assert sol.converged
        chi, _ = CcpOptions().resolved(cfg.total_power)
        assert sol.power_gap <= max(chi, 1e-5 * cfg.total_power)
        assert sol.worst_ci_slack >= -1e-6
        assert sol.worst_papr_slack >= -1e-9
        assert sol.min_sinr > 0

    def test_log_schema_and_mu_schedule(self, tmp_path):
        cfg, real, ch = tiny_system(seed=12)
        x0 = initialize_waveform(ch, real, cfg, seed=7)
        log_file = tmp_path / "ccp.jsonl"
        sol = penalty_ccp(x0, ch, real, cfg, log_path=log_file)
        assert log_file.exists()
        import json

        records = [json.loads(line) for line in log_file.read_text().splitlines()]
        assert len(records) == len(sol.log)
        mus = [rec["mu"] for rec in records]
        assert all(b >= a for a, b in zip(mus, mus[1:]))
        assert mus[0] == CcpOptions().mu0
        for key in ("p", "alpha", "beta", "mu", "min_sinr_true", "wall_ms"):
            assert key in records[0]

    def test_filters_are_distortionless_at_solution(self):
        cfg, real, ch = tiny_system(seed=13, n_targets=2, n_clutters=1,
                                    n_antennas=3, block_len=3)
        x0 = initialize_waveform(ch, real, cfg, seed=8)
        sol = penalty_ccp(x0, ch, real, cfg)
        for w, u in enumerate(sol.filters):
            z = ch.apply_target(w, sol.waveform.x)
            assert np.vdot(u, z) == pytest.approx(1.0 + 0.0j, abs=1e-9)


class TestInitializeWaveform:
    def test_no_users_gives_powered_waveform(self):
        cfg, real, ch = tiny_system(seed=14, n_users=0)
        wf = initialize_waveform(ch, real, cfg, seed=9)
        assert wf.power <= cfg.total_power + 1e-9
        assert np.abs(wf.x).max() <= cfg.entry_cap + 1e-12

    def test_single_slot_matches_grid_search(self):
        # K=1, M=1, N=2: maximize the worst margin over phase-aligned x by a
        # 1-D amplitude grid; the program must do at least as well.
        cfg, real, ch = tiny_system(seed=15, n_users=1, n_antennas=2, block_len=1)
        cs = build_ci_set(ch, real, cfg.qos_linear)
        wf = initialize_waveform(ch, real, cfg, seed=10)
        program_margin = float(ci_margins(wf.x, cs).min())
        assert program_margin >= 1.0

        h = ch.user_channels[0]
        s = real.symbols[0, 0]
        cap = cfg.entry_cap
        power = cfg.total_power
        best = -np.inf
        for a0 in np.linspace(0.0, cap, 400):
            budget = power - a0**2
            if budget < 0:
                continue
            a1 = min(cap, math.sqrt(budget))
            # Phase-align each antenna so the received point lands on s.
            x = np.array([a0 * np.exp(-1j * np.angle(h[0])),
                          a1 * np.exp(-1j * np.angle(h[1]))]) * s
            best = max(best, float(ci_margins(x, cs).min()))
        assert program_margin >= best - 1e-3
        assert best > 1.0    # generous power: comfortably feasible

    def test_unreachable_qos_reports_infeasible(self):
        cfg, real, ch = tiny_system(seed=16)
        cfg = type(cfg)(**{**cfg.__dict__, "qos_linear": 1e9})
        with pytest.raises(InfeasibleScenarioError) as err:
            initialize_waveform(ch, real, cfg, seed=11)
        assert err.value.best_margin < 1.0

    def test_start_is_ci_and_papr_feasible(self):
        for seed in range(3):
            cfg, real, ch = tiny_system(seed=seed, n_users=2, n_antennas=3,
                                        block_len=3)
            cs = build_ci_set(ch, real, cfg.qos_linear)
            wf = initialize_waveform(ch, real, cfg, seed=seed)
            assert ci_margins(wf.x, cs).min() >= 1.0 - 1e-9
            assert np.abs(wf.x).max() <= cfg.entry_cap + 1e-9
            assert wf.power <= cfg.total_power + 1e-6


def test_waveform_metadata(rng):
    x = random_waveform(rng, 12, power=24.0)
    wf = Waveform(x, 3, 4)
    assert wf.power == pytest.approx(24.0)
    assert wf.as_matrix().shape == (3, 4)
    mags2 = np.abs(x) ** 2
    assert wf.papr == pytest.approx(mags2.max() / mags2.mean())


def test_firstorder_objective_consistent_with_params(rng):
    cfg, real, ch = tiny_system(seed=17)
    x0 = initialize_waveform(ch, real, cfg, seed=12)
    params = surrogate_params(x0.x, ch, real)
    # At the expansion point the eliminated-variable objective is
    # min_w f_w(x_p) - mu * power gap (both power constraints tight there).
    power_gap = abs(x0.power - cfg.total_power)
    expected = min(radar.sinr_closed_form(x0.x, ch, real, w)
                   for w in range(real.n_targets)) - 10.0 * power_gap
    got = subproblem_objective(params, 10.0, x0.x, cfg.total_power, x0.x)
    assert got == pytest.approx(expected, rel=1e-8)
