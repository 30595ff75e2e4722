"""Small synthetic instances shared by the oracle suites and the test suite."""

from __future__ import annotations

import numpy as np

from .channel import Apv, build_stacked
from .comm_ci import build_ci_set
from .firstorder import solve_subproblem_firstorder, subproblem_objective
from .scenario import SystemConfig, sample_scenario
from .waveform import initialize_waveform, solve_convex_subproblem, surrogate_params


def tiny_system(seed=0, n_targets=1, n_clutters=0, n_users=1, n_antennas=2,
                block_len=2):
    """Unit-scale system with feasible QoS used for tiny solver cross-checks."""
    target_rows = tuple((0, 60.0 + 30.0 * i) for i in range(n_targets))
    clutter_rows = tuple((1, 40.0 + 25.0 * i) for i in range(n_clutters))
    cfg = SystemConfig(
        n_antennas=n_antennas, block_len=block_len, n_users=n_users,
        n_targets=n_targets, n_clutters=n_clutters, n_paths_per_user=2,
        psk_order=4, wavelength_m=0.1, region_len_m=0.3, min_spacing_m=0.05,
        tx_power_w=4.0, papr_cap=1.6, qos_linear=1.5, noise_comm_w=1.0,
        noise_radar_w=1.0, path_loss_ref=1.0, exponent_comm=0.0,
        exponent_radar=0.0, target_range_ref_m=1.0, range_bin_len_m=1.0,
        target_table=target_rows, clutter_table=clutter_rows, seed=seed,
    )
    real = sample_scenario(cfg, seed + 97)
    rng = np.random.default_rng(seed)
    apv_t = Apv(np.sort(rng.uniform(0, cfg.region_len_m, cfg.n_antennas)))
    apv_r = Apv(np.sort(rng.uniform(0, cfg.region_len_m, cfg.n_antennas)))
    ch = build_stacked(apv_t, apv_r, real, cfg.block_len, cfg.wavelength_m)
    return cfg, real, ch


def tiny_subproblem(seed=0, mu=10.0, fo_iters=60000):
    """Solve one tiny penalty subproblem along both routes; report the gap."""
    cfg, real, ch = tiny_system(seed)
    cs = build_ci_set(ch, real, cfg.qos_linear)
    x0 = initialize_waveform(ch, real, cfg, seed=seed)
    params = surrogate_params(x0.x, ch, real)
    rows = cs.row_matrix()
    x_ipm, alpha, beta, info = solve_convex_subproblem(
        params, rows, cfg.total_power, cfg.entry_cap, mu, x0.x)
    obj_ipm = subproblem_objective(params, mu, x0.x, cfg.total_power, x_ipm)
    x_fo, obj_fo, iters = solve_subproblem_firstorder(
        params, rows, cfg.total_power, cfg.entry_cap, mu, x0.x, max_iters=fo_iters)
    rel = abs(obj_ipm - obj_fo) / max(abs(obj_ipm), abs(obj_fo), 1e-12)
    return {
        "obj_ipm": obj_ipm, "obj_fo": obj_fo, "rel_gap": rel,
        "alpha": alpha, "beta": beta, "kkt": info["kkt_residual"],
        "fo_iterations": iters,
    }
