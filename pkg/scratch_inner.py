import numpy as np, sys, time, math
sys.path.insert(0, "src")
from madfrc.scenario import SystemConfig, sample_scenario
from madfrc.channel import Apv, build_stacked
from madfrc.comm_ci import build_ci_set, ci_margins
from madfrc.waveform import (initialize_waveform, surrogate_params, penalty_ccp,
                             solve_convex_subproblem, CcpOptions)
from madfrc.firstorder import solve_subproblem_firstorder, subproblem_objective
from madfrc import radar

def tiny_config(seed=0):
    return SystemConfig(
        n_antennas=2, block_len=2, n_users=1, n_targets=1, n_clutters=0,
        n_paths_per_user=2, psk_order=4, wavelength_m=0.1, region_len_m=0.3,
        min_spacing_m=0.05, tx_power_w=4.0, papr_cap=1.6,
        qos_linear=1.5, noise_comm_w=1.0, noise_radar_w=1.0,
        path_loss_ref=1.0, exponent_comm=0.0, exponent_radar=0.0,
        user_center_m=40.0, user_radius_m=5.0, rcs_m2=1.0,
        target_range_ref_m=1.0, range_bin_len_m=1.0,
        target_table=((0, 75.0),), clutter_table=(), seed=seed,
    )

for trial in range(5):
    cfg = tiny_config(trial)
    real = sample_scenario(cfg, 100 + trial)
    rng = np.random.default_rng(trial)
    t = Apv(np.sort(rng.uniform(0, cfg.region_len_m, cfg.n_antennas)))
    r = Apv(np.sort(rng.uniform(0, cfg.region_len_m, cfg.n_antennas)))
    ch = build_stacked(t, r, real, cfg.block_len, cfg.wavelength_m)
    cs = build_ci_set(ch, real, cfg.qos_linear)

    x0 = initialize_waveform(ch, real, cfg, seed=trial)
    print(f"trial {trial}: init power={x0.power:.4f} (P={cfg.total_power})",
          f"margin={ci_margins(x0.x, cs).min():.4f} papr cap ok={np.abs(x0.x).max() <= cfg.entry_cap + 1e-9}")

    params = surrogate_params(x0.x, ch, real)
    mu = 10.0
    t0 = time.perf_counter()
    x_ipm, alpha, beta, info = solve_convex_subproblem(
        params, cs.row_matrix(), cfg.total_power, cfg.entry_cap, mu, x0.x)
    t_ipm = time.perf_counter() - t0
    obj_ipm = subproblem_objective(params, mu, x0.x, cfg.total_power, x_ipm)
    t0 = time.perf_counter()
    x_fo, obj_fo, iters = solve_subproblem_firstorder(
        params, cs.row_matrix(), cfg.total_power, cfg.entry_cap, mu, x0.x)
    t_fo = time.perf_counter() - t0
    rel = abs(obj_ipm - obj_fo) / max(abs(obj_ipm), abs(obj_fo), 1e-9)
    print(f"  obj ipm={obj_ipm:.8f} ({t_ipm*1e3:.1f} ms) fo={obj_fo:.8f} "
          f"({t_fo*1e3:.0f} ms, {iters} iters) rel={rel:.2e} alpha={alpha:.6f} beta={beta:.2e}")
