import numpy as np
import pytest

from madfrc.channel import Apv, build_stacked
from madfrc.scenario import SystemConfig, sample_scenario


def random_apv(rng, region_len, n, min_spacing=0.0):
    """Rejection-sample a valid placement on [0, region_len]."""
    while True:
        pos = np.sort(rng.uniform(0.0, region_len, n))
        if min_spacing == 0.0 or np.all(np.diff(pos) >= min_spacing):
            return Apv(pos)


def small_config(**overrides):
    """Mid-size synthetic system with unit-scale powers for solver tests."""
    base = dict(
        n_antennas=3, block_len=4, n_users=2, n_targets=2, n_clutters=3,
        n_paths_per_user=3, psk_order=4, wavelength_m=0.1, region_len_m=0.5,
        min_spacing_m=0.05, tx_power_w=4.0, papr_cap=2.0, qos_linear=1.5,
        noise_comm_w=1.0, noise_radar_w=1.0, path_loss_ref=1.0,
        exponent_comm=0.0, exponent_radar=0.0, target_range_ref_m=1.0,
        range_bin_len_m=1.0,
        target_table=((0, 70.0), (2, 100.0)),
        clutter_table=((1, 105.0), (0, 30.0), (3, 75.0)),
    )
    base.update(overrides)
    return SystemConfig(**base)


def small_instance(seed=0, **overrides):
    """(config, realization, channels) triple on random placements."""
    cfg = small_config(**overrides)
    real = sample_scenario(cfg, seed + 11)
    rng = np.random.default_rng(seed)
    apv_t = random_apv(rng, cfg.region_len_m, cfg.n_antennas)
    apv_r = random_apv(rng, cfg.region_len_m, cfg.n_antennas)
    ch = build_stacked(apv_t, apv_r, real, cfg.block_len, cfg.wavelength_m)
    return cfg, real, ch


def random_waveform(rng, nm, power=None):
    x = rng.standard_normal(nm) + 1j * rng.standard_normal(nm)
    if power is not None:
        x *= np.sqrt(power) / np.linalg.norm(x)
    return x


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
