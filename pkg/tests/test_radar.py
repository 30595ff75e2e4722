import numpy as np
import pytest

from conftest import random_waveform, small_instance
from madfrc import radar
from madfrc.errors import DegenerateTargetError


def dense_covariance(x, ch, real, w):
    """Triple-product oracle built from dense operator materializations."""
    dim = ch.n_antennas * ch.padded_len
    R = real.noise_radar * np.eye(dim, dtype=complex)
    for i in range(real.n_targets):
        if i == w:
            continue
        z = ch.dense_target_op(i) @ x
        R += real.target_powers[i] * np.outer(z, z.conj())
    for q in range(real.n_clutters):
        z = ch.dense_clutter_op(q) @ x
        R += real.clutter_powers[q] * np.outer(z, z.conj())
    return R


def test_single_target_no_clutter_is_scaled_identity(rng):
    _, real, ch = small_instance(
        seed=1, n_targets=1, n_clutters=0, target_table=((0, 80.0),), clutter_table=(),
    )
    x = random_waveform(rng, ch.n_antennas * ch.block_len)
    R = radar.interference_covariance(x, ch, real, 0)
    assert np.allclose(R.dense(), real.noise_radar * np.eye(R.dim))


def test_covariance_matches_dense_oracle(rng):
    for seed in range(4):
        _, real, ch = small_instance(seed=seed)
        x = random_waveform(rng, ch.n_antennas * ch.block_len)
        for w in range(real.n_targets):
            R = radar.interference_covariance(x, ch, real, w)
            ref = dense_covariance(x, ch, real, w)
            assert np.abs(R.dense() - ref).max() <= 1e-10 * np.abs(ref).max()


def test_covariance_hermitian_and_floor_eigenvalue(rng):
    _, real, ch = small_instance(seed=2)
    x = random_waveform(rng, ch.n_antennas * ch.block_len)
    R = radar.interference_covariance(x, ch, real, 0).dense()
    assert np.abs(R - R.conj().T).max() < 1e-12 * np.abs(R).max()
    eigs = np.linalg.eigvalsh(R)
    assert eigs.min() >= real.noise_radar - 1e-10


def test_woodbury_solve_residual(rng):
    _, real, ch = small_instance(seed=3)
    x = random_waveform(rng, ch.n_antennas * ch.block_len)
    R = radar.interference_covariance(x, ch, real, 1)
    b = rng.standard_normal(R.dim) + 1j * rng.standard_normal(R.dim)
    z = R.solve(b)
    assert np.linalg.norm(R.dense() @ z - b) <= 1e-10 * np.linalg.norm(b)


class TestMvdr:
    def test_matched_filter_limit(self, rng):
        _, real, ch = small_instance(
            seed=4, n_targets=1, n_clutters=0, target_table=((0, 65.0),), clutter_table=(),
        )
        x = random_waveform(rng, ch.n_antennas * ch.block_len)
        z = ch.apply_target(0, x)
        u = radar.mvdr_filter(x, ch, real, 0)
        assert np.abs(u - z / np.vdot(z, z).real).max() < 1e-12
        f = radar.sinr_closed_form(x, ch, real, 0)
        expected = real.target_powers[0] * np.vdot(z, z).real / real.noise_radar
        assert f == pytest.approx(expected, rel=1e-12)

    def test_distortionless_response(self, rng):
        _, real, ch = small_instance(seed=5)
        x = random_waveform(rng, ch.n_antennas * ch.block_len)
        for w in range(real.n_targets):
            u = radar.mvdr_filter(x, ch, real, w)
            z = ch.apply_target(w, x)
            assert np.vdot(u, z) == pytest.approx(1.0 + 0.0j, abs=1e-10)

    def test_dominates_random_filters(self, rng):
        _, real, ch = small_instance(seed=6)
        x = random_waveform(rng, ch.n_antennas * ch.block_len)
        dim = ch.n_antennas * ch.padded_len
        for w in range(real.n_targets):
            u_star = radar.mvdr_filter(x, ch, real, w)
            best = radar.radar_sinr(x, u_star, ch, real, w)
            for _ in range(100):
                u = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
                assert radar.radar_sinr(x, u, ch, real, w) <= best * (1 + 1e-10)

    def test_degenerate_target_raises(self):
        _, real, ch = small_instance(seed=7)
        nm = ch.n_antennas * ch.block_len
        with pytest.raises(DegenerateTargetError):
            radar.mvdr_filter(np.zeros(nm, dtype=complex), ch, real, 0)


class TestSinrForms:
    def test_scale_invariance(self, rng):
        _, real, ch = small_instance(seed=8)
        x = random_waveform(rng, ch.n_antennas * ch.block_len)
        u = radar.mvdr_filter(x, ch, real, 0)
        base = radar.radar_sinr(x, u, ch, real, 0)
        for _ in range(5):
            cu = (rng.standard_normal() + 1j * rng.standard_normal()) * u
            assert radar.radar_sinr(x, cu, ch, real, 0) == pytest.approx(base, rel=1e-12)

    def test_closed_form_equals_filter_explicit(self, rng):
        for seed in range(5):
            _, real, ch = small_instance(seed=seed)
            x = random_waveform(rng, ch.n_antennas * ch.block_len)
            for w in range(real.n_targets):
                u = radar.mvdr_filter(x, ch, real, w)
                explicit = radar.radar_sinr(x, u, ch, real, w)
                closed = radar.sinr_closed_form(x, ch, real, w)
                assert closed == pytest.approx(explicit, rel=1e-10)

    def test_common_phase_invariance(self, rng):
        _, real, ch = small_instance(seed=9)
        x = random_waveform(rng, ch.n_antennas * ch.block_len)
        f0 = radar.sinr_closed_form(x, ch, real, 0)
        rot = np.exp(1j * rng.uniform(0, 2 * np.pi))
        assert radar.sinr_closed_form(rot * x, ch, real, 0) == pytest.approx(f0, rel=1e-10)

    def test_monotone_in_receiver_noise(self, rng):
        cfg, real, ch = small_instance(seed=10)
        x = random_waveform(rng, ch.n_antennas * ch.block_len)
        values = []
        for noise in (0.5, 1.0, 2.0, 4.0):
            real.noise_radar = noise
            values.append(radar.sinr_closed_form(x, ch, real, 0))
        assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))

    def test_min_sinr_is_worst_target(self, rng):
        _, real, ch = small_instance(seed=11)
        x = random_waveform(rng, ch.n_antennas * ch.block_len)
        per_target = [radar.sinr_closed_form(x, ch, real, w) for w in range(real.n_targets)]
        assert radar.min_sinr(x, ch, real) == pytest.approx(min(per_target), rel=1e-12)
