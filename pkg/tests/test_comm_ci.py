import math

import numpy as np
import pytest

from conftest import small_instance
from madfrc.comm_ci import (
    build_ci_set,
    ci_coefficient,
    ci_geometric_check,
    ci_margins,
    ci_slack,
)
from madfrc.errors import ConfigError


class TestCoefficient:
    def test_order4_unit_symbol(self):
        assert ci_coefficient(1.0, 1.0, 1.0, 4, +1) == pytest.approx(1.0 - 1.0j)
        assert ci_coefficient(1.0, 1.0, 1.0, 4, -1) == pytest.approx(1.0 + 1.0j)

    def test_binary_branches_collapse(self):
        for s in (1.0, -1.0, np.exp(0.7j)):
            plus = ci_coefficient(s, 2.0, 0.5, 2, +1)
            minus = ci_coefficient(s, 2.0, 0.5, 2, -1)
            expected = np.exp(-1j * np.angle(s)) / (0.5 * math.sqrt(2.0))
            assert plus == pytest.approx(minus)
            assert plus == pytest.approx(expected)

    def test_symbol_rotation_factor(self):
        s = np.exp(1j * 3 * np.pi / 4)
        base = ci_coefficient(1.0, 1.0, 1.0, 4, +1)
        assert ci_coefficient(s, 1.0, 1.0, 4, +1) == pytest.approx(base * np.conj(s))

    def test_invalid_inputs(self):
        with pytest.raises(ConfigError):
            ci_coefficient(1.0, 1.0, 1.0, 1, +1)
        with pytest.raises(ConfigError):
            ci_coefficient(1.0, -1.0, 1.0, 4, +1)
        with pytest.raises(ValueError):
            ci_coefficient(1.0, 1.0, 1.0, 4, 0)


def aligned_waveform(ch, cs, real):
    """x whose noise-free received point sits exactly on sigma*sqrt(qos)*s."""
    K, N, M = real.n_users, ch.n_antennas, ch.block_len
    H = ch.user_channels
    X = np.zeros((N, M), dtype=complex)
    targets = (cs.sigma * np.sqrt(cs.qos))[:, None] * real.symbols
    for m in range(M):
        X[:, m], *_ = np.linalg.lstsq(H, targets[:, m], rcond=None)
    return X.reshape(-1, order="F")


def test_on_symbol_point_gives_unit_margin(rng):
    _, real, ch = small_instance(seed=1)
    cs = build_ci_set(ch, real, 1.5)
    x = aligned_waveform(ch, cs, real)
    margins = ci_margins(x, cs)
    assert margins == pytest.approx(np.ones_like(margins), abs=1e-9)
    assert ci_slack(x, cs) == pytest.approx(0.0, abs=1e-9)


def test_margins_scale_linearly(rng):
    _, real, ch = small_instance(seed=2)
    cs = build_ci_set(ch, real, 1.5)
    x = aligned_waveform(ch, cs, real)
    assert ci_margins(2.0 * x, cs) == pytest.approx(2.0 * ci_margins(x, cs), rel=1e-12)


def test_geometric_and_margin_forms_agree(rng):
    # The absolute-value sector form and the two-branch linear form must
    # give the same feasibility verdict on every random point.
    _, real, ch = small_instance(seed=3)
    cs = build_ci_set(ch, real, 1.5)
    nm = ch.n_antennas * ch.block_len
    disagreements = 0
    for i in range(100_000 // (real.n_users * ch.block_len)):
        scale = 10.0 ** rng.uniform(-1, 1)
        x = scale * (rng.standard_normal(nm) + 1j * rng.standard_normal(nm))
        by_margin = bool(ci_margins(x, cs).min() >= 1.0)
        by_sector, worst = ci_geometric_check(x, cs)
        disagreements += by_margin != by_sector
    assert disagreements == 0


def test_geometric_check_sign_matches_worst_margin(rng):
    _, real, ch = small_instance(seed=4)
    cs = build_ci_set(ch, real, 1.5)
    x = aligned_waveform(ch, cs, real)
    _, worst = ci_geometric_check(x, cs)
    assert worst == pytest.approx(0.0, abs=1e-9)      # boundary point
    ok, worst = ci_geometric_check(1.5 * x, cs)
    assert ok and worst > 0
    ok, worst = ci_geometric_check(0.5 * x, cs)
    assert not ok and worst < 0


def test_common_rotation_covariance(rng):
    # Rotating the symbols and the waveform by one common phase leaves the
    # margins unchanged (channel rows are rotated through the symbols).
    _, real, ch = small_instance(seed=5)
    cs = build_ci_set(ch, real, 1.5)
    nm = ch.n_antennas * ch.block_len
    x = rng.standard_normal(nm) + 1j * rng.standard_normal(nm)
    base = ci_margins(x, cs)
    phi = rng.uniform(0, 2 * np.pi)
    real.symbols = real.symbols * np.exp(1j * phi)
    cs_rot = build_ci_set(ch, real, 1.5)
    rotated = ci_margins(np.exp(1j * phi) * x, cs_rot)
    assert rotated == pytest.approx(base, rel=1e-10)


def test_binary_order_single_halfplane(rng):
    _, real, ch = small_instance(seed=6, psk_order=2)
    cs = build_ci_set(ch, real, 1.5)
    nm = ch.n_antennas * ch.block_len
    x = rng.standard_normal(nm) + 1j * rng.standard_normal(nm)
    margins = ci_margins(x, cs)
    assert margins[..., 0] == pytest.approx(margins[..., 1], rel=1e-12)


def test_row_matrix_reproduces_margins(rng):
    _, real, ch = small_instance(seed=7)
    cs = build_ci_set(ch, real, 1.5)
    nm = ch.n_antennas * ch.block_len
    x = rng.standard_normal(nm) + 1j * rng.standard_normal(nm)
    rows = cs.row_matrix()
    via_rows = np.real(rows.conj() @ x)
    margins = ci_margins(x, cs)
    flat = margins.reshape(real.n_users, -1).reshape(-1)
    # Row order: (k, m) pairs with both branches adjacent.
    expected = margins.reshape(-1)
    assert via_rows == pytest.approx(expected, rel=1e-12)
