"""System configuration, random scenario generation, and the path-loss model.

A "scenario" is one sampled world: per-user scattering path angles and complex
gains, target/clutter range-angle positions with reflection powers, a PSK
symbol block, and noise levels.  Everything is a deterministic function of
(config, seed) so experiments are reproducible row by row.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict, replace

import numpy as np

from .errors import ConfigError

# Reference path gain at 1 m (-30 dB) used when a config does not override it.
DEFAULT_PATH_LOSS_REF = 1e-3

# Default range-angle tables (range bin, angle in degrees).
DEFAULT_TARGET_TABLE = ((0, 70.0), (0, 100.0))
DEFAULT_CLUTTER_TABLE = ((1, 105.0), (0, 30.0), (1, 75.0))


def path_loss(distance_m, exponent, ref_gain=DEFAULT_PATH_LOSS_REF):
    """Linear path gain ref_gain * distance^(-exponent).

    distance_m must be positive; exponent 0 returns ref_gain for any distance.
    """
    d = np.asarray(distance_m, dtype=float)
    if np.any(d <= 0.0):
        raise ConfigError(f"path_loss needs a positive distance, got {distance_m}")
    return ref_gain * d ** (-float(exponent))


def psk_constellation(order, phase_offset=None):
    """The order-PSK constellation points, offset grid by default.

    With the default offset pi/order the decision boundaries fall on the
    axes of the grid (e.g. order 4 gives the four diagonal points).  Pass
    phase_offset=0.0 for the unrotated convention ({+1,-1} at order 2).
    """
    if not _is_power_of_two(order) or order < 2:
        raise ConfigError(f"PSK order must be a power of two >= 2, got {order}")
    if phase_offset is None:
        phase_offset = math.pi / order
    phases = phase_offset + 2.0 * math.pi * np.arange(order) / order
    return np.exp(1j * phases)


def _is_power_of_two(n):
    return isinstance(n, (int, np.integer)) and n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class SystemConfig:
    """Static system parameters; validated on construction.

    Powers are linear watts, angles radians, lengths meters.  ``qos_linear``
    is the common per-user SNR requirement gamma; ``papr_cap`` is the
    peak-to-average control eta giving per-entry caps sqrt(tx_power*eta/N).
    """

    n_antennas: int = 6
    block_len: int = 10
    n_users: int = 5
    n_targets: int = 2
    n_clutters: int = 3
    n_paths_per_user: int = 8
    psk_order: int = 4
    wavelength_m: float = 0.1
    region_len_m: float = 1.2
    min_spacing_m: float = 0.05
    tx_power_w: float = 1.0
    papr_cap: float = 2.2
    qos_linear: float = 10.0 ** 1.5
    noise_comm_w: float = 1e-12
    noise_radar_w: float = 1e-12
    path_loss_ref: float = DEFAULT_PATH_LOSS_REF
    exponent_comm: float = 3.2
    exponent_radar: float = 2.6
    seed: int = 0
    # Geometry of the user drop disc and of the radar range grid.
    user_center_m: float = 40.0
    user_radius_m: float = 5.0
    target_range_ref_m: float = 30.0
    range_bin_len_m: float = 15.0
    rcs_m2: float = 1.0
    # (range_bin, angle_deg) rows; lengths must match n_targets/n_clutters.
    target_table: tuple = DEFAULT_TARGET_TABLE
    clutter_table: tuple = DEFAULT_CLUTTER_TABLE
    # None picks the offset grid pi/order aligning boundaries with the axes.
    psk_phase_offset: float | None = None

    def __post_init__(self):
        if self.n_antennas < 2:
            raise ConfigError("need at least 2 antennas")
        if self.block_len < 1:
            raise ConfigError("block length must be >= 1")
        if not _is_power_of_two(self.psk_order) or self.psk_order < 2:
            raise ConfigError(f"PSK order must be a power of two >= 2, got {self.psk_order}")
        if self.region_len_m < (self.n_antennas - 1) * self.min_spacing_m:
            raise ConfigError(
                "region length %.4g cannot hold %d antennas at spacing %.4g"
                % (self.region_len_m, self.n_antennas, self.min_spacing_m)
            )
        # Per-entry cap sqrt(P eta / N) must admit total power P*M: eta >= 1.
        if not 1.0 <= self.papr_cap <= self.n_antennas:
            raise ConfigError(f"papr cap must lie in [1, N], got {self.papr_cap}")
        for name in ("wavelength_m", "tx_power_w", "qos_linear", "noise_comm_w",
                     "noise_radar_w", "path_loss_ref"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if len(self.target_table) != self.n_targets:
            raise ConfigError("target table length does not match n_targets")
        if len(self.clutter_table) != self.n_clutters:
            raise ConfigError("clutter table length does not match n_clutters")
        bins = [row[0] for row in self.target_table]
        if any(b2 < b1 for b1, b2 in zip(bins, bins[1:])):
            raise ConfigError("target range bins must be sorted ascending")

    @property
    def entry_cap(self):
        """Per-entry magnitude cap sqrt(P_t * eta / N)."""
        return math.sqrt(self.tx_power_w * self.papr_cap / self.n_antennas)

    @property
    def total_power(self):
        """Block power budget P_t * M."""
        return self.tx_power_w * self.block_len

    def comm_path_loss(self, distance_m):
        return path_loss(distance_m, self.exponent_comm, self.path_loss_ref)

    def reflection_power(self, range_bin):
        """Round-trip reflection power for a scatterer in the given range bin.

        One-way gain C0*d^-nu enters twice, times the radar cross section.
        """
        d = self.target_range_ref_m + float(range_bin) * self.range_bin_len_m
        one_way = path_loss(d, self.exponent_radar, self.path_loss_ref)
        return float(one_way) ** 2 * self.rcs_m2


# JSON schema: explicit units in the key names; everything optional with the
# defaults above.  Unknown keys are rejected.
_JSON_SCALARS = {
    "n_antennas": ("n_antennas", int),
    "block_len": ("block_len", int),
    "n_users": ("n_users", int),
    "n_targets": ("n_targets", int),
    "n_clutters": ("n_clutters", int),
    "n_paths_per_user": ("n_paths_per_user", int),
    "psk_order": ("psk_order", int),
    "wavelength_m": ("wavelength_m", float),
    "region_len_m": ("region_len_m", float),
    "min_spacing_m": ("min_spacing_m", float),
    "tx_power_w": ("tx_power_w", float),
    "papr_cap": ("papr_cap", float),
    "qos_db": ("qos_linear", lambda v: 10.0 ** (float(v) / 10.0)),
    "noise_comm_dbm": ("noise_comm_w", lambda v: 10.0 ** (float(v) / 10.0) / 1000.0),
    "noise_radar_dbm": ("noise_radar_w", lambda v: 10.0 ** (float(v) / 10.0) / 1000.0),
    "path_loss_ref_db": ("path_loss_ref", lambda v: 10.0 ** (float(v) / 10.0)),
    "exponent_comm": ("exponent_comm", float),
    "exponent_radar": ("exponent_radar", float),
    "seed": ("seed", int),
    "user_center_m": ("user_center_m", float),
    "user_radius_m": ("user_radius_m", float),
    "target_range_ref_m": ("target_range_ref_m", float),
    "range_bin_len_m": ("range_bin_len_m", float),
    "rcs_m2": ("rcs_m2", float),
    "psk_phase_offset_rad": ("psk_phase_offset", float),
}


def config_from_json(source):
    """Build a SystemConfig from a JSON file path or an already-parsed dict."""
    if isinstance(source, dict):
        raw = dict(source)
    else:
        with open(source, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    kwargs = {}
    for key, value in raw.items():
        if key in _JSON_SCALARS:
            dest, conv = _JSON_SCALARS[key]
            kwargs[dest] = conv(value)
        elif key == "targets":
            kwargs["target_table"] = tuple(
                (int(row["range_bin"]), float(row["angle_deg"])) for row in value
            )
        elif key == "clutters":
            kwargs["clutter_table"] = tuple(
                (int(row["range_bin"]), float(row["angle_deg"])) for row in value
            )
        else:
            raise ConfigError(f"unknown config key: {key!r}")
    if "targets" in raw and "n_targets" not in raw:
        kwargs["n_targets"] = len(kwargs["target_table"])
    if "clutters" in raw and "n_clutters" not in raw:
        kwargs["n_clutters"] = len(kwargs["clutter_table"])
    return SystemConfig(**kwargs)


def config_to_dict(config):
    """Round-trippable plain-dict form (used for manifests and hashing)."""
    d = asdict(config)
    d["target_table"] = [list(row) for row in config.target_table]
    d["clutter_table"] = [list(row) for row in config.clutter_table]
    return d


@dataclass
class ScenarioRealization:
    """One sampled world; validated on construction."""

    user_angles: np.ndarray      # (K, L) radians in [0, pi]
    user_gains: np.ndarray       # (K, L) complex path gains (PRM diagonals)
    user_distances: np.ndarray   # (K,) meters
    target_bins: np.ndarray      # (W,) ints, sorted ascending
    target_angles: np.ndarray    # (W,) radians
    target_powers: np.ndarray    # (W,) linear reflection powers zeta^2
    clutter_bins: np.ndarray     # (Q,) ints
    clutter_angles: np.ndarray   # (Q,) radians
    clutter_powers: np.ndarray   # (Q,) linear reflection powers varsigma^2
    symbols: np.ndarray          # (K, M) unit-modulus PSK points
    noise_comm: np.ndarray       # (K,) per-user noise powers sigma_k^2
    noise_radar: float           # sigma_r^2
    psk_order: int
    psk_phase_offset: float

    def __post_init__(self):
        bins = np.asarray(self.target_bins)
        if np.any(np.diff(bins) < 0):
            raise ConfigError("target range bins must be sorted ascending")
        if np.any(self.target_powers <= 0) or np.any(self.clutter_powers <= 0):
            raise ConfigError("reflection powers must be strictly positive")
        if np.any(self.noise_comm <= 0) or self.noise_radar <= 0:
            raise ConfigError("noise powers must be strictly positive")
        points = psk_constellation(self.psk_order, self.psk_phase_offset)
        dist = np.abs(self.symbols[..., None] - points[None, None, :]).min(axis=-1)
        if dist.size and dist.max() > 1e-9:
            raise ConfigError("symbols do not lie on the PSK constellation")

    @property
    def n_users(self):
        return self.symbols.shape[0]

    @property
    def block_len(self):
        return self.symbols.shape[1]

    @property
    def n_targets(self):
        return len(self.target_bins)

    @property
    def n_clutters(self):
        return len(self.clutter_bins)


def draw_symbols(n_users, block_len, order, seed, phase_offset=None):
    """Draw an i.i.d. uniform (K, M) block from the order-PSK constellation."""
    points = psk_constellation(order, phase_offset)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, order, size=(n_users, block_len))
    return points[idx]


def sample_scenario(config: SystemConfig, seed) -> ScenarioRealization:
    """Sample one scenario realization, deterministic under (config, seed).

    Users drop uniformly in a disc at ``user_center_m``; each of the L
    scattering paths gets an azimuth uniform on [0, pi] and a circular
    Gaussian gain of variance PL(d_k)/L (equal power split across paths).
    Targets and clutter come verbatim from the config tables, with
    reflection powers from the round-trip path-loss model.
    """
    rng = np.random.default_rng(np.random.SeedSequence(entropy=[int(seed), config.seed]))
    K, L = config.n_users, config.n_paths_per_user
    M = config.block_len

    # User drop: uniform over the disc (radius via sqrt for uniform area).
    radii = config.user_radius_m * np.sqrt(rng.uniform(size=K))
    azim = rng.uniform(0.0, 2.0 * math.pi, size=K)
    dx = config.user_center_m + radii * np.cos(azim)
    dy = radii * np.sin(azim)
    distances = np.hypot(dx, dy)

    angles = rng.uniform(0.0, math.pi, size=(K, L))
    var = config.comm_path_loss(distances) / L  # (K,)
    gains = np.sqrt(var[:, None] / 2.0) * (
        rng.standard_normal((K, L)) + 1j * rng.standard_normal((K, L))
    )

    tbins = np.array([row[0] for row in config.target_table], dtype=int)
    tangles = np.deg2rad([row[1] for row in config.target_table])
    tpowers = np.array([config.reflection_power(b) for b in tbins])
    cbins = np.array([row[0] for row in config.clutter_table], dtype=int)
    cangles = np.deg2rad([row[1] for row in config.clutter_table])
    cpowers = np.array([config.reflection_power(b) for b in cbins])

    offset = config.psk_phase_offset
    symbols = psk_constellation(config.psk_order, offset)[
        rng.integers(0, config.psk_order, size=(K, M))
    ]
    if offset is None:
        offset = math.pi / config.psk_order

    return ScenarioRealization(
        user_angles=angles,
        user_gains=gains,
        user_distances=distances,
        target_bins=tbins,
        target_angles=tangles,
        target_powers=tpowers,
        clutter_bins=cbins,
        clutter_angles=cangles,
        clutter_powers=cpowers,
        symbols=symbols,
        noise_comm=np.full(K, config.noise_comm_w),
        noise_radar=config.noise_radar_w,
        psk_order=config.psk_order,
        psk_phase_offset=offset,
    )


def scaled_config(config: SystemConfig, **overrides) -> SystemConfig:
    """Copy of ``config`` with the given fields replaced (validation re-runs)."""
    return replace(config, **overrides)
