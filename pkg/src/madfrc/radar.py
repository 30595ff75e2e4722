"""Radar covariance assembly, the closed-form MVDR filter, and SINR evaluation.

The interference-plus-noise covariance for target w is a scaled identity plus
W-1+Q rank-1 terms, so inverse applications go through the Woodbury identity
with a Cholesky factor of the small capacitance matrix.  A dense Hermitian
factorization path is kept for cross-checks.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateTargetError

# Probing energy below this fraction of the waveform norm counts as degenerate.
_DEGENERATE_TOL = 1e-12


class RadarCovariance:
    """sigma_r^2 * I plus a low-rank PSD part U U^H, with solve support."""

    def __init__(self, sigma2, lowrank, dim, target_index):
        self.sigma2 = float(sigma2)
        self.dim = int(dim)
        self.target_index = target_index
        if lowrank is None or lowrank.size == 0:
            self.lowrank = np.zeros((self.dim, 0), dtype=complex)
        else:
            self.lowrank = np.asarray(lowrank, dtype=complex)
        r = self.lowrank.shape[1]
        # Capacitance sigma2*I_r + U^H U, factorized once.
        cap = self.sigma2 * np.eye(r) + self.lowrank.conj().T @ self.lowrank
        self._cap_chol = np.linalg.cholesky(cap) if r else None

    def solve(self, b):
        """R^{-1} b via Woodbury; accepts vectors or stacked columns."""
        b = np.asarray(b, dtype=complex)
        if self.lowrank.shape[1] == 0:
            return b / self.sigma2
        ub = self.lowrank.conj().T @ b
        y = np.linalg.solve(self._cap_chol, ub)
        y = np.linalg.solve(self._cap_chol.conj().T, y)
        return (b - self.lowrank @ y) / self.sigma2

    def dense(self):
        """Materialized Hermitian matrix (test oracle path)."""
        return self.sigma2 * np.eye(self.dim) + self.lowrank @ self.lowrank.conj().T

    def quad_inv(self, z):
        """z^H R^{-1} z as a real scalar."""
        return float(np.real(np.vdot(z, self.solve(z))))


def interference_covariance(x, ch, realization, w) -> RadarCovariance:
    """Covariance of all returns except target w, plus receiver noise."""
    cols = []
    for i in range(realization.n_targets):
        if i == w:
            continue
        cols.append(np.sqrt(realization.target_powers[i]) * ch.apply_target(i, x))
    for q in range(realization.n_clutters):
        cols.append(np.sqrt(realization.clutter_powers[q]) * ch.apply_clutter(q, x))
    dim = ch.n_antennas * ch.padded_len
    lowrank = np.stack(cols, axis=1) if cols else None
    return RadarCovariance(realization.noise_radar, lowrank, dim, w)


def _probe(x, ch, w):
    z = ch.apply_target(w, x)
    if np.linalg.norm(z) <= _DEGENERATE_TOL * max(np.linalg.norm(x), 1.0):
        raise DegenerateTargetError(f"waveform places no energy on target {w}")
    return z


def mvdr_filter(x, ch, realization, w):
    """Distortionless minimum-variance filter R_w^{-1} z / (z^H R_w^{-1} z)."""
    z = _probe(x, ch, w)
    R = interference_covariance(x, ch, realization, w)
    Riz = R.solve(z)
    denom = np.real(np.vdot(z, Riz))
    return Riz / denom

def radar_sinr(x, u, ch, realization, w):
    """Output SINR of filter u on target w; invariant to scaling of u."""
    u = np.asarray(u, dtype=complex)
    if not np.any(u):
        raise ValueError("filter must be nonzero")
    z = ch.apply_target(w, x)
    R = interference_covariance(x, ch, realization, w)
    num = realization.target_powers[w] * abs(np.vdot(u, z)) ** 2
    return float(num / _quad(u, R))


def _quad(u, R: RadarCovariance):
    """u^H R u without materializing R."""
    s = R.sigma2 * np.real(np.vdot(u, u))
    if R.lowrank.shape[1]:
        s += float(np.sum(np.abs(R.lowrank.conj().T @ u) ** 2))
    return s


def sinr_closed_form(x, ch, realization, w):
    """SINR with the optimal filter substituted: zeta^2 z^H R^{-1} z."""
    z = _probe(x, ch, w)
    R = interference_covariance(x, ch, realization, w)
    return float(realization.target_powers[w] * R.quad_inv(z))


def min_sinr(x, ch, realization):
    """Worst-case per-target SINR under the optimal filters."""
    return min(sinr_closed_form(x, ch, realization, w) for w in range(realization.n_targets))
