"""Constructive-interference constraint algebra for PSK symbol-level design.

A noise-free received point r = h_k^T x[m] satisfies the QoS-robust CI region
for symbol s when, after derotating by the symbol phase, the point sits at
least sigma*sqrt(gamma) deep inside the PSK decision sector of half-angle
Phi = pi/order.  The sector test has two equivalent forms: the absolute-value
geometric inequality, and a pair of linear margins using rotation
coefficients; both are implemented, the linear form feeds the solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


def ci_coefficient(symbol, qos, sigma, order, branch):
    """Rotation coefficient for one margin branch (+1 or -1).

    Returns e^{-j*angle(s)} (sin(Phi) -+ j*cos(Phi)) / (sigma*sqrt(qos)*sin(Phi)).
    """
    if order < 2:
        raise ConfigError(f"PSK order must be >= 2, got {order}")
    if qos <= 0 or sigma <= 0:
        raise ConfigError("qos and noise level must be positive")
    if branch not in (+1, -1):
        raise ValueError("branch must be +1 or -1")
    phi = math.pi / order
    rot = np.exp(-1j * np.angle(symbol))
    return rot * (math.sin(phi) - 1j * branch * math.cos(phi)) / (sigma * math.sqrt(qos) * math.sin(phi))


@dataclass
class CiConstraintSet:
    """Per-(user, slot) rotation coefficients plus the channel rows they pair with."""

    coefficients: np.ndarray       # (K, M, 2) complex, branches [+, -]
    user_channels: np.ndarray      # (K, N) complex
    half_angle: float              # Phi = pi / order
    qos: np.ndarray                # (K,) linear gamma_k
    sigma: np.ndarray              # (K,) noise std sigma_k
    symbols: np.ndarray            # (K, M)

    @property
    def n_users(self):
        return self.coefficients.shape[0]

    @property
    def block_len(self):
        return self.coefficients.shape[1]

    def row_matrix(self):
        """(2KM, NM) real-inner-product row vectors a with Re{a^H x} = margin.

        Row order: branch-major pairs per (k, m), m fastest, i.e.
        [(k0,m0,+), (k0,m0,-), (k0,m1,+), ...].
        """
        K, M = self.coefficients.shape[:2]
        N = self.user_channels.shape[1]
        rows = np.zeros((2 * K * M, N * M), dtype=complex)
        for k in range(K):
            for m in range(M):
                base = 2 * (k * M + m)
                block = slice(m * N, (m + 1) * N)
                for b in range(2):
                    rows[base + b, block] = np.conj(self.coefficients[k, m, b] * self.user_channels[k])
        return rows


def build_ci_set(ch, realization, qos_linear) -> CiConstraintSet:
    """Assemble the CI constraint set from stacked channels and a realization."""
    K, M = realization.symbols.shape
    sigma = np.sqrt(realization.noise_comm)
    qos = np.broadcast_to(np.asarray(qos_linear, dtype=float), (K,)).copy()
    coeff = np.zeros((K, M, 2), dtype=complex)
    for k in range(K):
        for m in range(M):
            for b, branch in enumerate((+1, -1)):
                coeff[k, m, b] = ci_coefficient(
                    realization.symbols[k, m], qos[k], sigma[k], realization.psk_order, branch
                )
    return CiConstraintSet(
        coefficients=coeff,
        user_channels=ch.user_channels,
        half_angle=math.pi / realization.psk_order,
        qos=qos,
        sigma=sigma,
        symbols=realization.symbols,
    )


def ci_margins(x, cs: CiConstraintSet, received=None):
    """(K, M, 2) linear margins Re{gamma_{k,m} h_{k,m}^T x}; feasible iff all >= 1."""
    if received is None:
        K, M = cs.coefficients.shape[:2]
        N = cs.user_channels.shape[1]
        X = np.asarray(x).reshape(N, M, order="F")
        received = cs.user_channels @ X            # (K, M)
    return np.real(cs.coefficients * received[..., None])


def ci_slack(x, cs: CiConstraintSet):
    """Worst margin minus one (>= 0 means feasible)."""
    return float(ci_margins(x, cs).min() - 1.0)


def ci_geometric_check(x, cs: CiConstraintSet):
    """Sector-form CI test; returns (all satisfied, worst signed violation).

    Evaluates Re{r e^{-j ang(s)} - sigma*sqrt(gamma)} sin(Phi)
    - |Im{r e^{-j ang(s)}}| cos(Phi) for every (k, m); nonnegative everywhere
    iff both linear margins are >= 1.
    """
    K, M = cs.coefficients.shape[:2]
    N = cs.user_channels.shape[1]
    X = np.asarray(x).reshape(N, M, order="F")
    received = cs.user_channels @ X
    rot = np.exp(-1j * np.angle(cs.symbols))
    derot = received * rot
    depth = (np.real(derot) - (cs.sigma * np.sqrt(cs.qos))[:, None]) * math.sin(cs.half_angle)
    wobble = np.abs(np.imag(derot)) * math.cos(cs.half_angle)
    values = depth - wobble
    worst = float(values.min()) if values.size else 0.0
    return worst >= 0.0, worst
