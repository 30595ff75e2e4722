"""Placement-dependent operators: user channels, steering vectors, and the
stacked space-time target/clutter operators.

Conventions: azimuth is measured from the array axis in [0, pi]; column
stacking (Fortran order) maps the N x M waveform matrix X to the length-NM
vector x, so entry (n, m) sits at index n + m*N.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Apv:
    """Antenna positioning vector: sorted element coordinates on a line."""

    positions: np.ndarray

    def __post_init__(self):
        pos = np.atleast_1d(np.asarray(self.positions, dtype=float))
        if pos.ndim != 1:
            raise ValueError("positions must be a 1-D vector")
        if np.any(np.diff(pos) < 0):
            raise ValueError("antenna positions must be sorted ascending")
        object.__setattr__(self, "positions", pos)

    @property
    def n(self):
        return len(self.positions)


def propagation_diff(position, angle):
    """Propagation difference of an element at ``position`` for azimuth ``angle``."""
    return position * np.cos(angle)


def field_response_vector(position, angles, wavelength):
    """Unit-modulus per-path phase signature exp(j*2pi/lambda * pos*cos(angle))."""
    rho = propagation_diff(position, np.asarray(angles, dtype=float))
    return np.exp(1j * TWO_PI / wavelength * rho)


def field_response_matrix(apv: Apv, angles, wavelength):
    """(L, N) matrix whose n-th column is the field response at element n."""
    rho = np.cos(np.asarray(angles, dtype=float))[:, None] * apv.positions[None, :]
    return np.exp(1j * TWO_PI / wavelength * rho)


def comm_channel(apv: Apv, angles, gains, wavelength):
    """Length-N user channel: sum over paths of gain * field response."""
    frm = field_response_matrix(apv, angles, wavelength)  # (L, N)
    return np.asarray(gains, dtype=complex) @ frm


def steering_vector(apv: Apv, angle, wavelength):
    """Length-N steering vector for a single azimuth."""
    return np.exp(1j * TWO_PI / wavelength * apv.positions * np.cos(angle))


def target_channel(apv_t: Apv, apv_r: Apv, angle, wavelength):
    """Rank-1 two-way channel a_r(angle) a_t(angle)^T for a point scatterer."""
    a_r = steering_vector(apv_r, angle, wavelength)
    a_t = steering_vector(apv_t, angle, wavelength)
    return np.outer(a_r, a_t)


def shift_matrix(size, offset):
    """0/1 matrix with ones where column - row == offset (zero if |offset| >= size)."""
    J = np.zeros((size, size))
    if abs(offset) < size:
        idx = np.arange(size - abs(offset))
        if offset >= 0:
            J[idx, idx + offset] = 1.0
        else:
            J[idx - offset, idx] = 1.0
    return J


def _shift_columns(Y, offset):
    """Columns of Y right-multiplied by the shift matrix: column j picks j-offset."""
    out = np.zeros_like(Y)
    m = Y.shape[1]
    if abs(offset) < m:
        if offset >= 0:
            out[:, offset:] = Y[:, : m - offset]
        else:
            out[:, : m + offset] = Y[:, -offset:]
    return out


class StackedChannels:
    """All placement-dependent operators for one (t, r) pair.

    Target/clutter operators are kept in rank-1 + shift form and applied as
    operators; ``dense_target_op``/``dense_clutter_op`` materialize them for
    cross-checking.  Constructive-interference rows h_{k,m} act on single
    waveform columns and are kept as the (K, N) user channel matrix.
    """

    def __init__(self, apv_t: Apv, apv_r: Apv, realization, block_len, wavelength):
        self.apv_t = apv_t
        self.apv_r = apv_r
        self.n_antennas = apv_t.n
        self.block_len = int(block_len)
        kappa = np.asarray(realization.target_bins, dtype=int)
        self.padded_len = self.block_len + int(kappa.max() - kappa.min()) if len(kappa) else self.block_len
        self.target_offsets = kappa - kappa.min()                      # kappa_w - kappa_1 >= 0
        self.clutter_offsets = np.asarray(realization.clutter_bins, dtype=int) - kappa.min()

        self.user_channels = np.array([
            comm_channel(apv_t, realization.user_angles[k], realization.user_gains[k], wavelength)
            for k in range(realization.n_users)
        ]) if realization.n_users else np.zeros((0, apv_t.n), dtype=complex)

        self.target_at = np.array([steering_vector(apv_t, a, wavelength) for a in realization.target_angles])
        self.target_ar = np.array([steering_vector(apv_r, a, wavelength) for a in realization.target_angles])
        self.clutter_at = np.array([steering_vector(apv_t, a, wavelength) for a in realization.clutter_angles]) \
            if realization.n_clutters else np.zeros((0, apv_t.n), dtype=complex)
        self.clutter_ar = np.array([steering_vector(apv_r, a, wavelength) for a in realization.clutter_angles]) \
            if realization.n_clutters else np.zeros((0, apv_t.n), dtype=complex)

    # -- operator form -------------------------------------------------

    def _apply(self, a_t, a_r, offset, x):
        X = np.asarray(x).reshape(self.n_antennas, self.block_len, order="F")
        row = a_t @ X                                   # (M,) spatial inner products
        padded = np.zeros(self.padded_len, dtype=complex)
        padded[: self.block_len] = row
        if abs(offset) < self.padded_len:
            shifted = np.zeros(self.padded_len, dtype=complex)
            if offset >= 0:
                shifted[offset:] = padded[: self.padded_len - offset]
            else:
                shifted[: self.padded_len + offset] = padded[-offset:]
        else:
            shifted = np.zeros(self.padded_len, dtype=complex)
        return np.outer(a_r, shifted).reshape(-1, order="F")

    def _adjoint(self, a_t, a_r, offset, y):
        Y = np.asarray(y).reshape(self.n_antennas, self.padded_len, order="F")
        row = a_r.conj() @ Y                            # (Mt,) receive combining
        if abs(offset) < self.padded_len:
            unshifted = np.zeros(self.padded_len, dtype=complex)
            if offset >= 0:
                unshifted[: self.padded_len - offset] = row[offset:]
            else:
                unshifted[-offset:] = row[: self.padded_len + offset]
        else:
            unshifted = np.zeros(self.padded_len, dtype=complex)
        return np.outer(a_t.conj(), unshifted[: self.block_len]).reshape(-1, order="F")

    def apply_target(self, w, x):
        """F~_w x as a length N*M_pad vector."""
        return self._apply(self.target_at[w], self.target_ar[w], self.target_offsets[w], x)

    def adjoint_target(self, w, y):
        """F~_w^H y as a length N*M vector."""
        return self._adjoint(self.target_at[w], self.target_ar[w], self.target_offsets[w], y)

    def apply_clutter(self, q, x):
        return self._apply(self.clutter_at[q], self.clutter_ar[q], self.clutter_offsets[q], x)

    def adjoint_clutter(self, q, y):
        return self._adjoint(self.clutter_at[q], self.clutter_ar[q], self.clutter_offsets[q], y)

    # -- constructive-interference rows ---------------------------------

    def ci_row(self, k, m):
        """h_{k,m} = e_m kron h_k as a dense length-NM vector."""
        row = np.zeros(self.n_antennas * self.block_len, dtype=complex)
        row[m * self.n_antennas : (m + 1) * self.n_antennas] = self.user_channels[k]
        return row

    def received_points(self, x):
        """Noise-free received samples h_k^T x[m] for all (k, m)."""
        X = np.asarray(x).reshape(self.n_antennas, self.block_len, order="F")
        return self.user_channels @ X

    # -- dense materializations (test oracles) --------------------------

    def _dense(self, a_t, a_r, offset):
        N, M, Mt = self.n_antennas, self.block_len, self.padded_len
        T = np.zeros((N * Mt, N * M))
        T[: N * M, :] = np.eye(N * M)
        J = shift_matrix(Mt, -int(offset))
        return np.kron(J, np.outer(a_r, a_t)) @ T

    def dense_target_op(self, w):
        return self._dense(self.target_at[w], self.target_ar[w], self.target_offsets[w])

    def dense_clutter_op(self, q):
        return self._dense(self.clutter_at[q], self.clutter_ar[q], self.clutter_offsets[q])

    def ci_rows_dense(self):
        """(K*M, N*M) matrix of all h_{k,m}^T rows, ordered m-major then k."""
        K = self.user_channels.shape[0]
        rows = np.zeros((K * self.block_len, self.n_antennas * self.block_len), dtype=complex)
        for k in range(K):
            for m in range(self.block_len):
                rows[k * self.block_len + m] = self.ci_row(k, m)
        return rows


def build_stacked(apv_t: Apv, apv_r: Apv, realization, block_len, wavelength) -> StackedChannels:
    """Construct all stacked operators for one placement pair."""
    return StackedChannels(apv_t, apv_r, realization, block_len, wavelength)
