"""Projected first-order oracle for the penalty subproblem.

Independent cross-check path for the interior-point route: consensus ADMM
over the variables (x, alpha, beta) where every constraint set keeps its own
copy and dual, each update is an exact Euclidean projection (half-spaces,
magnitude caps, the power paraboloid, quadratic sublevel sets via a scalar
root find), and the linear objective enters through its proximal shift.
Built straight from the surrogate/margin data; shares no code with the cone
embedding it checks.
"""

from __future__ import annotations

import math

import numpy as np


def _split(y, nm):
    return y[: 2 * nm], y[2 * nm], y[2 * nm + 1]


def _project_halfspaces(Y, A, b):
    """Row-wise projection of Y onto {y : A[j] . y >= b[j]} per row j."""
    viol = b - np.sum(A * Y, axis=1)
    scale = np.maximum(viol, 0.0) / np.sum(A * A, axis=1)
    return Y + scale[:, None] * A


def _project_ball(y, nm, total_power):
    """Projection onto {(v, alpha, beta): ||v||^2 <= P + beta}."""
    v, alpha, beta = _split(y, nm)
    p2 = float(v @ v)
    if p2 <= total_power + beta:
        return y
    # v -> v/(1+2nu), beta -> beta+nu with g(nu) = ||v||^2/(1+2nu)^2 - beta - nu - P = 0.
    lo, hi = 0.0, 1.0
    while p2 / (1.0 + 2.0 * hi) ** 2 - beta - hi - total_power > 0.0:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if p2 / (1.0 + 2.0 * mid) ** 2 - beta - mid - total_power > 0.0:
            lo = mid
        else:
            hi = mid
    nu = 0.5 * (lo + hi)
    out = y.copy()
    out[: 2 * nm] = v / (1.0 + 2.0 * nu)
    out[2 * nm + 1] = beta + nu
    return out


class _QuadSet:
    """Sublevel set { ||A v||^2 - bhat.v + alpha <= c } with exact projection."""

    def __init__(self, A, bhat, c, nm):
        self.A = A
        self.bhat = bhat
        self.c = float(c)
        self.nm = nm
        if A.shape[0]:
            evals, evecs = np.linalg.eigh(A.T @ A)
            self.evals = np.maximum(evals, 0.0)
            self.evecs = evecs
        else:
            self.evals = None

    def violation(self, y):
        v, alpha, _ = _split(y, self.nm)
        quad = float(np.sum((self.A @ v) ** 2)) if self.A.shape[0] else 0.0
        return quad - float(self.bhat @ v) + alpha - self.c

    def project(self, y):
        if self.violation(y) <= 0.0:
            return y
        v0, alpha0, beta0 = _split(y, self.nm)
        if self.evals is None:
            # Affine case: half-space -bhat.v + alpha <= c.
            a = np.concatenate([-self.bhat, [1.0, 0.0]])
            gap = self.c - float(a @ y)
            return y + a * (gap / float(a @ a))
        w0 = self.evecs.T @ v0
        wb = self.evecs.T @ self.bhat

        def value(nu):
            denom = 1.0 + 2.0 * nu * self.evals
            w = (w0 + nu * wb) / denom
            alpha = alpha0 - nu
            quad = float(np.sum(self.evals * w * w))
            return quad - float(wb @ w) + alpha - self.c

        lo, hi = 0.0, 1.0
        while value(hi) > 0.0:
            hi *= 2.0
            if hi > 1e12:
                break
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if value(mid) > 0.0:
                lo = mid
            else:
                hi = mid
        nu = 0.5 * (lo + hi)
        denom = 1.0 + 2.0 * nu * self.evals
        w = (w0 + nu * wb) / denom
        out = y.copy()
        out[: 2 * self.nm] = self.evecs @ w
        out[2 * self.nm] = alpha0 - nu
        return out


def _clip_caps(v, nm, cap):
    x = v[:nm] + 1j * v[nm:]
    mags = np.abs(x)
    over = mags > cap
    if np.any(over):
        x = x.copy()
        x[over] *= cap / mags[over]
    return np.concatenate([x.real, x.imag])


def subproblem_objective(params, mu, x_p, total_power, x):
    """Penalty objective at x with alpha/beta eliminated at their optima.

    alpha = min_w surrogate_w(x); beta = worst violation of the two power
    constraints (clipped at zero).  Assumes x is margin/cap feasible.
    """
    x = np.asarray(x, dtype=complex)
    alpha = min(p.value(x) for p in params)
    lin = 2.0 * float(np.real(np.vdot(x_p, x))) - float(np.real(np.vdot(x_p, x_p)))
    power = float(np.real(np.vdot(x, x)))
    beta = max(0.0, power - total_power, total_power - lin)
    return alpha - mu * beta


def solve_subproblem_firstorder(params, ci_rows, total_power, cap, mu, x_p,
                                rho=1.0, max_iters=60000, tol=1e-12):
    """Consensus-ADMM solve; returns (x, objective, iterations).

    ``ci_rows`` are the complex margin rows (Re{a^H x} >= 1); ``params`` the
    per-target surrogate coefficients at expansion point ``x_p``.
    """
    x_p = np.asarray(x_p, dtype=complex)
    nm = x_p.size
    n = 2 * nm + 2
    xp_real = np.concatenate([x_p.real, x_p.imag])
    power_p = float(xp_real @ xp_real)

    rows_real = np.hstack([np.asarray(ci_rows).real, np.asarray(ci_rows).imag]) \
        if len(ci_rows) else np.zeros((0, 2 * nm))
    n_ci = rows_real.shape[0]
    A_ci = np.hstack([rows_real, np.zeros((n_ci, 2))])
    b_ci = np.ones(n_ci)

    # Linearized power half-space 2 xp.v + beta >= P + ||xp||^2 and beta >= 0.
    a_lin = np.concatenate([2.0 * xp_real, [0.0, 1.0]])
    b_lin = total_power + power_p
    a_beta = np.zeros(n)
    a_beta[-1] = 1.0

    quads = [
        _QuadSet(
            np.vstack([np.hstack([p.lowrank.real.T, p.lowrank.imag.T]),
                       np.hstack([-p.lowrank.imag.T, p.lowrank.real.T])])
            if p.lowrank.shape[1] else np.zeros((0, 2 * nm)),
            np.concatenate([p.linear.real, p.linear.imag]),
            p.constant,
            nm,
        )
        for p in params
    ]

    grad = np.zeros(n)
    grad[2 * nm] = -1.0          # minimize -alpha + mu*beta
    grad[2 * nm + 1] = mu

    # Block order: objective, CI rows, caps, ball, affine pair, quads.
    n_blocks = 4 + n_ci + len(quads)
    Y = np.zeros((n_blocks, n))
    U = np.zeros((n_blocks, n))
    zbar = np.zeros(n)
    zbar[: 2 * nm] = xp_real
    i_obj, i_caps, i_ball, i_aff = 0, 1 + n_ci, 2 + n_ci, 3 + n_ci
    ci_slice = slice(1, 1 + n_ci)
    q_off = 4 + n_ci

    last = zbar.copy()
    it = 0
    for it in range(1, max_iters + 1):
        work = zbar[None, :] - U

        Y[i_obj] = work[i_obj] - grad / rho
        if n_ci:
            Y[ci_slice] = _project_halfspaces(work[ci_slice], A_ci, b_ci)
        Y[i_caps] = work[i_caps]
        Y[i_caps, : 2 * nm] = _clip_caps(work[i_caps, : 2 * nm], nm, cap)
        Y[i_ball] = _project_ball(work[i_ball], nm, total_power)
        y = work[i_aff]
        gap = b_lin - float(a_lin @ y)
        if gap > 0.0:
            y = y + a_lin * (gap / float(a_lin @ a_lin))
        y[-1] = max(y[-1], 0.0)
        Y[i_aff] = y
        for j, q in enumerate(quads):
            Y[q_off + j] = q.project(work[q_off + j])

        zbar_new = (Y + U).mean(axis=0)
        U += Y - zbar_new[None, :]
        shift = float(np.linalg.norm(zbar_new - zbar))
        zbar = zbar_new
        if it % 50 == 0:
            move = float(np.linalg.norm(zbar - last))
            if move < tol * max(1.0, np.linalg.norm(zbar)) and shift < tol:
                break
            last = zbar.copy()

    # Polish to an exactly margin/cap feasible point before scoring.
    x = _polish(zbar[: 2 * nm], rows_real, nm, cap)
    obj = subproblem_objective(params, mu, x_p, total_power, x[:nm] + 1j * x[nm:])
    return x[:nm] + 1j * x[nm:], obj, it


def _polish(v, rows_real, nm, cap, sweeps=2000):
    """Cyclic projections onto margin half-spaces and caps until feasible."""
    y = _clip_caps(v, nm, cap)
    if rows_real.shape[0] == 0:
        return y
    norms2 = np.sum(rows_real * rows_real, axis=1)
    for _ in range(sweeps):
        margins = rows_real @ y
        if margins.min() >= 1.0 - 1e-13:
            break
        for j in np.where(margins < 1.0)[0]:
            gap = 1.0 - float(rows_real[j] @ y)
            if gap > 0.0:
                y = y + rows_real[j] * (gap / norms2[j])
        y = _clip_caps(y, nm, cap)
    return y
