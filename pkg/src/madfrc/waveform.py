"""Symbol-level waveform optimization by penalty convex-concave iterations.

Each outer iteration builds, for every target, a concave quadratic lower
bound on the filter-eliminated SINR (a tangent minorizer from the convexity
of z^H R^{-1} z in (z, R)), then maximizes the worst surrogate subject to the
constructive-interference margins, per-entry magnitude caps, and the total
power equality.  The equality is split into a ball and a linearized
reverse-convex half, both slacked by beta with a growing penalty mu.  The
convex subproblem is solved over the real embedding of x as a second-order
cone program by the interior-point method in ``socp``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import radar
from .comm_ci import build_ci_set, ci_margins
from .errors import DegenerateTargetError, InfeasibleScenarioError
from .socp import ConeDims, solve_socp

# Strictly convex conditioning weight on ||x||^2 in the subproblem objective.
_REG_EPS = 1e-12


@dataclass
class Waveform:
    """Space-time transmit signal as a length-NM complex vector."""

    x: np.ndarray
    n_antennas: int
    block_len: int

    def as_matrix(self):
        return self.x.reshape(self.n_antennas, self.block_len, order="F")

    @property
    def power(self):
        """Total block energy ||x||^2."""
        return float(np.real(np.vdot(self.x, self.x)))

    @property
    def papr(self):
        """Peak-to-average entry power ratio."""
        mags2 = np.abs(self.x) ** 2
        return float(mags2.max() / mags2.mean())


@dataclass
class SurrogateParams:
    """Concave quadratic lower bound -x^H G x + Re{b^H x} + c for one target.

    G is PSD with the low-rank factor ``lowrank`` (G = V V^H); the bound is
    tangent to the true SINR at the expansion point.
    """

    lowrank: np.ndarray      # (NM, r) complex, r = W-1+Q
    linear: np.ndarray       # (NM,) complex b
    constant: float          # c
    expansion_point: np.ndarray
    target_index: int

    def value(self, x):
        quad = float(np.sum(np.abs(self.lowrank.conj().T @ x) ** 2))
        return -quad + float(np.real(np.vdot(self.linear, x))) + self.constant

    def dense_quadratic(self):
        return self.lowrank @ self.lowrank.conj().T


def lemma1_minorizer(z, R, z0, R0):
    """Tangent lower bound on z^H R^{-1} z at the expansion point (z0, R0).

    Returns 2 Re{z0^H R0^{-1} z} - Tr{R0^{-1} z0 z0^H R0^{-1} R}; equals the
    true value at (z0, R0) and never exceeds it elsewhere.
    """
    R0 = np.asarray(R0, dtype=complex)
    chol = np.linalg.cholesky(R0)                      # raises if not PD
    w = np.linalg.solve(chol.conj().T, np.linalg.solve(chol, z0))   # R0^{-1} z0
    lin = 2.0 * float(np.real(np.vdot(w, z)))
    trace = float(np.real(np.vdot(w, np.asarray(R, dtype=complex) @ w)))
    return lin - trace


def surrogate_params(x_p, ch, realization):
    """Per-target surrogate coefficients at the expansion point x_p."""
    x_p = np.asarray(x_p, dtype=complex)
    out = []
    for w in range(realization.n_targets):
        z = ch.apply_target(w, x_p)
        if np.linalg.norm(z) <= 1e-12 * max(np.linalg.norm(x_p), 1.0):
            raise DegenerateTargetError(f"expansion point has no energy on target {w}")
        R = radar.interference_covariance(x_p, ch, realization, w)
        riz = R.solve(z)
        zeta2 = realization.target_powers[w]
        b = 2.0 * zeta2 * ch.adjoint_target(w, riz)
        c = -zeta2 * realization.noise_radar * float(np.real(np.vdot(riz, riz)))
        cols = []
        for i in range(realization.n_targets):
            if i == w:
                continue
            gi = ch.adjoint_target(i, riz)
            cols.append(math.sqrt(zeta2 * realization.target_powers[i]) * gi)
        for q in range(realization.n_clutters):
            gq = ch.adjoint_clutter(q, riz)
            cols.append(math.sqrt(zeta2 * realization.clutter_powers[q]) * gq)
        lowrank = np.stack(cols, axis=1) if cols else np.zeros((x_p.size, 0), dtype=complex)
        out.append(SurrogateParams(lowrank, b, c, x_p.copy(), w))
    return out


def _real_rows(rows):
    """Complex rows a (acting as Re{a^H x}) to real rows on [Re x; Im x]."""
    return np.hstack([rows.real, rows.imag])


def _factor_rows(V):
    """Real rows mapping v to the stacked Re/Im of V^H x."""
    if V.shape[1] == 0:
        return np.zeros((0, 2 * V.shape[0]))
    re = np.hstack([V.real.T, V.imag.T])
    im = np.hstack([-V.imag.T, V.real.T])
    return np.vstack([re, im])


class SubproblemBuilder:
    """Cone-program embedding of one penalty-CCP subproblem.

    Variables are [v; alpha; beta; t] with v the real embedding of x and t
    the epigraph of ||x||^2 carrying the conditioning term.  The static
    blocks (margins, caps, ball) are assembled once; per-iteration updates
    touch only the linearized-power row, the surrogate cones, and mu.
    """

    def __init__(self, ci_rows, n_complex, total_power, entry_cap, n_targets, rank):
        self.nm = n_complex
        self.total_power = float(total_power)
        self.cap = float(entry_cap)
        self.n_targets = n_targets
        self.rank = rank
        nv = 2 * self.nm
        self.n = nv + 3
        self.col_alpha, self.col_beta, self.col_t = nv, nv + 1, nv + 2

        n_ci = ci_rows.shape[0]
        l = n_ci + 2
        cones = [(3, self.nm), (nv + 2, 2), (2 * rank + 2, n_targets)]
        self.dims = ConeDims(nonneg=l, soc=tuple(cones))
        m = self.dims.total
        G = np.zeros((m, self.n))
        h = np.zeros(m)

        # Orthant: CI margins >= 1, linearized power (row updated later), beta >= 0.
        if n_ci:
            G[:n_ci, :nv] = -_real_rows(ci_rows)
            h[:n_ci] = -1.0
        self.row_linpow = n_ci
        G[self.row_linpow, self.col_beta] = -1.0
        G[n_ci + 1, self.col_beta] = -1.0

        # Per-entry caps: (cap, Re x_i, Im x_i) in a 3-cone.
        r0 = l
        for i in range(self.nm):
            h[r0 + 3 * i] = self.cap
            G[r0 + 3 * i + 1, i] = -1.0
            G[r0 + 3 * i + 2, self.nm + i] = -1.0

        # Power ball ||x||^2 <= P + beta and conditioning epigraph ||x||^2 <= t.
        r1 = r0 + 3 * self.nm
        G[r1, self.col_beta] = -1.0
        h[r1] = self.total_power + 1.0
        G[r1 + 1 : r1 + 1 + nv, :nv] = -2.0 * np.eye(nv)
        G[r1 + 1 + nv, self.col_beta] = -1.0
        h[r1 + 1 + nv] = self.total_power - 1.0
        r2 = r1 + nv + 2
        G[r2, self.col_t] = -1.0
        h[r2] = 1.0
        G[r2 + 1 : r2 + 1 + nv, :nv] = -2.0 * np.eye(nv)
        G[r2 + 1 + nv, self.col_t] = -1.0
        h[r2 + 1 + nv] = -1.0

        self.row_surr = r2 + nv + 2
        self.G = G
        self.h = h
        self.c = np.zeros(self.n)
        self.obj_scale = 1.0
        self.c[self.col_alpha] = -1.0
        self.c[self.col_t] = _REG_EPS

    def update(self, params, x_p, mu):
        nv = 2 * self.nm
        x_p = np.asarray(x_p, dtype=complex)
        xp_real = np.concatenate([x_p.real, x_p.imag])
        power_p = float(xp_real @ xp_real)
        self.G[self.row_linpow, :nv] = -2.0 * xp_real
        self.h[self.row_linpow] = -(self.total_power + power_p)
        # The solution set is invariant to a positive objective scaling; keep
        # the cost vector O(1) so large penalties do not sink the dual
        # residual into the float64 round-off floor.
        self.obj_scale = max(1.0, float(mu))
        self.c[self.col_alpha] = -1.0 / self.obj_scale
        self.c[self.col_beta] = float(mu) / self.obj_scale
        self.c[self.col_t] = _REG_EPS / self.obj_scale

        row = self.row_surr
        size = 2 * self.rank + 2
        for p in params:
            bhat = np.concatenate([p.linear.real, p.linear.imag])
            self.G[row, :nv] = -bhat
            self.G[row, self.col_alpha] = 1.0
            self.h[row] = p.constant + 1.0
            if self.rank:
                self.G[row + 1 : row + 1 + 2 * self.rank, :nv] = -2.0 * _factor_rows(p.lowrank)
            self.G[row + size - 1, :nv] = -bhat
            self.G[row + size - 1, self.col_alpha] = 1.0
            self.h[row + size - 1] = p.constant - 1.0
            row += size

    def solve(self, **kwargs):
        res = solve_socp(self.c, self.G, self.h, self.dims, **kwargs)
        nv = 2 * self.nm
        x = res.z[: self.nm] + 1j * res.z[self.nm : nv]
        return x, float(res.z[self.col_alpha]), float(res.z[self.col_beta]), res


def solve_convex_subproblem(params, cs, total_power, entry_cap, mu, x_p,
                            builder=None, **tol):
    """One convex penalty subproblem; returns (x, alpha, beta, info).

    ``cs`` may be a CiConstraintSet or a prebuilt complex row matrix (possibly
    empty for the no-user case).
    """
    rows = cs.row_matrix() if hasattr(cs, "row_matrix") else np.asarray(cs)
    x_p = np.asarray(x_p, dtype=complex)
    if builder is None:
        rank = params[0].lowrank.shape[1]
        builder = SubproblemBuilder(rows, x_p.size, total_power, entry_cap,
                                    len(params), rank)
    builder.update(params, x_p, mu)
    x, alpha, beta, res = builder.solve(**tol)
    info = {
        "status": res.status,
        "iterations": res.iterations,
        "kkt_residual": max(res.pres, res.dres, res.relgap),
        "pcost": res.pcost * builder.obj_scale,
        "dcost": res.dcost * builder.obj_scale,
    }
    return x, alpha, beta, info


@dataclass
class CcpOptions:
    """Penalty schedule and stopping rules for the outer loop."""

    mu0: float = 1.0
    delta: float = 3.0
    mu_max: float = 1e6
    chi: float | None = None          # slack tolerance, default 1e-5 * P_t * M
    upsilon: float | None = None      # step tolerance, default 1e-4 * sqrt(P_t * M)
    max_iters: int = 50
    feas_tol: float = 1e-9
    gap_tol: float = 1e-9

    def resolved(self, total_power):
        chi = self.chi if self.chi is not None else 1e-5 * total_power
        ups = self.upsilon if self.upsilon is not None else 1e-4 * math.sqrt(total_power)
        return chi, ups


@dataclass
class WaveformSolution:
    """Converged waveform plus post-hoc residuals and the iteration log."""

    waveform: Waveform
    alpha: float
    min_sinr: float
    filters: list
    power_gap: float
    worst_ci_slack: float
    worst_papr_slack: float
    converged: bool
    log: list = field(default_factory=list)

    def objective_db(self):
        return 10.0 * math.log10(self.min_sinr) if self.min_sinr > 0 else -math.inf


def penalty_ccp(x0, ch, realization, config, opts: CcpOptions | None = None,
                log_path=None) -> WaveformSolution:
    """Run the penalty-CCP loop from a CI/PAPR-feasible starting waveform."""
    opts = opts or CcpOptions()
    x_p = np.asarray(x0.x if isinstance(x0, Waveform) else x0, dtype=complex)
    total_power = config.total_power
    chi, upsilon = opts.resolved(total_power)
    cs = build_ci_set(ch, realization, config.qos_linear)
    rows = cs.row_matrix()

    rank = realization.n_targets - 1 + realization.n_clutters
    builder = SubproblemBuilder(rows, x_p.size, total_power, config.entry_cap,
                                realization.n_targets, rank)
    mu = opts.mu0
    log = []
    converged = False
    x = x_p
    alpha = beta = math.nan
    for p in range(opts.max_iters):
        t0 = time.perf_counter()
        params = surrogate_params(x_p, ch, realization)
        x, alpha, beta, info = solve_convex_subproblem(
            params, rows, total_power, config.entry_cap, mu, x_p,
            builder=builder, feas_tol=opts.feas_tol, gap_tol=opts.gap_tol,
        )
        step = float(np.linalg.norm(x - x_p))
        true_min = radar.min_sinr(x, ch, realization)
        log.append({
            "p": p,
            "alpha": alpha,
            "beta": beta,
            "mu": mu,
            "min_sinr_true": true_min,
            "step": step,
            "kkt_residual": info["kkt_residual"],
            "wall_ms": 1000.0 * (time.perf_counter() - t0),
        })
        x_p = x
        if beta <= chi and step <= upsilon:
            converged = True
            break
        mu = min(opts.delta * mu, opts.mu_max)

    if log_path is not None:
        _write_jsonl(log_path, log)

    wf = Waveform(x, ch.n_antennas, ch.block_len)
    filters = [radar.mvdr_filter(x, ch, realization, w) for w in range(realization.n_targets)]
    margins = ci_margins(x, cs)
    mags = np.abs(x)
    return WaveformSolution(
        waveform=wf,
        alpha=alpha,
        min_sinr=radar.min_sinr(x, ch, realization),
        filters=filters,
        power_gap=abs(wf.power - total_power),
        worst_ci_slack=float(margins.min() - 1.0) if margins.size else math.inf,
        worst_papr_slack=float(config.entry_cap - mags.max()),
        converged=converged,
        log=log,
    )


def _write_jsonl(path, records):
    import json

    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")


def initialize_waveform(ch, realization, config, seed=0) -> Waveform:
    """CI- and PAPR-feasible start: maximize the worst margin, then scale up.

    Solves max_tau { margins(x) >= 1 + tau, ||x||^2 <= P_t M, |x_i| <= cap },
    then pushes the solution toward the power sphere without breaking a cap
    (scaling up never reduces a margin).  Raises InfeasibleScenarioError when
    the achievable worst margin is below one.
    """
    nm = ch.n_antennas * ch.block_len
    total_power = config.total_power
    cap = config.entry_cap
    rng = np.random.default_rng(seed)

    cs = build_ci_set(ch, realization, config.qos_linear)
    rows = cs.row_matrix()
    if rows.shape[0] == 0:
        x = rng.standard_normal(nm) + 1j * rng.standard_normal(nm)
        x *= math.sqrt(total_power) / np.linalg.norm(x)
        mags = np.abs(x)
        over = mags > cap
        x[over] *= cap / mags[over]
        return Waveform(x, ch.n_antennas, ch.block_len)

    nv = 2 * nm
    n = nv + 1
    n_ci = rows.shape[0]
    dims = ConeDims(nonneg=n_ci, soc=((3, nm), (nv + 2, 1)))
    G = np.zeros((dims.total, n))
    h = np.zeros(dims.total)
    G[:n_ci, :nv] = -_real_rows(rows)
    G[:n_ci, nv] = 1.0
    h[:n_ci] = -1.0
    r0 = n_ci
    for i in range(nm):
        h[r0 + 3 * i] = cap
        G[r0 + 3 * i + 1, i] = -1.0
        G[r0 + 3 * i + 2, nm + i] = -1.0
    r1 = r0 + 3 * nm
    h[r1] = total_power + 1.0
    G[r1 + 1 : r1 + 1 + nv, :nv] = -2.0 * np.eye(nv)
    h[r1 + 1 + nv] = total_power - 1.0
    c = np.zeros(n)
    c[nv] = -1.0

    res = solve_socp(c, G, h, dims)
    tau = float(res.z[nv])
    x = res.z[:nm] + 1j * res.z[nm:nv]
    if tau < 0.0:
        raise InfeasibleScenarioError(
            "QoS margins unreachable at this power/PAPR budget "
            f"(best worst-margin {1.0 + tau:.4g} < 1)",
            best_margin=1.0 + tau,
        )
    norm = np.linalg.norm(x)
    mags = np.abs(x)
    kappa = min(math.sqrt(total_power) / norm, float(np.min(cap / np.maximum(mags, 1e-300))))
    x *= max(1.0, kappa)
    return Waveform(x, ch.n_antennas, ch.block_len)
