"""Primal-dual interior-point solver for second-order cone programs.

Standard form:

    minimize    c^T z
    subject to  G z + s = h,   s in K,

with K a product of a nonnegative orthant and second-order cones.  The dual
is max -h^T lam s.t. G^T lam + c = 0, lam in K.  The implementation is a
Mehrotra predictor-corrector path-following method with Nesterov-Todd
scaling.  All cone arithmetic runs on flat arrays with segment reductions,
so cost per iteration is a fixed number of vectorized numpy calls; Newton
systems are solved densely via Cholesky of the scaled normal equations
(problem sizes here are at most a few hundred rows).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SolverError

_FLOOR = 1e-300   # keeps scalings finite when active cones graze the boundary


@dataclass(frozen=True)
class ConeDims:
    """Cone layout: ``nonneg`` leading rows, then (dim, count) SOC groups."""

    nonneg: int = 0
    soc: tuple = ()     # ((dim, count), ...) in row order

    @property
    def total(self):
        return self.nonneg + sum(d * c for d, c in self.soc)

    @property
    def degree(self):
        return self.nonneg + sum(c for _, c in self.soc)


class _Layout:
    """Precomputed index structure for flat vectorized cone arithmetic."""

    def __init__(self, dims: ConeDims):
        self.l = dims.nonneg
        sizes = []
        for d, c in dims.soc:
            sizes.extend([d] * c)
        self.sizes = np.asarray(sizes, dtype=int)
        self.n_soc = len(sizes)
        self.soc_m = int(self.sizes.sum()) if self.n_soc else 0
        self.m = self.l + self.soc_m
        if self.n_soc:
            self.seg = np.concatenate([[0], np.cumsum(self.sizes)[:-1]])  # reduceat starts
            self.head = self.seg                                          # head positions
            self.cone_of = np.repeat(np.arange(self.n_soc), self.sizes)
            self.is_head = np.zeros(self.soc_m, dtype=bool)
            self.is_head[self.head] = True
            self.jsign = np.where(self.is_head, 1.0, -1.0)                 # J diagonal
            self.seg2 = np.concatenate([self.seg, self.soc_m + self.seg])  # stacked pairs
            self.head2 = np.concatenate([self.head, self.soc_m + self.head])
        else:
            self.seg = np.zeros(0, dtype=int)
            self.head = self.seg
            self.cone_of = np.zeros(0, dtype=int)
            self.is_head = np.zeros(0, dtype=bool)
            self.jsign = np.zeros(0)
            self.seg2 = self.seg
            self.head2 = self.seg

    # All helpers below act on the SOC region only (length soc_m arrays).

    def dots(self, u, v):
        """Per-cone Euclidean inner products."""
        return np.add.reduceat(u * v, self.seg)

    def jdets(self, u):
        """Per-cone J-determinants u0^2 - ||u1||^2."""
        return 2.0 * u[self.head] ** 2 - self.dots(u, u)

    def margins(self, u):
        """Per-cone u0 - ||u1||."""
        norms2 = self.dots(u, u) - u[self.head] ** 2
        return u[self.head] - np.sqrt(np.maximum(norms2, 0.0))


def _split(v, lay: _Layout):
    return v[: lay.l], v[lay.l :]


def _cone_identity(lay: _Layout):
    e = np.zeros(lay.m)
    e[: lay.l] = 1.0
    if lay.n_soc:
        e[lay.l + lay.head] = 1.0
    return e


def _min_margin(v, lay: _Layout):
    lp, soc = _split(v, lay)
    worst = np.inf
    if lay.l:
        worst = min(worst, float(lp.min()))
    if lay.n_soc:
        worst = min(worst, float(lay.margins(soc).min()))
    return worst


def _max_step_pair(s, ds, lam, dlam, lay: _Layout):
    """Largest alpha >= 0 keeping both s + a*ds and lam + a*dlam in the cone."""
    alpha = np.inf
    if lay.l:
        lp = np.concatenate([s[: lay.l], lam[: lay.l]])
        dlp = np.concatenate([ds[: lay.l], dlam[: lay.l]])
        neg = dlp < 0
        if np.any(neg):
            alpha = min(alpha, float((-lp[neg] / dlp[neg]).min()))
    if lay.n_soc:
        # Smallest positive root of a t^2 + b t + c = 0 per cone (c > 0 inside).
        v = np.concatenate([s[lay.l :], lam[lay.l :]])
        dv = np.concatenate([ds[lay.l :], dlam[lay.l :]])
        dd = np.add.reduceat(dv * dv, lay.seg2)
        vd = np.add.reduceat(v * dv, lay.seg2)
        vv = np.add.reduceat(v * v, lay.seg2)
        a = 2.0 * dv[lay.head2] ** 2 - dd
        b = 2.0 * (2.0 * v[lay.head2] * dv[lay.head2] - vd)
        c = 2.0 * v[lay.head2] ** 2 - vv
        lin = np.abs(a) < 1e-14 * np.maximum(1.0, np.abs(b))
        with np.errstate(divide="ignore", invalid="ignore"):
            lin_root = -c / b
            disc = b * b - 4.0 * a * c
            sq = np.sqrt(np.maximum(disc, 0.0))
            qterm = -0.5 * (b + np.sign(b) * sq)
            qterm = np.where(qterm == 0.0, np.finfo(float).tiny, qterm)
            r1 = qterm / a
            r2 = c / qterm
        step = np.where(lin & (b < 0), lin_root, np.inf)
        quad_ok = (~lin) & (disc >= 0)
        r1 = np.where(quad_ok & (r1 > 0), r1, np.inf)
        r2 = np.where(quad_ok & (r2 > 0), r2, np.inf)
        step = np.minimum(step, np.minimum(r1, r2))
        if step.size:
            alpha = min(alpha, float(step.min()))
    return alpha


class _Scaling:
    """One iteration's Nesterov-Todd scaling in flat form."""

    def __init__(self, s, lam, lay: _Layout):
        self.lay = lay
        lp_s, soc_s = _split(s, lay)
        lp_l, soc_l = _split(lam, lay)
        self.lp_w = np.sqrt(lp_s / lp_l) if lay.l else np.zeros(0)
        self.lam_hat = np.empty(lay.m)
        self.lam_hat[: lay.l] = np.sqrt(lp_s * lp_l)
        if lay.n_soc:
            js = np.maximum(lay.jdets(soc_s), _FLOOR)
            jl = np.maximum(lay.jdets(soc_l), _FLOOR)
            self.beta = (js / jl) ** 0.25
            st = soc_s / np.sqrt(js)[lay.cone_of]
            lt = soc_l / np.sqrt(jl)[lay.cone_of]
            gamma = np.sqrt((1.0 + lay.dots(st, lt)) / 2.0)
            wbar = (st + lay.jsign * lt) / (2.0 * gamma[lay.cone_of])
            # Hyperbolic Householder vector: (2 v v^T - J) e = wbar, v^T J v = 1.
            v = wbar.copy()
            v[lay.head] += 1.0
            self.v = v / np.sqrt(2.0 * (wbar[lay.head] + 1.0))[lay.cone_of]
            self.vhat = lay.jsign * self.v              # J v
            self.lam_hat[lay.l :] = self._soc_mul(soc_l)
        else:
            self.beta = np.zeros(0)
            self.v = np.zeros(0)
            self.vhat = np.zeros(0)

    def _soc_mul(self, u):
        """W u = beta (2 v v^T - J) u on the SOC region."""
        lay = self.lay
        t = lay.dots(self.v, u)
        return self.beta[lay.cone_of] * (2.0 * self.v * t[lay.cone_of] - lay.jsign * u)

    def _soc_inv_mul(self, u):
        """W^{-1} u = (1/beta) (2 Jv (Jv)^T - J) u on the SOC region."""
        lay = self.lay
        t = lay.dots(self.vhat, u)
        return (2.0 * self.vhat * t[lay.cone_of] - lay.jsign * u) / self.beta[lay.cone_of]

    def apply(self, u):
        out = np.empty_like(u)
        out[: self.lay.l] = self.lp_w * u[: self.lay.l]
        if self.lay.n_soc:
            out[self.lay.l :] = self._soc_mul(u[self.lay.l :])
        return out

    def apply_inv(self, u):
        out = np.empty_like(u)
        out[: self.lay.l] = u[: self.lay.l] / self.lp_w
        if self.lay.n_soc:
            out[self.lay.l :] = self._soc_inv_mul(u[self.lay.l :])
        return out

    def apply_inv_matrix(self, U):
        """W^{-1} applied to each column of an (m, n) matrix."""
        lay = self.lay
        out = np.empty_like(U)
        out[: lay.l] = U[: lay.l] / self.lp_w[:, None]
        if lay.n_soc:
            blk = U[lay.l :]
            t = np.add.reduceat(self.vhat[:, None] * blk, lay.seg, axis=0)
            out[lay.l :] = (
                2.0 * self.vhat[:, None] * t[lay.cone_of]
                - lay.jsign[:, None] * blk
            ) / self.beta[lay.cone_of][:, None]
        return out


def _jordan_product(u, v, lay: _Layout):
    out = np.empty(lay.m)
    out[: lay.l] = u[: lay.l] * v[: lay.l]
    if lay.n_soc:
        us, vs = u[lay.l :], v[lay.l :]
        res = us[lay.head][lay.cone_of] * vs + vs[lay.head][lay.cone_of] * us
        res[lay.head] = lay.dots(us, vs)
        out[lay.l :] = res
    return out


def _jordan_solve(lam, d, lay: _Layout):
    """Solve lam o u = d for u (lam in the cone interior)."""
    out = np.empty(lay.m)
    out[: lay.l] = d[: lay.l] / lam[: lay.l]
    if lay.n_soc:
        ls, ds = lam[lay.l :], d[lay.l :]
        jl = np.maximum(lay.jdets(ls), _FLOOR)
        u0 = (2.0 * ls[lay.head] * ds[lay.head] - lay.dots(ls, ds)) / jl
        res = (ds - u0[lay.cone_of] * ls) / np.maximum(ls[lay.head], _FLOOR)[lay.cone_of]
        res[lay.head] = u0
        out[lay.l :] = res
    return out


@dataclass
class SocpResult:
    status: str
    z: np.ndarray
    s: np.ndarray
    lam: np.ndarray
    pcost: float
    dcost: float
    gap: float
    relgap: float
    pres: float
    dres: float
    iterations: int


def solve_socp(c, G, h, dims: ConeDims, max_iter=100, feas_tol=1e-9, gap_tol=1e-9,
               accept_tol=1e-7, step_frac=0.99):
    """Solve the cone program; raises SolverError if no acceptable point is found.

    Iterates past the attainable floating-point precision can overflow the
    scaled quantities; that path is detected via the non-finite residual
    check and ends the loop, so arithmetic warnings are suppressed here.
    """
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        return _solve_socp(c, G, h, dims, max_iter, feas_tol, gap_tol,
                           accept_tol, step_frac)


def _solve_socp(c, G, h, dims, max_iter, feas_tol, gap_tol, accept_tol, step_frac):
    c = np.asarray(c, dtype=float)
    G = np.asarray(G, dtype=float)
    h = np.asarray(h, dtype=float)
    n = c.size
    m = h.size
    if G.shape != (m, n) or dims.total != m:
        raise ValueError("inconsistent cone program dimensions")
    lay = _Layout(dims)
    e = _cone_identity(lay)
    deg = dims.degree

    # Least-squares initialization pushed into the cone interior; the Gram
    # factor doubles for the minimum-norm dual start lam = -G (G^T G)^{-1} c.
    gram = G.T @ G + 1e-12 * np.eye(n)
    sol = np.linalg.solve(gram, np.column_stack([G.T @ h, c]))
    z = sol[:, 0]
    s_hat = h - G @ z
    margin = _min_margin(s_hat, lay)
    s = s_hat if margin > 0 else s_hat + (1.0 - margin) * e
    lam_ls = -G @ sol[:, 1]
    margin = _min_margin(lam_ls, lay)
    lam = lam_ls if margin > 0 else lam_ls + (1.0 - margin) * e

    h_norm = max(1.0, np.linalg.norm(h))
    c_norm = max(1.0, np.linalg.norm(c))
    diag_idx = np.diag_indices(n)
    best = None
    stalls = 0

    for it in range(1, max_iter + 1):
        rx = c + G.T @ lam
        rz = G @ z + s - h
        gap = float(s @ lam)
        pcost = float(c @ z)
        dcost = float(-h @ lam)
        pres = np.linalg.norm(rz) / h_norm
        dres = np.linalg.norm(rx) / c_norm
        relgap = gap / max(1.0, abs(pcost), abs(dcost))
        score = max(pres, dres, relgap)
        if not np.isfinite(score):
            break
        if pres <= feas_tol and dres <= feas_tol and relgap <= gap_tol:
            return SocpResult("optimal", z, s, lam, pcost, dcost, gap, relgap,
                              pres, dres, it - 1)
        if best is None or score < max(best.pres, best.dres, best.relgap):
            best = SocpResult("running", z.copy(), s.copy(), lam.copy(), pcost,
                              dcost, gap, relgap, pres, dres, it - 1)

        W = _Scaling(s, lam, lay)
        Gbar = W.apply_inv_matrix(G)                 # W^{-1} G
        H = Gbar.T @ Gbar
        if not np.all(np.isfinite(H)):
            break                                    # scaling overflowed at the boundary
        scale = 1e-13 * max(1.0, H.trace() / n)
        H[diag_idx] += scale
        try:
            chol = np.linalg.cholesky(H)
        except np.linalg.LinAlgError:
            H[diag_idx] += 1e5 * scale
            try:
                chol = np.linalg.cholesky(H)
            except np.linalg.LinAlgError:
                break
        winv_rz = W.apply_inv(rz)

        def newton(gvec):
            """Direction for the scaled complementarity target g."""
            rhs = -rx - Gbar.T @ (winv_rz + gvec)
            dz = np.linalg.solve(chol.T, np.linalg.solve(chol, rhs))
            ds = -rz - G @ dz
            dlam = W.apply_inv(W.apply_inv(G @ dz + rz) + gvec)
            return dz, ds, dlam

        # Predictor: g = lamhat^{-1} o (-lamhat o lamhat) = -lamhat.
        try:
            dz_a, ds_a, dlam_a = newton(-W.lam_hat)
        except np.linalg.LinAlgError:
            break
        alpha_aff = min(1.0, _max_step_pair(s, ds_a, lam, dlam_a, lay))
        gap_aff = float((s + alpha_aff * ds_a) @ (lam + alpha_aff * dlam_a))
        sigma = min(1.0, max(0.0, gap_aff / gap)) ** 3
        mu = gap / deg

        # Corrector: d = sigma*mu*e - lamhat o lamhat - (W^{-1}ds_a) o (W dlam_a).
        cross = _jordan_product(W.apply_inv(ds_a), W.apply(dlam_a), lay)
        d_comb = sigma * mu * e - _jordan_product(W.lam_hat, W.lam_hat, lay) - cross
        dz, ds, dlam = newton(_jordan_solve(W.lam_hat, d_comb, lay))

        alpha = min(1.0, step_frac * _max_step_pair(s, ds, lam, dlam, lay))
        if alpha < 1e-12:
            stalls += 1
            if stalls >= 3:
                break
        else:
            stalls = 0
        z = z + alpha * dz
        s = s + alpha * ds
        lam = lam + alpha * dlam

    final = best
    if final is not None and max(final.pres, final.dres, final.relgap) <= accept_tol:
        final.status = "optimal"
        return final
    raise SolverError(
        "cone solver stopped after %d iterations (pres=%.2e, dres=%.2e, relgap=%.2e)"
        % (max_iter, final.pres if final else np.nan,
           final.dres if final else np.nan, final.relgap if final else np.nan),
        best=final,
    )
