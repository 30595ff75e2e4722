"""Cone-solver checks against instances constructed with known optima.

Picking a strictly complementary primal-dual pair (s*, lam*) per cone and a
free z* fixes c = -G^T lam* and h = G z* + s*, so (z*, s*, lam*) is optimal
by construction and the optimal value c^T z* is exact -- an oracle that never
runs a solver.
"""

import numpy as np
import pytest

from madfrc.errors import SolverError
from madfrc.socp import ConeDims, solve_socp


def constructed_instance(rng, n=8, l=5, soc=((3, 4), (6, 2))):
    dims = ConeDims(nonneg=l, soc=soc)
    m = dims.total
    G = rng.standard_normal((m, n))
    zstar = rng.standard_normal(n)
    s = np.zeros(m)
    lam = np.zeros(m)
    for i in range(l):
        if rng.uniform() < 0.5:
            s[i] = rng.uniform(0.5, 2.0)
        else:
            lam[i] = rng.uniform(0.5, 2.0)
    start = l
    for d, count in soc:
        for _ in range(count):
            sl = slice(start, start + d)
            direction = rng.standard_normal(d - 1)
            direction /= np.linalg.norm(direction)
            mode = rng.integers(0, 3)
            if mode == 0:       # slack interior, multiplier zero
                s[sl] = np.concatenate([[2.0], 0.5 * direction])
            elif mode == 1:     # multiplier interior, slack zero
                lam[sl] = np.concatenate([[2.0], 0.5 * direction])
            else:               # both on the boundary, Jordan product zero
                s0 = rng.uniform(0.5, 2.0)
                rho = rng.uniform(0.5, 2.0)
                s[sl] = np.concatenate([[s0], s0 * direction])
                lam[sl] = rho * np.concatenate([[s0], -s0 * direction])
            start += d
    c = -G.T @ lam
    h = G @ zstar + s
    return c, G, h, dims, float(c @ zstar)


def test_constructed_optima_recovered(rng):
    for _ in range(30):
        c, G, h, dims, opt = constructed_instance(rng)
        res = solve_socp(c, G, h, dims)
        assert res.status == "optimal"
        assert res.pcost == pytest.approx(opt, rel=1e-6, abs=1e-7)
        assert max(res.pres, res.dres, res.relgap) <= 1e-7


def test_duality_gap_certificate(rng):
    c, G, h, dims, opt = constructed_instance(rng, n=12, l=8, soc=((4, 3),))
    res = solve_socp(c, G, h, dims)
    assert res.dcost == pytest.approx(res.pcost, rel=1e-7, abs=1e-8)
    assert res.dcost <= res.pcost + 1e-8   # weak duality up to tolerance


def test_pure_orthant_problem(rng):
    c, G, h, dims, opt = constructed_instance(rng, n=6, l=14, soc=())
    res = solve_socp(c, G, h, dims)
    assert res.pcost == pytest.approx(opt, rel=1e-7, abs=1e-8)


def test_two_dim_cones_act_as_interval_bounds(rng):
    # SOC of dimension 2 encodes |b| <= a; exercised as the degenerate case.
    c, G, h, dims, opt = constructed_instance(rng, n=5, l=3, soc=((2, 5),))
    res = solve_socp(c, G, h, dims)
    assert res.pcost == pytest.approx(opt, rel=1e-6, abs=1e-7)


def test_feasibility_of_returned_point(rng):
    c, G, h, dims, _ = constructed_instance(rng, n=10, l=6, soc=((5, 2), (3, 3)))
    res = solve_socp(c, G, h, dims)
    s = h - G @ res.z
    assert s[: dims.nonneg].min() >= -1e-8
    start = dims.nonneg
    for d, count in dims.soc:
        for _ in range(count):
            blk = s[start : start + d]
            assert blk[0] >= np.linalg.norm(blk[1:]) - 1e-8
            start += d


def test_solver_error_reports_best_iterate():
    # An unbounded problem cannot satisfy the dual; solver must not "succeed".
    dims = ConeDims(nonneg=1, soc=())
    c = np.array([-1.0])
    G = np.array([[-1.0]])      # z >= 0 only; minimize -z is unbounded
    h = np.array([0.0])
    with pytest.raises(SolverError) as err:
        solve_socp(c, G, h, dims, max_iter=25)
    assert err.value.best is None or err.value.best.dres > 1e-7


def test_dimension_mismatch_rejected(rng):
    dims = ConeDims(nonneg=2, soc=())
    with pytest.raises(ValueError):
        solve_socp(np.zeros(3), np.zeros((2, 2)), np.zeros(2), dims)
