import numpy as np
import sys
sys.path.insert(0, "src")
from madfrc.socp import ConeDims, solve_socp


def random_instance(rng, n=8, l=5, soc=((3, 4), (6, 2))):
    dims = ConeDims(nonneg=l, soc=soc)
    m = dims.total
    G = rng.standard_normal((m, n))
    zstar = rng.standard_normal(n)
    # Build strictly complementary (s*, lam*) per cone.
    s = np.zeros(m)
    lam = np.zeros(m)
    for i in range(l):
        if rng.uniform() < 0.5:
            s[i] = rng.uniform(0.5, 2.0)
        else:
            lam[i] = rng.uniform(0.5, 2.0)
    start = l
    for d, c in soc:
        for k in range(c):
            sl = slice(start, start + d)
            mode = rng.integers(0, 3)
            v = rng.standard_normal(d - 1)
            v /= np.linalg.norm(v)
            if mode == 0:   # s interior, lam = 0
                s[sl] = np.concatenate([[2.0], 0.5 * v])
            elif mode == 1:  # lam interior, s = 0
                lam[sl] = np.concatenate([[2.0], 0.5 * v])
            else:           # both on boundary, s0=||s1||, lam = rho*(s0,-s1)
                s0 = rng.uniform(0.5, 2.0)
                rho = rng.uniform(0.5, 2.0)
                s[sl] = np.concatenate([[s0], s0 * v])
                lam[sl] = rho * np.concatenate([[s0], -s0 * v])
            start += d
    c_vec = -G.T @ lam
    h = G @ zstar + s
    return c_vec, G, h, dims, float(c_vec @ zstar)


rng = np.random.default_rng(0)
worst = 0.0
for trial in range(50):
    c, G, h, dims, opt = random_instance(rng)
    res = solve_socp(c, G, h, dims)
    err = abs(res.pcost - opt) / max(1.0, abs(opt))
    worst = max(worst, err, res.pres, res.dres)
    if err > 1e-6:
        print(f"trial {trial}: err={err:.2e} status={res.status} iters={res.iterations}")
print("worst relative error / residual:", worst)
