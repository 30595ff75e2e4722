import numpy as np
import sys
sys.path.insert(0, "src")
from madfrc.socp import ConeDims, _Scaling, _groups, _jordan_product, _jordan_solve, _jordan_square, _max_step, _cone_identity

rng = np.random.default_rng(1)
dims = ConeDims(nonneg=4, soc=((3, 2), (5, 1)))
m = dims.total

def random_interior(rng, dims):
    v = rng.standard_normal(m)
    v[: dims.nonneg] = rng.uniform(0.5, 2.0, dims.nonneg)
    for start, d, c in _groups(dims):
        blk = v[start : start + d * c].reshape(c, d)
        blk[:, 0] = np.linalg.norm(blk[:, 1:], axis=1) + rng.uniform(0.5, 2.0, c)
    return v

s = random_interior(rng, dims)
lam = random_interior(rng, dims)
W = _Scaling(s, lam, dims)

# identity 1: W lam == W^{-1} s == lam_hat
wl = W.apply(lam)
wis = W.apply_inv(s)
print("W lam vs W^-1 s:", np.abs(wl - wis).max())
print("lam_hat vs W lam:", np.abs(W.lam_hat - wl).max())

# identity 2: W^{-1} (W v) = v
v = rng.standard_normal(m)
print("roundtrip:", np.abs(W.apply_inv(W.apply(v)) - v).max())

# identity 3: jordan solve
d = rng.standard_normal(m)
u = _jordan_solve(lam, d, dims)
print("jordan solve:", np.abs(_jordan_product(lam, u, dims) - d).max())

# identity 4: jordan square vs product
print("square:", np.abs(_jordan_square(s, dims) - _jordan_product(s, s, dims)).max())

# identity 5: max step
dv = rng.standard_normal(m)
a = _max_step(s, dv, dims)
if np.isfinite(a):
    from madfrc.socp import _min_margin
    print("margin at step:", _min_margin(s + a * dv, dims), "(should be ~0)")
    print("margin just inside:", _min_margin(s + 0.999 * a * dv, dims), "(should be > 0)")

# identity 6: e is the Jordan identity
e = _cone_identity(dims)
print("e o s == s:", np.abs(_jordan_product(e, s, dims) - s).max())
