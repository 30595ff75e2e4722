"""Derived-value oracle suites: independent recomputations written to JSON.

Each suite evaluates a quantity two ways (closed form vs. arbitrary
precision, operator vs. dense materialization, one solver vs. another) and
records the observed agreement; the test suite asserts the same bounds
in-process.
"""

from __future__ import annotations

import json
from decimal import Decimal, getcontext
from pathlib import Path

import numpy as np


def path_loss_suite():
    """High-precision references for the power-law path gain."""
    getcontext().prec = 50
    cases = [(1.0, 3.2), (40.0, 3.2), (30.0, 2.6), (123.4, 2.6)]
    ref_gain = Decimal(10) ** Decimal(-3)
    out = []
    for dist, exp in cases:
        val = ref_gain * Decimal(repr(dist)) ** -Decimal(repr(exp))
        out.append({"distance_m": dist, "exponent": exp, "ref_gain": 1e-3,
                    "expected": float(val)})
    return {"suite": "path_loss", "cases": out}


def stacking_suite(seed=0, n_instances=20):
    """Operator-form echoes vs. dense shift/kron products."""
    from .channel import Apv, build_stacked, shift_matrix, target_channel
    from .scenario import SystemConfig, sample_scenario

    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_instances):
        cfg = SystemConfig(n_antennas=3, block_len=5, n_users=2, n_targets=2,
                           n_clutters=3, n_paths_per_user=3,
                           target_table=((0, 70.0), (2, 100.0)),
                           clutter_table=((1, 105.0), (0, 30.0), (3, 75.0)),
                           region_len_m=0.5)
        real = sample_scenario(cfg, int(rng.integers(1 << 31)))
        t = Apv(np.sort(rng.uniform(0, cfg.region_len_m, cfg.n_antennas)))
        r = Apv(np.sort(rng.uniform(0, cfg.region_len_m, cfg.n_antennas)))
        ch = build_stacked(t, r, real, cfg.block_len, cfg.wavelength_m)
        x = rng.standard_normal(ch.n_antennas * ch.block_len) \
            + 1j * rng.standard_normal(ch.n_antennas * ch.block_len)
        for w in range(real.n_targets):
            direct = _direct_echo(ch, real, w, x, cfg, kind="target")
            op = ch.apply_target(w, x)
            worst = max(worst, np.linalg.norm(op - direct) / np.linalg.norm(direct))
        for q in range(real.n_clutters):
            direct = _direct_echo(ch, real, q, x, cfg, kind="clutter")
            op = ch.apply_clutter(q, x)
            denom = max(np.linalg.norm(direct), 1e-300)
            worst = max(worst, np.linalg.norm(op - direct) / denom)
    return {"suite": "stacking", "instances": n_instances, "worst_rel_error": worst}


def _direct_echo(ch, real, idx, x, cfg, kind):
    """vec(F Xpad J) computed with dense matrices end to end."""
    from .channel import shift_matrix, target_channel
    from .channel import Apv

    N, M, Mt = ch.n_antennas, ch.block_len, ch.padded_len
    X = x.reshape(N, M, order="F")
    Xpad = np.hstack([X, np.zeros((N, Mt - M), dtype=complex)])
    if kind == "target":
        F = target_channel(ch.apv_t, ch.apv_r, real.target_angles[idx], cfg.wavelength_m)
        offset = int(ch.target_offsets[idx])
    else:
        F = target_channel(ch.apv_t, ch.apv_r, real.clutter_angles[idx], cfg.wavelength_m)
        offset = int(ch.clutter_offsets[idx])
    J = shift_matrix(Mt, offset)
    return (F @ Xpad @ J).reshape(-1, order="F")


def lemma1_suite(seed=0, n_instances=5, n_probes=200):
    """Tangency and global minorization of the covariance lower bound."""
    from .waveform import lemma1_minorizer

    rng = np.random.default_rng(seed)
    worst_tangency = 0.0
    violations = 0
    for _ in range(n_instances):
        n = int(rng.integers(3, 8))
        z0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        R0 = A @ A.conj().T + 0.5 * np.eye(n)
        true0 = float(np.real(z0.conj() @ np.linalg.solve(R0, z0)))
        tang = lemma1_minorizer(z0, R0, z0, R0)
        worst_tangency = max(worst_tangency, abs(tang - true0) / abs(true0))
        for _ in range(n_probes):
            z = z0 + 0.5 * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
            B = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            R = R0 + 0.25 * (B @ B.conj().T)
            true = float(np.real(z.conj() @ np.linalg.solve(R, z)))
            if lemma1_minorizer(z, R, z0, R0) > true + 1e-9 * max(1.0, abs(true)):
                violations += 1
    return {"suite": "lemma1", "instances": n_instances, "probes": n_probes,
            "worst_tangency_rel": worst_tangency, "minorization_violations": violations}


def subproblem_suite(seed=0, n_instances=3):
    """Interior-point vs. projected-splitting objective agreement."""
    from .testing import tiny_subproblem

    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(n_instances):
        rel = tiny_subproblem(int(rng.integers(1 << 31)))["rel_gap"]
        worst = max(worst, rel)
    return {"suite": "subproblem", "instances": n_instances, "worst_rel_gap": worst}


SUITES = {
    "path_loss": path_loss_suite,
    "stacking": stacking_suite,
    "lemma1": lemma1_suite,
    "subproblem": subproblem_suite,
}


def run_suite(name, out_dir=None):
    if name not in SUITES:
        raise ValueError(f"unknown oracle suite {name!r}; have {sorted(SUITES)}")
    result = SUITES[name]()
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"oracle_{name}.json").write_text(json.dumps(result, indent=2))
    return result
