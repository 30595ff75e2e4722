"""Antenna-placement parameterization and validation.

Placements live on a segment [0, D] with a minimum spacing d.  The feasible
set is parameterized constraint-free through nonnegative displacement
variables (cumulative gaps above the minimum grid) which in turn come from
policy logits through a sigmoid-gated softmax, so any logit vector maps to a
valid placement.
"""

from __future__ import annotations

import numpy as np

from .channel import Apv


def slack_budget(region_len, min_spacing, n):
    """Total displacement budget D - (N-1) d."""
    budget = region_len - (n - 1) * min_spacing
    if budget < 0:
        raise ValueError("region cannot hold the array at minimum spacing")
    return budget


def displacements_to_apv(displacements, min_spacing, n) -> Apv:
    """Positions s_n = (n-1) d + sum_{k<=n} Delta_k from nonnegative gaps."""
    delta = np.asarray(displacements, dtype=float)
    if delta.shape != (n,):
        raise ValueError(f"expected {n} displacements, got {delta.shape}")
    if np.any(delta < 0):
        raise ValueError("displacements must be nonnegative")
    return Apv(min_spacing * np.arange(n) + np.cumsum(delta))


def logits_to_displacements(logits, budget):
    """Map free logits to displacements with sum strictly below ``budget``.

    The first N softmax weights share sigmoid(gate) * budget, where the gate
    is the last logit; the left-over softmax mass on the gate entry keeps the
    sum strictly interior.
    """
    logits = np.asarray(logits, dtype=float)
    shifted = logits - logits.max()
    weights = np.exp(shifted)
    weights /= weights.sum()
    gate = 1.0 / (1.0 + np.exp(-logits[-1]))
    return budget * gate * weights[:-1]


def logits_to_apv(logits, region_len, min_spacing) -> Apv:
    """Full mapping from N+1 logits to a feasible placement."""
    logits = np.asarray(logits, dtype=float)
    n = logits.size - 1
    budget = slack_budget(region_len, min_spacing, n)
    return displacements_to_apv(logits_to_displacements(logits, budget), min_spacing, n)


def displacements_to_logits(displacements, budget):
    """A left inverse of ``logits_to_displacements`` for interior points.

    Valid whenever all displacements are positive and their sum is strictly
    below the budget; reconstructs logits mapping back to the same gaps to
    floating-point accuracy.
    """
    delta = np.asarray(displacements, dtype=float)
    total = delta.sum() / budget
    if np.any(delta <= 0) or total >= 1.0:
        raise ValueError("inverse defined only for strictly interior displacements")
    gate_sig = (1.0 + total) / 2.0                   # in (total, 1)
    gate = np.log(gate_sig / (1.0 - gate_sig))
    # Solve exp(C) * (gate_sig * budget - sum delta) = exp(gate) for the shift C.
    shift = gate - np.log(gate_sig * budget - delta.sum())
    return np.concatenate([np.log(delta) + shift, [gate]])


def validate_apv(apv: Apv, region_len, min_spacing, atol=0.0):
    """Check segment bounds and pairwise spacing; returns (ok, violations)."""
    pos = apv.positions
    violations = []
    if pos[0] < -atol:
        violations.append(f"first element at {pos[0]:.6g} is left of the segment")
    if pos[-1] > region_len + atol:
        violations.append(f"last element at {pos[-1]:.6g} exceeds the segment {region_len:.6g}")
    gaps = np.diff(pos)
    bad = np.where(gaps < min_spacing - atol - 1e-12)[0]
    for i in bad:
        violations.append(f"spacing {gaps[i]:.6g} between elements {i} and {i+1} below {min_spacing:.6g}")
    return len(violations) == 0, violations


def fpa_apv(n, spacing) -> Apv:
    """Fixed uniform grid starting at zero."""
    return Apv(spacing * np.arange(n))
