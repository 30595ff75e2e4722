"""Experiment orchestration: baselines, training runs, sweeps, persistence.

Two built-in profiles: the full-scale configuration mirroring the reference
setup, and a desk-scale profile small enough for minutes-long end-to-end
runs.  Every result row is a pure function of (config, seed) so CSV outputs
re-generate bit for bit from their manifest.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from dataclasses import dataclass, field, replace, asdict
from pathlib import Path

import numpy as np

from .channel import build_stacked
from .comm_ci import build_ci_set
from .env import PlacementEnv
from .errors import ConfigError, InfeasibleScenarioError
from .placement import fpa_apv
from .scenario import SystemConfig, config_from_json, config_to_dict, sample_scenario
from .td3 import Td3Hyper, TrainResult, greedy_action, train
from .waveform import CcpOptions, initialize_waveform, penalty_ccp

EVAL_SEED_OFFSET = 1_000_003   # keeps held-out scenario streams off the training stream


def paper_config(**overrides) -> SystemConfig:
    """Full-scale system parameters."""
    return SystemConfig(**overrides) if overrides else SystemConfig()


def desk_config(**overrides) -> SystemConfig:
    """Reduced system solvable in minutes; same physics, smaller dimensions."""
    base = dict(
        n_antennas=4, block_len=6, n_users=2, n_targets=2, n_clutters=2,
        n_paths_per_user=4, psk_order=4,
        target_table=((0, 70.0), (0, 100.0)),
        clutter_table=((1, 105.0), (0, 30.0)),
    )
    base.update(overrides)
    return SystemConfig(**base)


def paper_hyper(**overrides) -> Td3Hyper:
    return replace(Td3Hyper(), **overrides) if overrides else Td3Hyper()


def desk_hyper(**overrides) -> Td3Hyper:
    """Shortened schedule: smaller nets and faster rates fit 1200 interactions."""
    base = dict(
        hidden=64, lr_actor=1e-3, lr_critic=1e-3, n_episodes=40, n_steps=30,
        warmup_steps=256, batch_size=64, buffer_capacity=20000,
        ou_decay=0.1,
    )
    base.update(overrides)
    return Td3Hyper(**base)


def fast_ccp_opts(**overrides) -> CcpOptions:
    """Looser inner-solver settings for reinforcement-learning rewards."""
    base = dict(mu0=10.0, delta=5.0, max_iters=20, feas_tol=3e-8, gap_tol=3e-8)
    base.update(overrides)
    return CcpOptions(**base)


def run_slp_fpa(config: SystemConfig, seed, ccp_opts: CcpOptions | None = None) -> dict:
    """Fixed half-wavelength arrays; inner waveform optimization only."""
    t0 = time.perf_counter()
    realization = sample_scenario(config, seed)
    grid = fpa_apv(config.n_antennas, config.wavelength_m / 2.0)
    ch = build_stacked(grid, grid, realization, config.block_len, config.wavelength_m)
    row = {"scheme": "SLP-FPA", "seed": int(seed)}
    try:
        x0 = initialize_waveform(ch, realization, config, seed=int(seed) ^ 0x5EED)
        sol = penalty_ccp(x0, ch, realization, config, ccp_opts or CcpOptions())
    except InfeasibleScenarioError as err:
        row.update(status="infeasible", min_sinr_db=math.nan,
                   ci_worst_margin=float(err.best_margin or math.nan),
                   papr=math.nan, wall_ms=1000.0 * (time.perf_counter() - t0))
        return row
    row.update(
        status="ok" if sol.converged else "max_iters",
        min_sinr_db=10.0 * math.log10(sol.min_sinr),
        min_sinr=sol.min_sinr,
        ci_worst_margin=1.0 + sol.worst_ci_slack,
        papr=sol.waveform.papr,
        power_gap=sol.power_gap,
        wall_ms=1000.0 * (time.perf_counter() - t0),
    )
    return row


def heldout_min_sinrs_fpa(config, eval_base, n_eval, ccp_opts=None):
    """FPA min-SINR on the deterministic held-out scenario stream."""
    env = PlacementEnv(config, ccp_opts or fast_ccp_opts(), base_seed=eval_base)
    grid = fpa_apv(config.n_antennas, config.wavelength_m / 2.0)
    out = []
    for ep in range(n_eval):
        env.reset(ep)
        out.append(env.evaluate_placement(grid, grid))
    return np.asarray(out)


def heldout_min_sinrs_policy(nets, config, eval_base, n_eval, rollout=3, ccp_opts=None):
    """Greedy-policy min-SINR on the same held-out scenario stream."""
    env = PlacementEnv(config, ccp_opts or fast_ccp_opts(), base_seed=eval_base)
    out = []
    for ep in range(n_eval):
        state = env.reset(ep)
        reward = 0.0
        for _ in range(max(1, rollout)):
            state, reward = env.step(greedy_action(nets, state))
        out.append(reward)
    return np.asarray(out)


def run_slp_ma(config: SystemConfig, seed, hyper: Td3Hyper | None = None,
               n_eval=20, eval_rollout=3, ccp_opts: CcpOptions | None = None,
               log_path=None) -> dict:
    """Train the placement agent, then evaluate the greedy policy held out."""
    hyper = hyper or desk_hyper()
    ccp_opts = ccp_opts or fast_ccp_opts()
    t0 = time.perf_counter()
    env = PlacementEnv(config, ccp_opts, base_seed=int(seed))
    result = train(env, hyper, int(seed), log_path=log_path)
    evals = heldout_min_sinrs_policy(result.nets, config, int(seed) + EVAL_SEED_OFFSET,
                                     n_eval, eval_rollout, ccp_opts)
    feasible = evals[evals > 0]
    mean_linear = float(feasible.mean()) if feasible.size else math.nan
    row = {
        "scheme": "SLP-MA",
        "seed": int(seed),
        "status": "ok",
        "min_sinr_db": 10.0 * math.log10(mean_linear) if mean_linear > 0 else math.nan,
        "min_sinr": mean_linear,
        "wall_ms": 1000.0 * (time.perf_counter() - t0),
        "n_eval": int(n_eval),
    }
    return {"row": row, "result": result, "evals": evals}


_SWEEP_KINDS = ("convergence", "sweep_power", "sweep_qos", "sweep_region")


@dataclass
class ExperimentSpec:
    """One experiment: a sweep kind, its values, seeds, and the scheme."""

    kind: str
    scheme: str = "SLP-MA"
    values: tuple = (1.0,)
    seeds: tuple = (0,)
    out_dir: str = "results"
    config: SystemConfig = field(default_factory=desk_config)
    hyper: Td3Hyper = field(default_factory=desk_hyper)
    ccp: CcpOptions = field(default_factory=fast_ccp_opts)
    n_eval: int = 10
    eval_rollout: int = 3

    def __post_init__(self):
        if self.kind not in _SWEEP_KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if not self.values or not self.seeds:
            raise ConfigError("sweep values and seeds must be nonempty")
        if self.scheme not in ("SLP-MA", "SLP-FPA"):
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.kind == "convergence" and self.scheme != "SLP-MA":
            raise ConfigError("convergence experiments require the SLP-MA scheme")

    @classmethod
    def from_json(cls, source):
        raw = source if isinstance(source, dict) else json.loads(Path(source).read_text())
        kwargs = {
            "kind": raw["kind"],
            "scheme": raw.get("scheme", "SLP-MA"),
            "values": tuple(raw.get("values", (1.0,))),
            "seeds": tuple(raw.get("seeds", (0,))),
            "out_dir": raw.get("out_dir", "results"),
            "n_eval": int(raw.get("n_eval", 10)),
            "eval_rollout": int(raw.get("eval_rollout", 3)),
        }
        profile = raw.get("profile", "desk")
        cfg = desk_config() if profile == "desk" else paper_config()
        if "config" in raw:
            cfg = _override_config(cfg, raw["config"])
        kwargs["config"] = cfg
        hyp = desk_hyper() if profile == "desk" else paper_hyper()
        if "td3" in raw:
            hyp = replace(hyp, **raw["td3"])
        kwargs["hyper"] = hyp
        if "ccp" in raw:
            kwargs["ccp"] = CcpOptions(**{**asdict(fast_ccp_opts()), **raw["ccp"]})
        return cls(**kwargs)


def _override_config(cfg: SystemConfig, overrides: dict) -> SystemConfig:
    fields = {}
    for key, value in overrides.items():
        if key in ("target_table", "clutter_table"):
            fields[key] = tuple(tuple(row) for row in value)
        else:
            fields[key] = value
    return replace(cfg, **fields)


def _apply_sweep_value(config: SystemConfig, kind, value) -> SystemConfig:
    if kind == "sweep_power":
        return replace(config, tx_power_w=float(value))
    if kind == "sweep_qos":
        return replace(config, qos_linear=10.0 ** (float(value) / 10.0))
    if kind == "sweep_region":
        return replace(config, region_len_m=float(value) * config.wavelength_m)
    return config


def sweep(spec: ExperimentSpec) -> list:
    """Run the full grid; returns rows and writes CSV + manifest + logs."""
    out_dir = Path(spec.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for value in spec.values:
        cfg = _apply_sweep_value(spec.config, spec.kind, value)
        for seed in spec.seeds:
            try:
                if spec.scheme == "SLP-FPA":
                    evals = heldout_min_sinrs_fpa(cfg, int(seed) + EVAL_SEED_OFFSET,
                                                  spec.n_eval, spec.ccp)
                    feasible = evals[evals > 0]
                    mean_linear = float(feasible.mean()) if feasible.size else math.nan
                    row = {
                        "scheme": spec.scheme, "seed": int(seed), "status": "ok",
                        "min_sinr_db": 10.0 * math.log10(mean_linear)
                        if mean_linear > 0 else math.nan,
                    }
                else:
                    log = out_dir / f"train_{spec.kind}_{value}_{seed}.jsonl"
                    res = run_slp_ma(cfg, seed, spec.hyper, spec.n_eval,
                                     spec.eval_rollout, spec.ccp, log_path=log)
                    row = res["row"]
                    if spec.kind == "convergence":
                        row["episode_rewards"] = res["result"].episode_rewards
            except Exception as err:   # noqa: BLE001 - row-level fault isolation
                row = {"scheme": spec.scheme, "seed": int(seed),
                       "status": f"error: {err}", "min_sinr_db": math.nan}
            row["kind"] = spec.kind
            row["param"] = value
            rows.append(row)
    write_results(out_dir, spec, rows)
    return rows


_CSV_COLUMNS = ("scheme", "kind", "param", "seed", "min_sinr_db",
                "ci_worst_margin", "papr", "wall_ms", "status")


def write_results(out_dir, spec: ExperimentSpec, rows):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "results.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=_CSV_COLUMNS, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    manifest = {
        "config_hash": config_hash(spec.config),
        "kind": spec.kind,
        "scheme": spec.scheme,
        "values": list(spec.values),
        "seeds": [int(s) for s in spec.seeds],
        "n_eval": spec.n_eval,
        "eval_rollout": spec.eval_rollout,
        "config": config_to_dict(spec.config),
        "td3": asdict(spec.hyper),
        "ccp": asdict(spec.ccp),
        "versions": _versions(),
        "rows_file": csv_path.name,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return csv_path


def spec_from_manifest(path) -> ExperimentSpec:
    """Rebuild the exact experiment from a manifest for re-running."""
    raw = json.loads(Path(path).read_text())
    return ExperimentSpec(
        kind=raw["kind"],
        scheme=raw["scheme"],
        values=tuple(raw["values"]),
        seeds=tuple(raw["seeds"]),
        out_dir=str(Path(path).parent),
        config=_override_config(SystemConfig(), raw["config"]),
        hyper=Td3Hyper(**raw["td3"]),
        ccp=CcpOptions(**raw["ccp"]),
        n_eval=raw["n_eval"],
        eval_rollout=raw["eval_rollout"],
    )


def config_hash(config: SystemConfig) -> str:
    blob = json.dumps(config_to_dict(config), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _versions():
    from . import __version__

    return {"madfrc": __version__, "numpy": np.__version__}


def evaluate_ser(x, ch, realization, n_draws=1000, seed=0):
    """Symbol error rate with nearest-constellation-point decisions.

    Adds circular Gaussian noise at each user's level to the noise-free
    received samples and decides by maximum correlation with the
    constellation (the angular-sector rule for unit-modulus alphabets).
    """
    from .scenario import psk_constellation

    rng = np.random.default_rng(seed)
    points = psk_constellation(realization.psk_order, realization.psk_phase_offset)
    clean = ch.received_points(np.asarray(x))            # (K, M)
    K, M = clean.shape
    sigma = np.sqrt(realization.noise_comm)[:, None, None]
    noise = sigma / np.sqrt(2.0) * (
        rng.standard_normal((K, M, n_draws)) + 1j * rng.standard_normal((K, M, n_draws))
    )
    received = clean[..., None] + noise
    corr = np.real(received[..., None] * np.conj(points)[None, None, None, :])
    decided = points[np.argmax(corr, axis=-1)]
    errors = decided != realization.symbols[..., None]
    return float(errors.mean())
