"""Placement environment: logits in, worst-case radar SINR out.

One episode fixes a sampled scenario; each step maps the agent's logits to
transmit/receive placements, solves the inner waveform problem, and returns
the achieved minimum per-target SINR as the reward.  Infeasible QoS draws
yield zero reward so training continues.
"""

from __future__ import annotations

import math

import numpy as np

from .channel import build_stacked
from .errors import InfeasibleScenarioError
from .placement import fpa_apv, logits_to_apv
from .scenario import sample_scenario
from .td3 import build_state
from .waveform import CcpOptions, initialize_waveform, penalty_ccp


class PlacementEnv:
    """reset(episode) -> state; step(logits) -> (state, reward)."""

    def __init__(self, config, ccp_opts: CcpOptions | None = None, base_seed=0,
                 reward_db=False):
        self.config = config
        self.ccp_opts = ccp_opts or CcpOptions()
        self.base_seed = int(base_seed)
        self.reward_db = reward_db
        self.realization = None
        self.prev_action = None
        self._episode = 0

    @property
    def action_dim(self):
        return 2 * (self.config.n_antennas + 1)

    def scenario_seed(self, episode):
        return int(np.random.SeedSequence([self.base_seed, int(episode)]).generate_state(1)[0])

    def reset(self, episode):
        self._episode = int(episode)
        self.realization = sample_scenario(self.config, self.scenario_seed(episode))
        grid = fpa_apv(self.config.n_antennas, self.config.wavelength_m / 2.0)
        self.prev_action = np.concatenate([grid.positions, grid.positions])
        return build_state(self.realization, self.prev_action)

    def apvs_from_logits(self, logits):
        logits = np.asarray(logits, dtype=float)
        half = logits.size // 2
        cfg = self.config
        apv_t = logits_to_apv(logits[:half], cfg.region_len_m, cfg.min_spacing_m)
        apv_r = logits_to_apv(logits[half:], cfg.region_len_m, cfg.min_spacing_m)
        return apv_t, apv_r

    def evaluate_placement(self, apv_t, apv_r):
        """Inner solve at a fixed placement; returns linear min-SINR (0 if infeasible)."""
        cfg = self.config
        ch = build_stacked(apv_t, apv_r, self.realization, cfg.block_len, cfg.wavelength_m)
        try:
            x0 = initialize_waveform(ch, self.realization, cfg,
                                     seed=self.scenario_seed(self._episode) ^ 0x5EED)
            sol = penalty_ccp(x0, ch, self.realization, cfg, self.ccp_opts)
        except InfeasibleScenarioError:
            return 0.0
        return max(sol.min_sinr, 0.0)

    def step(self, logits):
        apv_t, apv_r = self.apvs_from_logits(logits)
        sinr = self.evaluate_placement(apv_t, apv_r)
        self.prev_action = np.concatenate([apv_t.positions, apv_r.positions])
        state = build_state(self.realization, self.prev_action)
        if self.reward_db:
            reward = 10.0 * math.log10(sinr) if sinr > 0 else 0.0
        else:
            reward = sinr
        return state, reward


class BanditEnv:
    """Known-optimum sanity environment: reward -||logits - target||^2."""

    def __init__(self, target):
        self.target = np.asarray(target, dtype=float)
        self.state = np.zeros(4)

    @property
    def action_dim(self):
        return self.target.size

    def reset(self, episode):
        return self.state.copy()

    def step(self, logits):
        err = np.asarray(logits, dtype=float) - self.target
        return self.state.copy(), -float(err @ err)
