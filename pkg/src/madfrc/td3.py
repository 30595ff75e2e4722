"""Twin-delayed deterministic policy gradient over placement logits.

The actor emits bounded logits that the environment maps to antenna
positions; exploration adds Ornstein-Uhlenbeck noise on those logits with an
episode-decaying scale.  Two critics learn the clipped double-Q Bellman
target with smoothed target actions; the actor and all target copies update
every ``policy_delay`` steps.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .nets import Adam, DenseNet, soft_update


class TrainingError(RuntimeError):
    """Non-finite loss or gradient during an update."""


@dataclass(frozen=True)
class Td3Hyper:
    """Learning constants; defaults follow the full-scale setup."""

    lr_actor: float = 2e-5
    lr_critic: float = 1.5e-4
    discount: float = 0.95
    soft_tau: float = 0.002
    policy_delay: int = 3
    smooth_sigma: float = 0.2        # of logit scale
    smooth_clip: float = 0.5         # of logit scale
    ou_sigma_init: float = 0.4
    ou_sigma_min: float = 0.05
    ou_decay: float = 0.1
    ou_theta: float = 0.15
    batch_size: int = 64
    buffer_capacity: int = 20000
    warmup_steps: int = 256
    n_episodes: int = 200
    n_steps: int = 100
    hidden: int = 768
    logit_scale: float = 4.0

    def __post_init__(self):
        if not 0.0 < self.soft_tau <= 1.0:
            raise ValueError("soft update coefficient must lie in (0, 1]")
        if self.policy_delay < 1:
            raise ValueError("policy delay must be >= 1")
        for name in ("lr_actor", "lr_critic", "batch_size", "buffer_capacity"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def build_state(realization, prev_action):
    """Flat state: [Re coeffs, Im coeffs, angles, previous placement].

    Coefficients stack the per-user path gains then the target and clutter
    reflection powers (real, so their imaginary slots are zero); angles stack
    the path azimuths then target and clutter azimuths.
    """
    coeffs = np.concatenate([
        np.asarray(realization.user_gains, dtype=complex).ravel(),
        np.asarray(realization.target_powers, dtype=complex),
        np.asarray(realization.clutter_powers, dtype=complex),
    ])
    angles = np.concatenate([
        np.asarray(realization.user_angles, dtype=float).ravel(),
        np.asarray(realization.target_angles, dtype=float),
        np.asarray(realization.clutter_angles, dtype=float),
    ])
    return np.concatenate([coeffs.real, coeffs.imag, angles,
                           np.asarray(prev_action, dtype=float)])


def state_dim(config):
    """State length for a system configuration."""
    n_coeff = config.n_users * config.n_paths_per_user + config.n_targets + config.n_clutters
    return 3 * n_coeff + 2 * config.n_antennas


class ReplayBuffer:
    """Fixed-capacity FIFO ring with uniform without-replacement batches."""

    def __init__(self, capacity, state_dim, action_dim):
        self.capacity = int(capacity)
        self.states = np.zeros((capacity, state_dim))
        self.actions = np.zeros((capacity, action_dim))
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, state_dim))
        self.size = 0
        self.cursor = 0

    def add(self, s, a, r, s2):
        i = self.cursor
        self.states[i] = s
        self.actions[i] = a
        self.rewards[i] = r
        self.next_states[i] = s2
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size, rng):
        idx = rng.choice(self.size, size=min(batch_size, self.size), replace=False)
        return (self.states[idx], self.actions[idx], self.rewards[idx],
                self.next_states[idx])


class OuNoise:
    """Mean-reverting exploration noise, one state per logit dimension."""

    def __init__(self, dim, theta=0.15):
        self.dim = dim
        self.theta = theta
        self.state = np.zeros(dim)

    def reset(self):
        self.state[:] = 0.0

    def sample(self, sigma, rng):
        self.state += self.theta * (-self.state) + sigma * rng.standard_normal(self.dim)
        return self.state.copy()


def ou_noise_scale(episode, hyper: Td3Hyper):
    """Episode-indexed exploration scale sigma_init * exp(-decay*ep) + sigma_min."""
    return hyper.ou_sigma_init * math.exp(-hyper.ou_decay * episode) + hyper.ou_sigma_min


@dataclass
class Td3Nets:
    actor: DenseNet
    critic1: DenseNet
    critic2: DenseNet
    target_actor: DenseNet
    target_critic1: DenseNet
    target_critic2: DenseNet

    @classmethod
    def create(cls, state_dim, action_dim, hyper: Td3Hyper, rng):
        actor = DenseNet(state_dim, hyper.hidden, action_dim, rng,
                         out_scale=hyper.logit_scale)
        critic1 = DenseNet(state_dim + action_dim, hyper.hidden, 1, rng)
        critic2 = DenseNet(state_dim + action_dim, hyper.hidden, 1, rng)
        return cls(actor, critic1, critic2,
                   actor.copy(), critic1.copy(), critic2.copy())


def critic_target(batch, nets: Td3Nets, hyper: Td3Hyper, rng):
    """Clipped double-Q target y = R + discount * min_i Q_i'(s', a~')."""
    _, _, rewards, next_states = batch
    a_next = nets.target_actor.forward(next_states)
    if hyper.smooth_sigma > 0.0 or hyper.smooth_clip > 0.0:
        noise = hyper.smooth_sigma * hyper.logit_scale * rng.standard_normal(a_next.shape)
        clip = hyper.smooth_clip * hyper.logit_scale
        a_next = a_next + np.clip(noise, -clip, clip)
    q_in = np.hstack([next_states, a_next])
    q1 = nets.target_critic1.forward(q_in)[:, 0]
    q2 = nets.target_critic2.forward(q_in)[:, 0]
    return rewards + hyper.discount * np.minimum(q1, q2)


def critic_gradients(critic: DenseNet, states, actions, y):
    """Mean-squared Bellman error and its parameter gradients."""
    cache = {}
    q = critic.forward(np.hstack([states, actions]), cache)[:, 0]
    err = q - y
    loss = float(np.mean(err**2))
    grad_out = (2.0 / len(y)) * err[:, None]
    grads, _ = critic.backward(cache, grad_out)
    return loss, grads


def actor_gradients(nets: Td3Nets, states):
    """Mean Q1(s, pi(s)) and its gradient w.r.t. actor parameters."""
    cache_a = {}
    actions = nets.actor.forward(states, cache_a)
    cache_q = {}
    q = nets.critic1.forward(np.hstack([states, actions]), cache_q)
    grad_out = np.full_like(q, 1.0 / len(q))
    _, grad_in = nets.critic1.backward(cache_q, grad_out)
    grad_actions = grad_in[:, states.shape[1]:]
    grads, _ = nets.actor.backward(cache_a, grad_actions)
    return float(np.mean(q)), grads


def _check_finite(value, grads, what):
    if not np.isfinite(value) or any(not np.all(np.isfinite(g)) for g in grads):
        raise TrainingError(f"non-finite {what}; last value {value}")


def critic_step(batch, nets: Td3Nets, hyper: Td3Hyper, y, optimizers):
    """One Adam step per critic on the Bellman loss; returns both losses."""
    states, actions, _, _ = batch
    losses = []
    for critic, opt in ((nets.critic1, optimizers["critic1"]),
                        (nets.critic2, optimizers["critic2"])):
        loss, grads = critic_gradients(critic, states, actions, y)
        _check_finite(loss, grads, "critic loss/gradient")
        opt.step(grads)
        losses.append(loss)
    return losses


def actor_step(batch, nets: Td3Nets, hyper: Td3Hyper, optimizers):
    """One Adam ascent step on mean Q1(s, pi(s))."""
    states = batch[0]
    value, grads = actor_gradients(nets, states)
    _check_finite(value, grads, "actor objective/gradient")
    optimizers["actor"].step([-g for g in grads])
    return value


@dataclass
class TrainResult:
    nets: Td3Nets
    episode_rewards: list
    history: list = field(default_factory=list)
    counters: dict = field(default_factory=dict)


def train(env, hyper: Td3Hyper, seed, log_path=None) -> TrainResult:
    """Run the full placement-training loop; deterministic under ``seed``."""
    ss = np.random.SeedSequence(seed)
    rng_init, rng_ou, rng_batch, rng_smooth = [
        np.random.default_rng(s) for s in ss.spawn(4)
    ]
    s0 = env.reset(0)
    sdim = len(s0)
    adim = env.action_dim
    nets = Td3Nets.create(sdim, adim, hyper, rng_init)
    optimizers = {
        "actor": Adam(nets.actor.parameters(), hyper.lr_actor),
        "critic1": Adam(nets.critic1.parameters(), hyper.lr_critic),
        "critic2": Adam(nets.critic2.parameters(), hyper.lr_critic),
    }
    buffer = ReplayBuffer(hyper.buffer_capacity, sdim, adim)
    ou = OuNoise(adim, hyper.ou_theta)
    counters = {"env_steps": 0, "critic_updates": 0, "actor_updates": 0,
                "target_updates": 0}
    episode_rewards = []
    history = []

    total_steps = 0
    for episode in range(hyper.n_episodes):
        t_ep = time.perf_counter()
        state = env.reset(episode)
        ou.reset()
        sigma = ou_noise_scale(episode, hyper)
        rewards = []
        for step in range(hyper.n_steps):
            if total_steps < hyper.warmup_steps:
                action = rng_ou.uniform(-hyper.logit_scale, hyper.logit_scale, adim)
            else:
                action = nets.actor.forward(state)[0]
                action = action + hyper.logit_scale * ou.sample(sigma, rng_ou)
            next_state, reward = env.step(action)
            buffer.add(state, action, reward, next_state)
            rewards.append(reward)
            state = next_state
            counters["env_steps"] += 1

            if total_steps >= hyper.warmup_steps and buffer.size >= hyper.batch_size:
                batch = buffer.sample(hyper.batch_size, rng_batch)
                y = critic_target(batch, nets, hyper, rng_smooth)
                critic_step(batch, nets, hyper, y, optimizers)
                counters["critic_updates"] += 1
                if (step + 1) % hyper.policy_delay == 0:
                    actor_step(batch, nets, hyper, optimizers)
                    soft_update(nets.actor, nets.target_actor, hyper.soft_tau)
                    soft_update(nets.critic1, nets.target_critic1, hyper.soft_tau)
                    soft_update(nets.critic2, nets.target_critic2, hyper.soft_tau)
                    counters["actor_updates"] += 1
                    counters["target_updates"] += 1
            total_steps += 1

        episode_rewards.append(float(np.mean(rewards)))
        history.append({
            "episode": episode,
            "mean_reward": episode_rewards[-1],
            "sigma_ou": sigma,
            "wall_ms": 1000.0 * (time.perf_counter() - t_ep),
        })

    if log_path is not None:
        with open(log_path, "w", encoding="utf-8") as fh:
            for rec in history:
                fh.write(json.dumps(rec) + "\n")
    return TrainResult(nets, episode_rewards, history, counters)


def greedy_action(nets: Td3Nets, state):
    """Deterministic policy output (no exploration noise)."""
    return nets.actor.forward(state)[0]
