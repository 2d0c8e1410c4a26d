"""TD(lambda) and Sarsa(lambda) learning cores.

Both episode drivers update online, within the step, with accumulating
eligibility traces that reset at episode start.  The TD(lambda) driver
is model-based over afterstates: the policy selects among the values of
all reachable afterstates, and the gradient in the trace recursion is
taken at the chosen afterstate.  The bootstrap value for step t is the
value of the afterstate chosen at step t+1, computed with the
pre-update parameters of that step; the final transition of an episode
bootstraps with zero.

Environment protocols (duck-typed):

  afterstate interface (TD):
    reset(rng)
    candidates() -> (features, rewards, terminals, score_deltas)
        one row / entry per available action
    advance(chosen_index, rng)

  action-value interface (Sarsa):
    reset(rng) -> (observation, available_action_indices)
    step(action, rng) -> (reward, observation', available', terminal,
                          score_delta)
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class TrainingDiverged(RuntimeError):
    """Raised when a value estimate turns non-finite mid-episode."""


@dataclass(frozen=True)
class LearnerConfig:
    alpha: float
    gamma: float
    lam: float
    algorithm: str = "td"

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must be in [0, 1]")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lambda must be in [0, 1]")


@dataclass
class EpisodeRecord:
    """Per-step log of one episode plus its aggregate score."""

    score: int = 0
    steps: int = 0
    rewards: list = field(default_factory=list)
    values: list = field(default_factory=list)
    exploratory: list = field(default_factory=list)
    episode: int = 0
    tau: float = 0.0
    truncated: bool = False

    @property
    def shaped_return(self) -> float:
        return float(sum(self.rewards))

    @property
    def mean_value(self) -> float:
        return float(np.mean(self.values)) if self.values else 0.0

    @property
    def exploratory_count(self) -> int:
        return int(sum(self.exploratory))


def td_error_v(r: float, gamma: float, v_next: float, v_cur: float,
               terminal: bool) -> float:
    """delta = r + gamma * V(s') - V(s); V(s') treated as 0 at episode
    end."""
    if terminal:
        v_next = 0.0
    return r + gamma * v_next - v_cur


def td_error_q(r: float, gamma: float, q_next: float, q_cur: float,
               terminal: bool) -> float:
    """delta = r + gamma * Q(s', a') - Q(s, a) with the on-policy next
    action; Q(s', a') treated as 0 at episode end."""
    if terminal:
        q_next = 0.0
    return r + gamma * q_next - q_cur


def update_traces(e: np.ndarray, gamma: float, lam: float,
                  grad: np.ndarray) -> np.ndarray:
    """Accumulating-trace recursion e' = gamma * lambda * e + grad."""
    e = np.asarray(e, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if e.shape != grad.shape:
        raise ValueError("trace/gradient length mismatch")
    return gamma * lam * e + grad


def apply_td_update(params: np.ndarray, alpha: float, delta: float,
                    e: np.ndarray) -> np.ndarray:
    """theta' = theta + alpha * delta * e."""
    params = np.asarray(params, dtype=np.float64)
    e = np.asarray(e, dtype=np.float64)
    if params.shape != e.shape:
        raise ValueError("parameter/trace length mismatch")
    return params + alpha * delta * e


def _check_finite(values):
    if not np.all(np.isfinite(values)):
        raise TrainingDiverged(
            "non-finite value estimate encountered; aborting episode"
        )


def run_episode_td(env, net, select, learner: LearnerConfig,
                   rng: np.random.Generator, learn: bool = True,
                   max_steps: int = 0) -> EpisodeRecord:
    """One episode of model-based TD(lambda) over afterstates."""
    env.reset(rng)
    rec = EpisodeRecord()
    e = np.zeros(net.n_params)
    gamma, lam, alpha = learner.gamma, learner.lam, learner.alpha
    prev_feat = None
    prev_reward = 0.0
    while True:
        feats, rewards, terminals, sdeltas = env.candidates()
        values = net.forward_batch(feats)[:, 0]
        _check_finite(values)
        idx, exploratory = select(values, rng)
        v_sel = float(values[idx])
        if learn and prev_feat is not None:
            v_cur, grad = net.value_and_gradient(prev_feat, 0)
            e = update_traces(e, gamma, lam, grad)
            delta = td_error_v(prev_reward, gamma, v_sel, v_cur, False)
            net.apply_delta(alpha * delta * e)
        rec.steps += 1
        rec.score += int(sdeltas[idx])
        rec.rewards.append(float(rewards[idx]))
        rec.values.append(v_sel)
        rec.exploratory.append(bool(exploratory))
        if terminals[idx]:
            if learn:
                feat = feats[idx]
                v_cur, grad = net.value_and_gradient(feat, 0)
                e = update_traces(e, gamma, lam, grad)
                delta = td_error_v(float(rewards[idx]), gamma, 0.0, v_cur, True)
                net.apply_delta(alpha * delta * e)
            return rec
        env.advance(idx, rng)
        prev_feat = feats[idx]
        prev_reward = float(rewards[idx])
        if max_steps and rec.steps >= max_steps:
            rec.truncated = True
            return rec


def run_episode_sarsa(env, net, select, learner: LearnerConfig,
                      rng: np.random.Generator, learn: bool = True,
                      max_steps: int = 0) -> EpisodeRecord:
    """One episode of on-policy Sarsa(lambda).

    The next action a_{t+1} is selected before the update of step t,
    and both Q-values entering the TD error use the pre-update
    parameters of that step.
    """
    obs, avail = env.reset(rng)
    rec = EpisodeRecord()
    e = np.zeros(net.n_params)
    gamma, lam, alpha = learner.gamma, learner.lam, learner.alpha
    q = net.forward(obs)
    _check_finite(q)
    sub, exploratory = select(q[avail], rng)
    action = int(avail[sub])
    q_sel = float(q[action])
    while True:
        reward, obs2, avail2, terminal, sdelta = env.step(action, rng)
        rec.steps += 1
        rec.score += int(sdelta)
        rec.rewards.append(float(reward))
        rec.values.append(q_sel)
        rec.exploratory.append(bool(exploratory))
        if terminal:
            if learn:
                q_cur, grad = net.value_and_gradient(obs, action)
                e = update_traces(e, gamma, lam, grad)
                delta = td_error_q(reward, gamma, 0.0, q_cur, True)
                net.apply_delta(alpha * delta * e)
            return rec
        q2 = net.forward(obs2)
        _check_finite(q2)
        sub2, exploratory2 = select(q2[avail2], rng)
        action2 = int(avail2[sub2])
        if learn:
            q_next = float(q2[action2])
            q_cur, grad = net.value_and_gradient(obs, action)
            e = update_traces(e, gamma, lam, grad)
            delta = td_error_q(reward, gamma, q_next, q_cur, False)
            net.apply_delta(alpha * delta * e)
        obs, avail = obs2, avail2
        action, exploratory = action2, exploratory2
        q_sel = float(q2[action2])
        if max_steps and rec.steps >= max_steps:
            rec.truncated = True
            return rec
