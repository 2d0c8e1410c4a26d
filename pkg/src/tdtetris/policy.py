"""Action selection: Boltzmann softmax with hyperbolic temperature
annealing, and epsilon-greedy for the selection-strategy comparison.

An action is counted as "exploratory" when the selected index differs
from the greedy argmax of the value vector (ties broken by lowest
index).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SoftmaxSchedule:
    """Hyperbolic annealing tau(i) = tau0 / (1 + tau_k * i)."""

    tau0: float
    tau_k: float

    def __post_init__(self):
        if self.tau0 <= 0:
            raise ValueError("tau0 must be positive")
        if self.tau_k < 0:
            raise ValueError("tau_k must be non-negative")

    def tau(self, episode: int) -> float:
        return anneal_tau(self, episode)


def anneal_tau(schedule: SoftmaxSchedule, episode: int) -> float:
    """Temperature for episode index `episode` (0-based)."""
    if episode < 0:
        raise ValueError("episode index must be >= 0")
    return schedule.tau0 / (1.0 + schedule.tau_k * episode)


def softmax_probs(values, tau: float) -> np.ndarray:
    """Boltzmann distribution over `values` at temperature `tau`.

    Uses max-subtraction so that arbitrarily large values never
    overflow.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("softmax over empty value vector")
    if tau <= 0:
        raise ValueError("temperature must be positive")
    scaled = values / tau
    scaled = scaled - scaled.max()
    p = np.exp(scaled)
    return p / p.sum()


def sample(dist, rng: np.random.Generator) -> int:
    """Draw an index by inverse CDF over the given order."""
    dist = np.asarray(dist, dtype=np.float64)
    cum = np.cumsum(dist)
    r = rng.random() * cum[-1]
    idx = int(np.searchsorted(cum, r, side="right"))
    return min(idx, dist.size - 1)


def softmax_select(values, tau: float, rng: np.random.Generator):
    """Sample an action from the Boltzmann distribution.

    Returns (index, exploratory) where exploratory is True iff the
    sampled action is not the greedy argmax.
    """
    values = np.asarray(values, dtype=np.float64)
    idx = sample(softmax_probs(values, tau), rng)
    return idx, idx != int(np.argmax(values))


def epsilon_greedy(values, epsilon: float, rng: np.random.Generator):
    """Epsilon-greedy selection.

    With probability 1 - epsilon returns the argmax (lowest index on
    ties); otherwise draws uniformly over all actions.  `exploratory`
    is True iff the uniform branch fired and the drawn action differs
    from the argmax.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("epsilon_greedy over empty value vector")
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must be in [0, 1]")
    greedy = int(np.argmax(values))
    if epsilon > 0.0 and rng.random() < epsilon:
        idx = int(rng.integers(values.size))
        return idx, idx != greedy
    return greedy, False
