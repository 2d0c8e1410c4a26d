"""Fixture chain MDP used to verify the learners against dynamic
programming.

Five states in a chain with two actions: STAY keeps the current state,
ADVANCE moves one state to the right.  Advancing from the last state
ends the episode with reward 1; every other transition has reward 0.
The transition table below is the single source of truth for both
environment interfaces.
"""
from __future__ import annotations

import numpy as np

N_STATES = 5
TERMINAL = N_STATES  # pseudo-state index used by the afterstate view
STAY, ADVANCE = 0, 1
ACTIONS = (STAY, ADVANCE)

# (state, action) -> (next_state, reward, terminal)
TRANSITIONS = {}
for _s in range(N_STATES):
    TRANSITIONS[(_s, STAY)] = (_s, 0.0, False)
    if _s < N_STATES - 1:
        TRANSITIONS[(_s, ADVANCE)] = (_s + 1, 0.0, False)
    else:
        TRANSITIONS[(_s, ADVANCE)] = (TERMINAL, 1.0, True)


def one_hot(state: int, dim: int) -> np.ndarray:
    v = np.zeros(dim)
    v[state] = 1.0
    return v


class ChainAfterstateEnv:
    """Afterstate (model-based TD) view of the chain.

    Features are one-hot over the N_STATES + 1 afterstates (the
    terminal pseudo-state included, since its value is updated by the
    final transition of an episode).
    """

    feature_dim = N_STATES + 1

    def __init__(self):
        self.state = 0

    def reset(self, rng):
        self.state = 0

    def candidates(self):
        feats = np.zeros((len(ACTIONS), self.feature_dim))
        rewards = np.zeros(len(ACTIONS))
        terminals = np.zeros(len(ACTIONS), dtype=bool)
        for a in ACTIONS:
            nxt, r, term = TRANSITIONS[(self.state, a)]
            feats[a, nxt] = 1.0
            rewards[a] = r
            terminals[a] = term
        self._next = [TRANSITIONS[(self.state, a)][0] for a in ACTIONS]
        return feats, rewards, terminals, np.zeros(len(ACTIONS))

    def advance(self, idx: int, rng):
        self.state = self._next[idx]


class ChainSarsaEnv:
    """Action-value view of the chain: observations are one-hot states,
    both actions always available."""

    obs_dim = N_STATES
    n_actions = len(ACTIONS)

    def __init__(self):
        self.state = 0

    def reset(self, rng):
        self.state = 0
        return one_hot(self.state, self.obs_dim), list(ACTIONS)

    def step(self, action: int, rng):
        nxt, r, term = TRANSITIONS[(self.state, action)]
        if term:
            return r, None, None, True, 0
        self.state = nxt
        return r, one_hot(nxt, self.obs_dim), list(ACTIONS), False, 0
