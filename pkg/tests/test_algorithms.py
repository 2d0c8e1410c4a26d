"""Learning cores: TD-error arithmetic, trace recursion, exact update
sequencing on scripted episodes, and convergence on the chain fixture
against dynamic-programming oracles."""
import numpy as np
import pytest

from tdtetris.algorithms import (
    EpisodeRecord,
    LearnerConfig,
    TrainingDiverged,
    apply_td_update,
    run_episode_sarsa,
    run_episode_td,
    td_error_q,
    td_error_v,
    update_traces,
)
from tdtetris.mdp import (
    ACTIONS,
    ADVANCE,
    N_STATES,
    STAY,
    TRANSITIONS,
    ChainAfterstateEnv,
    ChainSarsaEnv,
)
from tdtetris.networks import LinearNet


# ------------------------------------------------------------ oracles

def dp_q_star(gamma: float) -> np.ndarray:
    """Optimal action values of the chain by value iteration."""
    q = np.zeros((N_STATES, len(ACTIONS)))
    for _ in range(10_000):
        new = np.empty_like(q)
        for s in range(N_STATES):
            for a in ACTIONS:
                nxt, r, term = TRANSITIONS[(s, a)]
                new[s, a] = r + (0.0 if term else gamma * q[nxt].max())
        if np.max(np.abs(new - q)) < 1e-14:
            return new
        q = new
    raise AssertionError("value iteration did not converge")


def dp_v_uniform(gamma: float) -> np.ndarray:
    """Afterstate values under the uniform random policy, by solving
    the linear system V(A) = r_arrival(A) + gamma * E_pi[V(A')], with
    the terminal pseudo-state worth its arrival reward."""
    n = N_STATES + 1
    A = np.eye(n)
    b = np.zeros(n)
    for s in range(N_STATES):
        for a in ACTIONS:
            nxt, _, _ = TRANSITIONS[(s, a)]
            A[s, nxt] -= gamma / len(ACTIONS)
    b[N_STATES] = 1.0  # terminal arrival reward
    return np.linalg.solve(A, b)


def test_q_star_closed_form():
    gamma = 0.9
    q = dp_q_star(gamma)
    for s in range(N_STATES):
        assert abs(q[s, ADVANCE] - gamma ** (N_STATES - 1 - s)) < 1e-12
        assert abs(q[s, STAY] - gamma * q[s, ADVANCE]) < 1e-12


# ----------------------------------------------------- scalar pieces

def test_td_error_values():
    assert td_error_v(1.0, 0.9, 2.0, 0.5, False) == 1.0 + 0.9 * 2.0 - 0.5
    assert td_error_v(1.0, 0.9, 2.0, 0.5, True) == 0.5  # bootstrap zeroed
    assert td_error_q(0.2, 0.99, -1.0, 0.1, False) == pytest.approx(
        0.2 - 0.99 - 0.1)
    assert td_error_q(0.2, 0.99, -1.0, 0.1, True) == pytest.approx(0.1)
    # a perfect predictor on a self-consistent transition has zero error
    assert td_error_v(0.5, 0.9, 1.0, 0.5 + 0.9, False) == 0.0


def test_trace_unrolling():
    gamma, lam = 0.99, 0.55
    gl = gamma * lam
    assert abs(gl - 0.5445) < 1e-12
    g1, g2, g3 = (np.array([1.0, 0.0]), np.array([0.0, 2.0]),
                  np.array([3.0, 1.0]))
    e = np.zeros(2)
    e = update_traces(e, gamma, lam, g1)
    e = update_traces(e, gamma, lam, g2)
    e = update_traces(e, gamma, lam, g3)
    assert np.allclose(e, gl * gl * g1 + gl * g2 + g3, atol=1e-12)


def test_trace_and_update_are_linear_and_shape_checked():
    rng = np.random.default_rng(0)
    e = rng.normal(size=10)
    g = rng.normal(size=10)
    out = update_traces(e, 0.9, 0.5, g)
    assert np.allclose(out, 0.45 * e + g, atol=1e-12)
    theta = rng.normal(size=10)
    assert np.allclose(apply_td_update(theta, 0.1, -2.0, e),
                       theta - 0.2 * e, atol=1e-12)
    with pytest.raises(ValueError):
        update_traces(e, 0.9, 0.5, g[:5])
    with pytest.raises(ValueError):
        apply_td_update(theta, 0.1, 1.0, e[:5])


def test_learner_config_validation():
    LearnerConfig(0.1, 0.99, 0.55)
    with pytest.raises(ValueError):
        LearnerConfig(-0.1, 0.99, 0.55)
    with pytest.raises(ValueError):
        LearnerConfig(0.1, 1.5, 0.55)
    with pytest.raises(ValueError):
        LearnerConfig(0.1, 0.99, -0.1)


def test_episode_record_aggregates():
    rec = EpisodeRecord(score=3, steps=2, rewards=[0.5, 0.25],
                        values=[1.0, 3.0], exploratory=[True, False])
    assert rec.shaped_return == 0.75
    assert rec.mean_value == 2.0
    assert rec.exploratory_count == 1
    assert EpisodeRecord().mean_value == 0.0


# ------------------------------------------ scripted exact sequencing

class ScriptedAfterstateEnv:
    """One candidate per step with a fixed (feature index, reward)
    script; the last step is terminal."""

    def __init__(self, script, dim):
        self.script = script
        self.dim = dim

    def reset(self, rng):
        self.t = 0

    def candidates(self):
        idx, r, term = self.script[self.t]
        feats = np.zeros((1, self.dim))
        feats[0, idx] = 1.0
        return (feats, np.array([r]), np.array([term]), np.array([0]))

    def advance(self, i, rng):
        self.t += 1


@pytest.mark.parametrize("lam", [0.0, 0.55, 1.0])
def test_td_episode_exact_update_sequence(lam):
    """Replays the documented recursion by hand and demands the driver
    reproduce it to machine precision: traces reset at episode start,
    the bootstrap uses the value of the next chosen afterstate computed
    before that step's update, and the final transition bootstraps 0."""
    gamma, alpha = 0.9, 0.05
    script = [(0, 0.3, False), (1, -0.2, False), (3, 1.0, True)]
    env = ScriptedAfterstateEnv(script, dim=4)
    net = LinearNet(4, 1, np.random.default_rng(42))
    theta = net.flatten()

    def value(th, j):
        return th[j] + th[4]  # W[0, j] + bias

    def grad(j):
        g = np.zeros(5)
        g[j] = 1.0
        g[4] = 1.0
        return g

    # hand recursion, mirroring the step order of the driver
    e = np.zeros(5)
    prev = None
    for j, r, term in script:
        v_sel = value(theta, j)
        if prev is not None:
            pj, pr = prev
            e = gamma * lam * e + grad(pj)
            delta = pr + gamma * v_sel - value(theta, pj)
            theta = theta + alpha * delta * e
        if term:
            e = gamma * lam * e + grad(j)
            delta = r - value(theta, j)
            theta = theta + alpha * delta * e
            break
        prev = (j, r)

    learner = LearnerConfig(alpha, gamma, lam)
    select = lambda values, rng: (0, False)
    rec = run_episode_td(env, net, select, learner,
                         np.random.default_rng(0))
    assert rec.steps == 3
    assert rec.rewards == [0.3, -0.2, 1.0]
    assert np.max(np.abs(net.flatten() - theta)) < 1e-13


class ScriptedSarsaEnv:
    """Deterministic two-action chain with a fixed reward script."""

    obs_dim = 3
    n_actions = 2

    def __init__(self, rewards):
        self.rewards = rewards  # one per step; last step terminal

    def _obs(self):
        v = np.zeros(self.obs_dim)
        v[self.t] = 1.0
        return v

    def reset(self, rng):
        self.t = 0
        return self._obs(), [0, 1]

    def step(self, action, rng):
        r = self.rewards[self.t]
        self.t += 1
        if self.t == len(self.rewards):
            return r, None, None, True, 0
        return r, self._obs(), [0, 1], False, 0


@pytest.mark.parametrize("lam", [0.0, 0.8])
def test_sarsa_episode_exact_update_sequence(lam):
    """Hand-rolled Sarsa recursion: a_{t+1} is chosen before the step-t
    update and both Q-values in the TD error use that step's pre-update
    parameters."""
    gamma, alpha = 0.95, 0.1
    rewards = [0.4, -0.1, 2.0]
    env = ScriptedSarsaEnv(rewards)
    net = LinearNet(3, 2, np.random.default_rng(7))
    theta = net.flatten()

    def q(th, state, action):
        W = th[:6].reshape(2, 3)
        return W[action, state] + th[6 + action]

    def grad(state, action):
        g = np.zeros(8)
        g[action * 3 + state] = 1.0
        g[6 + action] = 1.0
        return g

    greedy = lambda values, rng: (int(np.argmax(values)), False)

    e = np.zeros(8)
    state = 0
    action = int(np.argmax([q(theta, 0, a) for a in range(2)]))
    for t, r in enumerate(rewards):
        terminal = t == len(rewards) - 1
        if terminal:
            e = gamma * lam * e + grad(state, action)
            delta = r - q(theta, state, action)
            theta = theta + alpha * delta * e
            break
        nxt = t + 1
        action2 = int(np.argmax([q(theta, nxt, a) for a in range(2)]))
        e = gamma * lam * e + grad(state, action)
        delta = (r + gamma * q(theta, nxt, action2)
                 - q(theta, state, action))
        theta = theta + alpha * delta * e
        state, action = nxt, action2

    learner = LearnerConfig(alpha, gamma, lam, algorithm="sarsa")
    rec = run_episode_sarsa(env, net, greedy, learner,
                            np.random.default_rng(0))
    assert rec.steps == 3
    assert rec.rewards == rewards
    assert np.max(np.abs(net.flatten() - theta)) < 1e-13


# ------------------------------------------------- determinism, guards

def test_episode_is_seed_deterministic():
    learner = LearnerConfig(0.05, 0.9, 0.55)
    results = []
    for _ in range(2):
        env = ChainAfterstateEnv()
        net = LinearNet(env.feature_dim, 1, np.random.default_rng(3))
        select = lambda values, rng: (int(rng.integers(len(values))), False)
        recs = [run_episode_td(env, net, select, learner,
                               np.random.default_rng(11))
                for _ in range(5)]
        results.append((net.flatten(), [r.steps for r in recs]))
    assert np.array_equal(results[0][0], results[1][0])
    assert results[0][1] == results[1][1]


def test_non_finite_values_raise_training_diverged():
    env = ChainAfterstateEnv()
    net = LinearNet(env.feature_dim, 1, np.random.default_rng(0))
    net.theta[:] = np.inf
    with np.errstate(invalid="ignore"), pytest.raises(TrainingDiverged):
        run_episode_td(env, net, lambda v, r: (0, False),
                       LearnerConfig(0.1, 0.9, 0.5),
                       np.random.default_rng(0))


def test_max_steps_truncates():
    env = ChainAfterstateEnv()
    net = LinearNet(env.feature_dim, 1, np.random.default_rng(0))
    stay = lambda values, rng: (STAY, False)
    rec = run_episode_td(env, net, stay, LearnerConfig(0.0, 0.9, 0.5),
                         np.random.default_rng(0), max_steps=17)
    assert rec.steps == 17 and rec.truncated


# ----------------------------------------------- convergence to the DP

def test_td_policy_evaluation_converges_to_dp_values():
    gamma, lam = 0.9, 0.55
    v_star = dp_v_uniform(gamma)
    env = ChainAfterstateEnv()
    net = LinearNet(env.feature_dim, 1, np.random.default_rng(21))
    uniform = lambda values, rng: (int(rng.integers(len(values))), False)
    rng = np.random.default_rng(22)
    for ep in range(8000):
        alpha = 0.1 / (1.0 + 0.01 * ep)
        learner = LearnerConfig(alpha, gamma, lam)
        run_episode_td(env, net, uniform, learner, rng, max_steps=500)
    learned = np.array([float(net.forward(np.eye(6)[s])[0])
                        for s in range(6)])
    assert np.max(np.abs(learned - v_star)) < 1e-2


def test_sarsa_converges_to_dp_q_star():
    gamma, lam = 0.9, 0.55
    q_star = dp_q_star(gamma)
    env = ChainSarsaEnv()
    net = LinearNet(env.obs_dim, env.n_actions, np.random.default_rng(31))
    rng = np.random.default_rng(32)
    from tdtetris.policy import softmax_select
    for ep in range(30_000):
        alpha = 0.1 / (1.0 + 0.0005 * ep)
        tau = 0.5 / (1.0 + 0.002 * ep)
        select = lambda values, r: softmax_select(values, tau, r)
        learner = LearnerConfig(alpha, gamma, lam, algorithm="sarsa")
        run_episode_sarsa(env, net, select, learner, rng, max_steps=500)
    learned = np.stack([net.forward(np.eye(5)[s]) for s in range(5)])
    assert np.max(np.abs(learned - q_star)) < 1e-2
    # the greedy policy from the learned values is optimal (advance)
    assert np.all(np.argmax(learned, axis=1) == ADVANCE)
