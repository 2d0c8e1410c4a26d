"""Training and evaluation orchestration.

A run is a pure function of (config, seed).  The seed is split with
numpy's SeedSequence (PCG64 generators) into three documented streams:
network initialization, environment piece spawns, and policy sampling.

Run directory layout:

    config.txt               resolved config manifest (key=value lines)
    log.csv                  one row per episode, frozen schema:
                             episode,score,steps,shaped_return,
                             mean_value_estimate,tau,exploratory_actions
    aggregate.csv            mean score per `log_every` window
    checkpoint-<episode>.json  periodic checkpoints
    checkpoint-final.json    final parameters
    final_stats.txt          mean/sd score over the last window

Checkpoints are self-describing JSON: format tag, the resolved config,
the architecture dict, the episode counter, and the flat parameter
vector in the documented ordering (see `networks`).
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import envs, mdp
from .algorithms import (
    LearnerConfig,
    TrainingDiverged,
    run_episode_sarsa,
    run_episode_td,
)
from .features import LAYOUTS
from .networks import build_network
from .policy import SoftmaxSchedule, epsilon_greedy, softmax_select
from .tetris import BOARD_SHAPE

CHECKPOINT_FORMAT = "tdtetris-checkpoint-v1"
LOG_COLUMNS = (
    "episode", "score", "steps", "shaped_return",
    "mean_value_estimate", "tau", "exploratory_actions",
)

# Deep SZ-Tetris architecture: two 5x5 conv layers (15 and 50 filters,
# stride 1), each followed by 3x3 stride-2 max-pooling, then a
# 250-unit fully-connected layer and a linear output.
DEEP_LAYERS = (
    {"type": "conv", "filters": 15, "kernel": [5, 5], "stride": 1, "kind": "silu"},
    {"type": "maxpool", "window": [3, 3], "stride": 2},
    {"type": "conv", "filters": 50, "kernel": [5, 5], "stride": 1, "kind": "silu"},
    {"type": "maxpool", "window": [3, 3], "stride": 2},
    {"type": "dense", "units": 250, "kind": "dsilu"},
    {"type": "output", "units": 1},
)


@dataclass(frozen=True)
class AgentConfig:
    variant: str = "sz"              # sz | tetris10 | chain-mdp
    algorithm: str = "td"            # td | sarsa
    net: str = "shallow"             # shallow | conv | linear
    hidden: int = 50
    hidden_kind: str = "dsilu"
    conv_kind: str = "silu"          # conv-layer activation for net=conv
    deep_input: str = "board"        # board | board+piece (conv nets)
    alpha: float = 0.001
    gamma: float = 0.99
    lam: float = 0.55
    tau0: float = 0.5
    tau_k: float = 0.00025
    episodes: int = 200_000
    seed: int = 0
    log_every: int = 1000
    checkpoint_every: int = 10_000
    max_steps: int = 0               # 0 = no per-episode step cap

    def learner(self) -> LearnerConfig:
        return LearnerConfig(self.alpha, self.gamma, self.lam, self.algorithm)

    def schedule(self) -> SoftmaxSchedule:
        return SoftmaxSchedule(self.tau0, self.tau_k)


PRESETS = {
    "sz-shallow": AgentConfig(variant="sz", algorithm="td", net="shallow",
                              hidden=50, hidden_kind="dsilu", alpha=0.001),
    "sz-deep": AgentConfig(variant="sz", algorithm="td", net="conv",
                           alpha=0.0001),
    "tetris10": AgentConfig(variant="tetris10", algorithm="td", net="shallow",
                            hidden=250, hidden_kind="dsilu", alpha=0.001,
                            episodes=400_000),
    "test-mdp": AgentConfig(variant="chain-mdp", algorithm="sarsa",
                            net="linear", alpha=0.1, gamma=0.9, lam=0.55,
                            tau0=0.5, tau_k=0.002, episodes=30_000,
                            max_steps=500),
    # Deep Sarsa meta-parameter preset (alpha 0.001, lambda 0.8,
    # tau_k 0.0005) attached to the SZ board.
    "sz-deep-sarsa": AgentConfig(variant="sz", algorithm="sarsa", net="conv",
                                 alpha=0.001, lam=0.8, tau_k=0.0005),
}


def build_arch(config: AgentConfig) -> dict:
    """Architecture dict implied by the flat config fields."""
    if config.variant == "chain-mdp":
        if config.algorithm == "sarsa":
            return {"type": "linear", "input_dim": mdp.ChainSarsaEnv.obs_dim,
                    "outputs": mdp.ChainSarsaEnv.n_actions}
        return {"type": "linear",
                "input_dim": mdp.ChainAfterstateEnv.feature_dim, "outputs": 1}
    outputs = 1 if config.algorithm == "td" else envs.max_actions(config.variant)
    if config.net == "conv":
        if config.algorithm != "td":
            raise ValueError("conv nets are supported for the td algorithm only")
        height, width = BOARD_SHAPE[config.variant]
        channels = envs.board_channels(config.variant, config.deep_input)
        layers = [dict(s) for s in DEEP_LAYERS]
        for layer in layers:
            if layer["type"] == "conv":
                layer["kind"] = config.conv_kind
            elif layer["type"] == "dense":
                layer["kind"] = config.hidden_kind
            elif layer["type"] == "output":
                layer["units"] = outputs
        return {"type": "conv", "input_shape": [channels, height, width],
                "layers": layers}
    if config.net == "linear":
        input_dim = (LAYOUTS[config.variant].length if config.algorithm == "td"
                     else envs.sarsa_obs_dim(config.variant))
        return {"type": "linear", "input_dim": input_dim, "outputs": outputs}
    if config.algorithm == "td":
        input_dim = LAYOUTS[config.variant].length
    else:
        input_dim = envs.sarsa_obs_dim(config.variant)
    return {"type": "shallow", "input_dim": input_dim, "hidden": config.hidden,
            "kind": config.hidden_kind, "outputs": outputs}


def build_env(config: AgentConfig):
    if config.variant == "chain-mdp":
        return (mdp.ChainAfterstateEnv() if config.algorithm == "td"
                else mdp.ChainSarsaEnv())
    if config.algorithm == "td":
        encoder = (envs.FEATURE_ENCODER if config.net != "conv"
                   else (envs.BOARD_PIECE_ENCODER
                         if config.deep_input == "board+piece"
                         else envs.BOARD_ENCODER))
        return envs.TetrisAfterstateEnv(config.variant, encoder)
    return envs.TetrisSarsaEnv(config.variant)


def split_streams(seed: int):
    """(init, spawns, policy) generators derived from one seed."""
    ss = np.random.SeedSequence(seed)
    init_s, spawn_s, policy_s = ss.spawn(3)
    return (np.random.default_rng(init_s), np.random.default_rng(spawn_s),
            np.random.default_rng(policy_s))


def config_to_text(config: AgentConfig) -> str:
    lines = [f"{k}={v}" for k, v in sorted(asdict(config).items())]
    return "\n".join(lines) + "\n"


def config_from_text(text: str) -> dict:
    """Parse a flat key=value config file into override kwargs."""
    # annotations are strings under deferred evaluation
    fields = {f: str(t) for f, t in AgentConfig.__annotations__.items()}
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in fields:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
        typ = fields[key]
        out[key] = (int(value) if typ == "int"
                    else float(value) if typ == "float" else value)
    return out


def save_checkpoint(path, config: AgentConfig, net, episode: int):
    payload = {
        "format": CHECKPOINT_FORMAT,
        "config": asdict(config),
        "arch": net.arch,
        "episode": episode,
        "params": net.flatten().tolist(),
    }
    Path(path).write_text(json.dumps(payload))


def load_checkpoint(path):
    """Returns (config, net, episode)."""
    payload = json.loads(Path(path).read_text())
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: not a {CHECKPOINT_FORMAT} file")
    config = AgentConfig(**payload["config"])
    net = build_network(payload["arch"], np.random.default_rng(0))
    params = np.asarray(payload["params"], dtype=np.float64)
    if params.shape != net.theta.shape:
        raise ValueError(f"{path}: parameter vector does not match architecture")
    net.theta[:] = params
    return config, net, int(payload["episode"])


def make_selector(policy_spec):
    """Selection callable from a (kind, parameter) policy spec.

    Specs: ("softmax", tau) and ("epsilon", eps).
    """
    kind, param = policy_spec
    if kind == "softmax":
        tau = float(param)
        return lambda values, rng: softmax_select(values, tau, rng)
    if kind == "epsilon":
        eps = float(param)
        return lambda values, rng: epsilon_greedy(values, eps, rng)
    raise ValueError(f"unknown policy spec {policy_spec!r}")


def _fmt(x) -> str:
    return repr(float(x))


def _run_one(config, env, net, select, spawn_rng, policy_rng, learn):
    runner = run_episode_td if config.algorithm == "td" else run_episode_sarsa
    # The episode drivers take a single rng; route stochastic
    # transitions through their own stream by wrapping the env.
    return runner(_SpawnWrapped(env, spawn_rng), net, select,
                  config.learner(), policy_rng, learn=learn,
                  max_steps=config.max_steps)


class _SpawnWrapped:
    """Presents an env whose stochastic transitions draw from a
    dedicated spawn stream, independent of policy sampling."""

    def __init__(self, env, spawn_rng):
        self._env = env
        self._rng = spawn_rng

    def reset(self, rng):
        return self._env.reset(self._rng)

    def candidates(self):
        return self._env.candidates()

    def advance(self, idx, rng):
        return self._env.advance(idx, self._rng)

    def step(self, action, rng):
        return self._env.step(action, self._rng)


def train(config: AgentConfig, out_dir) -> Path:
    """Run the episode loop and write logs/checkpoints to `out_dir`."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(config_to_text(config))
    init_rng, spawn_rng, policy_rng = split_streams(config.seed)
    net = build_network(build_arch(config), init_rng)
    env = build_env(config)
    schedule = config.schedule()
    save_checkpoint(out / "checkpoint-0.json", config, net, 0)
    scores = []
    window = []
    try:
        with open(out / "log.csv", "w", newline="") as log_f, \
             open(out / "aggregate.csv", "w", newline="") as agg_f:
            log = csv.writer(log_f)
            log.writerow(LOG_COLUMNS)
            agg = csv.writer(agg_f)
            agg.writerow(("first_episode", "last_episode", "mean_score"))
            for i in range(config.episodes):
                tau = schedule.tau(i)
                select = make_selector(("softmax", tau))
                rec = _run_one(config, env, net, select, spawn_rng,
                               policy_rng, learn=True)
                rec.episode, rec.tau = i, tau
                log.writerow((i, rec.score, rec.steps,
                              _fmt(rec.shaped_return), _fmt(rec.mean_value),
                              _fmt(tau), rec.exploratory_count))
                scores.append(rec.score)
                window.append(rec.score)
                if (i + 1) % config.log_every == 0:
                    agg.writerow((i + 1 - config.log_every, i,
                                  _fmt(np.mean(window))))
                    window = []
                if config.checkpoint_every and (i + 1) % config.checkpoint_every == 0:
                    save_checkpoint(out / f"checkpoint-{i + 1}.json",
                                    config, net, i + 1)
                if not np.all(np.isfinite(net.theta)):
                    raise TrainingDiverged(
                        f"non-finite parameters after episode {i}")
    except TrainingDiverged as exc:
        (out / "DIVERGED.txt").write_text(str(exc) + "\n")
        raise
    save_checkpoint(out / "checkpoint-final.json", config, net,
                    config.episodes)
    tail = scores[-min(len(scores), config.log_every):]
    if tail:
        stats = (f"episodes={config.episodes}\n"
                 f"final_window={len(tail)}\n"
                 f"mean_score={_fmt(np.mean(tail))}\n"
                 f"sd_score={_fmt(np.std(tail, ddof=1) if len(tail) > 1 else 0.0)}\n")
    else:
        stats = f"episodes=0\n"
    (out / "final_stats.txt").write_text(stats)
    return out


@dataclass
class EvalResult:
    mean: float
    sd: float
    scores: list
    exploratory_mean: float
    records: list


def final_tau(config: AgentConfig, episode: int) -> float:
    """Annealed temperature at the given episode counter."""
    return config.schedule().tau(episode)


def evaluate(checkpoint, n_episodes: int, policy_spec, seed: int) -> EvalResult:
    """Frozen-parameter rollouts of a checkpointed agent.

    `policy_spec` is ("softmax", tau), ("epsilon", eps) or
    ("final-tau", None) which resolves the annealed temperature at the
    checkpoint's episode counter.  No learning occurs.
    """
    config, net, episode = load_checkpoint(checkpoint)
    if policy_spec[0] == "final-tau":
        policy_spec = ("softmax", final_tau(config, episode))
    select = make_selector(policy_spec)
    env = build_env(config)
    _, spawn_rng, policy_rng = split_streams(seed)
    records = []
    for i in range(n_episodes):
        rec = _run_one(config, env, net, select, spawn_rng, policy_rng,
                       learn=False)
        rec.episode = i
        records.append(rec)
    scores = [r.score for r in records]
    return EvalResult(
        mean=float(np.mean(scores)) if scores else 0.0,
        sd=float(np.std(scores, ddof=1)) if len(scores) > 1 else 0.0,
        scores=scores,
        exploratory_mean=(float(np.mean([r.exploratory_count for r in records]))
                          if records else 0.0),
        records=records,
    )
