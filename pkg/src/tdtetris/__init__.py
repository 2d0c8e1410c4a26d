"""TD(lambda)/Sarsa(lambda) learning with SiLU/dSiLU network function
approximators on stochastic SZ-Tetris and 10x10 Tetris."""

__version__ = "0.1.0"

from .activations import ActivationKind, activate, activate_derivative
from .algorithms import (
    LearnerConfig,
    EpisodeRecord,
    run_episode_sarsa,
    run_episode_td,
    td_error_q,
    td_error_v,
    update_traces,
    apply_td_update,
)
from .harness import AgentConfig, PRESETS, evaluate, train
from .networks import ConvNet, LinearNet, ShallowNet, build_network
from .policy import SoftmaxSchedule, epsilon_greedy, softmax_probs
from .tetris import Board, Placement, afterstate, count_holes, enumerate_actions

__all__ = [
    "ActivationKind", "activate", "activate_derivative",
    "LearnerConfig", "EpisodeRecord", "run_episode_sarsa", "run_episode_td",
    "td_error_q", "td_error_v", "update_traces", "apply_td_update",
    "AgentConfig", "PRESETS", "evaluate", "train",
    "ConvNet", "LinearNet", "ShallowNet", "build_network",
    "SoftmaxSchedule", "epsilon_greedy", "softmax_probs",
    "Board", "Placement", "afterstate", "count_holes", "enumerate_actions",
]
