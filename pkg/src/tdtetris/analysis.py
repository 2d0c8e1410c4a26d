"""Post-hoc analysis: discounted returns, value-estimation accuracy,
linear fits, and the softmax vs epsilon-greedy comparison table.

All outputs are plot-ready CSV; plotting itself is out of scope.
"""
from __future__ import annotations

import csv
import hashlib
from pathlib import Path

import numpy as np

from .harness import evaluate, load_checkpoint


def discounted_returns(rewards, gamma: float) -> np.ndarray:
    """Per-step discounted returns R_t by backward recursion
    R_t = r_t + gamma * R_{t+1} (empty tail sum for the last step)."""
    rewards = np.asarray(rewards, dtype=np.float64)
    if rewards.size == 0:
        raise ValueError("empty reward sequence")
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must be in [0, 1]")
    out = np.empty_like(rewards)
    acc = 0.0
    for t in range(rewards.size - 1, -1, -1):
        acc = rewards[t] + gamma * acc
        out[t] = acc
    return out


def normalized_value_gap(values, returns) -> float:
    """(1/T) sum_t (V(s_t) - R_t)."""
    values = np.asarray(values, dtype=np.float64)
    returns = np.asarray(returns, dtype=np.float64)
    if values.shape != returns.shape:
        raise ValueError("value/return length mismatch")
    return float(np.mean(values - returns))


def mean_absolute_gap(values, returns) -> float:
    """(1/T) sum_t |V(s_t) - R_t|."""
    values = np.asarray(values, dtype=np.float64)
    returns = np.asarray(returns, dtype=np.float64)
    if values.shape != returns.shape:
        raise ValueError("value/return length mismatch")
    return float(np.mean(np.abs(values - returns)))


def linear_fit(x, y):
    """Ordinary least squares; returns (slope, intercept)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size < 2 or x.shape != y.shape:
        raise ValueError("need at least two (x, y) points")
    if np.ptp(x) == 0:
        raise ValueError("degenerate fit: all x values are equal")
    A = np.stack([x, np.ones_like(x)], axis=1)
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(slope), float(intercept)


def _policy_seed(seed: int, label: str) -> int:
    digest = hashlib.sha256(f"{seed}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def value_accuracy_report(checkpoint, n_episodes: int, seed: int,
                          policy_spec=("final-tau", None)):
    """Per-episode (T, gap, abs_gap) table plus the gap-vs-length
    linear fit, from frozen-parameter rollouts."""
    config, _, _ = load_checkpoint(checkpoint)
    result = evaluate(checkpoint, n_episodes, policy_spec, seed)
    rows = []
    for rec in result.records:
        returns = discounted_returns(rec.rewards, config.gamma)
        rows.append((rec.episode, rec.steps,
                     normalized_value_gap(rec.values, returns),
                     mean_absolute_gap(rec.values, returns)))
    lengths = [row[1] for row in rows]
    gaps = [row[2] for row in rows]
    slope, intercept = linear_fit(lengths, gaps)
    return rows, slope, intercept


def write_value_report(out_dir, checkpoint, n_episodes: int, seed: int,
                       policy_spec=("final-tau", None)) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows, slope, intercept = value_accuracy_report(
        checkpoint, n_episodes, seed, policy_spec)
    with open(out / "value_gap.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(("episode", "T", "gap", "abs_gap"))
        for episode, T, gap, abs_gap in rows:
            w.writerow((episode, T, repr(gap), repr(abs_gap)))
    (out / "fit.txt").write_text(
        f"slope={slope!r}\nintercept={intercept!r}\n")
    return out


def selection_comparison(checkpoint, policies, n_episodes: int, seed: int):
    """Mean score and mean exploratory actions per episode for each
    (label, policy_spec) pair.

    Each policy gets its own rng streams derived from (seed, label),
    so listing the same policy twice yields identical rows.
    """
    rows = []
    for label, spec in policies:
        result = evaluate(checkpoint, n_episodes, spec,
                          _policy_seed(seed, label))
        rows.append((label, result.mean, result.sd, result.exploratory_mean))
    return rows


def default_selection_policies(checkpoint):
    """The comparison set: softmax at the final annealed temperature
    and epsilon-greedy at 0, 0.001, 0.01 and 0.05."""
    policies = [("final-tau", ("final-tau", None))]
    for eps in (0.0, 0.001, 0.01, 0.05):
        policies.append((f"eps:{eps}", ("epsilon", eps)))
    return policies


def write_selection_report(out_dir, checkpoint, n_episodes: int, seed: int,
                           policies=None) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if policies is None:
        policies = default_selection_policies(checkpoint)
    rows = selection_comparison(checkpoint, policies, n_episodes, seed)
    with open(out / "selection.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(("policy", "mean_score", "sd", "exploratory_mean"))
        for label, mean, sd, expl in rows:
            w.writerow((label, repr(mean), repr(sd), repr(expl)))
    return out
