"""Shared helpers for the acceptance suite.

The learning-curve and ordering checks need real 20,000-episode
training runs, which take tens of minutes each on one core.  Training
is byte-deterministic in (config, seed), so finished runs are cached
under tests/.cache and reused across pytest invocations; the cache can
be pre-warmed by running this module directly:

    python -m _acceptance_support      # from the tests directory
"""
from __future__ import annotations

from dataclasses import replace
from pathlib import Path

from tdtetris.harness import PRESETS, config_to_text, train

CACHE_DIR = Path(__file__).resolve().parent / ".cache"

TRAIN_EPISODES = 20_000
CURVE_SEEDS = (101, 102, 103)


def accept_config(hidden_kind: str, seed: int):
    """SZ shallow-net training config used by the acceptance checks."""
    return replace(
        PRESETS["sz-shallow"],
        hidden_kind=hidden_kind,
        seed=seed,
        episodes=TRAIN_EPISODES,
        checkpoint_every=TRAIN_EPISODES,
    )


def trained_run(hidden_kind: str, seed: int) -> Path:
    """Directory of a finished cached run, training it if absent."""
    config = accept_config(hidden_kind, seed)
    out = CACHE_DIR / f"sz-shallow-{hidden_kind}-seed{seed}"
    done = out / "final_stats.txt"
    manifest = out / "config.txt"
    if done.exists() and manifest.exists() \
            and manifest.read_text() == config_to_text(config):
        return out
    return train(config, out)


def warm_cache():
    for kind in ("dsilu", "relu"):
        for seed in CURVE_SEEDS:
            print(f"training {kind} seed {seed} ...", flush=True)
            trained_run(kind, seed)
            print(f"done {kind} seed {seed}", flush=True)


if __name__ == "__main__":
    warm_cache()
