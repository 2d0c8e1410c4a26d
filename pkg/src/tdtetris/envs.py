"""Adapters that expose the Tetris boards through the learner
protocols from `algorithms`.

The afterstate adapter feeds model-based TD(lambda): each step it
enumerates every placement of the current piece, materializes the
afterstates and returns their encodings, shaped rewards, terminal
flags and score deltas.  The Sarsa adapter exposes the same games as a
plain action-value environment whose observation is the binary feature
vector of the board concatenated with a one-hot of the current piece.

Two encoders are available for the afterstate adapter: "features"
(the 460/260-bit one-hot feature vector, for shallow nets) and
"board" (the raw occupancy grid as image channels, for conv nets).
The raw encoder can optionally append constant one-hot channels
identifying the piece that was just placed ("board+piece").
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from . import tetris
from .features import LAYOUTS, batch_features, encode_batch, encode_indices, extract_features
from .tetris import (
    ROTATIONS,
    Board,
    Placement,
    enumerate_actions,
    piece_set,
    spawn,
)

FEATURE_ENCODER = "features"


@lru_cache(maxsize=None)
def _drop_tables(board_width: int, kind: str):
    """Per-action landing and fill tables for vectorized drops.

    For each placement of `kind` (in `enumerate_actions` order):
    column/bottom matrices padded so that a row-wise max over
    heights[col] + bottom gives the resting support, and the four
    (relative row, absolute column) cell positions.
    """
    actions = enumerate_actions(board_width, kind)
    rots = ROTATIONS[kind]
    n = len(actions)
    maxw = max(r.width for r in rots)
    colm = np.zeros((n, maxw), dtype=np.intp)
    botm = np.full((n, maxw), -(10 ** 6), dtype=np.intp)
    cell_rows = np.empty((n, 4), dtype=np.intp)
    cell_cols = np.empty((n, 4), dtype=np.intp)
    for i, act in enumerate(actions):
        rot = rots[act.rotation]
        for j in range(rot.width):
            colm[i, j] = act.column + j
            botm[i, j] = rot.bottom[j]
        for k, (r, c) in enumerate(rot.cells):
            cell_rows[i, k] = r
            cell_cols[i, k] = act.column + c
    return colm, botm, cell_rows, cell_cols


def _drop_all(cells: np.ndarray, kind: str):
    """All afterstates of dropping `kind` on `cells`, one per placement.

    Returns (stack, cleared, terminal) arrays; row i matches
    `tetris.drop_cells` for the i-th entry of `enumerate_actions`.
    """
    height, width = cells.shape
    colm, botm, cell_rows, cell_cols = _drop_tables(width, kind)
    occ = cells.any(axis=0)
    heights = np.where(occ, height - cells.argmax(axis=0), 0)
    top = height - 1 - (heights[colm] + botm).max(axis=1)
    terminal = top < 0
    n = top.size
    stack = np.broadcast_to(cells, (n, height, width)).copy()
    rr = top[:, None] + cell_rows
    valid = rr >= 0
    ai = np.broadcast_to(np.arange(n)[:, None], rr.shape)
    stack[ai[valid], rr[valid], cell_cols[valid]] = True
    cleared = np.zeros(n, dtype=np.intp)
    full = stack.all(axis=2)
    for i in np.nonzero(full.any(axis=1) & ~terminal)[0]:
        f = full[i]
        k = int(f.sum())
        stack[i] = np.vstack(
            [np.zeros((k, width), dtype=bool), stack[i][~f]]
        )
        cleared[i] = k
    return stack, cleared, terminal
BOARD_ENCODER = "board"
BOARD_PIECE_ENCODER = "board+piece"


def max_actions(variant: str) -> int:
    """Output width of a Q-network for this variant."""
    return max(
        len(enumerate_actions(tetris.BOARD_SHAPE[variant][1], kind))
        for kind in piece_set(variant)
    )


def sarsa_obs_dim(variant: str) -> int:
    return LAYOUTS[variant].length + len(piece_set(variant))


def board_channels(variant: str, encoder: str) -> int:
    return 1 + (len(piece_set(variant)) if encoder == BOARD_PIECE_ENCODER else 0)


class TetrisAfterstateEnv:
    """Afterstate interface for TD(lambda) on either Tetris variant."""

    def __init__(self, variant: str, encoder: str = FEATURE_ENCODER):
        if encoder not in (FEATURE_ENCODER, BOARD_ENCODER, BOARD_PIECE_ENCODER):
            raise ValueError(f"unknown encoder {encoder!r}")
        self.variant = variant
        self.encoder = encoder
        self.height, self.width = tetris.BOARD_SHAPE[variant]
        self.pieces = piece_set(variant)
        self.layout = LAYOUTS[variant]
        self.cells = np.zeros((self.height, self.width), dtype=bool)
        self.piece = self.pieces[0]

    @property
    def board(self) -> Board:
        return Board(self.cells.copy())

    def reset(self, rng):
        self.cells = np.zeros((self.height, self.width), dtype=bool)
        self.piece = spawn(rng, self.variant)

    def candidates(self):
        stack, cleared, terminals = _drop_all(self.cells, self.piece)
        n = stack.shape[0]
        sdeltas = cleared  # +1 point per cleared row
        h, d, holes = batch_features(stack)
        rewards = np.exp(-holes / tetris.REWARD_DIVISOR[self.variant])
        if self.encoder == FEATURE_ENCODER:
            feats = encode_batch(h, d, holes, self.variant)
        else:
            planes = stack[:, None].astype(np.float64)
            if self.encoder == BOARD_PIECE_ENCODER:
                extra = np.zeros((n, len(self.pieces), self.height, self.width))
                extra[:, self.pieces.index(self.piece)] = 1.0
                planes = np.concatenate([planes, extra], axis=1)
            feats = planes
        self._afterstack = stack
        return feats, rewards, terminals, sdeltas

    def advance(self, idx: int, rng):
        self.cells = self._afterstack[idx]
        self.piece = spawn(rng, self.variant)


class TetrisSarsaEnv:
    """Action-value interface: observation is the binary board feature
    vector plus a one-hot of the current piece; the available actions
    are indices into the current piece's placement table."""

    def __init__(self, variant: str):
        self.variant = variant
        self.height, self.width = tetris.BOARD_SHAPE[variant]
        self.pieces = piece_set(variant)
        self.layout = LAYOUTS[variant]
        self.n_actions = max_actions(variant)
        self.obs_dim = sarsa_obs_dim(variant)
        self.board = Board.empty(self.height, self.width)
        self.piece = self.pieces[0]

    def _obs(self) -> np.ndarray:
        vec = np.zeros(self.obs_dim)
        vec[encode_indices(extract_features(self.board), self.variant)] = 1.0
        vec[self.layout.length + self.pieces.index(self.piece)] = 1.0
        return vec

    def _avail(self):
        return list(range(len(enumerate_actions(self.width, self.piece))))

    def reset(self, rng):
        self.board = Board.empty(self.height, self.width)
        self.piece = spawn(rng, self.variant)
        return self._obs(), self._avail()

    def step(self, action: int, rng):
        placement: Placement = enumerate_actions(self.width, self.piece)[action]
        b, cleared, term = tetris.afterstate(self.board, self.piece, placement)
        reward = tetris.shaped_reward(b, self.variant)
        sdelta = tetris.score_delta(cleared)
        if term:
            return reward, None, None, True, sdelta
        self.board = b
        self.piece = spawn(rng, self.variant)
        return reward, self._obs(), self._avail(), False, sdelta
