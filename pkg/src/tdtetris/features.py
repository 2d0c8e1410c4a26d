"""Hand-coded board features and their one-hot binary encoding.

Twenty scalar features per board: the 10 column heights, the 9 signed
height differences height[i+1] - height[i], and the hole count.  Each
feature is one-hot encoded into its own group and the groups are
concatenated in that order, giving fixed vector lengths of 460 for
the 10x20 SZ board and 260 for the 10x10 board.

Frozen bit layout (group order: 10 height groups, 9 diff groups, 1
hole group; within a group, index 0 is the smallest clamped value):

    sz:       heights 0..20  (10 x 21 = 210 bits)
              diffs   -12..12 (9 x 25 = 225 bits)
              holes   0..24   (25 bits)          -> 460 bits
    tetris10: heights 0..10  (10 x 11 = 110 bits)
              diffs   -7..7   (9 x 15 = 135 bits)
              holes   0..14   (15 bits)          -> 260 bits

Out-of-range diffs and hole counts clamp to the group edges; extreme
boards are legal states and must not crash the learner.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tetris import SZ_VARIANT, TETRIS10_VARIANT, Board, column_heights, count_holes

N_FEATURES = 20


@dataclass(frozen=True)
class FeatureSet:
    heights: tuple
    diffs: tuple
    holes: int


@dataclass(frozen=True)
class EncodingLayout:
    height_max: int
    diff_clamp: int
    hole_max: int

    @property
    def height_group(self) -> int:
        return self.height_max + 1

    @property
    def diff_group(self) -> int:
        return 2 * self.diff_clamp + 1

    @property
    def hole_group(self) -> int:
        return self.hole_max + 1

    @property
    def length(self) -> int:
        return 10 * self.height_group + 9 * self.diff_group + self.hole_group


LAYOUTS = {
    SZ_VARIANT: EncodingLayout(height_max=20, diff_clamp=12, hole_max=24),
    TETRIS10_VARIANT: EncodingLayout(height_max=10, diff_clamp=7, hole_max=14),
}

assert LAYOUTS[SZ_VARIANT].length == 460
assert LAYOUTS[TETRIS10_VARIANT].length == 260


def extract_features(board: Board) -> FeatureSet:
    heights = column_heights(board)
    diffs = heights[1:] - heights[:-1]
    return FeatureSet(
        heights=tuple(int(h) for h in heights),
        diffs=tuple(int(d) for d in diffs),
        holes=count_holes(board),
    )


def encode_indices(features: FeatureSet, variant: str) -> np.ndarray:
    """Positions of the 20 set bits in the encoded vector."""
    layout = LAYOUTS[variant]
    idx = np.empty(N_FEATURES, dtype=np.intp)
    offset = 0
    for i, h in enumerate(features.heights):
        h = min(max(h, 0), layout.height_max)
        idx[i] = offset + h
        offset += layout.height_group
    for i, d in enumerate(features.diffs):
        d = min(max(d, -layout.diff_clamp), layout.diff_clamp)
        idx[10 + i] = offset + d + layout.diff_clamp
        offset += layout.diff_group
    holes = min(max(features.holes, 0), layout.hole_max)
    idx[19] = offset + holes
    return idx


def encode_binary(features: FeatureSet, variant: str) -> np.ndarray:
    """Fixed-length binary state vector (float64, exactly 20 ones)."""
    layout = LAYOUTS[variant]
    vec = np.zeros(layout.length, dtype=np.float64)
    vec[encode_indices(features, variant)] = 1.0
    return vec


def encode_board(board: Board, variant: str) -> np.ndarray:
    return encode_binary(extract_features(board), variant)


def batch_features(cell_stack: np.ndarray):
    """Heights, diffs and hole counts for a stack of boards.

    `cell_stack` has shape (n, height, width); returns arrays of shape
    (n, width), (n, width - 1) and (n,).  Equivalent to mapping
    `extract_features` over the stack (verified by test).
    """
    n, height, _ = cell_stack.shape
    occ = cell_stack.any(axis=1)
    first = cell_stack.argmax(axis=1)
    heights = np.where(occ, height - first, 0)
    diffs = heights[:, 1:] - heights[:, :-1]
    covered = np.zeros_like(cell_stack)
    covered[:, 1:] = np.cumsum(cell_stack, axis=1)[:, :-1] > 0
    holes = (covered & ~cell_stack).sum(axis=(1, 2))
    return heights, diffs, holes


def encode_batch(heights: np.ndarray, diffs: np.ndarray, holes: np.ndarray,
                 variant: str) -> np.ndarray:
    """Binary state vectors for a batch of feature rows; row i equals
    `encode_binary` of the i-th feature set."""
    layout = LAYOUTS[variant]
    n = heights.shape[0]
    h_off = np.arange(10) * layout.height_group
    d_off = 10 * layout.height_group + np.arange(9) * layout.diff_group
    hole_off = layout.length - layout.hole_group
    idx = np.empty((n, N_FEATURES), dtype=np.intp)
    idx[:, :10] = h_off + np.clip(heights, 0, layout.height_max)
    idx[:, 10:19] = d_off + layout.diff_clamp + np.clip(
        diffs, -layout.diff_clamp, layout.diff_clamp)
    idx[:, 19] = hole_off + np.clip(holes, 0, layout.hole_max)
    vecs = np.zeros((n, layout.length))
    vecs[np.arange(n)[:, None], idx] = 1.0
    return vecs
