"""Board mechanics for stochastic SZ-Tetris (10x20) and 10x10 Tetris.

A placement action is a (rotation, column) pair.  The piece drops
straight down in its column span until it rests on the stack or the
floor, full rows are cleared immediately, and a placement whose cells
would rest above the top row terminates the episode.

Rotation tables are generated from base shapes by repeated 90-degree
rotation with deduplication, giving the standard rotation counts
(S/Z/I: 2, O: 1, J/L/T: 4) and the standard action counts on a width
10 board (S/Z/I: 17, O: 9, J/L/T: 34).

Base shapes ('#' = cell, row 0 on top):

    S: .##   Z: ##.   O: ##   I: ####   T: ###   J: #..   L: ..#
       ##.      .##      ##               .#.      ###      ###
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

SZ_VARIANT = "sz"
TETRIS10_VARIANT = "tetris10"

SZ_PIECES = ("S", "Z")
TETRIS10_PIECES = ("S", "Z", "O", "I", "J", "L", "T")

# Shaped-reward divisors: exp(-holes / divisor).
REWARD_DIVISOR = {SZ_VARIANT: 33.0, TETRIS10_VARIANT: 16.5}

BOARD_SHAPE = {SZ_VARIANT: (20, 10), TETRIS10_VARIANT: (10, 10)}

_BASE_SHAPES = {
    "S": (".##", "##."),
    "Z": ("##.", ".##"),
    "O": ("##", "##"),
    "I": ("####",),
    "T": ("###", ".#."),
    "J": ("#..", "###"),
    "L": ("..#", "###"),
}


@dataclass(frozen=True)
class Rotation:
    """One oriented piece shape: normalized cell offsets (row, col)."""

    cells: tuple
    height: int
    width: int
    # bottom[j]: the lowest cell row in piece column j.
    bottom: tuple


@dataclass(frozen=True)
class Placement:
    rotation: int
    column: int


def _rotate_cw(cells):
    h = max(r for r, _ in cells) + 1
    return _normalize([(c, h - 1 - r) for r, c in cells])


def _normalize(cells):
    rmin = min(r for r, _ in cells)
    cmin = min(c for _, c in cells)
    return tuple(sorted((r - rmin, c - cmin) for r, c in cells))


def _make_rotation(cells) -> Rotation:
    height = max(r for r, _ in cells) + 1
    width = max(c for _, c in cells) + 1
    bottom = tuple(
        max(r for r, c in cells if c == j) for j in range(width)
    )
    return Rotation(cells=cells, height=height, width=width, bottom=bottom)


def _rotations_for(kind: str):
    base = _BASE_SHAPES[kind]
    cells = _normalize(
        [(r, c) for r, row in enumerate(base) for c, ch in enumerate(row) if ch == "#"]
    )
    out = []
    seen = set()
    for _ in range(4):
        if cells not in seen:
            seen.add(cells)
            out.append(_make_rotation(cells))
        cells = _rotate_cw(cells)
    return tuple(out)


ROTATIONS = {kind: _rotations_for(kind) for kind in _BASE_SHAPES}


@lru_cache(maxsize=None)
def enumerate_actions(board_width: int, kind: str):
    """All (rotation, column) placements for `kind` on a board of the
    given width, ordered by rotation then column.  Independent of the
    board contents: an overflowing placement terminates the episode
    rather than being filtered out.
    """
    if board_width < 4:
        raise ValueError("board width must be at least 4")
    actions = []
    for i, rot in enumerate(ROTATIONS[kind]):
        for col in range(board_width - rot.width + 1):
            actions.append(Placement(rotation=i, column=col))
    return tuple(actions)


class Board:
    """Immutable bit-grid board; cells[r, c] True means occupied, row 0
    is the top row."""

    __slots__ = ("width", "height", "cells")

    def __init__(self, cells: np.ndarray):
        cells = np.ascontiguousarray(cells, dtype=bool)
        cells.flags.writeable = False
        self.cells = cells
        self.height, self.width = cells.shape

    @classmethod
    def empty(cls, height: int, width: int) -> "Board":
        return cls(np.zeros((height, width), dtype=bool))

    @classmethod
    def from_ascii(cls, text: str) -> "Board":
        rows = [line for line in text.strip().splitlines()]
        cells = np.array([[ch == "#" for ch in row] for row in rows], dtype=bool)
        return cls(cells)

    def to_ascii(self) -> str:
        return "\n".join(
            "".join("#" if v else "." for v in row) for row in self.cells
        )

    def __eq__(self, other):
        return (
            isinstance(other, Board)
            and self.cells.shape == other.cells.shape
            and bool(np.array_equal(self.cells, other.cells))
        )

    def __hash__(self):
        return hash((self.cells.shape, self.cells.tobytes()))

    def __repr__(self):
        return f"Board({self.height}x{self.width}, {int(self.cells.sum())} cells)"


def column_heights(board: Board) -> np.ndarray:
    """Height of each column: number of rows from the floor up to and
    including the topmost occupied cell (0 for an empty column)."""
    occ = board.cells.any(axis=0)
    first = board.cells.argmax(axis=0)
    return np.where(occ, board.height - first, 0)


def count_holes(board: Board) -> int:
    """Empty cells with at least one occupied cell above them in the
    same column."""
    cells = board.cells
    covered = np.zeros_like(cells)
    covered[1:] = np.cumsum(cells, axis=0)[:-1] > 0
    return int((covered & ~cells).sum())


def drop_cells(cells: np.ndarray, heights: np.ndarray, kind: str,
               placement: Placement):
    """Core drop on a raw cell grid; `heights` are the precomputed
    column heights of `cells`.  Returns (new_cells, rows_cleared,
    terminal)."""
    rot = ROTATIONS[kind][placement.rotation]
    c0 = placement.column
    board_height = cells.shape[0]
    # Board row index of the piece's top (row 0) after the drop.
    top = min(
        board_height - int(heights[c0 + j]) - 1 - rot.bottom[j]
        for j in range(rot.width)
    )
    terminal = top < 0
    new = cells.copy()
    for r, c in rot.cells:
        rr = top + r
        if rr >= 0:
            new[rr, c0 + c] = True
    if terminal:
        return new, 0, True
    full = new.all(axis=1)
    cleared = int(full.sum())
    if cleared:
        kept = new[~full]
        new = np.vstack([np.zeros((cleared, cells.shape[1]), dtype=bool), kept])
    return new, cleared, False


def afterstate(board: Board, kind: str, placement: Placement):
    """Drop `kind` with `placement` onto `board`.

    Returns (board', rows_cleared, terminal).  On overflow (any piece
    cell would rest above the top row) the returned board is the
    pre-clear overflow state with the in-bounds cells filled,
    rows_cleared is 0 and terminal is True.
    """
    cells, cleared, terminal = drop_cells(
        board.cells, column_heights(board), kind, placement
    )
    return Board(cells), cleared, terminal


def shaped_reward(board: Board, variant: str) -> float:
    """Training reward exp(-holes / divisor); divisor 33 for SZ-Tetris
    and 16.5 for 10x10 Tetris.  Distinct from the episode score."""
    return float(np.exp(-count_holes(board) / REWARD_DIVISOR[variant]))


def score_delta(rows_cleared: int) -> int:
    """+1 point per completed row."""
    if not 0 <= rows_cleared <= 4:
        raise ValueError("rows_cleared out of range")
    return rows_cleared


def piece_set(variant: str):
    return SZ_PIECES if variant == SZ_VARIANT else TETRIS10_PIECES


def spawn(rng: np.random.Generator, variant: str) -> str:
    """Draw the next piece kind uniformly, i.i.d. per step."""
    pieces = piece_set(variant)
    return pieces[int(rng.integers(len(pieces)))]
