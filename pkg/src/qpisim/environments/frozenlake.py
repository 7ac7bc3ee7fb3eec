"""Deterministic FrozenLake grids as explicit MDPs.

Cells are addressed ``(x, y)`` with ``x`` the column and ``y`` the row, and the
flat state index is ``y * width + x``. Walkable cells move by the chosen
action; holes and the goal are absorbing with zero reward. Moving off the
grid from a walkable cell leaves the agent where it is.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..mdp import Mdp

__all__ = [
    "ACTIONS",
    "MapParseError",
    "FrozenLakeSpec",
    "parse_map",
    "load_map",
    "builtin_map",
    "generate_diagonal_map",
    "frozenlake_to_mdp",
    "reachable_from",
]

# (dx, dy) in the order used throughout: (0, 1), (0, -1), (1, 0), (-1, 0)
ACTIONS = ((0, 1), (0, -1), (1, 0), (-1, 0))

_BUILTIN = {
    "4x4": ("SFFF", "FHFH", "FFFH", "HFFG"),
    "8x8": (
        "SFFFFFFF",
        "FFFFFFFF",
        "FFFHFFFF",
        "FFFFFHFF",
        "FFFHFFFF",
        "FHHFFFHF",
        "FHFFHFHF",
        "FFFHFFFG",
    ),
}


class MapParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)
        self.line = line
        self.column = column


@dataclass(frozen=True)
class FrozenLakeSpec:
    width: int
    height: int
    walkable: frozenset
    goal: tuple
    start: tuple | None = None

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("grid dimensions must be positive")
        if not self.in_grid(self.goal):
            raise ValueError(f"goal {self.goal} lies outside the {self.width}x{self.height} grid")
        if self.goal in self.walkable:
            raise ValueError("the goal cell cannot be walkable")
        bad = [c for c in self.walkable if not self.in_grid(c)]
        if bad:
            raise ValueError(f"walkable cells outside the grid: {sorted(bad)}")

    @property
    def num_states(self) -> int:
        return self.width * self.height

    def in_grid(self, cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def index(self, cell) -> int:
        x, y = cell
        return y * self.width + x

    def cell(self, index: int) -> tuple:
        return index % self.width, index // self.width

    def to_text(self) -> str:
        rows = []
        for y in range(self.height):
            row = []
            for x in range(self.width):
                c = (x, y)
                if c == self.goal:
                    row.append("G")
                elif c == self.start:
                    row.append("S")
                elif c in self.walkable:
                    row.append("F")
                else:
                    row.append("H")
            rows.append("".join(row))
        return "\n".join(rows) + "\n"


def parse_map(text: str) -> FrozenLakeSpec:
    """Parse a grid over ``S F H G``; rows are separated by newlines or ``/``."""
    rows = [r.strip() for r in text.replace("/", "\n").splitlines()]
    rows = [r for r in rows if r]
    if not rows:
        raise MapParseError("empty map")
    width = len(rows[0])
    walkable, goals, starts = set(), [], []
    for y, row in enumerate(rows):
        if len(row) != width:
            raise MapParseError(f"row has {len(row)} cells, expected {width}", line=y + 1)
        for x, ch in enumerate(row):
            if ch not in "SFHG":
                raise MapParseError(f"unknown cell character {ch!r}", line=y + 1, column=x + 1)
            if ch in "SF":
                walkable.add((x, y))
            if ch == "S":
                starts.append((x, y))
            elif ch == "G":
                goals.append((x, y))
    if len(goals) != 1:
        line, col = (goals[1][1] + 1, goals[1][0] + 1) if len(goals) > 1 else (None, None)
        raise MapParseError(f"expected exactly one goal, found {len(goals)}", line=line, column=col)
    if len(starts) > 1:
        raise MapParseError("at most one start cell is allowed", line=starts[1][1] + 1, column=starts[1][0] + 1)
    return FrozenLakeSpec(width, len(rows), frozenset(walkable), goals[0], starts[0] if starts else None)


def load_map(path) -> FrozenLakeSpec:
    return parse_map(Path(path).read_text(encoding="utf-8"))


def builtin_map(name: str) -> FrozenLakeSpec:
    """``"4x4"`` and ``"8x8"`` are the usual Gym maps; ``"diagonal<n>"`` is
    :func:`generate_diagonal_map`."""
    if name in _BUILTIN:
        return parse_map("\n".join(_BUILTIN[name]))
    if name.startswith("diagonal"):
        return generate_diagonal_map(int(name[len("diagonal"):]))
    raise KeyError(f"unknown built-in map {name!r}")


def generate_diagonal_map(n: int) -> FrozenLakeSpec:
    """``n x n`` grid with a hole border and holes on the main diagonal.

    The goal takes the last interior diagonal cell ``(n-2, n-2)``; the start
    is the interior cell ``(1, 2)`` below the first hole.
    """
    if n < 4:
        raise ValueError(f"diagonal map needs n >= 4 to contain a walkable path, got {n}")
    goal = (n - 2, n - 2)
    walkable = frozenset(
        (x, y)
        for x in range(1, n - 1)
        for y in range(1, n - 1)
        if x != y
    )
    return FrozenLakeSpec(n, n, walkable, goal, start=(1, 2))


def reachable_from(spec: FrozenLakeSpec, start) -> set:
    """Cells reachable from ``start`` by walking (holes and goal end the walk)."""
    seen = {start}
    queue = deque([start])
    while queue:
        cell = queue.popleft()
        if cell not in spec.walkable:
            continue
        for dx, dy in ACTIONS:
            nxt = (cell[0] + dx, cell[1] + dy)
            if spec.in_grid(nxt) and nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return seen


def frozenlake_to_mdp(spec: FrozenLakeSpec, discount: float) -> Mdp:
    S, A = spec.num_states, len(ACTIONS)
    P = np.zeros((S, A, S))
    R = np.zeros((S, A))
    for s in range(S):
        cell = spec.cell(s)
        if cell not in spec.walkable:
            P[s, :, s] = 1.0
            continue
        for a, (dx, dy) in enumerate(ACTIONS):
            nxt = (cell[0] + dx, cell[1] + dy)
            if not spec.in_grid(nxt):
                nxt = cell
            P[s, a, spec.index(nxt)] = 1.0
            if nxt == spec.goal:
                R[s, a] = 1.0
    return Mdp(P, R, discount)
