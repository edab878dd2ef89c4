"""Simultaneous-move two-agent gridworld.

A rectangular grid with impassable obstacle cells and no terminal goal.
Both agents move at once; blocked moves are no-ops. States are immutable
values, so independent episodes can run concurrently without sharing
anything but the (frozen) map.
"""

from dataclasses import dataclass, replace
from enum import IntEnum

import numpy as np

from .errors import ConfigError, EpisodeFinishedError

# Cell codes used by the matrix observation.
CODE_FREE = 0
CODE_OBSTACLE = 1
CODE_AGENT = 2
CODE_OPPONENT = 3

GLYPHS = {CODE_FREE: ".", CODE_OBSTACLE: "#", CODE_AGENT: "A", CODE_OPPONENT: "O"}


class Action(IntEnum):
    LEFT = 0
    RIGHT = 1
    UP = 2
    DOWN = 3

    @property
    def displacement(self) -> tuple[int, int]:
        return _DISPLACEMENTS[self]


_DISPLACEMENTS = {
    Action.LEFT: (0, -1),
    Action.RIGHT: (0, 1),
    Action.UP: (-1, 0),
    Action.DOWN: (1, 0),
}


@dataclass(frozen=True)
class GridMap:
    """Static obstacle layout. Free cells must form one 4-connected region."""

    width: int = 4
    height: int = 4
    obstacles: frozenset[tuple[int, int]] = frozenset()

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ConfigError(f"grid must be at least 1x1, got {self.height}x{self.width}")
        object.__setattr__(self, "obstacles", frozenset(self.obstacles))
        for r, c in self.obstacles:
            if not (0 <= r < self.height and 0 <= c < self.width):
                raise ConfigError(f"obstacle {(r, c)} outside {self.height}x{self.width} grid")
        free = self.free_cells()
        if len(free) < 2:
            raise ConfigError("map needs at least 2 free cells")
        if not _connected(free):
            raise ConfigError("free cells do not form a single 4-connected region")

    def in_bounds(self, pos: tuple[int, int]) -> bool:
        return 0 <= pos[0] < self.height and 0 <= pos[1] < self.width

    def is_free(self, pos: tuple[int, int]) -> bool:
        return self.in_bounds(pos) and pos not in self.obstacles

    def free_cells(self) -> list[tuple[int, int]]:
        """All non-obstacle cells in row-major order."""
        return [
            (r, c)
            for r in range(self.height)
            for c in range(self.width)
            if (r, c) not in self.obstacles
        ]


def default_map() -> GridMap:
    """4x4 grid with a small obstacle cluster in the center."""
    return GridMap(4, 4, frozenset({(1, 1), (1, 2), (2, 2)}))


def _connected(free: list[tuple[int, int]]) -> bool:
    cells = set(free)
    stack = [free[0]]
    seen = {free[0]}
    while stack:
        r, c = stack.pop()
        for dr, dc in ((0, 1), (0, -1), (1, 0), (-1, 0)):
            nxt = (r + dr, c + dc)
            if nxt in cells and nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return len(seen) == len(cells)


@dataclass(frozen=True)
class GridState:
    """World snapshot: map, both positions, and the step counter."""

    map: GridMap
    agent_pos: tuple[int, int]
    opponent_pos: tuple[int, int]
    step_index: int = 0
    episode_length: int = 128

    def __post_init__(self):
        if not self.map.is_free(self.agent_pos):
            raise ConfigError(f"agent position {self.agent_pos} is not a free cell")
        if not self.map.is_free(self.opponent_pos):
            raise ConfigError(f"opponent position {self.opponent_pos} is not a free cell")
        if self.agent_pos == self.opponent_pos:
            raise ConfigError("agent and opponent cannot share a cell")
        if not 0 <= self.step_index <= self.episode_length:
            raise ConfigError(f"step_index {self.step_index} outside [0, {self.episode_length}]")

    @property
    def done(self) -> bool:
        return self.step_index >= self.episode_length


def reset(grid_map: GridMap, rng: np.random.Generator, episode_length: int = 128) -> GridState:
    """Place both agents uniformly without replacement on free cells."""
    free = grid_map.free_cells()
    idx = rng.choice(len(free), size=2, replace=False)
    return GridState(
        map=grid_map,
        agent_pos=free[idx[0]],
        opponent_pos=free[idx[1]],
        step_index=0,
        episode_length=episode_length,
    )


def apply_move(pos: tuple[int, int], action: Action, grid_map: GridMap) -> tuple[int, int]:
    """Unit move; out-of-bounds or obstacle destinations leave pos unchanged."""
    dr, dc = Action(action).displacement
    dest = (pos[0] + dr, pos[1] + dc)
    return dest if grid_map.is_free(dest) else pos


def step(state: GridState, agent_action: Action, opponent_action: Action) -> GridState:
    """Advance one simultaneous move.

    Both destinations are computed from the pre-step state. If they
    coincide the opponent yields; the agent additionally may not enter a
    cell the opponent ends up keeping (otherwise the two would merge).
    Position swaps are legal.
    """
    if state.done:
        raise EpisodeFinishedError(
            f"episode of length {state.episode_length} already finished"
        )
    agent_dest = apply_move(state.agent_pos, agent_action, state.map)
    opp_dest = apply_move(state.opponent_pos, opponent_action, state.map)
    if opp_dest == agent_dest:
        opp_dest = state.opponent_pos
    if agent_dest == opp_dest:
        agent_dest = state.agent_pos
    return replace(
        state,
        agent_pos=agent_dest,
        opponent_pos=opp_dest,
        step_index=state.step_index + 1,
    )


def encode(state: GridState) -> np.ndarray:
    """Matrix observation: 0 free, 1 obstacle, 2 agent, 3 opponent."""
    cells = np.zeros((state.map.height, state.map.width), dtype=np.uint8)
    for r, c in state.map.obstacles:
        cells[r, c] = CODE_OBSTACLE
    cells[state.agent_pos] = CODE_AGENT
    cells[state.opponent_pos] = CODE_OPPONENT
    return cells


def decode(cells: np.ndarray) -> tuple[GridMap, tuple[int, int], tuple[int, int]]:
    """Inverse of encode: recover (map, agent_pos, opponent_pos)."""
    cells = np.asarray(cells)
    height, width = cells.shape
    obstacles = frozenset((int(r), int(c)) for r, c in np.argwhere(cells == CODE_OBSTACLE))
    agent = np.argwhere(cells == CODE_AGENT)
    opponent = np.argwhere(cells == CODE_OPPONENT)
    if len(agent) != 1 or len(opponent) != 1:
        raise ConfigError("encoding must contain exactly one agent and one opponent cell")
    grid_map = GridMap(width, height, obstacles)
    return grid_map, tuple(int(v) for v in agent[0]), tuple(int(v) for v in opponent[0])


def render(state: GridState) -> str:
    """One text row per grid row: '.' free, '#' obstacle, 'A' agent, 'O' opponent."""
    cells = encode(state)
    return "\n".join("".join(GLYPHS[int(code)] for code in row) for row in cells)


def parse_map(text: str) -> GridMap:
    """Read a map from its text form: one row per line, '.' free and '#' obstacle."""
    rows = [line for line in text.splitlines() if line.strip()]
    if not rows:
        raise ConfigError("map text is empty")
    width = len(rows[0])
    obstacles = set()
    for r, row in enumerate(rows):
        if len(row) != width:
            raise ConfigError(f"map row {r} has length {len(row)}, expected {width}")
        for c, ch in enumerate(row):
            if ch == "#":
                obstacles.add((r, c))
            elif ch != ".":
                raise ConfigError(f"map row {r} has invalid character {ch!r}")
    return GridMap(width, len(rows), frozenset(obstacles))


def map_to_text(grid_map: GridMap) -> str:
    rows = []
    for r in range(grid_map.height):
        rows.append(
            "".join("#" if (r, c) in grid_map.obstacles else "." for c in range(grid_map.width))
        )
    return "\n".join(rows)
