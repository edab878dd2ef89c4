"""Episode collection: one probing agent vs one reactive opponent.

The opponent reacts to the agent's current-tick action choice, then both
moves are applied simultaneously. Episodes are independent given their
own generator, so collection can fan out across threads (capped by the
PROBE_ARENA_THREADS environment variable) with results always assembled
in episode order.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .grid import Action, GridMap, encode, reset, step
from .opponents import N_ACTIONS, OpponentClass, OpponentPolicy, sample_response


class AgentPolicy(Protocol):
    def act(
        self, codes: np.ndarray, rng: np.random.Generator
    ) -> tuple[Action, float, float]:
        """Sample (action, log_prob, value_estimate) for one observation."""
        ...


class UniformRandomPolicy:
    """Baseline probe: uniform over the 4 actions, zero value estimate."""

    def act(self, codes, rng):
        action = Action(int(rng.integers(N_ACTIONS)))
        return action, -math.log(N_ACTIONS), 0.0


@dataclass
class Episode:
    """One rollout: encodings of s_0..s_T plus per-step agent data."""

    grid_map: GridMap
    opponent_class: OpponentClass
    codes: np.ndarray            # (T+1, H, W) uint8
    agent_positions: np.ndarray  # (T+1, 2) int
    opponent_positions: np.ndarray
    actions: np.ndarray          # (T,) agent actions
    log_probs: np.ndarray        # (T,) at collection time
    values: np.ndarray           # (T,) value estimates at collection time

    @property
    def length(self) -> int:
        return len(self.actions)


def run_episode(
    grid_map: GridMap,
    policy: AgentPolicy,
    opponent: OpponentPolicy,
    rng: np.random.Generator,
    episode_length: int,
) -> Episode:
    state = reset(grid_map, rng, episode_length)
    steps = episode_length
    codes = np.empty((steps + 1, grid_map.height, grid_map.width), dtype=np.uint8)
    agent_pos = np.empty((steps + 1, 2), dtype=np.int64)
    opp_pos = np.empty((steps + 1, 2), dtype=np.int64)
    actions = np.empty(steps, dtype=np.int64)
    log_probs = np.empty(steps)
    values = np.empty(steps)
    codes[0] = encode(state)
    agent_pos[0] = state.agent_pos
    opp_pos[0] = state.opponent_pos
    for t in range(steps):
        action, log_prob, value = policy.act(codes[t], rng)
        response = sample_response(opponent, action, rng)
        state = step(state, action, response)
        codes[t + 1] = encode(state)
        agent_pos[t + 1] = state.agent_pos
        opp_pos[t + 1] = state.opponent_pos
        actions[t] = action
        log_probs[t] = log_prob
        values[t] = value
    return Episode(
        grid_map=grid_map,
        opponent_class=opponent.opponent_class,
        codes=codes,
        agent_positions=agent_pos,
        opponent_positions=opp_pos,
        actions=actions,
        log_probs=log_probs,
        values=values,
    )


def rollout_threads() -> int:
    """Parallelism cap from PROBE_ARENA_THREADS (default 1 = serial)."""
    raw = os.environ.get("PROBE_ARENA_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def collect_episodes(
    grid_map: GridMap,
    policy: AgentPolicy,
    opponents: list[OpponentPolicy],
    seeds: list[np.random.SeedSequence],
    episode_length: int,
) -> list[Episode]:
    """Run one episode per (opponent, seed) pair, in deterministic order.

    The policy and opponents are only read, so episodes are independent;
    results come back indexed by position regardless of scheduling.
    """
    if len(opponents) != len(seeds):
        raise ValueError("need exactly one seed per episode")

    def run(i: int) -> Episode:
        return run_episode(
            grid_map, policy, opponents[i], np.random.default_rng(seeds[i]), episode_length
        )

    n = len(opponents)
    workers = min(rollout_threads(), n) if n else 1
    if workers <= 1:
        return [run(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, range(n)))
