"""Reactive opponent taxonomy.

Nine classes built from the four agent actions: four deterministic
response maps (rotations/reflection/identity of the action set), their
four stochastic softenings, and one uniformly random agent. Class ids
are normative and appear in configs, metric CSVs, and checkpoint
metadata.
"""

from dataclasses import dataclass
from enum import Enum, IntEnum

import numpy as np

from .errors import ConfigError
from .grid import Action

N_ACTIONS = 4


class ResponseKind(Enum):
    DIAGONAL = "diagonal"                    # 90 degrees anti-clockwise
    OPPOSITE = "opposite"                    # 180 degrees
    OPPOSITE_DIAGONAL = "opposite_diagonal"  # 90 degrees clockwise
    FOLLOWER = "follower"                    # identity


class OpponentClass(IntEnum):
    """The 2n+1 = 9 opponent classes, value = class id."""

    DET_DIAGONAL = 0
    DET_OPPOSITE = 1
    DET_OPPOSITE_DIAGONAL = 2
    DET_FOLLOWER = 3
    STOCH_DIAGONAL = 4
    STOCH_OPPOSITE = 5
    STOCH_OPPOSITE_DIAGONAL = 6
    STOCH_FOLLOWER = 7
    RANDOM = 8

    @property
    def is_random(self) -> bool:
        return self is OpponentClass.RANDOM

    @property
    def is_deterministic(self) -> bool:
        return self.value < N_ACTIONS

    @property
    def is_stochastic(self) -> bool:
        return not self.is_deterministic

    @property
    def response_kind(self) -> ResponseKind | None:
        """Base response map, None for the random class."""
        if self.is_random:
            return None
        return _KIND_ORDER[self.value % N_ACTIONS]


_KIND_ORDER = (
    ResponseKind.DIAGONAL,
    ResponseKind.OPPOSITE,
    ResponseKind.OPPOSITE_DIAGONAL,
    ResponseKind.FOLLOWER,
)

# Response maps are anchored by the LEFT row and extended by applying the
# same rotation to every displacement vector.
_RESPONSE = {
    ResponseKind.DIAGONAL: {
        Action.LEFT: Action.DOWN,
        Action.DOWN: Action.RIGHT,
        Action.RIGHT: Action.UP,
        Action.UP: Action.LEFT,
    },
    ResponseKind.OPPOSITE: {
        Action.LEFT: Action.RIGHT,
        Action.RIGHT: Action.LEFT,
        Action.UP: Action.DOWN,
        Action.DOWN: Action.UP,
    },
    ResponseKind.OPPOSITE_DIAGONAL: {
        Action.LEFT: Action.UP,
        Action.UP: Action.RIGHT,
        Action.RIGHT: Action.DOWN,
        Action.DOWN: Action.LEFT,
    },
    ResponseKind.FOLLOWER: {a: a for a in Action},
}


def deterministic_response(kind: ResponseKind, agent_action: Action) -> Action:
    """The base response map applied to the agent's current action."""
    return _RESPONSE[kind][Action(agent_action)]


@dataclass(frozen=True)
class OpponentPolicy:
    """One opponent class plus the weight its stochastic variant puts on
    the deterministic direction."""

    opponent_class: OpponentClass
    primary_weight: float = 0.7

    def __post_init__(self):
        if not 1.0 / N_ACTIONS < self.primary_weight <= 1.0:
            raise ConfigError(
                f"primary_weight must be in (1/{N_ACTIONS}, 1], got {self.primary_weight}"
            )


def action_distribution(policy: OpponentPolicy, agent_action: Action) -> np.ndarray:
    """4-way categorical over the opponent's response to this tick's agent action."""
    cls = policy.opponent_class
    if cls.is_random:
        return np.full(N_ACTIONS, 1.0 / N_ACTIONS)
    response = deterministic_response(cls.response_kind, agent_action)
    if cls.is_deterministic:
        probs = np.zeros(N_ACTIONS)
        probs[response] = 1.0
    else:
        probs = np.full(N_ACTIONS, (1.0 - policy.primary_weight) / (N_ACTIONS - 1))
        probs[response] = policy.primary_weight
    return probs


def sample_response(
    policy: OpponentPolicy, agent_action: Action, rng: np.random.Generator
) -> Action:
    probs = action_distribution(policy, agent_action)
    return Action(int(rng.choice(N_ACTIONS, p=probs)))


def enumerate_classes(n_actions: int = N_ACTIONS) -> list[OpponentClass]:
    """All 2n+1 classes in class-id order.

    Only n_actions = 4 is instantiated here; the construction (n
    deterministic permutation maps, n softened copies, 1 random agent)
    generalizes but other action counts are an extension point.
    """
    if n_actions != N_ACTIONS:
        raise ConfigError(f"only {N_ACTIONS}-action grids are supported, got {n_actions}")
    return list(OpponentClass)
