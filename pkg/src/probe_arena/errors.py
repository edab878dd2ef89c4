"""Exception types shared across the package."""


class ProbeArenaError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(ProbeArenaError):
    """Invalid map, run configuration, or constructor argument."""


class EpisodeFinishedError(ProbeArenaError):
    """A step was attempted on an episode that already ran its full length."""


class TrainingError(ProbeArenaError):
    """Non-finite loss or gradient encountered during an update."""


class EvidenceError(ProbeArenaError):
    """An observed transition has zero likelihood under every candidate class."""
