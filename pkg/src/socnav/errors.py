"""Exception taxonomy shared across the package.

Each class maps to one failure family so callers (and the CLI exit-code
table) can route errors without string matching.
"""


class SocnavError(Exception):
    """Base class for all package-specific errors."""


class InputError(SocnavError, ValueError):
    """Malformed caller input: non-finite coordinates, empty candidate sets."""


class IdentityError(SocnavError, ValueError):
    """Agent id bookkeeping violated: duplicate or unknown ids between frames."""


class ConfigError(SocnavError, ValueError):
    """Bad configuration: unknown keys, missing activity preferences, infeasible spawns."""


class StateError(SocnavError, RuntimeError):
    """Operation applied to a state that cannot accept it (e.g. stepping a finished episode)."""


class TransportError(SocnavError, RuntimeError):
    """A reasoning-backend call failed before producing text.

    ``code`` is one of: "timeout", "connect", "status", "auth",
    "malformed_response", "prompt_too_large".
    """

    def __init__(self, code: str, message: str = ""):
        self.code = code
        super().__init__(message or code)


class ChainError(SocnavError, RuntimeError):
    """A reasoning chain could not be completed (retries exhausted mid-chain)."""


class ParseError(SocnavError, ValueError):
    """The final chain step produced no parseable action claim."""


class FixtureError(SocnavError, RuntimeError):
    """A replay fixture file is missing or lacks a recorded reply."""
