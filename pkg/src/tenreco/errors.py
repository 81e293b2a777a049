class InvalidArgument(ValueError):
    """Raised when inputs violate an operation's preconditions."""


class ResourceExhausted(RuntimeError):
    """Raised when a bounded search (retries, subset enumeration) runs out of budget."""
