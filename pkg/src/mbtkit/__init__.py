"""Model-based testing with extended finite-state machines."""

__version__ = "0.1.0"
