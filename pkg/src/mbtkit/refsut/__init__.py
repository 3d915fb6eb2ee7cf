"""In-process reference quiz-game SUT with switchable seeded faults."""

from .app import (
    ERROR,
    FAULT_FIELDS,
    FAULTS,
    OK,
    AppState,
    Response,
    handle,
    initial_state,
    render,
)
from .qtds import MATURITIES, User, get_user, load_store, parse_store, qtds_get_user

__all__ = [
    "AppState", "ERROR", "FAULTS", "FAULT_FIELDS", "MATURITIES", "OK", "Response", "User",
    "get_user", "handle", "initial_state", "load_store", "parse_store", "qtds_get_user", "render",
]
