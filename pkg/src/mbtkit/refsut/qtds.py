"""Test-data service: dummy user records read from a JSON store."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

from ..errors import NoMatchingUser, StoreParseError

MATURITIES = ("new", "intermediate", "advanced")
_FIELDS = ("email", "password", "name", "title", "country", "maturity")


@dataclass(frozen=True)
class User:
    email: str
    password: str
    name: str
    title: str
    country: str
    maturity: str

    def to_json(self) -> dict:
        return asdict(self)


def parse_store(text: str) -> tuple[User, ...]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise StoreParseError(f"store is not valid JSON: {exc}") from exc
    if not isinstance(data, list):
        raise StoreParseError("store must be a JSON array of users")
    users = []
    for i, item in enumerate(data):
        if not isinstance(item, dict) or set(item) != set(_FIELDS):
            raise StoreParseError(f"user #{i} must have exactly the fields {', '.join(_FIELDS)}")
        if not all(isinstance(item[f], str) for f in _FIELDS):
            raise StoreParseError(f"user #{i}: all fields must be strings")
        if item["maturity"] not in MATURITIES:
            raise StoreParseError(f"user #{i}: unknown maturity {item['maturity']!r}")
        users.append(User(**item))
    emails = [u.email for u in users]
    if len(set(emails)) != len(emails):
        raise StoreParseError("duplicate e-mail address in store")
    return tuple(users)


def load_store(path: str | Path) -> tuple[User, ...]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise StoreParseError(f"cannot read store {path}: {exc}") from exc
    return parse_store(text)


def get_user(users: tuple[User, ...], maturity: str | None = None, cursor: int = 0) -> User:
    """The ``cursor``-th matching user, wrapping around (round robin)."""
    matches = [u for u in users if maturity is None or u.maturity == maturity]
    if not matches:
        raise NoMatchingUser(f"no user with maturity {maturity!r}")
    return matches[cursor % len(matches)]


def qtds_get_user(store_path: str | Path, maturity: str | None = None, cursor: int = 0) -> User:
    return get_user(load_store(store_path), maturity, cursor)
