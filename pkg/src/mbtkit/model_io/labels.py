"""Label syntax shared by both model front ends."""

import re

STATE_LABEL_RE = re.compile(r"v_[A-Za-z0-9_]+")
TRANSITION_LABEL_RE = re.compile(r"e_[A-Za-z0-9_]+")


def check_state_label(text: str) -> str:
    if not STATE_LABEL_RE.fullmatch(text):
        raise ValueError(f"state label must look like v_Name, got {text!r}")
    return text


def check_transition_label(text: str) -> str:
    if not TRANSITION_LABEL_RE.fullmatch(text):
        raise ValueError(f"transition label must look like e_Name, got {text!r}")
    return text
