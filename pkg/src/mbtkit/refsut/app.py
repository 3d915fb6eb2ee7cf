"""A deterministic in-process quiz game used as the reference system under test.

:func:`handle` is a pure transition function ``(state, command) -> (state, response)``.
Conformant behaviour follows six navigation and data rules:

1. new users see introductory information in Messages and History until they
   finish their first game;
2. logging out (from Settings) clears the session data;
3. a name change shows up everywhere the name is displayed;
4. every finished game is added to History;
5. chat messages are kept per opponent, whichever scene the chat was opened from;
6. Settings opens on the profile tab when entered from Profile, on the settings
   tab from anywhere else, and re-entering Settings from Settings is ignored.

Each seeded fault breaks one of these behaviours and only ever changes the
response fields listed in :data:`FAULT_FIELDS`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .qtds import User

WELCOME = "Welcome"
EMAIL_LOGIN = "EmailLogin"
EMAIL_SIGNUP = "EmailSignup"
HOME = "Home"
TOPICS = "Topics"
HISTORY = "History"
MESSAGES = "Messages"
SETTINGS = "Settings"
PROFILE = "Profile"
GAME_PLAY = "GamePlay"
GAME_STATS = "GameStats"

TITLES = {
    WELCOME: "Welcome",
    EMAIL_LOGIN: "Email Log-in",
    EMAIL_SIGNUP: "Email Sign-up",
    HOME: "Home",
    TOPICS: "Topics",
    HISTORY: "History",
    MESSAGES: "Messages",
    SETTINGS: "Settings",
    PROFILE: "Profile",
    GAME_PLAY: "Game",
    GAME_STATS: "Game Stats",
}
SCENES = tuple(TITLES)
ACCESS_SCENES = frozenset({WELCOME, EMAIL_LOGIN, EMAIL_SIGNUP})
SIDEBAR_SCENES = (HOME, TOPICS, HISTORY, MESSAGES, SETTINGS, PROFILE)

EMAIL_KINDS = ("VALID", "NONEXISTENT", "MALFORMED")
PASSWORD_KINDS = ("VALID", "INVALID")
OUTCOMES = ("correct", "incorrect")
OPPONENT = "Bot"
SETTINGS_TAB = "settings"
PROFILE_TAB = "profile"

UNKNOWN_EMAIL = "nobody@quiz.test"
MALFORMED_EMAIL = "not-an-email"

FAULT_NAME_NOT_PROPAGATED = "FAULT_NAME_NOT_PROPAGATED"
FAULT_WRONG_SETTINGS_TAB = "FAULT_WRONG_SETTINGS_TAB"
FAULT_STALE_HISTORY = "FAULT_STALE_HISTORY"
FAULT_WRONG_HEADER = "FAULT_WRONG_HEADER"
FAULT_NO_LOGOUT_CLEANUP = "FAULT_NO_LOGOUT_CLEANUP"
FAULT_WRONG_LOGIN_ERROR = "FAULT_WRONG_LOGIN_ERROR"

# response fields each fault may perturb
FAULT_FIELDS = {
    FAULT_NAME_NOT_PROPAGATED: frozenset({"displayName"}),
    FAULT_WRONG_SETTINGS_TAB: frozenset({"tab"}),
    FAULT_STALE_HISTORY: frozenset({"historyCount"}),
    FAULT_WRONG_HEADER: frozenset({"header"}),
    FAULT_NO_LOGOUT_CLEANUP: frozenset({"messageCount", "chatLength", "sessionData"}),
    FAULT_WRONG_LOGIN_ERROR: frozenset({"errorKind"}),
}
FAULTS = tuple(FAULT_FIELDS)

OK = "OK"
ERROR = "Error"


@dataclass(frozen=True)
class Response:
    status: str
    fields: dict = field(default_factory=dict)
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.status == OK

    def to_json(self) -> dict:
        data = {"status": self.status, "fields": dict(self.fields)}
        if self.error is not None:
            data["error"] = self.error
        return data


@dataclass(frozen=True)
class AppState:
    accounts: tuple[User, ...]
    test_user: str
    scene: str = WELCOME
    settings_tab: str = SETTINGS_TAB
    sidebar_open: bool = False
    user: User | None = None
    scene_history: tuple[str, ...] = ()
    game_records: tuple[tuple[str, str], ...] = ()
    message_log: tuple[tuple[str, tuple[str, ...]], ...] = ()
    pending_intro: bool = False
    chat_partner: str | None = None
    game: tuple[str, str, str] | None = None
    email_kind: str = ""
    password_kind: str = ""
    last_error: str = ""
    name_at_login: str = ""
    signups: int = 0

    def messages(self, opponent: str) -> tuple[str, ...]:
        return dict(self.message_log).get(opponent, ())

    def message_count(self) -> int:
        return sum(len(msgs) for _, msgs in self.message_log)

    def account(self, email: str) -> User | None:
        for u in self.accounts:
            if u.email == email:
                return u
        return None


def initial_state(users: tuple[User, ...], test_user: User, scene: str = WELCOME) -> AppState:
    if scene not in ACCESS_SCENES:
        raise ValueError(f"a session must start in an access scene, not {scene!r}")
    if test_user not in users:
        users = tuple(users) + (test_user,)
    return AppState(accounts=tuple(users), test_user=test_user.email, scene=scene)


class _Invalid(Exception):
    pass


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise _Invalid(message)


def _plain(state: AppState, *scenes: str) -> None:
    """The command needs one of ``scenes`` with neither sidebar nor chat open."""
    _require(state.scene in scenes, f"not available in {state.scene}")
    _require(not state.sidebar_open, "sidebar is open")
    _require(state.chat_partner is None, "chat is open")


def _enter(state: AppState, target: str) -> AppState:
    if target == SETTINGS and state.scene == SETTINGS:
        return replace(state, sidebar_open=False, chat_partner=None)
    tab = state.settings_tab
    if target == SETTINGS:
        tab = PROFILE_TAB if state.scene == PROFILE else SETTINGS_TAB
    return replace(state, scene=target, settings_tab=tab, sidebar_open=False, chat_partner=None,
                   game=None, scene_history=state.scene_history + (target,))


def _clear_form(state: AppState, **changes) -> AppState:
    return replace(state, email_kind="", password_kind="", last_error="", **changes)


def _arg(args: dict, name: str, choices=None) -> str:
    _require(name in args, f"missing argument {name!r}")
    value = str(args[name])
    if choices is not None:
        _require(value in choices, f"{name} must be one of {', '.join(choices)}")
    else:
        _require(value != "", f"{name} must not be empty")
    return value


# -- command handlers ------------------------------------------------------
# each returns the new state, or (new state, error kind) for a rejected form


def _open_login(state, args, faults):
    _plain(state, WELCOME)
    return _clear_form(state, scene=EMAIL_LOGIN)


def _open_signup(state, args, faults):
    _plain(state, WELCOME)
    return _clear_form(state, scene=EMAIL_SIGNUP)


def _type_email(state, args, faults):
    _plain(state, EMAIL_LOGIN, EMAIL_SIGNUP)
    return replace(state, email_kind=_arg(args, "kind", EMAIL_KINDS))


def _type_password(state, args, faults):
    _plain(state, EMAIL_LOGIN, EMAIL_SIGNUP)
    return replace(state, password_kind=_arg(args, "kind", PASSWORD_KINDS))


def _login(state: AppState, user: User) -> AppState:
    return _clear_form(state, scene=HOME, user=user, scene_history=state.scene_history + (HOME,),
                       pending_intro=user.maturity == "new", name_at_login=user.name,
                       settings_tab=SETTINGS_TAB)


def _submit_login(state, args, faults):
    _plain(state, EMAIL_LOGIN)
    if not state.email_kind or not state.password_kind:
        error = "missing_fields"
    elif state.email_kind == "MALFORMED":
        error = "malformed_email"
    elif state.email_kind == "NONEXISTENT":
        error = "unknown_user"
    elif state.password_kind == "INVALID":
        error = "wrong_password"
    else:
        return _login(state, state.account(state.test_user))
    return replace(state, email_kind="", password_kind="", last_error=error), error


def _submit_signup(state, args, faults):
    _plain(state, EMAIL_SIGNUP)
    if not state.email_kind or not state.password_kind:
        error = "missing_fields"
    elif state.email_kind == "MALFORMED":
        error = "malformed_email"
    elif state.email_kind == "VALID":
        error = "email_taken"
    elif state.password_kind == "INVALID":
        error = "weak_password"
    else:
        n = state.signups + 1
        user = User(f"player{n}@quiz.test", "secret-password", "New Player", "Rookie", "", "new")
        return _clear_form(state, scene=WELCOME, accounts=state.accounts + (user,), signups=n)
    return replace(state, email_kind="", password_kind="", last_error=error), error


def _open_sidebar(state, args, faults):
    _plain(state, *SIDEBAR_SCENES, GAME_STATS)
    return replace(state, sidebar_open=True)


def _close_sidebar(state, args, faults):
    _require(state.sidebar_open, "sidebar is not open")
    return replace(state, sidebar_open=False)


def _goto(state, args, faults):
    _require(state.sidebar_open, "sidebar is not open")
    return _enter(state, _arg(args, "scene", SIDEBAR_SCENES))


def _back(state, args, faults):
    if state.chat_partner is not None:
        return replace(state, chat_partner=None)
    if state.sidebar_open:
        return replace(state, sidebar_open=False)
    if state.scene in (EMAIL_LOGIN, EMAIL_SIGNUP):
        return _clear_form(state, scene=WELCOME)
    if state.scene == GAME_STATS:
        return _enter(state, state.game[2])
    _require(state.scene in (TOPICS, HISTORY, MESSAGES, SETTINGS, PROFILE),
             f"back is not available in {state.scene}")
    return _enter(state, HOME)


def _open_settings(state, args, faults):
    _plain(state, HOME, TOPICS, HISTORY, MESSAGES, SETTINGS, PROFILE, GAME_STATS)
    return _enter(state, SETTINGS)


def _open_settings_from_profile(state, args, faults):
    _plain(state, PROFILE)
    return _enter(state, SETTINGS)


def _set_name(state, args, faults):
    _plain(state, SETTINGS)
    _require(state.settings_tab == PROFILE_TAB, "the name can only be edited on the profile tab")
    user = replace(state.user, name=_arg(args, "text"))
    accounts = tuple(user if u.email == user.email else u for u in state.accounts)
    return replace(state, user=user, accounts=accounts)


def _play_topic(state, args, faults):
    _plain(state, HOME, TOPICS)
    topic = _arg(args, "topic")
    outcome = _arg(args, "outcome", OUTCOMES)
    return replace(state, scene=GAME_PLAY, game=(topic, outcome, state.scene))


def _finish_game(state, args, faults):
    _plain(state, GAME_PLAY)
    topic, outcome, _ = state.game
    return replace(state, scene=GAME_STATS, game_records=state.game_records + ((topic, outcome),),
                   pending_intro=False)


def _open_chat(state, args, faults):
    _plain(state, MESSAGES, GAME_STATS)
    return replace(state, chat_partner=_arg(args, "opponent"))


def _send_message(state, args, faults):
    _require(state.chat_partner is not None, "no chat is open")
    _require(_arg(args, "opponent") == state.chat_partner, "message to a different opponent")
    text = _arg(args, "text")
    log = dict(state.message_log)
    log[state.chat_partner] = log.get(state.chat_partner, ()) + (text,)
    return replace(state, message_log=tuple(sorted(log.items())))


def _logout(state, args, faults):
    _plain(state, SETTINGS)
    kept = state.message_log if FAULT_NO_LOGOUT_CLEANUP in faults else ()
    return replace(state, scene=WELCOME, user=None, scene_history=(), game_records=(),
                   message_log=kept, pending_intro=False, settings_tab=SETTINGS_TAB, game=None,
                   name_at_login="")


def _read(state, args, faults):
    return state


COMMANDS = {
    "open_login": _open_login,
    "open_signup": _open_signup,
    "type_email": _type_email,
    "type_password": _type_password,
    "submit_login": _submit_login,
    "submit_signup": _submit_signup,
    "open_sidebar": _open_sidebar,
    "close_sidebar": _close_sidebar,
    "goto": _goto,
    "back": _back,
    "open_settings": _open_settings,
    "open_settings_from_profile": _open_settings_from_profile,
    "set_name": _set_name,
    "play_topic": _play_topic,
    "finish_game": _finish_game,
    "send_message": _send_message,
    "open_chat": _open_chat,
    "logout": _logout,
    "read": _read,
}


# -- rendering -------------------------------------------------------------


def _flag(value: bool) -> str:
    return "true" if value else "false"


def render(state: AppState, faults: frozenset = frozenset()) -> dict[str, str]:
    """Fields the current screen displays."""
    if state.chat_partner is not None:
        fields = {"header": "Chat", "chatWith": state.chat_partner,
                  "chatLength": str(len(state.messages(state.chat_partner)))}
    elif state.sidebar_open:
        name = state.name_at_login if FAULT_NAME_NOT_PROPAGATED in faults else state.user.name
        fields = {"header": TITLES[state.scene], "sidebar": "open", "displayName": name}
    else:
        fields = {"header": TITLES[state.scene]}
        scene = state.scene
        if scene == WELCOME:
            fields["sessionData"] = str(state.message_count())
        elif scene in (EMAIL_LOGIN, EMAIL_SIGNUP):
            error = state.last_error
            if FAULT_WRONG_LOGIN_ERROR in faults and error == "unknown_user":
                error = "malformed_email"
            fields.update(errorKind=error, emailKind=state.email_kind,
                          passwordKind=state.password_kind)
        elif scene == HISTORY:
            count = len(state.game_records)
            if FAULT_STALE_HISTORY in faults and count:
                count -= 1
            fields.update(historyCount=str(count), intro=_flag(state.pending_intro))
        elif scene == MESSAGES:
            fields.update(intro=_flag(state.pending_intro),
                          messageCount=str(state.message_count()))
        elif scene == SETTINGS:
            tab = state.settings_tab
            if FAULT_WRONG_SETTINGS_TAB in faults:
                tab = SETTINGS_TAB
            fields.update(tab=tab, displayName=state.user.name)
        elif scene == PROFILE:
            fields.update(displayName=state.user.name, title=state.user.title,
                          country=state.user.country)
        elif scene == GAME_PLAY:
            fields.update(topic=state.game[0], opponent=OPPONENT)
        elif scene == GAME_STATS:
            topic, outcome, _ = state.game
            fields.update(topic=topic, opponent=OPPONENT,
                          result="won" if outcome == "correct" else "lost",
                          score="140" if outcome == "correct" else "20")
    if FAULT_WRONG_HEADER in faults and fields["header"] == TITLES[SETTINGS]:
        fields["header"] = TITLES[HOME]
    return fields


def handle(state: AppState, name: str, args: dict | None = None,
           faults: frozenset = frozenset()) -> tuple[AppState, Response]:
    """Apply one command. Invalid commands return an Error response and the unchanged state."""
    handler = COMMANDS.get(name)
    if handler is None:
        return state, Response(ERROR, {}, f"InvalidCommand: unknown command {name!r}")
    try:
        result = handler(state, args or {}, faults)
    except _Invalid as exc:
        return state, Response(ERROR, {}, f"InvalidCommand: {exc}")
    if isinstance(result, tuple):
        new_state, error = result
        return new_state, Response(ERROR, render(new_state, faults), f"rejected: {error}")
    return result, Response(OK, render(result, faults))
