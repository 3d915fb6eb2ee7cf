"""Exception hierarchy shared by every stage of the toolchain."""


class MbtError(Exception):
    """Base class for all toolchain errors."""


# -- expression language -------------------------------------------------

class ExprSyntaxError(MbtError):
    def __init__(self, message, offset, expected=()):
        self.offset = offset
        self.expected = tuple(sorted(set(expected)))
        detail = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{message} at offset {offset}{detail}")


class ExprTypeError(MbtError):
    def __init__(self, message, subexpr=None):
        self.subexpr = subexpr
        where = f" in `{subexpr}`" if subexpr is not None else ""
        super().__init__(f"{message}{where}")


class EvalError(MbtError):
    pass


class ActionError(MbtError):
    def __init__(self, message, index):
        self.index = index
        super().__init__(f"action #{index}: {message}")


# -- EFSM core -------------------------------------------------------------

class UnknownState(MbtError):
    def __init__(self, label):
        self.label = label
        super().__init__(f"unknown state {label!r}")


class GuardTypeError(MbtError):
    pass


class GuardViolation(MbtError):
    pass


# -- model loading ---------------------------------------------------------

class ParseError(MbtError):
    def __init__(self, message, element_id=None):
        self.element_id = element_id
        where = f" (element {element_id!r})" if element_id else ""
        super().__init__(f"{message}{where}")


class LabelGrammarError(ParseError):
    def __init__(self, message, label_text, element_id=None):
        self.label_text = label_text
        super().__init__(f"{message}: {label_text!r}", element_id)


class DslSyntaxError(MbtError):
    def __init__(self, message, line, column):
        self.line = line
        self.column = column
        super().__init__(f"{message} at line {line}, column {column}")


class ModelError(MbtError):
    """Structural problem that prevents a bundle from being flattened."""


class CycleError(ModelError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("recursive submodels: " + " -> ".join(self.cycle))


class NoExitError(ModelError):
    def __init__(self, submodel, state):
        self.submodel = submodel
        self.state = state
        super().__init__(
            f"state {state!r} has outgoing edges but submodel {submodel!r} has no EXIT state")


# -- generation ------------------------------------------------------------

class DeadEnd(MbtError):
    def __init__(self, state, guard_values):
        self.state = state
        self.guard_values = dict(guard_values)
        super().__init__(f"dead end at {state!r}; guards: {self.guard_values}")


class GuardTrap(MbtError):
    pass


class BudgetExhausted(MbtError):
    def __init__(self, uncovered_states, uncovered_transitions):
        self.uncovered_states = sorted(uncovered_states)
        self.uncovered_transitions = sorted(uncovered_transitions)
        super().__init__(
            "generation budget exhausted; uncovered states: "
            f"{self.uncovered_states}; uncovered transitions: {self.uncovered_transitions}")


class UnknownLabel(MbtError):
    def __init__(self, label):
        self.label = label
        super().__init__(f"label {label!r} is not in the model")


# -- mapping / instantiation -----------------------------------------------

class MissingLabel(MbtError):
    def __init__(self, label, group):
        self.label = label
        self.group = group
        super().__init__(f"no mapping for {label!r} (group {group!r})")


class UnresolvedPlaceholder(MbtError):
    def __init__(self, name, label):
        self.name = name
        self.label = label
        super().__init__(f"placeholder {{{{{name}}}}} unresolved in fragment for {label!r}")


class TodoFragment(MbtError):
    def __init__(self, label):
        self.label = label
        super().__init__(f"fragment for {label!r} is still a TODO template")


class HashMismatch(MbtError):
    def __init__(self, table_hash, model_hash):
        self.table_hash = table_hash
        self.model_hash = model_hash
        super().__init__(f"mapping table is for model {table_hash}, suite is for {model_hash}")


# -- execution -------------------------------------------------------------

class DriverUnavailable(MbtError):
    pass


class SessionError(MbtError):
    pass


class InvalidCommand(MbtError):
    pass


class NoMatchingUser(MbtError):
    pass


class StoreParseError(MbtError):
    pass
