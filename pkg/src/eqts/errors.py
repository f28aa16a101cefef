"""Exception hierarchy shared by all eqts modules."""


class EqtsError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 1


class SourceError(EqtsError):
    """An error tied to a position in a source document."""

    def __init__(self, message, line=None, column=None, filename=None):
        self.message = message
        self.line = line
        self.column = column
        self.filename = filename
        super().__init__(self.render())

    def render(self):
        where = self.filename or "<input>"
        if self.line is not None:
            where += f":{self.line}:{self.column}"
        return f"{where}: {self.kind}: {self.message}"

    kind = "error"


class CalSyntaxError(SourceError):
    kind = "syntax error"


class FragmentError(SourceError):
    """A law head that is not a literal."""

    kind = "fragment violation"


class ScopeError(SourceError):
    """An action atom used where only fluents are allowed."""

    kind = "scope error"


class GroundingError(SourceError):
    kind = "grounding error"


class SignatureError(EqtsError):
    """A state, action or fluent that does not belong to the system."""


class ResourceError(EqtsError):
    """A configured resource cap was exceeded."""

    exit_code = 5

    def __init__(self, message, **progress):
        self.progress = progress
        if progress:
            stats = ", ".join(f"{k}={v}" for k, v in sorted(progress.items()))
            message = f"{message} ({stats})"
        super().__init__(message)


class TotalityError(EqtsError):
    """A custom classification table misses a state."""


class PlannerError(EqtsError):
    """A planner failed to answer a (state, target) request."""

    def __init__(self, message, state=None, target=None):
        self.state = state
        self.target = target
        super().__init__(f"{message} (state={state}, target={target})")


class ProperNessError(EqtsError):
    """Backward tracking found no concrete predecessor."""
