"""Exception hierarchy shared by all glsim modules."""


class GlsimError(Exception):
    """Base class for all errors raised by glsim."""


class ParseError(GlsimError):
    """Malformed input text (netlist/library JSON, SDF, VCD).

    Carries the source position when known; ``str()`` renders
    ``file:line:col: message`` so diagnostics stay grep-able.
    """

    def __init__(self, message, path=None, line=None, col=None):
        self.message = message
        self.path = path
        self.line = line
        self.col = col
        super().__init__(str(self))

    def __str__(self):
        loc = self.path or "<input>"
        if self.line is not None:
            loc += f":{self.line}"
            if self.col is not None:
                loc += f":{self.col}"
        return f"{loc}: {self.message}"


class SemanticError(GlsimError):
    """Structurally valid input that violates a netlist/delay/stimulus contract
    (undriven net, combinational cycle, unknown instance or pin, ...)."""


class CapacityError(GlsimError):
    """Waveform storage would exceed the configured memory cap."""

    def __init__(self, message, required_bytes=None, cap_bytes=None):
        self.required_bytes = required_bytes
        self.cap_bytes = cap_bytes
        super().__init__(message)


class ConsistencyError(GlsimError):
    """Internal cross-check failed (pass disagreement, reference mismatch).

    This always indicates a bug, never bad user input.
    """
