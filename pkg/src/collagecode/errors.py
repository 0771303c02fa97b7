"""Exception types shared across the package."""


class PpmParseError(ValueError):
    """Malformed PPM input. Carries the byte offset of the failure."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte {offset})")
        self.offset = offset


class ProtocolError(RuntimeError):
    """Violation of the recovery-protocol event contract (e.g. time regression)."""


class WireProtocolError(RuntimeError):
    """Malformed or inconsistent backend-bridge wire traffic."""

    def __init__(self, message: str, line: str | None = None):
        if line is not None:
            message = f"{message}: {line!r}"
        super().__init__(message)
        self.line = line


class ConfigError(ValueError):
    """Invalid simulation or serve configuration; raised before any work starts."""
