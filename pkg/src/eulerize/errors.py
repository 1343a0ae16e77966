"""Error type shared across the toolkit.

Every failure that corresponds to a contract violation carries a stable
string code (e.g. "vanishing-field", "boundary-mismatch") so callers and
the CLI can dispatch on it without parsing messages.
"""


class ToolError(Exception):
    """Contract violation with a stable machine-readable code."""

    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(f"{code}: {message}")
