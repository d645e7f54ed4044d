"""Exception types shared across the package.

Two failure families matter to callers: bad inputs (caller error, CLI exit 1)
and bad files (corrupt/unreadable artifacts, CLI exit 2).
"""


class GuavacadeError(Exception):
    """Base class for all package errors."""


class InputError(GuavacadeError, ValueError):
    """Invalid argument or dataset handed to an operation."""


class TrainingError(GuavacadeError, RuntimeError):
    """Training could not produce a usable model (e.g. every boosting round
    was rejected)."""


class FileFormatError(GuavacadeError, ValueError):
    """Corrupt or malformed binary/JSON artifact.

    Carries the byte offset where decoding failed so corrupt files can be
    diagnosed without a hex editor.
    """

    def __init__(self, path, offset: int, message: str):
        self.path = str(path)
        self.offset = offset
        super().__init__(f"{self.path}: offset {offset}: {message}")
