"""Exception hierarchy and CLI exit codes"""

from typing import List, Optional, Sequence

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_BLOW_UP = 2
EXIT_CONSISTENCY = 3


class RBMError(Exception):
    """Base class for all simulator errors"""
    exit_code = EXIT_CONFIG


class ConfigurationError(RBMError, ValueError):
    """Invalid scenario, system specification or command-line request"""
    exit_code = EXIT_CONFIG

    def __init__(self, message: str, diagnostics: Optional[Sequence] = None, location: Optional[str] = None):
        self.diagnostics: List = list(diagnostics or [])
        self.location = location
        if location:
            message = f"{location}: {message}"
        super().__init__(message)


class ConfigParseError(ConfigurationError):
    """Config text that does not follow the documented grammar"""

    def __init__(self, message: str, line: int = 0, column: int = 0, location: Optional[str] = None):
        self.line = line
        self.column = column
        if line:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message, location=location)


class EnumerationTooLargeError(ConfigurationError):
    """Joint partition count exceeds the enumeration cap"""

    def __init__(self, count: int, cap: int):
        self.count = count
        self.cap = cap
        super().__init__(f"too large to enumerate: {count} joint partitions exceed the cap of {cap}")


class InvalidStateError(RBMError, ValueError):
    """Non-finite input, mismatched shapes or empty data"""
    exit_code = EXIT_CONFIG


class BlowUpError(InvalidStateError):
    """A particle position or drift became NaN/Inf during a run"""
    exit_code = EXIT_BLOW_UP

    def __init__(self, species: int, particle: int, time: float, step: Optional[int] = None):
        self.species = species
        self.particle = particle
        self.time = time
        self.step = step
        where = f"species {species + 1}, particle {particle + 1}, t={time:.6g}"
        if step is not None:
            where += f", step {step}"
        super().__init__(f"blow-up detected ({where})")


class ConsistencyMismatchError(RBMError):
    """Closed-form and oracle statistics of the remainder disagree"""
    exit_code = EXIT_CONSISTENCY
