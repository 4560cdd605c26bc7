"""Exception types shared across the package."""


class StaLstmError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(StaLstmError):
    """Operand shapes are incompatible with the requested operation."""


class ContractError(StaLstmError):
    """An argument violates an operation's preconditions."""


class NumericError(StaLstmError):
    """A computation produced or consumed a non-finite value."""


class ParseError(StaLstmError):
    """A data file is structurally malformed."""


class DataError(StaLstmError):
    """A data file parsed but holds invalid values (e.g. non-finite coordinates)."""


class LayoutError(StaLstmError):
    """A dataset directory does not follow the expected layout."""


class ConfigError(StaLstmError):
    """A configuration file or override is invalid."""


class CheckpointError(StaLstmError):
    """Base class for checkpoint read failures."""


class CorruptionError(CheckpointError):
    """Checkpoint bytes do not match their manifest."""


class VersionError(CheckpointError):
    """Checkpoint manifest declares an unsupported version."""
