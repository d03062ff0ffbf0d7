"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration value, range, or schema."""


class SimulationFault(RuntimeError):
    """Non-finite or otherwise corrupt numeric state detected mid-run."""


class WeightFormatError(ValueError):
    """Malformed network weight file; message names the offending field."""


class ProtocolError(ValueError):
    """Malformed or unknown session message."""
