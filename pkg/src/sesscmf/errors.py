class DataError(Exception):
    """Raised when input data cannot be processed (bad file, empty result, ...)."""


class ConfigError(Exception):
    """Raised for invalid configuration or command-line usage."""
