"""Exception hierarchy splitting configuration mistakes from runtime failures."""


class AdapterError(Exception):
    """Base class for every failure this package raises on purpose."""


class ConfigError(AdapterError):
    """Bad config file, bad scene spec, or missing input path (exit code 2)."""


class GenerationError(AdapterError):
    """Failure while producing detections, e.g. no frames or a model that
    cannot be loaded (exit code 1)."""
