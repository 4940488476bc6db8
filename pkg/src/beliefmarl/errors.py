"""Exception types shared across the library."""


class ConfigError(ValueError):
    """Bad configuration: unknown key, out-of-range value, dimension mismatch."""


class TrainingFault(RuntimeError):
    """Non-finite value encountered during training (activations, gradients, losses)."""
