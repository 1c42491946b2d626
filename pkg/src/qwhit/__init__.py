from .qdilog import ModularParameter, c_function, log_phi, phi

__all__ = ["ModularParameter", "phi", "log_phi", "c_function"]
__version__ = "0.1.0"
