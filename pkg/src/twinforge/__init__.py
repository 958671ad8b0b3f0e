"""Production-line digital-twin toolkit: model IRs, validation, simulation, fitting and model diffing."""

__version__ = "0.1.0"
