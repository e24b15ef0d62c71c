"""Mirror randomized benchmarking for universal gate sets."""

__version__ = "0.1.0"
