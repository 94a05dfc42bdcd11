"""Laser lifetime prognostics: synthetic telemetry, MLP regression, baselines, aging-test projection.

Submodules are imported lazily so the CLI can pin thread counts before numpy loads.
"""

__version__ = "0.1.0"
