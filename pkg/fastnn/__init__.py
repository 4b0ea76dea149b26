"""Factor augmented neural regression: networks, constructions, estimators and benchmarks."""

__version__ = "0.1.0"
