"""Publication-style figures from picard-nls CSV outputs (pure CSV -> image)."""

__version__ = "0.1.0"

from .plots import PlotSpec, SchemaError, plot_convergence, plot_spectrum

__all__ = ["PlotSpec", "SchemaError", "plot_convergence", "plot_spectrum", "__version__"]
