"""Figure tool for fairltr experiment CSVs."""

from .figures import PlotResult, PlotSpec, plot_sweep, plot_timeseries
from .io import SchemaError, read_table

__version__ = "0.1.0"
__all__ = ["PlotResult", "PlotSpec", "SchemaError", "plot_sweep", "plot_timeseries", "read_table"]
