"""Figures from simulator sweep outputs.

This package never imports the simulator; it consumes only its published
file formats (per_user.csv, summary.json, forecast_t*.csv).
"""

from .figures import SchemaError, ecdf, plot_cdf, plot_heatmap

__all__ = ["SchemaError", "ecdf", "plot_cdf", "plot_heatmap"]
