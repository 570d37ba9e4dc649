"""Figure rendering for delam run directories."""

__version__ = "0.1.0"

from .figures import KINDS, PlotDataError, PlotJob, build_figure, render

__all__ = ["KINDS", "PlotDataError", "PlotJob", "build_figure", "render"]
