"""Figure rendering for bkspd experiment CSV traces."""

from .render import PlotSpec, RenderError, RenderResult, read_trace, render

__version__ = "0.1.0"
