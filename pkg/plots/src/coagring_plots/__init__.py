"""Figure rendering for coagring CSV artifacts."""

__version__ = "0.1.0"

from .render import PlotSpec, render

__all__ = ["PlotSpec", "render", "__version__"]
