"""Figure renderer for kavg experiment CSV outputs."""

__version__ = "0.1.0"

from .render import FIGURES, FigureJob, equilibrium_curve, render
from .schemas import SchemaError

__all__ = ["FIGURES", "FigureJob", "SchemaError", "equilibrium_curve", "render", "__version__"]
