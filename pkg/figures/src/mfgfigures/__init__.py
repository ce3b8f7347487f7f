"""Three-panel learning-curve figures from sweep aggregate CSVs."""

from .render import (FigureSpec, SchemaError, VariantSeries, build_figure,
                     read_aggregate, render_figure)

__version__ = "0.1.0"
