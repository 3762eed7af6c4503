"""Figure renderer for hartreelab CSV outputs.

A pure consumer of the delimited files written by the scan commands: it
reads, groups and draws, but never recomputes physics or fits, so the
figures cannot disagree with the data files.
"""

__version__ = "0.1.0"

from .render import (
    FIGURE_KINDS,
    FigureSpec,
    NoDataError,
    SchemaError,
    build_figure,
    render,
)

__all__ = [
    "__version__",
    "FIGURE_KINDS",
    "FigureSpec",
    "SchemaError",
    "NoDataError",
    "build_figure",
    "render",
]
