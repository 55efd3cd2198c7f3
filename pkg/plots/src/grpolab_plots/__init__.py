"""Deterministic SVG rendering for the grpolab CSV schemas."""

from .render import (
    FIGURE_SCHEMAS,
    EmptyDataError,
    PlotSpec,
    SchemaMismatchError,
    build_figure,
    load_table,
    render,
)

__all__ = [
    "FIGURE_SCHEMAS",
    "EmptyDataError",
    "PlotSpec",
    "SchemaMismatchError",
    "build_figure",
    "load_table",
    "render",
]
