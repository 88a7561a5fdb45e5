"""Paper-style figure rendering for wpbc CSV outputs."""

__version__ = "0.1.0"

from .render import RenderError, RenderSummary, expected_curves, load_recipe, render
