"""Figure rendering for the vqnoise CSV/JSON artifacts."""

__version__ = "0.1.0"

from .io import EXPECTED_SCHEMAS, SchemaError
from .render import (
    projection_boundary,
    render_decay,
    render_grid,
    render_profile,
    render_projection,
    render_sigmoid,
    render_variance,
)

__all__ = [
    "__version__",
    "EXPECTED_SCHEMAS",
    "SchemaError",
    "projection_boundary",
    "render_decay",
    "render_grid",
    "render_profile",
    "render_projection",
    "render_sigmoid",
    "render_variance",
]
