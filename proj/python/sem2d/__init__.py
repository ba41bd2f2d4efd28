"""Spectral element solver on two-dimensional multishapes."""

from ._core import (
    Error,
    MultiShape,
    __version__,
    build_multishape,
    cheb_lobatto,
    clenshaw_curtis,
    csv_schemas,
    diff_matrix,
    run,
    validation_error,
    validation_multishape,
)

__all__ = [
    "Error",
    "MultiShape",
    "__version__",
    "build_multishape",
    "cheb_lobatto",
    "clenshaw_curtis",
    "csv_schemas",
    "diff_matrix",
    "run",
    "validation_error",
    "validation_multishape",
]
