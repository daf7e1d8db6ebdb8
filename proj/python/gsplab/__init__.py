"""Graph signal processing and GNN stability toolkit."""

from ._gsplab import (
    DegenerateGraphError,
    DimensionError,
    Error,
    ParseError,
    SymmetryError,
    ValidationError,
    equivariance_suite,
    filter_apply,
    filter_constants,
    first_order_suite,
    freq_response,
    gft,
    gradient_suite,
    igft,
    normalize_shift,
    parseval_suite,
    random_graph,
    sample_exponential_graphon,
    similarity_graph,
    spectral_norm,
    stability_sweep,
    sym_eig,
    sym_eigvals,
    synthetic_ratings,
    transfer_sweep,
)

__version__ = "0.1.0"
