"""Exceptions raised on data-dependent failures of the fitting pipeline."""


class EstimationError(RuntimeError):
    """The least-squares step cannot be carried out on the given series."""


class DegenerateDataError(RuntimeError):
    """The fitted residuals are degenerate (e.g. identically zero scale)."""
