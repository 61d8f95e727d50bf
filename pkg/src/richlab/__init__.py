"""Richardson extrapolation diagnostics and the numerical experiments that exercise them."""

from .errors import (
    ConstraintFailureError,
    DegenerateFractionError,
    DragTableFormatError,
    InvalidInputError,
    RichlabError,
    SweepFormatError,
)
from .extrapolation import (
    ConvergenceDiagnosis,
    SampleSweep,
    Verdict,
    diagnose,
    fraction_series,
    richardson_estimate,
    richardson_fraction,
    sweep_from_values,
    validate_estimates,
)
from .sweepio import analyze_file, read_sweep, write_diagnosis, write_sweep

__version__ = "0.1.0"

__all__ = [
    "ConstraintFailureError",
    "ConvergenceDiagnosis",
    "DegenerateFractionError",
    "DragTableFormatError",
    "InvalidInputError",
    "RichlabError",
    "SampleSweep",
    "SweepFormatError",
    "Verdict",
    "analyze_file",
    "diagnose",
    "fraction_series",
    "read_sweep",
    "richardson_estimate",
    "richardson_fraction",
    "sweep_from_values",
    "validate_estimates",
    "write_diagnosis",
    "write_sweep",
]
