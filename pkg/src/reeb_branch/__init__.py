"""Numerical toolkit for branched finite-energy curves in contact 3-manifolds."""

from .errors import (
    ConstructionError,
    DecompositionError,
    DegeneracyError,
    DomainError,
    IntegrationError,
    NumericError,
    ProximityError,
    ReebBranchError,
    ResolutionError,
    SectionTimeoutError,
    SolverError,
)
from .geometry import (
    BlowupChart,
    ContactChart,
    Ellipsoid,
    MartinetTube,
    StandardSphere,
    d_lambda,
    eval_contact_form,
    reeb_field,
    xi_project,
)
from .series import TruncatedSeries

__version__ = "0.1.0"
