"""Exception types raised across the package."""


class QdExcitonError(Exception):
    """Base class for all package errors."""


# --- configuration / device construction ---

class MissingField(QdExcitonError):
    """A required configuration field is absent."""


class GeometryInvalid(QdExcitonError):
    """Device radii do not satisfy 0 < a < b < R."""


class TypeIIUnsupported(QdExcitonError):
    """Band offsets do not confine both carriers to the well layer."""


class UnknownMaterial(QdExcitonError):
    """Material name has no built-in parameter set."""


# --- B-spline basis ---

class TooFewIntervals(QdExcitonError):
    """Subinterval count too small to place breakpoints in every layer."""


class MultiplicityOutOfRange(QdExcitonError):
    """Interface knot multiplicity outside [1, k-1]."""


class InvalidOrder(QdExcitonError):
    """Spline order below the supported minimum."""


class IndexOutOfRange(QdExcitonError):
    """B-spline index outside the basis."""


class PointOutsideDomain(QdExcitonError):
    """Evaluation point outside [0, R]."""


class DegenerateSpline(QdExcitonError):
    """A basis function has vanishing norm."""


# --- radial solver ---

class SeriesNotConverged(QdExcitonError):
    """Self-polarization multipole series not converged at the cutoff."""


class InconsistentGeometry(QdExcitonError):
    """Basis was built for a different device geometry."""


class SolverFailure(QdExcitonError):
    """Generalized eigensolver failed."""


class RootNotBracketed(QdExcitonError):
    """Requested infinite-well root not found in the scan window."""


# --- exciton ---

class OutsideWell(QdExcitonError):
    """Kernel evaluation point outside the well layer."""


class BasisMismatch(QdExcitonError):
    """One-particle solutions do not cover the requested product basis."""


class StateOutOfRange(QdExcitonError):
    """State index outside the computed spectrum."""


# --- entanglement ---

class NotNormalized(QdExcitonError):
    """Coefficient matrix does not have unit Frobenius norm."""


# --- dynamics ---

class NormDrift(QdExcitonError):
    """Propagated norm drifted beyond tolerance; time step too large."""


# --- cli ---

class MalformedGrid(QdExcitonError):
    """Grid argument does not parse as a value or lo:hi:n range."""


class TooShort(QdExcitonError):
    """Time series does not span the requested averaging window."""
