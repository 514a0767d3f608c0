"""Exception types shared across the package."""


class WblError(Exception):
    """Base class for all package-specific errors."""


# -- mesh construction / validation --------------------------------------


class NonManifoldEdge(WblError):
    """An edge is incident to three or more faces, or a boundary vertex
    is shared by more than one boundary loop."""


class InconsistentOrientation(WblError):
    """Two faces traverse a shared edge in the same direction."""


class DegenerateFace(WblError):
    """A face has repeated vertex indices or area below the threshold."""


class ZeroMixedArea(WblError):
    """A vertex mixed area is below the degeneracy threshold."""


class NoBoundary(WblError):
    """An operation requiring boundary loops was called on a closed mesh."""


class FieldLengthMismatch(WblError):
    """A per-vertex field does not match the mesh vertex count."""


# -- analytic surface generators ------------------------------------------


class InvalidConfig(WblError):
    """Boundary or recipe parameters outside their admissible range."""


class NoCatenoid(WblError):
    """No catenoid spans the requested circle pair (h above the critical
    height)."""


# -- monotonicity evaluators -----------------------------------------------


class NonpositiveRadius(WblError):
    """A ball radius must be strictly positive."""


class BasePointOnBoundary(WblError):
    """The base point coincides with the boundary curve."""


class BasePointOffSurface(WblError):
    """The base point is too far from the mesh surface."""


class Disconnected(WblError):
    """The mesh has more than one connected component."""


# -- metrics ----------------------------------------------------------------


class EmptySample(WblError):
    """A point sample is empty."""


class DegenerateSample(WblError):
    """Too few or rank-deficient points for the requested fit."""


# -- optimizer ----------------------------------------------------------------


class BoundaryMismatch(WblError):
    """Boundary condition data does not match the mesh boundary."""


class LineSearchFailed(WblError):
    """No admissible descent step exists above the underflow threshold.

    Raised only when not a single step could be accepted; once the flow
    has made progress the condition is recorded as a termination reason
    instead and the best mesh so far is returned.
    """


# -- cli -----------------------------------------------------------------------


class ConfigParse(WblError):
    """Config file could not be parsed; carries line/column information."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + loc)
