"""Exception types raised by viewselect."""


class GeometryError(ValueError):
    """Base class for invalid or degenerate geometric input."""


class EmptyIntersection(GeometryError):
    pass


class UnboundedIntersection(GeometryError):
    pass


class DegenerateConfiguration(GeometryError):
    pass


class CollinearConfiguration(GeometryError):
    pass


class NearParallelRays(GeometryError):
    pass


class SingularSystem(GeometryError):
    pass


class NoVisibleCameras(ValueError):
    """A mesh face has no visible camera, so its visibility cone is undefined."""

    def __init__(self, face_id):
        super().__init__(f"face {face_id} has no visible cameras")
        self.face_id = face_id


class BoundViolation(RuntimeError):
    """A certified ratio exceeded its theoretical bound.

    ``witness`` holds the offending configuration, ``report`` the full report
    computed so far.
    """

    def __init__(self, message, witness, report=None):
        super().__init__(message)
        self.witness = witness
        self.report = report


class NoProgress(RuntimeError):
    """View selection stalled before reaching the coverage target."""

    def __init__(self, message, selection):
        super().__init__(message)
        self.selection = selection


class ParseError(ValueError):
    """Malformed mesh or trajectory input; ``location`` names the line or record."""

    def __init__(self, message, location=None):
        if location is not None:
            message = f"{location}: {message}"
        super().__init__(message)
        self.location = location
