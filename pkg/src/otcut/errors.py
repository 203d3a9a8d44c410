"""Exception hierarchy shared by all otcut modules."""


class OTCutError(Exception):
    """Base class for every error raised by otcut."""


class MeshError(OTCutError):
    pass


class ParseError(MeshError):
    """Malformed OFF/OBJ input."""


class TopologyError(MeshError):
    """Boundary edge, non-manifold edge or inconsistent orientation."""


class GeometryError(MeshError):
    """Degenerate (near zero area) triangle."""


class DisconnectedMesh(MeshError):
    pass


class ProjectionError(OTCutError):
    """Newton projection onto an implicit surface failed to converge."""


class ParameterError(OTCutError, ValueError):
    pass


class UnsupportedDescriptor(OTCutError):
    pass


class DomainError(OTCutError, ValueError):
    pass


class DimensionMismatch(OTCutError, ValueError):
    pass


class NoConvergence(OTCutError):
    """Linear solver did not reach the requested residual."""


class EmptyInput(OTCutError, ValueError):
    pass


class ConfigError(OTCutError):
    def __init__(self, message, line=None, key=None):
        self.line = line
        self.key = key
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)


class IoError(OTCutError, OSError):
    pass
