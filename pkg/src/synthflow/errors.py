"""Exception hierarchy.

Every error raised on purpose by this package derives from
:class:`SynthFlowError`. The class name doubles as the machine-readable
error code printed by the command-line interface.
"""


class SynthFlowError(Exception):
    @property
    def code(self):
        return type(self).__name__


# geometry
class SingularTransform(SynthFlowError, ValueError):
    pass


# shapes
class EmptyClassSet(SynthFlowError, ValueError):
    pass


class ZeroArea(SynthFlowError, ValueError):
    pass


# textures
class EmptyPool(SynthFlowError, FileNotFoundError):
    pass


class DecodeFailure(SynthFlowError, ValueError):
    def __init__(self, path, cause=None):
        self.path = str(path)
        self.cause = cause
        msg = f"cannot decode image {self.path}"
        if cause is not None:
            msg += f": {cause}"
        super().__init__(msg)


# scene
class PlacementFailure(SynthFlowError, RuntimeError):
    pass


class NonpositiveFactor(SynthFlowError, ValueError):
    pass


class ConfigError(SynthFlowError, ValueError):
    pass


# raster
class MissingTexture(SynthFlowError, LookupError):
    pass


# analysis
class DimensionMismatch(SynthFlowError, ValueError):
    pass


class EdgeMismatch(SynthFlowError, ValueError):
    pass


# io
class BadMagic(SynthFlowError, ValueError):
    pass


class TruncatedFile(SynthFlowError, ValueError):
    pass


class DimensionOverflow(SynthFlowError, ValueError):
    pass


class BadHeader(SynthFlowError, ValueError):
    pass


class IoFailure(SynthFlowError, OSError):
    def __init__(self, path, cause):
        self.path = str(path)
        self.cause = cause
        super().__init__(f"{self.path}: {cause}")


class SampleMismatch(SynthFlowError, ValueError):
    def __init__(self, missing):
        self.missing = sorted(missing)
        super().__init__("samples missing on one side: " + ",".join(self.missing))


class NoFlowFiles(SynthFlowError, FileNotFoundError):
    pass
