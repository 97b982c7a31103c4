"""Exception types raised at patchxfer operation boundaries."""


class PatchxferError(Exception):
    """Base class for every error this package raises on purpose."""


class ShapeError(PatchxferError):
    """Tensor rank/dimension mismatch, or an empty/degenerate dimension."""


class NonFiniteError(PatchxferError):
    """A NaN or infinity tried to cross an operation boundary."""


class GeometryError(PatchxferError):
    """Invalid patch geometry, or a geometry incompatible with the input."""


class ParameterError(PatchxferError):
    """Out-of-range argument (bad index, top-u larger than the key set, ...)."""


class DecodeError(PatchxferError):
    """Malformed image stream. ``offset`` is the byte position of the fault."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class TensorFormatError(PatchxferError):
    """Malformed TNSR stream. ``field`` names the header field at fault."""

    def __init__(self, message: str, field: str):
        super().__init__(f"{message} (field: {field})")
        self.field = field


class ManifestError(PatchxferError):
    """Weight manifest missing a layer or holding mismatched shapes."""


class ConfigError(PatchxferError):
    """Unparseable or unknown configuration entry."""


class StageError(PatchxferError):
    """Pipeline failure, tagged with the stage that raised it."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
