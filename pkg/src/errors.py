"""
Error hierarchy.

Every error raised on purpose by the package derives from UdaForgeError and
carries a stable ``code`` used by the command line in its
``error[<code>]: <message>`` diagnostics.
"""


class UdaForgeError(Exception):
    """Base class for all expected failures."""

    code = "internal"


class ShapeError(UdaForgeError, ValueError):
    """Tensor shapes do not satisfy an operation's contract."""

    code = "shape"


class GraphError(UdaForgeError, RuntimeError):
    """Misuse of the autodiff graph (non-scalar loss, repeated backward)."""

    code = "graph"


class LossInputError(UdaForgeError, ValueError):
    """A loss received values outside its domain."""

    code = "loss-input"


class LabelError(UdaForgeError, ValueError):
    """Label grid holds a value that is neither a class index nor void."""

    code = "label"


class FormatError(UdaForgeError, ValueError):
    """Binary sample, map or checkpoint file is malformed."""

    code = "format"


class DatasetError(UdaForgeError, ValueError):
    """Dataset directory is missing, empty or of the wrong domain."""

    code = "dataset"


class CheckpointError(UdaForgeError, ValueError):
    """Checkpoint is unreadable or does not fit the requested network."""

    code = "checkpoint"


class ConfigError(UdaForgeError, ValueError):
    """Configuration failed validation."""

    code = "config"


class OutputExistsError(UdaForgeError, FileExistsError):
    """Output directory is not empty and --force was not given."""

    code = "output-exists"


class UnknownParameterError(UdaForgeError, KeyError):
    """Sweep asked for a parameter that does not exist."""

    code = "unknown-param"

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""
