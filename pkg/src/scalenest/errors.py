"""Exception hierarchy shared by every stage of the pipeline."""


class ScalenestError(Exception):
    """Base class for all errors raised by this package."""


class InputError(ScalenestError):
    """Empty or otherwise unusable input."""


class ParseError(InputError):
    def __init__(self, lineno, message):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class DuplicateIdError(InputError):
    def __init__(self, record_id, lineno):
        super().__init__(f"line {lineno}: duplicate record id {record_id!r}")
        self.record_id = record_id
        self.lineno = lineno


class LevelRangeError(ScalenestError, ValueError):
    """A hierarchy level outside the range a code or map supports."""


class PreconditionError(ScalenestError, ValueError):
    pass


class ShapeError(ScalenestError, ValueError):
    pass


class DegenerateInputError(ScalenestError):
    """Input carries no usable signal (all-zero map, zero valid records)."""


class DegenerateMatrixError(DegenerateInputError):
    """Pruning left fewer than two rows or two columns."""


class DegenerateFillError(DegenerateInputError):
    """Fill too close to 0 or 1 for the isocline to be defined."""


class PathologicalInputError(DegenerateInputError):
    """Too many null samples collapsed during pruning."""
