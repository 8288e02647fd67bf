from enum import Enum


class Domain(str, Enum):
    """Frequency domain: the circle [-pi, pi) for discrete time, the line for continuous."""

    CIRCLE = "circle"
    LINE = "line"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            from .errors import ParameterError

            raise ParameterError("domain", f"expected 'circle' or 'line', got {value!r}") from None
