"""An explicit marker for exponents and cutoffs that are unbounded.

Using a dedicated object instead of ``math.inf`` keeps ``min`` total while
making the unbounded branch impossible to confuse with an overflowed float.
"""

from __future__ import annotations

import functools
import math
from numbers import Real


@functools.total_ordering
class _Unbounded:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNBOUNDED"

    def __str__(self):
        return "inf"

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash("relweyl.UNBOUNDED")

    def __lt__(self, other):
        if other is self:
            return False
        if isinstance(other, Real):
            return False
        return NotImplemented

    def __gt__(self, other):
        if other is self:
            return False
        if isinstance(other, Real):
            return True
        return NotImplemented

    def __float__(self):
        return math.inf

    def __reduce__(self):
        return (_Unbounded, ())


UNBOUNDED = _Unbounded()


def is_unbounded(x) -> bool:
    return x is UNBOUNDED


def as_float(x) -> float:
    """Float view of an exponent; the marker maps to ``math.inf``."""
    return math.inf if x is UNBOUNDED else float(x)


def from_float(x):
    """Inverse of :func:`as_float` for report decoding."""
    return UNBOUNDED if x == math.inf else x
