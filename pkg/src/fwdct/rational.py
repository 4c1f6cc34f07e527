"""Exact rational scalars, parameter vectors and small exact matrices.

Scalars are :class:`fractions.Fraction`.  Matrices keep a single positive
common denominator over an object array of Python ints, which keeps 8x8
products exact and a lot cheaper than an array of ``Fraction`` objects.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

#: Zero-adder parameter values: multiplication needs only shifts and negation.
LOW_COMPLEXITY_VALUES: tuple[Fraction, ...] = tuple(
    Fraction(v) for v in ("-2", "-1", "-1/2", "0", "1/2", "1", "2")
)
LOW_COMPLEXITY_SET = frozenset(LOW_COMPLEXITY_VALUES)


def to_rational(value) -> Fraction:
    """Convert ints, Fractions, floats (exactly) and strings like ``"1/2"`` or ``".5"``."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (bool, np.bool_)):
        raise TypeError("booleans are not parameters")
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            raise ValueError(f"non-finite value {value!r}")
        return Fraction(float(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"cannot parse rational {value!r}") from exc
    raise TypeError(f"cannot convert {type(value).__name__} to a rational")


def format_rational(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def is_power_of_two(q: Fraction) -> bool:
    """True for +-2**k, k any integer."""
    n, d = abs(q.numerator), q.denominator
    return n != 0 and n & (n - 1) == 0 and d & (d - 1) == 0


class ParamVector(tuple):
    """The seven multiplier parameters, stored as exact rationals."""

    __slots__ = ()

    def __new__(cls, values: Iterable = ()):
        if isinstance(values, ParamVector):
            return values
        if isinstance(values, str):
            values = values.replace(";", ",").split(",")
        vals = tuple(to_rational(v) for v in values)
        if len(vals) != 7:
            raise ValueError(f"parameter vector needs 7 entries, got {len(vals)}")
        return super().__new__(cls, vals)

    @property
    def is_low_complexity(self) -> bool:
        return all(v in LOW_COMPLEXITY_SET for v in self)

    def scaled(self, factor) -> "ParamVector":
        f = to_rational(factor)
        return ParamVector(f * v for v in self)

    def to_float(self) -> np.ndarray:
        return np.array([float(v) for v in self])

    def __str__(self) -> str:
        return "[" + ", ".join(format_rational(v) for v in self) + "]"

    def __repr__(self) -> str:
        return f"ParamVector({str(self)})"


def as_params(alpha) -> ParamVector:
    return alpha if isinstance(alpha, ParamVector) else ParamVector(alpha)


def _obj(values) -> np.ndarray:
    arr = np.empty(np.shape(values), dtype=object)
    arr[...] = values
    return arr


class ExactMatrix:
    """Immutable rational matrix ``num / den`` with ``den > 0`` in lowest terms."""

    __slots__ = ("num", "den")

    def __init__(self, num, den: int = 1):
        num = np.array(num, dtype=object)
        if num.ndim != 2:
            raise ValueError("ExactMatrix needs a 2-D array")
        den = int(den)
        if den == 0:
            raise ZeroDivisionError("zero denominator")
        num = _obj([[int(v) for v in row] for row in num])
        if den < 0:
            num, den = -num, -den
        g = math.gcd(den, *num.ravel().tolist()) if num.size else den
        if g > 1:
            num = _obj([[v // g for v in row] for row in num.tolist()])
            den //= g
        num.flags.writeable = False
        self.num = num
        self.den = den

    @classmethod
    def from_entries(cls, rows) -> "ExactMatrix":
        fr = [[to_rational(v) for v in row] for row in rows]
        den = math.lcm(*(q.denominator for row in fr for q in row)) if fr else 1
        return cls([[q.numerator * (den // q.denominator) for q in row] for row in fr], den)

    @classmethod
    def identity(cls, n: int = 8) -> "ExactMatrix":
        return cls(np.eye(n, dtype=int))

    @classmethod
    def zeros(cls, n: int = 8, m: int | None = None) -> "ExactMatrix":
        return cls(np.zeros((n, n if m is None else m), dtype=int))

    @classmethod
    def diag(cls, values: Sequence) -> "ExactMatrix":
        n = len(values)
        rows = [[values[i] if i == j else 0 for j in range(n)] for i in range(n)]
        return cls.from_entries(rows)

    @property
    def shape(self) -> tuple[int, int]:
        return self.num.shape

    def __getitem__(self, idx) -> Fraction:
        i, j = idx
        return Fraction(self.num[i, j], self.den)

    def entries(self) -> list[list[Fraction]]:
        return [[Fraction(v, self.den) for v in row] for row in self.num.tolist()]

    @property
    def T(self) -> "ExactMatrix":
        return ExactMatrix(self.num.T, self.den)

    def __matmul__(self, other: "ExactMatrix") -> "ExactMatrix":
        if not isinstance(other, ExactMatrix):
            return NotImplemented
        if self.shape[1] != other.shape[0]:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        return ExactMatrix(self.num.dot(other.num), self.den * other.den)

    def __add__(self, other: "ExactMatrix") -> "ExactMatrix":
        if not isinstance(other, ExactMatrix):
            return NotImplemented
        return ExactMatrix(self.num * other.den + other.num * self.den, self.den * other.den)

    def __neg__(self) -> "ExactMatrix":
        return ExactMatrix(-self.num, self.den)

    def __sub__(self, other: "ExactMatrix") -> "ExactMatrix":
        return self + (-other)

    def scale(self, factor) -> "ExactMatrix":
        f = to_rational(factor)
        return ExactMatrix(self.num * f.numerator, self.den * f.denominator)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ExactMatrix):
            return NotImplemented
        return self.den == other.den and self.shape == other.shape and bool(np.all(self.num == other.num))

    def __hash__(self) -> int:
        return hash((self.den, tuple(map(tuple, self.num.tolist()))))

    def is_diagonal(self) -> bool:
        off = self.num.copy()
        np.fill_diagonal(off, 0)
        return not np.any(off != 0)

    def is_identity(self) -> bool:
        return self == ExactMatrix.identity(self.shape[0])

    def diagonal(self) -> list[Fraction]:
        return [Fraction(v, self.den) for v in np.diagonal(self.num).tolist()]

    def nonzero_count(self) -> int:
        return int(np.count_nonzero(self.num != 0))

    def to_float(self) -> np.ndarray:
        # Python-int division is correctly rounded, even for huge numerators.
        return np.array([[v / self.den for v in row] for row in self.num.tolist()], dtype=float)

    def __repr__(self) -> str:
        rows = "\n".join(
            " ".join(f"{format_rational(q):>6}" for q in row) for row in self.entries()
        )
        return f"ExactMatrix(\n{rows})"
