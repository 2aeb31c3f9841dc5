"""Sparse multivariate polynomials over exact rationals.

These are only used while deriving a group's multiplication law.  Runtime
evaluation goes through the integerized form produced by :func:`compile_poly`,
which keeps hot paths in plain ``int`` arithmetic.
"""

from __future__ import annotations

from fractions import Fraction
from math import lcm


class ExactDivisionError(ArithmeticError):
    """A value that must be an integer came out fractional."""


class MPoly:
    """Polynomial with ``Fraction`` coefficients in a fixed number of variables.

    Terms map exponent tuples (one slot per variable) to nonzero coefficients.
    Instances are treated as immutable by all callers.
    """

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars, terms=None):
        self.nvars = nvars
        self.terms = {} if terms is None else terms

    @classmethod
    def zero(cls, nvars):
        return cls(nvars)

    @classmethod
    def const(cls, nvars, value):
        value = Fraction(value)
        if value == 0:
            return cls(nvars)
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def var(cls, nvars, index):
        mono = [0] * nvars
        mono[index] = 1
        return cls(nvars, {tuple(mono): Fraction(1)})

    def is_zero(self):
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if isinstance(other, MPoly):
            return self.nvars == other.nvars and self.terms == other.terms
        if other == 0:
            return not self.terms
        return NotImplemented

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms.items())))

    def __add__(self, other):
        if other == 0:
            return self
        if not isinstance(other, MPoly):
            other = MPoly.const(self.nvars, other)
        out = dict(self.terms)
        for mono, c in other.terms.items():
            s = out.get(mono, 0) + c
            if s:
                out[mono] = s
            else:
                out.pop(mono, None)
        return MPoly(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return MPoly(self.nvars, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other if isinstance(other, MPoly) else MPoly.const(self.nvars, -Fraction(other)))

    def __mul__(self, other):
        if isinstance(other, MPoly):
            out = {}
            for m1, c1 in self.terms.items():
                for m2, c2 in other.terms.items():
                    mono = tuple(a + b for a, b in zip(m1, m2))
                    s = out.get(mono, 0) + c1 * c2
                    if s:
                        out[mono] = s
                    else:
                        out.pop(mono, None)
            return MPoly(self.nvars, out)
        c = Fraction(other)
        if c == 0:
            return MPoly(self.nvars)
        return MPoly(self.nvars, {m: v * c for m, v in self.terms.items()})

    __rmul__ = __mul__

    def partial_eval(self, values):
        """Substitute integers for some variables (``values``: index -> int)."""
        out = {}
        for mono, c in self.terms.items():
            factor = 1
            reduced = list(mono)
            for idx, val in values.items():
                e = mono[idx]
                if e:
                    factor *= val ** e
                    reduced[idx] = 0
            if factor == 0:
                continue
            key = tuple(reduced)
            s = out.get(key, 0) + c * factor
            if s:
                out[key] = s
            else:
                out.pop(key, None)
        return MPoly(self.nvars, out)

    def eval(self, values):
        total = Fraction(0)
        for mono, c in self.terms.items():
            p = c
            for idx, e in enumerate(mono):
                if e:
                    p *= Fraction(values[idx]) ** e
            total += p
        return total

    def __repr__(self):
        if not self.terms:
            return "MPoly(0)"
        bits = []
        for mono, c in sorted(self.terms.items()):
            vs = "*".join(
                f"v{i}" + (f"^{e}" if e > 1 else "")
                for i, e in enumerate(mono)
                if e
            )
            bits.append(f"{c}" + (f"*{vs}" if vs else ""))
        return "MPoly(" + " + ".join(bits) + ")"


def compile_poly(poly):
    """Flatten an :class:`MPoly` into ``(denominator, terms)`` for int evaluation.

    ``terms`` is a tuple of ``(integer coefficient, ((var, exp), ...))``; the
    polynomial equals ``sum(...) / denominator``.
    """
    if not poly.terms:
        return (1, ())
    denom = lcm(*(c.denominator for c in poly.terms.values()))
    out = []
    for mono, c in sorted(poly.terms.items()):
        ic = c.numerator * (denom // c.denominator)
        ve = tuple((i, e) for i, e in enumerate(mono) if e)
        out.append((ic, ve))
    return (denom, tuple(out))


def eval_compiled(compiled, values):
    """Evaluate a compiled polynomial at integer values; result must be integral."""
    denom, terms = compiled
    total = 0
    for c, ve in terms:
        p = c
        for v, e in ve:
            p *= values[v] ** e
        total += p
    if denom == 1:
        return total
    q, r = divmod(total, denom)
    if r:
        raise ExactDivisionError(
            f"expected multiple of {denom}, got remainder {r}"
        )
    return q
