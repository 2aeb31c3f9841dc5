"""Collection engine: exact multiplication in coordinates of the second kind.

An element is a tuple of integer exponents along the group's basis sequence
``g = b_1^{e_1} ... b_n^{e_n}``.  The law is derived once per group inside
the rational graded Lie algebra attached to its structure constants:
coordinates are packed into a logarithm with the Campbell-Hausdorff series,
combined there, and peeled off again.  Running that derivation on symbolic
exponents produces integer multiplication polynomials, so the runtime path
is plain ``int`` arithmetic with exact divisions.

``log_vectors[k]`` holds the logarithm of the k-th basis group element as a
rational coordinate vector; its leading term is the k-th Lie basis vector,
which makes the peeling loop triangular.
"""

from __future__ import annotations

from fractions import Fraction
from functools import cached_property

from .assoc import bch_terms
from .mpoly import MPoly, compile_poly, eval_compiled


def _vec_scale(vec, s):
    if not s:
        return {}
    return {k: c * s for k, c in vec.items()}


def _vec_neg(vec):
    return {k: -c for k, c in vec.items()}


class CollectionLaw:
    """Multiplication, inversion and power maps for one group presentation."""

    def __init__(self, weights, nil_class, struct, log_vectors):
        self.weights = tuple(weights)
        self.dim = len(self.weights)
        self.nil_class = nil_class
        # struct: {(i, j): ((k, coeff), ...)} for i > j with nonzero bracket.
        self.struct = struct
        self.log_vectors = log_vectors
        self._terms = bch_terms(nil_class)
        self._rm_cache = {}

    @classmethod
    def for_free(cls, basis):
        n = len(basis)
        struct = {}
        for i in range(n):
            for j in range(i):
                pairs = basis.pair_bracket(i, j)
                if pairs:
                    struct[(i, j)] = tuple(sorted(pairs.items()))
        law = cls(basis.weights, basis.nil_class, struct, None)
        vectors = []
        for entry in basis.entries:
            if entry.is_generator():
                vectors.append({basis.index[entry]: Fraction(1)})
            else:
                a = vectors[basis.index[entry.left]]
                b = vectors[basis.index[entry.right]]
                vectors.append(law.group_commutator_log(a, b))
        law.log_vectors = vectors
        return law

    # ---- Lie algebra layer (generic over Fraction / MPoly coefficients) ----

    def bracket_vec(self, x, y):
        out = {}
        struct = self.struct
        for i, xi in x.items():
            for j, yj in y.items():
                if i > j:
                    pairs = struct.get((i, j))
                    sign = 1
                elif i < j:
                    pairs = struct.get((j, i))
                    sign = -1
                else:
                    continue
                if pairs is None:
                    continue
                p = xi * yj if sign > 0 else -(xi * yj)
                for k, c in pairs:
                    t = out.get(k, 0) + p * c
                    if t:
                        out[k] = t
                    else:
                        out.pop(k, None)
        return out

    def bch(self, x, y):
        """log(exp(x) exp(y)) truncated at the nilpotency class."""
        if not x:
            return dict(y)
        if not y:
            return dict(x)
        out = dict(x)
        for k, c in y.items():
            t = out.get(k, 0) + c
            if t:
                out[k] = t
            else:
                out.pop(k, None)
        values = {(0,): x, (1,): y}

        def word_value(word):
            v = values.get(word)
            if v is None:
                v = self.bracket_vec(word_value(word[:-1]), values[word[-1:]])
                values[word] = v
            return v

        for d in range(2, self.nil_class + 1):
            for coeff, word in self._terms[d]:
                acc = word_value(word)
                for k, c in acc.items():
                    t = out.get(k, 0) + c * coeff
                    if t:
                        out[k] = t
                    else:
                        out.pop(k, None)
        return out

    def group_commutator_log(self, a, b):
        """log of ``exp(a)^-1 exp(b)^-1 exp(a) exp(b)``."""
        return self.bch(self.bch(self.bch(_vec_neg(a), _vec_neg(b)), a), b)

    def pack(self, exponents):
        """First-kind logarithm of ``prod_k b_k^{e_k}``."""
        out = {}
        for k, e in enumerate(exponents):
            if e:
                out = self.bch(out, _vec_scale(self.log_vectors[k], e))
        return out

    def unpack(self, vec):
        """Peel second-kind exponents off a logarithm; inverse of :meth:`pack`.

        Works coordinate by coordinate in weight order: subtracting
        ``e_k * log_vectors[k]`` only disturbs strictly heavier coordinates.
        """
        vec = dict(vec)
        exponents = []
        for k in range(self.dim):
            e = vec.get(k, 0)
            exponents.append(e)
            if e:
                vec = self.bch(_vec_scale(self.log_vectors[k], -e), vec)
        assert not any(vec.values()), f"unpack left a residue: {vec}"
        return exponents

    # ---- symbolic derivation of the polynomial laws ----

    def _sym_polys(self, exponents):
        nvars = next((p.nvars for p in exponents if isinstance(p, MPoly)), 0)
        return tuple(
            p if isinstance(p, MPoly) else MPoly.const(nvars, p)
            for p in exponents
        )

    @cached_property
    def _mul_sym(self):
        n = self.dim
        e = [MPoly.var(2 * n, k) for k in range(n)]
        f = [MPoly.var(2 * n, n + k) for k in range(n)]
        return self._sym_polys(self.unpack(self.bch(self.pack(e), self.pack(f))))

    @cached_property
    def _mul_compiled(self):
        return tuple(compile_poly(p) for p in self._mul_sym)

    @cached_property
    def _inv_compiled(self):
        n = self.dim
        e = [MPoly.var(n, k) for k in range(n)]
        polys = self._sym_polys(self.unpack(_vec_neg(self.pack(e))))
        return tuple(compile_poly(p) for p in polys)

    @cached_property
    def _pow_compiled(self):
        n = self.dim
        e = [MPoly.var(n + 1, k) for k in range(n)]
        t = MPoly.var(n + 1, n)
        polys = self._sym_polys(self.unpack(_vec_scale(self.pack(e), t)))
        return tuple(compile_poly(p) for p in polys)

    # ---- runtime entry points ----

    def multiply(self, g, h):
        vals = tuple(g) + tuple(h)
        return tuple(eval_compiled(cp, vals) for cp in self._mul_compiled)

    def inverse(self, g):
        return tuple(eval_compiled(cp, g) for cp in self._inv_compiled)

    def power(self, g, n):
        vals = tuple(g) + (n,)
        return tuple(eval_compiled(cp, vals) for cp in self._pow_compiled)

    def right_multiplier(self, h):
        """Specialized ``g -> g * h`` with the second factor folded in."""
        key = tuple(h)
        cached = self._rm_cache.get(key)
        if cached is not None:
            return cached
        n = self.dim
        assign = {n + i: v for i, v in enumerate(key)}
        compiled = tuple(compile_poly(p.partial_eval(assign)) for p in self._mul_sym)

        def rmul(g, _compiled=compiled):
            return tuple(eval_compiled(cp, g) for cp in _compiled)

        self._rm_cache[key] = rmul
        return rmul
