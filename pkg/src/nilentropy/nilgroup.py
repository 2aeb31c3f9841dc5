"""Finitely generated torsion-free nilpotent groups in Mal'cev coordinates.

A :class:`GroupSpec` describes either a free nilpotent group (rank m,
class c, basis of basic commutators) or a quotient of one by a graded
lattice ideal.  Elements are plain tuples of integers: the exponents of the
normal form ``g = b_1^{e_1} ... b_n^{e_n}`` along the basis sequence.
"""

from __future__ import annotations

import math
import operator
import re
import warnings
from dataclasses import dataclass
from fractions import Fraction

from .collect import CollectionLaw
from .hall import HallBasis
from .mpoly import ExactDivisionError

DEFAULT_RADIUS_CAP = 10
DEFAULT_BALL_BUDGET = 10_000_000

JSON_INT_LIMIT = 2 ** 53


class SpecError(ValueError):
    """Invalid group data or arguments inconsistent with a spec."""


class SpecFormatError(SpecError):
    """Malformed serialized spec, vector or word."""


class TorsionDetected(SpecError):
    """A graded quotient piece has torsion; no Mal'cev basis over it."""


class IntegralityError(ArithmeticError):
    """Collection produced a non-integer exponent (corrupt input data)."""


class BallBudgetExceeded(RuntimeError):
    """Metric ball enumeration hit the configured element budget."""


class GrowthWarning(UserWarning):
    """Non-fatal measurement issues (unresolved lengths, exhausted searches)."""


# ---------------------------------------------------------------------------
# integer Smith reduction (small matrices; used for graded quotients)


def _smith_with_column_basis(rows, width):
    """Invariant factors of the row lattice plus an adapted coordinate change.

    Returns ``(factors, V, Vinv)`` with ``V``/``Vinv`` unimodular ``width x
    width`` integer matrices (lists of rows) such that in the coordinates
    ``y = x V`` the lattice spanned by ``rows`` becomes ``factors[i] * e_i``.
    """
    a = [list(r) for r in rows]
    v = [[int(i == j) for j in range(width)] for i in range(width)]
    vinv = [[int(i == j) for j in range(width)] for i in range(width)]
    rank = 0

    def col_swap(c1, c2):
        for r in a:
            r[c1], r[c2] = r[c2], r[c1]
        for r in v:
            r[c1], r[c2] = r[c2], r[c1]
        vinv[c1], vinv[c2] = vinv[c2], vinv[c1]

    def col_add(dst, src, q):
        # column_dst += q * column_src; inverse tracks row_src -= q * row_dst.
        for r in a:
            r[dst] += q * r[src]
        for r in v:
            r[dst] += q * r[src]
        vinv[src] = [x - q * y for x, y in zip(vinv[src], vinv[dst])]

    def col_negate(c):
        for r in a:
            r[c] = -r[c]
        for r in v:
            r[c] = -r[c]
        vinv[c] = [-x for x in vinv[c]]

    t = 0
    while t < len(a) and rank < width:
        # find a pivot in the remaining block
        pr = pc = None
        best = None
        for i in range(t, len(a)):
            for j in range(rank, width):
                val = abs(a[i][j])
                if val and (best is None or val < best):
                    best, pr, pc = val, i, j
        if pr is None:
            break
        a[t], a[pr] = a[pr], a[t]
        if pc != rank:
            col_swap(pc, rank)
        # clear the pivot row and column
        while True:
            if a[t][rank] < 0:
                col_negate(rank)
            p = a[t][rank]
            dirty = False
            for j in range(rank + 1, width):
                q = a[t][j] // p
                if q:
                    col_add(j, rank, -q)
                if a[t][j]:
                    # remainder smaller than pivot: swap in and restart
                    col_swap(j, rank)
                    dirty = True
                    break
            if dirty:
                continue
            for i in range(t + 1, len(a)):
                q = a[i][rank] // p
                if q:
                    for j in range(rank, width):
                        a[i][j] -= q * a[t][j]
                if a[i][rank]:
                    a[t], a[i] = a[i], a[t]
                    dirty = True
                    break
            if not dirty:
                break
        rank += 1
        t += 1

    factors = []
    for i in range(rank):
        factors.append(abs(a[i][i]))
    # enforce the divisibility chain (only the factor values matter here)
    for i in range(len(factors)):
        for j in range(i + 1, len(factors)):
            g = math.gcd(factors[i], factors[j])
            lcm = factors[i] * factors[j] // g if g else 0
            factors[i], factors[j] = g, lcm
    return factors, v, vinv


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KaridiEstimate:
    """Coordinate box length ``max_i |e_i|^(1/weight_i)``.

    ``box_constant`` is the empirically fitted comparison constant between
    this proxy and the word metric; ``None`` until a band has been measured
    for the group (see :func:`karidi_band`).
    """

    value: float
    box_constant: float | None = None


@dataclass(frozen=True)
class KaridiBand:
    """Measured two-sided comparison between box length and word length."""

    lower: float
    upper: float
    constant: float
    radius: int
    size: int


class WordExpr:
    """Formal word over the generators ``x1 .. xm`` and their inverses.

    Stored as runs ``(generator_index, exponent)`` with 0-based indices.
    """

    __slots__ = ("letters",)

    _TOKEN = re.compile(r"^x(\d+)(?:\^(-?\d+))?$")

    def __init__(self, letters):
        self.letters = tuple((int(g), int(e)) for g, e in letters if e)

    @classmethod
    def parse(cls, text):
        text = text.replace("⁻¹", "^-1").replace("*", " ")
        letters = []
        for tok in text.split():
            m = cls._TOKEN.match(tok)
            if not m:
                raise SpecFormatError(f"cannot parse word token {tok!r}")
            gen = int(m.group(1))
            if gen < 1:
                raise SpecFormatError(f"generator index must be >= 1 in {tok!r}")
            exp = int(m.group(2)) if m.group(2) else 1
            letters.append((gen - 1, exp))
        return cls(letters)

    def inverse(self):
        return WordExpr([(g, -e) for g, e in reversed(self.letters)])

    def __mul__(self, other):
        return WordExpr(self.letters + other.letters)

    def length(self):
        return sum(abs(e) for _, e in self.letters)

    def __repr__(self):
        if not self.letters:
            return "WordExpr('')"
        body = " ".join(
            f"x{g + 1}" + (f"^{e}" if e != 1 else "") for g, e in self.letters
        )
        return f"WordExpr({body!r})"


class GroupSpec:
    """Presentation-level data for one torsion-free nilpotent group.

    ``relations`` maps a weight to integer rows cutting that graded piece of
    the free Lie ring; every piece of the quotient must stay torsion-free and
    the rows must form an ideal (both are checked).  ``relators`` optionally
    gives the group relators as free-cover coordinate vectors; when omitted,
    each relation row is read as the group element supported on its weight
    layer.  The group law reduces free-cover arithmetic modulo the normal
    closure of the relators, so the graded data and the relators must agree
    (also checked).  Without relations the spec is the free nilpotent group
    on ``basis``.
    """

    def __init__(self, basis, relations=None, generating_set=None, free_cover=None,
                 relators=None):
        self.basis = basis
        self.rank = basis.rank
        self.nilpotency_class = basis.nil_class
        self.relations = None
        self.relators = None
        self._karidi_constant = None
        self._balls = {}
        if not relations:
            self.dim = len(basis)
            self.weights = basis.weights
            self.free_cover = None
            self.law = CollectionLaw.for_free(basis)
        else:
            self.relations = {
                int(d): tuple(tuple(int(x) for x in row) for row in rows)
                for d, rows in relations.items()
                if rows
            }
            cover = free_cover if free_cover is not None else GroupSpec(basis)
            self.free_cover = cover
            self._build_quotient(cover, relators)
        if generating_set is None:
            self.generating_set = tuple(
                self.indicator(k) for k in range(self.rank)
            )
        else:
            self.generating_set = tuple(tuple(int(x) for x in g) for g in generating_set)
            for g in self.generating_set:
                if len(g) != self.dim:
                    raise SpecError(
                        f"generating set vector of length {len(g)}, expected {self.dim}"
                    )

    # -- quotient construction -------------------------------------------

    def _build_quotient(self, cover, relators):
        basis = self.basis
        c = basis.nil_class
        for d in self.relations:
            if d < 2 or d > c:
                raise SpecError(f"relation weight {d} outside 2..{c}")
        for d, rows in self.relations.items():
            width = basis.graded_dimension(d)
            for row in rows:
                if len(row) != width:
                    raise SpecError(
                        f"relation row at weight {d} has length {len(row)}, expected {width}"
                    )
        # graded side: rank and torsion of each quotient piece
        ranks = {}
        for d in range(1, c + 1):
            width = basis.graded_dimension(d)
            rows = self.relations.get(d, ())
            factors, _, _ = _smith_with_column_basis(rows, width)
            bad = [f for f in factors if f not in (0, 1)]
            if bad:
                raise TorsionDetected(
                    f"graded piece at weight {d} has invariant factors {bad}"
                )
            ranks[d] = sum(1 for f in factors if f == 1)
        self._check_ideal(cover)
        # group side: normal closure of the relators in the free cover
        if relators is None:
            relators = self._default_relators(cover)
        relators = tuple(cover.check_vector(r) for r in relators)
        for r in relators:
            if any(v for v, w in zip(r, cover.weights) if w == 1):
                raise SpecError("relators must lie in the commutator subgroup")
        self.relators = relators
        nrows = _normal_closure(cover, relators)
        for row in nrows:
            depth = next(i for i, v in enumerate(row) if v)
            if row[depth] != 1:
                raise TorsionDetected(
                    f"free coordinate {depth} gains torsion of order "
                    f"{row[depth]} in the closure of the relators"
                )
        self._check_graded_consistency(cover, nrows, ranks)
        depths = {next(i for i, v in enumerate(row) if v) for row in nrows}
        positions = tuple(p for p in range(cover.dim) if p not in depths)
        self._positions = positions
        self._nrows = nrows
        self.dim = len(positions)
        self.weights = tuple(cover.weights[p] for p in positions)
        struct = self._transversal_struct(cover, nrows, positions)
        self.law = _ReductionLaw(cover, nrows, positions, struct)

    def _default_relators(self, cover):
        """Read each relation row as the element supported on its layer."""
        out = []
        for d in sorted(self.relations):
            layer = self.basis.by_weight[d]
            for row in self.relations[d]:
                vec = [0] * cover.dim
                for local, coeff in enumerate(row):
                    vec[layer[local]] = coeff
                if any(vec):
                    out.append(tuple(vec))
        return tuple(out)

    def _check_graded_consistency(self, cover, nrows, ranks):
        """The closure's leading terms must cut exactly the graded relations."""
        basis = self.basis
        by_weight = {}
        for row in nrows:
            depth = next(i for i, v in enumerate(row) if v)
            d = cover.weights[depth]
            layer = basis.by_weight[d]
            by_weight.setdefault(d, []).append(
                tuple(row[k] for k in layer)
            )
        for d in range(1, basis.nil_class + 1):
            leads = by_weight.get(d, ())
            given = self.relations.get(d, ())
            if len(leads) != ranks[d]:
                raise SpecError(
                    f"relator closure cuts rank {len(leads)} at weight {d}, "
                    f"graded relations cut rank {ranks[d]}"
                )
            for vec in leads:
                if not self._in_row_span(vec, given):
                    raise SpecError(
                        f"relator closure leaves the graded relations at weight {d}"
                    )
            for vec in given:
                if not self._in_row_span(vec, leads):
                    raise SpecError(
                        f"graded relations at weight {d} exceed the relator closure"
                    )

    def _transversal_struct(self, cover, nrows, positions):
        """Structure constants of the graded Lie ring over the kept positions.

        Free brackets of kept basis entries, reduced modulo the leading layer
        of the closure (all leads are 1, so the reduction is integral).
        """
        basis = self.basis
        c = basis.nil_class
        lead_rows = {}  # weight -> [(local depth within layer, layer vector)]
        for row in nrows:
            depth = next(i for i, v in enumerate(row) if v)
            d = cover.weights[depth]
            layer = basis.by_weight[d]
            lead_rows.setdefault(d, []).append(
                (layer.index(depth), [row[k] for k in layer])
            )
        pos_of = {p: k for k, p in enumerate(positions)}
        struct = {}
        for i, pi in enumerate(positions):
            wi = cover.weights[pi]
            for j, pj in enumerate(positions[:i]):
                d = wi + cover.weights[pj]
                if d > c:
                    continue
                image = basis.pair_bracket(pi, pj)
                if not image:
                    continue
                layer = basis.by_weight[d]
                local = [image.get(k, 0) for k in layer]
                for lead, lrow in lead_rows.get(d, ()):
                    m = local[lead]
                    if m:
                        local = [a - m * b for a, b in zip(local, lrow)]
                pairs = tuple(
                    (pos_of[layer[a]], v) for a, v in enumerate(local) if v
                )
                if pairs:
                    struct[(i, j)] = pairs
        return struct

    def _check_ideal(self, cover):
        basis = self.basis
        c = basis.nil_class
        for d in sorted(self.relations):
            rows = self.relations[d]
            if d == c:
                continue
            layer = basis.by_weight[d]
            target_rows = self.relations.get(d + 1, ())
            for row in rows:
                for gen in range(self.rank):
                    image = {}
                    for pos, coeff in enumerate(row):
                        if not coeff:
                            continue
                        for k, sc in basis.pair_bracket(layer[pos], gen).items():
                            image[k] = image.get(k, 0) + coeff * sc
                    if not image:
                        continue
                    next_layer = basis.by_weight[d + 1]
                    vec = [image.get(k, 0) for k in next_layer]
                    if not self._in_row_span(vec, target_rows):
                        raise SpecError(
                            f"relations at weight {d} do not bracket into weight {d + 1}"
                        )

    @staticmethod
    def _in_row_span(vec, rows):
        """Rational membership of ``vec`` in the span of ``rows``."""
        width = len(vec)
        mat = [list(map(Fraction, r)) for r in rows]
        tgt = list(map(Fraction, vec))
        rank_pos = 0
        for j in range(width):
            piv = next((i for i in range(rank_pos, len(mat)) if mat[i][j]), None)
            if piv is None:
                continue
            mat[rank_pos], mat[piv] = mat[piv], mat[rank_pos]
            pr = mat[rank_pos]
            if tgt[j]:
                f = tgt[j] / pr[j]
                tgt = [t - f * x for t, x in zip(tgt, pr)]
            for i in range(len(mat)):
                if i != rank_pos and mat[i][j]:
                    f = mat[i][j] / pr[j]
                    mat[i] = [a - f * b for a, b in zip(mat[i], pr)]
            rank_pos += 1
        return not any(tgt)

    # -- basic queries ----------------------------------------------------

    def identity(self):
        return (0,) * self.dim

    def indicator(self, k):
        out = [0] * self.dim
        out[k] = 1
        return tuple(out)

    def graded_rank(self, d):
        if not 1 <= d <= self.nilpotency_class:
            raise SpecError(f"weight {d} out of range 1..{self.nilpotency_class}")
        return sum(1 for w in self.weights if w == d)

    @property
    def hirsch_length(self):
        return self.dim

    def check_vector(self, g):
        try:
            g = tuple(operator.index(x) for x in g)
        except TypeError as exc:
            raise SpecError(f"coordinates must be integers: {exc}") from exc
        if len(g) != self.dim:
            raise SpecError(f"vector of length {len(g)}, expected {self.dim}")
        return g

    def __eq__(self, other):
        return (
            isinstance(other, GroupSpec)
            and self.rank == other.rank
            and self.nilpotency_class == other.nilpotency_class
            and self.relations == other.relations
            and self.relators == other.relators
        )

    def __hash__(self):
        return hash((self.rank, self.nilpotency_class, self.relators))

    def __repr__(self):
        kind = "quotient" if self.relations else "free"
        return (
            f"GroupSpec({kind}, rank={self.rank}, "
            f"class={self.nilpotency_class}, hirsch={self.dim})"
        )


# ---------------------------------------------------------------------------
# relator quotients


def _xgcd(a, b):
    """Greatest common divisor with Bezout coefficients, gcd positive."""
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


DEFAULT_CLOSURE_BUDGET = 200_000


def _normal_closure(cover, relators, budget=DEFAULT_CLOSURE_BUDGET):
    """Echelon lattice rows generating the normal closure of ``relators``.

    Rows come back by increasing leading coordinate with positive leading
    coefficient and tails reduced at the deeper occupied depths.  The set is
    grown until it is stable under pairwise commutators and commutators with
    the generators, which makes the depth-ordered products of the rows
    exactly the normal closure.
    """
    law = cover.law
    ops = 0

    def charge(n=1):
        nonlocal ops
        ops += n
        if ops > budget:
            raise SpecError(
                f"normal closure exceeded its operation budget ({budget})"
            )

    slots = {}
    pending = [cover.check_vector(r) for r in relators]
    touched = False

    def sift(g):
        nonlocal touched
        while True:
            depth = next((i for i, v in enumerate(g) if v), None)
            if depth is None:
                return
            held = slots.get(depth)
            if held is None:
                if g[depth] < 0:
                    charge()
                    g = law.inverse(g)
                slots[depth] = g
                touched = True
                return
            q, r = divmod(g[depth], held[depth])
            if r == 0:
                charge(2)
                g = law.multiply(law.power(held, -q), g)
                continue
            gcd, x, y = _xgcd(held[depth], g[depth])
            charge(5)
            combined = law.multiply(law.power(held, x), law.power(g, y))
            reduced = law.multiply(law.power(combined, -(g[depth] // gcd)), g)
            slots[depth] = combined
            touched = True
            pending.append(held)
            g = reduced

    directions = []
    for k in range(cover.rank):
        gen = cover.indicator(k)
        charge()
        directions.append(gen)
        directions.append(law.inverse(gen))
    while True:
        while pending:
            sift(pending.pop())
        touched = False
        rows = [slots[d] for d in sorted(slots)]
        for i, row in enumerate(rows):
            charge()
            row_inv = law.inverse(row)
            for other in directions + rows[:i]:
                charge(4)
                sift(
                    law.multiply(
                        law.multiply(
                            law.multiply(row_inv, law.inverse(other)), row
                        ),
                        other,
                    )
                )
        if not touched and not pending:
            break
    depths = sorted(slots)
    rows = [slots[d] for d in depths]
    for i in range(len(rows) - 1, -1, -1):
        row = rows[i]
        for j in range(i + 1, len(rows)):
            v = row[depths[j]]
            if v:
                charge(2)
                row = law.multiply(row, law.power(rows[j], -v))
        rows[i] = row
    return tuple(rows)


class _ReductionLaw:
    """Group law of a relator quotient, by reduction in the free cover.

    Elements are integer exponent tuples along the free basis entries at the
    kept ``positions``; the canonical representative of a coset is the free
    vector vanishing at every lattice depth.  Clearing the depths in
    increasing order is exact: each lattice row has leading coefficient 1
    and no coordinates below its own depth, and the multiplication
    polynomials mix strictly lighter coordinates of both factors only.
    """

    def __init__(self, cover, nrows, positions, struct):
        self.cover = cover
        self.nrows = nrows
        self.depths = tuple(next(i for i, v in enumerate(r) if v) for r in nrows)
        self.positions = positions
        self.weights = tuple(cover.weights[p] for p in positions)
        self.dim = len(positions)
        self.nil_class = cover.nilpotency_class
        self.struct = struct
        self._graded = CollectionLaw(self.weights, self.nil_class, struct, None)

    def lift(self, g):
        out = [0] * self.cover.dim
        for p, v in zip(self.positions, g):
            out[p] = v
        return tuple(out)

    def reduce(self, vec):
        """Quotient coordinates of an arbitrary free-cover element."""
        law = self.cover.law
        for row, depth in zip(self.nrows, self.depths):
            v = vec[depth]
            if v:
                vec = law.multiply(law.power(row, -v), vec)
        assert not any(vec[d] for d in self.depths)
        return tuple(vec[p] for p in self.positions)

    def multiply(self, g, h):
        return self.reduce(self.cover.law.multiply(self.lift(g), self.lift(h)))

    def inverse(self, g):
        return self.reduce(self.cover.law.inverse(self.lift(g)))

    def power(self, g, n):
        return self.reduce(self.cover.law.power(self.lift(g), n))

    def right_multiplier(self, h):
        free_rmul = self.cover.law.right_multiplier(self.lift(h))

        def rmul(g):
            return self.reduce(free_rmul(self.lift(g)))

        return rmul

    def bracket_vec(self, x, y):
        return self._graded.bracket_vec(x, y)


# ---------------------------------------------------------------------------
# group operations


def identity(spec):
    return spec.identity()


def multiply(g, h, spec):
    g = spec.check_vector(g)
    h = spec.check_vector(h)
    try:
        return spec.law.multiply(g, h)
    except ExactDivisionError as exc:
        raise IntegralityError(str(exc)) from exc


def inverse(g, spec):
    g = spec.check_vector(g)
    try:
        return spec.law.inverse(g)
    except ExactDivisionError as exc:
        raise IntegralityError(str(exc)) from exc


def power(g, n, spec):
    g = spec.check_vector(g)
    try:
        return spec.law.power(g, int(n))
    except ExactDivisionError as exc:
        raise IntegralityError(str(exc)) from exc


def commutator(g, h, spec):
    """Group commutator ``g^-1 h^-1 g h``."""
    gi = inverse(g, spec)
    hi = inverse(h, spec)
    return multiply(multiply(multiply(gi, hi, spec), g, spec), h, spec)


def conjugate(g, h, spec):
    """``h^-1 g h``."""
    return multiply(multiply(inverse(h, spec), g, spec), h, spec)


def eval_word(word, spec):
    """Evaluate a word over the generators into coordinates."""
    if isinstance(word, str):
        word = WordExpr.parse(word)
    letters = word.letters if isinstance(word, WordExpr) else tuple(word)
    out = spec.identity()
    for gen, e in letters:
        if not 0 <= gen < spec.rank:
            raise SpecError(f"generator index {gen} out of range 0..{spec.rank - 1}")
        if e:
            out = multiply(out, power(spec.indicator(gen), e, spec), spec)
    return out


def project(g, k, spec):
    """Coordinates of the image in the class-(k-1) truncation.

    Keeps the coordinates of weight below ``k``; valid for ``2 <= k <=
    class + 1`` (the top value is the identity map).
    """
    g = spec.check_vector(g)
    if not 2 <= k <= spec.nilpotency_class + 1:
        raise SpecError(
            f"truncation weight {k} out of range 2..{spec.nilpotency_class + 1}"
        )
    return tuple(v for v, w in zip(g, spec.weights) if w < k)


def rewrite_mod_last_term(g, spec):
    """Split ``g = g' * z`` with ``g'`` top-weight-free and ``z`` central.

    ``g'`` carries the coordinates of weight below the class with the
    top-weight slots zeroed; ``z`` lands in the last lower-central term.
    """
    if spec.nilpotency_class < 2:
        raise SpecError("group is abelian; no top term to split off")
    g = spec.check_vector(g)
    c = spec.nilpotency_class
    trimmed = tuple(0 if w == c else v for v, w in zip(g, spec.weights))
    z = multiply(inverse(trimmed, spec), g, spec)
    assert all(w == c or v == 0 for v, w in zip(z, spec.weights))
    return trimmed, z


def _root(value, w):
    if value <= 1 or w == 1:
        return float(value)
    return math.exp(math.log(value) / w)


def karidi_length(g, spec):
    """Box-length proxy for the word metric: ``max_i |e_i|^(1/w_i)``."""
    g = spec.check_vector(g)
    value = 0.0
    for v, w in zip(g, spec.weights):
        if v:
            value = max(value, _root(abs(v), w))
    return KaridiEstimate(value=value, box_constant=spec._karidi_constant)


# ---------------------------------------------------------------------------
# metric balls


class _Ball:
    """Incrementally grown word-metric ball for one generating set."""

    def __init__(self, spec, genset):
        self.spec = spec
        directions = []
        seen = set()
        for g in genset:
            for vec in (tuple(g), inverse(g, spec)):
                if vec != spec.identity() and vec not in seen:
                    seen.add(vec)
                    directions.append(spec.law.right_multiplier(vec))
        self.directions = directions
        self.dist = {spec.identity(): 0}
        self.frontier = [spec.identity()]
        self.radius = 0

    def expand_to(self, radius, budget):
        while self.radius < radius and self.frontier:
            new = []
            dist = self.dist
            r = self.radius + 1
            for g in self.frontier:
                for rmul in self.directions:
                    h = rmul(g)
                    if h not in dist:
                        dist[h] = r
                        new.append(h)
                        if len(dist) > budget:
                            raise BallBudgetExceeded(
                                f"ball budget {budget} exceeded at radius {r} "
                                f"({len(dist)} elements)"
                            )
            self.frontier = new
            self.radius = r


def _normalized_genset(spec, genset):
    if genset is None:
        return spec.generating_set
    return tuple(spec.check_vector(g) for g in genset)


def _get_ball(spec, genset):
    key = _normalized_genset(spec, genset)
    ball = spec._balls.get(key)
    if ball is None:
        ball = _Ball(spec, key)
        spec._balls[key] = ball
    return ball


def bfs_ball(spec, radius, genset=None, budget=DEFAULT_BALL_BUDGET):
    """Word lengths of all elements within ``radius``: ``{vector: length}``.

    The returned mapping may be the live cache for the generating set;
    treat it as read-only.  Results depend only on the requested radius,
    never on how far earlier calls grew the cache.
    """
    ball = _get_ball(spec, genset)
    ball.expand_to(radius, budget)
    if ball.radius <= radius:
        return ball.dist
    return {g: d for g, d in ball.dist.items() if d <= radius}


def geodesic_length(g, spec, radius_cap=DEFAULT_RADIUS_CAP, genset=None,
                    budget=DEFAULT_BALL_BUDGET):
    """Exact word length if within ``radius_cap``, else ``None`` (unknown)."""
    g = spec.check_vector(g)
    ball = _get_ball(spec, genset)
    found = ball.dist.get(g)
    if found is None:
        while ball.radius < radius_cap and ball.frontier:
            ball.expand_to(ball.radius + 1, budget)
            found = ball.dist.get(g)
            if found is not None:
                break
    if found is not None and found > radius_cap:
        # a deeper cached ball must not change the answer for this cap
        return None
    return found


def karidi_band(spec, radius=8, genset=None, budget=DEFAULT_BALL_BUDGET):
    """Measured ratio band between word length and box length over a ball.

    Fits the two-sided comparison constant and records it on the spec so
    later :func:`karidi_length` calls report it.
    """
    dist = bfs_ball(spec, radius, genset=genset, budget=budget)
    lower = math.inf
    upper = 0.0
    count = 0
    for vec, length in dist.items():
        if length == 0:
            continue
        box = karidi_length(vec, spec).value
        ratio = length / box
        lower = min(lower, ratio)
        upper = max(upper, ratio)
        count += 1
    if count == 0:
        raise SpecError("ball too small to fit a comparison band")
    constant = max(upper, 1.0 / lower if lower > 0 else math.inf, 1.0 + 1e-9)
    spec._karidi_constant = constant
    return KaridiBand(lower=lower, upper=upper, constant=constant,
                      radius=radius, size=count)


# ---------------------------------------------------------------------------
# serialization


def _encode_int(v):
    return v if abs(v) < JSON_INT_LIMIT else str(v)


def _decode_int(v):
    if isinstance(v, bool):
        raise SpecFormatError(f"expected integer, got {v!r}")
    if isinstance(v, int):
        return v
    if isinstance(v, str):
        try:
            return int(v, 10)
        except ValueError as exc:
            raise SpecFormatError(f"bad integer literal {v!r}") from exc
    raise SpecFormatError(f"expected integer or decimal string, got {v!r}")


def vector_to_json(g):
    return [_encode_int(int(v)) for v in g]


def vector_from_json(data, spec=None):
    if not isinstance(data, list):
        raise SpecFormatError("vector must be a JSON array")
    vec = tuple(_decode_int(v) for v in data)
    if spec is not None and len(vec) != spec.dim:
        raise SpecFormatError(
            f"vector of length {len(vec)}, expected {spec.dim}"
        )
    return vec


def spec_to_json(spec):
    out = {
        "rank": spec.rank,
        "class": spec.nilpotency_class,
        "convention": "left-collected",
    }
    if spec.relations:
        out["relations"] = {
            str(d): [[int(x) for x in row] for row in rows]
            for d, rows in sorted(spec.relations.items())
        }
        out["relators"] = [vector_to_json(r) for r in spec.relators]
    default_gens = tuple(spec.indicator(k) for k in range(spec.rank))
    if spec.generating_set != default_gens:
        out["generating_set"] = [vector_to_json(g) for g in spec.generating_set]
    return out


def spec_from_json(data):
    if not isinstance(data, dict):
        raise SpecFormatError("spec must be a JSON object")
    for key in ("rank", "class", "convention"):
        if key not in data:
            raise SpecFormatError(f"spec is missing {key!r}")
    if data["convention"] != "left-collected":
        raise SpecFormatError(
            f"unsupported convention {data['convention']!r}"
        )
    rank = _decode_int(data["rank"])
    nil_class = _decode_int(data["class"])
    if rank < 1 or nil_class < 1:
        raise SpecFormatError("rank and class must be positive")
    relations = None
    if "relations" in data and data["relations"]:
        if not isinstance(data["relations"], dict):
            raise SpecFormatError("relations must map weights to matrices")
        relations = {}
        for key, rows in data["relations"].items():
            try:
                d = int(key)
            except ValueError as exc:
                raise SpecFormatError(f"bad relation weight {key!r}") from exc
            relations[d] = [[_decode_int(x) for x in row] for row in rows]
    basis = HallBasis(rank, nil_class)
    relators = None
    if "relators" in data and data["relators"]:
        if relations is None:
            raise SpecFormatError("relators given without relations")
        relators = [vector_from_json(r) for r in data["relators"]]
    genset = None
    if "generating_set" in data:
        genset = [vector_from_json(g) for g in data["generating_set"]]
    try:
        return GroupSpec(
            basis, relations=relations, relators=relators, generating_set=genset
        )
    except SpecError:
        raise
    except ValueError as exc:
        raise SpecFormatError(str(exc)) from exc
