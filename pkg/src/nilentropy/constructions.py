"""Group constructions: free quotients, subgroups, semidirect extensions,
surface-relator quotients, and the central series on either side.
"""

from __future__ import annotations

import math
import warnings
from fractions import Fraction
from functools import lru_cache

import sympy

from . import autom, nilgroup
from .autom import Endomorphism, apply, invert, iterate, linearization_matrix, spectral_report, abelianization_matrix
from .hall import HallBasis, LieElement, bracket
from .nilgroup import (
    GroupSpec,
    GrowthWarning,
    SpecError,
    bfs_ball,
    commutator,
    inverse,
    multiply,
    power,
)


@lru_cache(maxsize=None)
def free_nilpotent(rank, nil_class):
    """Free nilpotent group of the given rank and class (cached)."""
    return GroupSpec(HallBasis(rank, nil_class))


def truncate(spec, k):
    """Quotient by the k-th lower central term: a spec of class ``k - 1``."""
    if not 2 <= k <= spec.nilpotency_class + 1:
        raise SpecError(
            f"truncation weight {k} out of range 2..{spec.nilpotency_class + 1}"
        )
    if k == spec.nilpotency_class + 1:
        return spec
    if spec.relations is None:
        return free_nilpotent(spec.rank, k - 1)
    relations = {d: rows for d, rows in spec.relations.items() if d < k}
    cover = free_nilpotent(spec.rank, k - 1)
    cut = [tuple(r[:cover.dim]) for r in spec.relators]
    relators = [r for r in cut if any(r)]
    return GroupSpec(
        HallBasis(spec.rank, k - 1),
        relations=relations or None,
        relators=relators or None,
        free_cover=cover,
    )


# ---------------------------------------------------------------------------
# subgroup lattices


class SubgroupLattice:
    """Echelonized polycyclic generating sequence for a subgroup.

    ``rows`` are coordinate vectors whose leading (lowest-index nonzero)
    coordinates are strictly increasing, with positive leading entries.
    Membership reduces leading coordinates in order; the quotient exponents
    are the subgroup's own coordinates.
    """

    def __init__(self, spec, rows):
        self.spec = spec
        self.rows = tuple(tuple(r) for r in rows)
        self.depths = tuple(self._depth(r) for r in self.rows)

    @staticmethod
    def _depth(vec):
        for i, v in enumerate(vec):
            if v:
                return i
        return None

    def __len__(self):
        return len(self.rows)

    def __repr__(self):
        return f"SubgroupLattice(hirsch={len(self.rows)}, spec={self.spec!r})"

    @property
    def hirsch_length(self):
        return len(self.rows)

    def reduce(self, g):
        """Coefficients of ``g`` along the rows, or ``None`` if not a member."""
        spec = self.spec
        g = spec.check_vector(g)
        coeffs = [0] * len(self.rows)
        while True:
            d = self._depth(g)
            if d is None:
                return tuple(coeffs)
            try:
                pos = self.depths.index(d)
            except ValueError:
                return None
            q, r = divmod(g[d], self.rows[pos][d])
            if r:
                return None
            coeffs[pos] = q
            g = multiply(power(self.rows[pos], -q, spec), g, spec)

    def __contains__(self, g):
        return self.reduce(g) is not None

    def member_from_coefficients(self, coeffs):
        spec = self.spec
        out = spec.identity()
        for row, c in zip(self.rows, coeffs):
            if c:
                out = multiply(out, power(row, c, spec), spec)
        return out

    def abelianized_index(self):
        """Index of the image in ``G/[G,G]``; ``None`` when infinite."""
        spec = self.spec
        weight1 = [k for k, w in enumerate(spec.weights) if w == 1]
        leads = {}
        for row, d in zip(self.rows, self.depths):
            if d in weight1:
                leads[d] = abs(row[d])
        if len(leads) != len(weight1):
            return None
        return math.prod(leads.values())

    def index(self):
        """Full index in the ambient group; ``None`` when infinite."""
        if len(self.rows) != self.spec.dim:
            return None
        return math.prod(abs(r[d]) for r, d in zip(self.rows, self.depths))


def subgroup_closure(spec, generators, budget=100_000):
    """Lattice for the subgroup generated by ``generators``.

    Sifts generators into echelon slots, combining coincident depths with
    an extended-gcd pair of powers and queueing commutators so the final
    sequence is closed under the group operations.
    """
    slots = {}

    def sift(g):
        while True:
            d = SubgroupLattice._depth(g)
            if d is None:
                return None
            held = slots.get(d)
            if held is None:
                return g
            q, r = divmod(g[d], held[d])
            if r == 0:
                g = multiply(power(held, -q, spec), g, spec)
                continue
            gcd, x, y = _xgcd(held[d], g[d])
            combined = multiply(
                power(held, x, spec), power(g, y, spec), spec
            )
            reduced = multiply(power(combined, -(g[d] // gcd), spec), g, spec)
            slots[d] = combined
            queue.append(held)  # re-sift the displaced row
            queue.extend(_closure_commutators(combined))
            g = reduced

    def _closure_commutators(h):
        out = []
        for other in list(slots.values()):
            if other is not h:
                out.append(commutator(h, other, spec))
        return out

    queue = [spec.check_vector(g) for g in generators]
    steps = 0
    while queue:
        steps += 1
        if steps > budget:
            raise SpecError(f"subgroup closure exceeded {budget} sift steps")
        g = queue.pop()
        g = sift(g)
        if g is None:
            continue
        d = SubgroupLattice._depth(g)
        if g[d] < 0:
            g = inverse(g, spec)
        slots[d] = g
        queue.extend(_closure_commutators(g))

    rows = [slots[d] for d in sorted(slots)]
    lattice = _normalize_rows(spec, rows)
    for a in lattice.rows:
        for b in lattice.rows:
            if commutator(a, b, spec) not in lattice:
                raise SpecError("subgroup closure failed to stabilize")
    return lattice


def _xgcd(a, b):
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


def _normalize_rows(spec, rows):
    """Make leading entries positive and reduce entries above each pivot."""
    rows = [tuple(r) for r in rows]
    out = []
    for row in rows:
        d = SubgroupLattice._depth(row)
        if row[d] < 0:
            row = inverse(row, spec)
        out.append(row)
    for i in range(len(out) - 1, -1, -1):
        for j in range(i + 1, len(out)):
            dj = SubgroupLattice._depth(out[j])
            q = out[i][dj] // out[j][dj]
            if q:
                out[i] = multiply(out[i], power(out[j], -q, spec), spec)
    return SubgroupLattice(spec, out)


def lower_central_series(spec, budget=100_000):
    """Lattices of the lower central terms, from the whole group down.

    Returns ``[G, [G,G], ...]`` ending with the last nontrivial term.
    """
    full = subgroup_closure(
        spec, [spec.indicator(k) for k in range(spec.dim)], budget=budget
    )
    series = [full]
    gens = [spec.indicator(k) for k in range(spec.rank)]
    current = full
    while True:
        comms = [
            commutator(row, g, spec)
            for row in current.rows
            for g in gens
        ]
        comms = [c for c in comms if c != spec.identity()]
        if not comms:
            break
        nxt = subgroup_closure(spec, comms, budget=budget)
        # absorb conjugation defects until the term is invariant
        while True:
            extra = [
                commutator(row, g, spec)
                for row in nxt.rows
                for g in gens
                if commutator(row, g, spec) not in nxt
            ]
            if not extra:
                break
            nxt = subgroup_closure(spec, list(nxt.rows) + extra, budget=budget)
        if nxt.hirsch_length == 0:
            break
        series.append(nxt)
        current = nxt
    return series


def quotient_ranks(series):
    """Hirsch lengths of successive quotients of a subgroup chain."""
    out = []
    for a, b in zip(series, series[1:]):
        out.append(a.hirsch_length - b.hirsch_length)
    if series:
        out.append(series[-1].hirsch_length)
    return tuple(out)


# ---------------------------------------------------------------------------
# semidirect extensions by one unipotent automorphism


class SemidirectSpec:
    """Split extension of a base spec by one integer automorphism.

    Elements are pairs ``(k, n)`` with ``k`` the exponent of the stable
    letter and ``n`` a base coordinate vector; products follow
    ``(k1, n1)(k2, n2) = (k1 + k2, monodromy^(-k2)(n1) * n2)``.
    """

    def __init__(self, base, monodromy):
        self.base = base
        self.monodromy = monodromy
        if not autom.is_automorphism(monodromy):
            raise SpecError("monodromy must be an automorphism")
        report = spectral_report(abelianization_matrix(monodromy))
        if not report.unipotent:
            raise SpecError(
                "monodromy must act unipotently on the base homology"
            )
        self._inverse = invert(monodromy)
        self._power_cache = {}
        self.nilpotency_class = self._compute_class()

    @property
    def hirsch_length(self):
        return self.base.dim + 1

    def identity(self):
        return (0, self.base.identity())

    def monodromy_power(self, k, n):
        """Apply the k-th power of the monodromy (k any integer)."""
        if k == 0:
            return tuple(n)
        phi = self.monodromy if k > 0 else self._inverse
        out = tuple(n)
        for _ in range(abs(k)):
            out = apply(phi, out)
        return out

    def multiply(self, a, b):
        k1, n1 = a
        k2, n2 = b
        return (
            k1 + k2,
            multiply(self.monodromy_power(-k2, n1), n2, self.base),
        )

    def inverse_element(self, a):
        k, n = a
        return (-k, self.monodromy_power(k, inverse(n, self.base)))

    def commutator_element(self, a, b):
        ai = self.inverse_element(a)
        bi = self.inverse_element(b)
        return self.multiply(self.multiply(self.multiply(ai, bi), a), b)

    def generators(self):
        gens = [(1, self.base.identity())]
        gens += [(0, self.base.indicator(k)) for k in range(self.base.rank)]
        return gens

    def _compute_class(self):
        """Nilpotency class via the lower central series of the extension.

        Every term from the second on lies in the base, so the closure runs
        in base coordinates; commutation with the stable letter contributes
        the monodromy defect ``n^-1 phi^-1(n)``.
        """
        base = self.base
        bound = self.hirsch_length + 1
        gens = self.generators()
        comms = []
        for i, a in enumerate(gens):
            for b in gens[:i]:
                k, n = self.commutator_element(a, b)
                assert k == 0
                if n != base.identity():
                    comms.append(n)
        level = 1
        current = subgroup_closure(base, comms) if comms else None
        while current is not None and current.hirsch_length > 0:
            level += 1
            if level > bound:
                raise SpecError(
                    f"lower central series still nontrivial beyond class {bound}"
                )
            nxt_gens = []
            for row in current.rows:
                defect = multiply(
                    inverse(row, base), self.monodromy_power(-1, row), base
                )
                if defect != base.identity():
                    nxt_gens.append(defect)
                for k in range(base.rank):
                    c = commutator(row, base.indicator(k), base)
                    if c != base.identity():
                        nxt_gens.append(c)
            if not nxt_gens:
                break
            nxt = subgroup_closure(base, nxt_gens)
            while True:
                extra = []
                for row in nxt.rows:
                    defect = multiply(
                        inverse(row, base), self.monodromy_power(-1, row), base
                    )
                    if defect not in nxt:
                        extra.append(defect)
                    for k in range(base.rank):
                        c = commutator(row, base.indicator(k), base)
                        if c not in nxt:
                            extra.append(c)
                if not extra:
                    break
                nxt = subgroup_closure(base, list(nxt.rows) + extra)
            if nxt.hirsch_length == 0:
                break
            if nxt.hirsch_length == current.hirsch_length and set(nxt.rows) == set(current.rows):
                raise SpecError(
                    "lower central series stalled; extension is not nilpotent"
                )
            current = nxt
        return level

    def __repr__(self):
        return (
            f"SemidirectSpec(base={self.base!r}, "
            f"class={self.nilpotency_class})"
        )


def semidirect_unipotent(base, monodromy):
    """Extension of ``base`` by a homologically unipotent automorphism."""
    if monodromy.spec != base:
        raise SpecError("monodromy is not an endomorphism of the base")
    return SemidirectSpec(base, monodromy)


# ---------------------------------------------------------------------------
# upper central series (computed on the rational Lie algebra)


def _lie_struct_matrices(spec):
    """ad-matrices of the coordinate basis over the rationals."""
    n = spec.dim
    law = spec.law
    mats = []
    for j in range(n):
        unit = {j: Fraction(1)}
        cols = []
        for i in range(n):
            img = law.bracket_vec({i: Fraction(1)}, unit)
            cols.append([img.get(k, 0) for k in range(n)])
        mats.append(sympy.Matrix(n, n, lambda r, c: sympy.Rational(cols[c][r])))
    return mats


def _semidirect_lie_matrices(sd):
    """ad-matrices for base Lie algebra extended by the monodromy logarithm."""
    base = sd.base
    n = base.dim
    phi_mat = linearization_matrix(sd.monodromy)
    nilp = phi_mat - sympy.eye(n)
    p = nilp
    k = 1
    log_m = sympy.zeros(n, n)
    while not p.is_zero_matrix:
        log_m += sympy.Rational((-1) ** (k + 1), k) * p
        p = p * nilp
        k += 1
        if k > n + 1:
            raise SpecError("monodromy linearization is not unipotent")
    base_mats = _lie_struct_matrices(base)
    dim = n + 1
    mats = []
    for j in range(n):
        m = sympy.zeros(dim, dim)
        m[:n, :n] = base_mats[j]
        # [T, Y_j] column: the log of the monodromy applied to Y_j
        m[:n, n] = -log_m[:, j]
        mats.append(m)
    t_mat = sympy.zeros(dim, dim)
    t_mat[:n, :n] = log_m
    mats.append(t_mat)
    return mats


def upper_central_lengths(spec_or_semidirect):
    """Length of the upper central series of the rational Lie structure.

    Iterates the center via kernel-of-adjoint linear algebra on the
    structure constants and returns the number of steps needed to exhaust
    the algebra.  Computed on the Lie side; agreement with the group-level
    series is checked on worked examples, not assumed.
    """
    return len(upper_central_dimensions(spec_or_semidirect))


def upper_central_dimensions(spec_or_semidirect):
    """Dimensions of successive upper central quotients of the Lie algebra."""
    if isinstance(spec_or_semidirect, SemidirectSpec):
        mats = _semidirect_lie_matrices(spec_or_semidirect)
    else:
        mats = _lie_struct_matrices(spec_or_semidirect)
    n = mats[0].shape[0] if mats else 0
    if n == 0:
        return ()
    center_basis = sympy.zeros(n, 0)
    lengths = []
    while center_basis.shape[1] < n:
        # left annihilator of the current center's column span
        comp = center_basis.T.nullspace()
        w = sympy.Matrix([list(v.T) for v in comp]) if comp else None
        rows = []
        for m in mats:
            cond = w * m if w is not None else m
            rows.extend(cond.tolist())
        cond_matrix = sympy.Matrix(rows)
        next_center = cond_matrix.nullspace()
        new_basis = (
            sympy.Matrix.hstack(*next_center) if next_center else sympy.zeros(n, 0)
        )
        if new_basis.shape[1] <= center_basis.shape[1]:
            raise SpecError("upper central series stalled; algebra not nilpotent")
        lengths.append(new_basis.shape[1] - center_basis.shape[1])
        center_basis = new_basis
    return tuple(lengths)


# ---------------------------------------------------------------------------
# surface relator quotients


def surface_quotient(genus, nil_class):
    """Class-c quotient of the genus-g surface group.

    The graded relations are the ideal generated by the relator's degree-2
    class (whose quotient pieces match the group's lower central ranks with
    no torsion); the group law itself is cut by the honest surface relator
    ``[x1,x2]...[x{2g-1},x{2g}]`` in the free cover.
    """
    if genus < 1:
        raise SpecError(f"genus must be >= 1, got {genus}")
    if nil_class < 2:
        raise SpecError("surface quotients need class >= 2")
    rank = 2 * genus
    basis = HallBasis(rank, nil_class)
    omega = LieElement(basis)
    for i in range(genus):
        a = LieElement.from_entry(basis, 2 * i)
        b = LieElement.from_entry(basis, 2 * i + 1)
        omega = omega + bracket(a, b, basis)
    layers = {2: [omega]}
    for d in range(3, nil_class + 1):
        prev = layers[d - 1]
        nxt = []
        for el in prev:
            for g in range(rank):
                img = bracket(el, LieElement.from_entry(basis, g), basis)
                if not img.is_zero():
                    nxt.append(img)
        layers[d] = nxt
    relations = {}
    for d, els in layers.items():
        layer = basis.by_weight[d]
        rows = []
        for el in els:
            rows.append(tuple(el.coeffs.get(k, 0) for k in layer))
        if rows:
            relations[d] = rows
    cover = free_nilpotent(rank, nil_class)
    relator = cover.identity()
    for i in range(genus):
        relator = multiply(
            relator,
            commutator(cover.indicator(2 * i), cover.indicator(2 * i + 1), cover),
            cover,
        )
    return GroupSpec(
        basis,
        relations=relations,
        relators=[relator],
        free_cover=cover,
    )


def relator_check(images, genus, nil_class, search_radius=4,
                  budget=nilgroup.DEFAULT_BALL_BUDGET):
    """Test whether generator images respect the surface relator.

    Evaluates the relator over the images inside the free class-c group and
    searches the metric ball for a conjugator sending it to the relator or
    its inverse.  Returns ``False`` (with a warning carrying the exhausted
    radius) when the search finds nothing.
    """
    rank = 2 * genus
    spec = free_nilpotent(rank, nil_class)
    images = [spec.check_vector(g) for g in images]
    if len(images) != rank:
        raise SpecError(f"{len(images)} images for {rank} generators")

    def relator_over(gens):
        out = spec.identity()
        for i in range(genus):
            out = multiply(
                out, commutator(gens[2 * i], gens[2 * i + 1], spec), spec
            )
        return out

    target = relator_over(images)
    base = relator_over([spec.indicator(k) for k in range(rank)])
    candidates = [base, inverse(base, spec)]
    # quick graded screen: conjugation cannot move the degree-2 class
    w2 = [k for k, w in enumerate(spec.weights) if w == 2]
    t2 = tuple(target[k] for k in w2)
    if t2 not in (
        tuple(base[k] for k in w2),
        tuple(inverse(base, spec)[k] for k in w2),
    ):
        return False
    ball = bfs_ball(spec, search_radius, budget=budget)
    for h in ball:
        hi = inverse(h, spec)
        for cand in candidates:
            if multiply(multiply(hi, cand, spec), h, spec) == target:
                return True
    warnings.warn(
        f"no conjugator within radius {search_radius}",
        GrowthWarning,
        stacklevel=2,
    )
    return False
