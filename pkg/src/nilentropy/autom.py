"""Endomorphisms of nilpotent group specs and their linear invariants.

An endomorphism is stored by its generator images.  Images of the remaining
basis elements are derived as iterated group commutators of those, so every
evaluation stays inside exact group arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import sympy

from . import nilgroup
from .nilgroup import GroupSpec, SpecError, multiply, inverse, power, commutator

IntegerMatrix = tuple


def _as_matrix_rows(m):
    """Rows of a square matrix as exact rationals (ints where possible)."""
    if isinstance(m, sympy.MatrixBase):
        m = m.tolist()
    rows = []
    for row in m:
        out = []
        for x in row:
            r = sympy.Rational(x)
            out.append(int(r) if r.is_integer else r)
        rows.append(tuple(out))
    rows = tuple(rows)
    if not rows or any(len(r) != len(rows) for r in rows):
        raise SpecError("expected a square matrix")
    return rows


def mat_identity(n):
    return tuple(tuple(int(i == j) for j in range(n)) for i in range(n))


def mat_mul(a, b):
    n = len(a)
    k = len(b)
    m = len(b[0])
    return tuple(
        tuple(sum(a[i][t] * b[t][j] for t in range(k)) for j in range(m))
        for i in range(n)
    )


class Endomorphism:
    """Endomorphism given by generator images in Mal'cev coordinates."""

    __slots__ = ("spec", "images", "_basis_images", "_powers")

    def __init__(self, spec, images):
        if len(images) != spec.rank:
            raise SpecError(
                f"{len(images)} images for {spec.rank} generators"
            )
        self.spec = spec
        self.images = tuple(spec.check_vector(g) for g in images)
        self._basis_images = None
        self._powers = {}

    @property
    def basis_images(self):
        """Images of all basis elements, derived by commutator trees.

        Each basis element is a commutator tree in the generators, so its
        image is the same tree over the generator images; for a quotient spec
        the trees are the free-cover entries at the kept positions.
        """
        if self._basis_images is None:
            spec = self.spec
            if spec.relations is None:
                entries = spec.basis.entries
            else:
                entries = [spec.basis.entries[p] for p in spec._positions]
            cached = {}

            def tree_image(entry):
                got = cached.get(entry)
                if got is None:
                    if entry.is_generator():
                        got = self.images[entry.gen]
                    else:
                        got = commutator(
                            tree_image(entry.left), tree_image(entry.right), spec
                        )
                    cached[entry] = got
                return got

            self._basis_images = tuple(tree_image(e) for e in entries)
        return self._basis_images

    def __eq__(self, other):
        return (
            isinstance(other, Endomorphism)
            and self.spec == other.spec
            and self.images == other.images
        )

    def __hash__(self):
        return hash(self.images)

    def __repr__(self):
        return f"Endomorphism(spec={self.spec!r}, images={self.images!r})"


def identity_endomorphism(spec):
    return Endomorphism(spec, [spec.indicator(k) for k in range(spec.rank)])


def apply(phi, g):
    """Image of ``g``: the product of basis images raised to its exponents."""
    spec = phi.spec
    g = spec.check_vector(g)
    images = phi.basis_images
    out = spec.identity()
    for k, e in enumerate(g):
        if e:
            out = multiply(out, power(images[k], e, spec), spec)
    return out


def compose(phi, psi):
    """``compose(phi, psi)(g) = phi(psi(g))``."""
    if phi.spec != psi.spec:
        raise SpecError("endomorphisms live on different specs")
    return Endomorphism(phi.spec, [apply(phi, img) for img in psi.images])


def iterate(phi, n):
    """``phi`` composed with itself ``n`` times (``n >= 0``)."""
    if n < 0:
        raise SpecError("iterate exponent must be non-negative")
    cached = phi._powers.get(n)
    if cached is not None:
        return cached
    if n == 0:
        result = identity_endomorphism(phi.spec)
        phi._powers[0] = result
        return result
    best = max((k for k in phi._powers if 1 <= k <= n), default=0)
    if best == 0:
        phi._powers[1] = phi
        best = 1
    result = phi._powers[best]
    for k in range(best + 1, n + 1):
        result = compose(phi, result)
        phi._powers[k] = result
    return result


def abelianization_matrix(phi):
    """Action on ``G/[G,G]``: columns are the weight-1 parts of the images."""
    m = phi.spec.rank
    return tuple(
        tuple(phi.images[j][i] for j in range(m)) for i in range(m)
    )


def graded_matrix(phi, d):
    """Action on the weight-``d`` graded piece (columns = basis images)."""
    spec = phi.spec
    if not 1 <= d <= spec.nilpotency_class:
        raise SpecError(
            f"weight {d} out of range 1..{spec.nilpotency_class}"
        )
    idxs = [k for k, w in enumerate(spec.weights) if w == d]
    images = phi.basis_images
    return tuple(
        tuple(images[j][i] for j in idxs) for i in idxs
    )


def linearization_matrix(phi):
    """Rational matrix of the induced map on the Mal'cev Lie algebra.

    For a free spec this is computed in coordinates of the first kind.  For
    a quotient spec the matrix is the Jacobian of the coordinate action at
    the identity (columns are the basis images); both charts are adapted to
    the weight filtration, so the matrix is block triangular with the graded
    actions on the diagonal either way.
    """
    spec = phi.spec
    n = spec.dim
    images = phi.basis_images
    if spec.relations is not None:
        return sympy.Matrix(n, n, lambda i, k: sympy.Integer(images[k][i]))
    law = spec.law
    image_logs = [law.pack(img) for img in images]
    v = sympy.Matrix(
        n, n, lambda i, k: sympy.Rational(law.log_vectors[k].get(i, 0))
    )
    p = sympy.Matrix(
        n, n, lambda i, k: sympy.Rational(image_logs[k].get(i, 0))
    )
    return p * v.inv()


def is_homologically_trivial(phi):
    """True when the abelianized action is the identity."""
    return abelianization_matrix(phi) == mat_identity(phi.spec.rank)


def is_automorphism(phi):
    """True when every graded piece is acted on invertibly over the integers."""
    spec = phi.spec
    for d in range(1, spec.nilpotency_class + 1):
        m = graded_matrix(phi, d)
        if not m:
            continue
        det = int(sympy.Matrix(m).det())
        if det not in (1, -1):
            return False
    return True


def invert(phi):
    """Inverse automorphism, found by weight-by-weight correction.

    Starts from the inverse on the abelianization and repairs the defect on
    each graded piece; the graded matrices are unimodular so the corrections
    stay integral.
    """
    spec = phi.spec
    if not is_automorphism(phi):
        raise SpecError("endomorphism is not invertible over the integers")
    m = spec.rank
    a = sympy.Matrix(abelianization_matrix(phi))
    a_inv = a.inv()
    images = []
    for j in range(m):
        img = spec.identity()
        for i in range(m):
            e = a_inv[i, j]
            assert e.is_integer
            if e:
                img = multiply(img, power(spec.indicator(i), int(e), spec), spec)
        images.append(img)
    psi = Endomorphism(spec, images)
    for d in range(2, spec.nilpotency_class + 1):
        idxs = [k for k, w in enumerate(spec.weights) if w == d]
        if not idxs:
            continue
        g_inv = sympy.Matrix(graded_matrix(phi, d)).inv()
        new_images = []
        dirty = False
        for j in range(m):
            defect = multiply(
                inverse(apply(phi, psi.images[j]), spec), spec.indicator(j), spec
            )
            if defect == spec.identity():
                new_images.append(psi.images[j])
                continue
            assert all(
                v == 0 for v, w in zip(defect, spec.weights) if w < d
            ), "defect below the current weight"
            rhs = sympy.Matrix([defect[k] for k in idxs])
            corr = g_inv * rhs
            fix = [0] * spec.dim
            for pos, k in enumerate(idxs):
                val = corr[pos]
                assert val.is_integer
                fix[k] = int(val)
            new_images.append(multiply(psi.images[j], tuple(fix), spec))
            dirty = True
        psi = Endomorphism(spec, new_images) if dirty else psi
    for j in range(m):
        if apply(phi, psi.images[j]) != spec.indicator(j):
            raise SpecError("inverse correction failed to converge")
    return psi


# ---------------------------------------------------------------------------
# spectral analysis of integer matrices


@dataclass(frozen=True)
class SpectralReport:
    """Characteristic data of an integer matrix.

    ``charpoly`` lists the monic coefficients from the leading term down.
    ``radius_gap`` is ``spectral_radius - 1`` when the matrix is not
    quasi-unipotent, else ``None``.
    """

    charpoly: tuple
    spectral_radius: float
    radius_error: float
    unipotent: bool
    quasi_unipotent: bool
    radius_gap: float | None


def _cyclotomic_deflate(poly):
    """Divide out cyclotomic factors; True when nothing else remains."""
    x = poly.gen
    rem = poly
    deg = poly.degree()
    # totient(k) <= deg forces k <= 2 * deg^2 + 1 comfortably
    limit = 2 * deg * deg + 2
    for k in range(1, limit + 1):
        if rem.degree() == 0:
            break
        if sympy.totient(k) > rem.degree():
            continue
        cyc = sympy.Poly(sympy.cyclotomic_poly(k, x), x)
        while rem.degree() >= cyc.degree():
            quo, r = rem.div(cyc)
            if r.is_zero:
                rem = quo
            else:
                break
    return rem.degree() == 0


def spectral_report(matrix):
    """Exact unipotence tests plus a certified spectral radius."""
    rows = _as_matrix_rows(matrix)
    n = len(rows)
    m = sympy.Matrix(rows)
    x = sympy.Symbol("x")
    poly = m.charpoly(x)
    coeffs = tuple(
        int(c) if sympy.Rational(c).is_integer else Fraction(str(c))
        for c in poly.all_coeffs()
    )

    nilp = m - sympy.eye(n)
    p = nilp
    unipotent = p.is_zero_matrix
    for _ in range(n - 1):
        if unipotent:
            break
        p = p * nilp
        unipotent = p.is_zero_matrix

    # strip zero eigenvalues; they rule out quasi-unipotence on their own
    data = list(coeffs)
    had_zero = False
    while len(data) > 1 and data[-1] == 0:
        data.pop()
        had_zero = True
    reduced = sympy.Poly(data, x)
    quasi = not had_zero and _cyclotomic_deflate(reduced)

    if unipotent or quasi:
        radius = 1.0
        error = 0.0
        gap = None
    else:
        radius = 0.0
        for root in sympy.Poly(coeffs, x).all_roots(radicals=False):
            radius = max(radius, abs(complex(root.evalf(30))))
        error = 1e-9
        gap = radius - 1.0
    return SpectralReport(
        charpoly=coeffs,
        spectral_radius=radius,
        radius_error=error,
        unipotent=bool(unipotent),
        quasi_unipotent=bool(unipotent or quasi),
        radius_gap=gap,
    )


# ---------------------------------------------------------------------------
# named example automorphisms


def builtin_automorphism(name, spec):
    """Shared example automorphisms, padded to the spec's coordinates.

    ``fib``: x1 -> x1 x2, x2 -> x1 (hyperbolic on homology).
    ``unipotent-shear``: x1 -> x1, x2 -> x1 x2 (unipotent, acts on homology).
    ``central-shear``: x1 -> x1 c, x2 -> x2 (trivial on homology).
    """
    if spec.rank < 2:
        raise SpecError("builtin automorphisms need rank >= 2")

    def unit(*pairs):
        out = [0] * spec.dim
        for k, v in pairs:
            out[k] = v
        return tuple(out)

    if name == "fib":
        images = [unit((0, 1), (1, 1)), unit((0, 1))]
    elif name == "unipotent-shear":
        images = [unit((0, 1)), unit((0, 1), (1, 1))]
    elif name == "central-shear":
        if spec.nilpotency_class < 2:
            raise SpecError("central-shear needs class >= 2")
        first_w2 = next(k for k, w in enumerate(spec.weights) if w == 2)
        images = [unit((0, 1), (first_w2, 1)), unit((1, 1))]
    else:
        raise SpecError(
            f"unknown builtin automorphism {name!r}; "
            "choose fib, unipotent-shear or central-shear"
        )
    images += [spec.indicator(k) for k in range(2, spec.rank)]
    return Endomorphism(spec, images)
