import random

import pytest
import sympy

from nilentropy import (
    GrowthWarning,
    SpecError,
    apply,
    builtin_automorphism,
    commutator,
    free_nilpotent,
    identity,
    identity_endomorphism,
    inverse,
    lower_central_series,
    multiply,
    power,
    project,
    quotient_ranks,
    relator_check,
    semidirect_unipotent,
    subgroup_closure,
    surface_quotient,
    truncate,
    upper_central_dimensions,
    upper_central_lengths,
)

from conftest import random_vector


# ---------------------------------------------------------------------------
# free groups and truncation


def test_free_nilpotent_shapes():
    assert free_nilpotent(2, 2).dim == 3
    assert free_nilpotent(2, 3).dim == 5
    assert free_nilpotent(2, 4).dim == 8
    assert free_nilpotent(3, 2).dim == 6
    assert free_nilpotent(2, 1).weights == (1, 1)


def test_truncate_matches_projection(f24, rng):
    t = truncate(f24, 3)
    assert t.nilpotency_class == 2
    assert t.dim == 3
    for _ in range(30):
        g = random_vector(f24, rng)
        h = random_vector(f24, rng)
        assert multiply(project(g, 3, f24), project(h, 3, f24), t) == project(
            multiply(g, h, f24), 3, f24
        )
    assert truncate(f24, 5) is f24


def test_truncate_range(f24):
    with pytest.raises(SpecError):
        truncate(f24, 1)
    with pytest.raises(SpecError):
        truncate(f24, 6)


# ---------------------------------------------------------------------------
# subgroup lattices


def test_closure_of_even_generators_contains_c4(heis):
    lat = subgroup_closure(heis, [(2, 0, 0), (0, 2, 0)])
    assert lat.hirsch_length == 3
    assert (0, 0, 4) in lat
    assert (0, 0, 2) not in lat
    assert (0, 0, 1) not in lat
    assert lat.abelianized_index() == 4
    assert lat.index() == 16


def test_closure_reduce_roundtrip(heis, rng):
    lat = subgroup_closure(heis, [(2, 0, 0), (0, 2, 0), (0, 0, 1)])
    assert lat.index() == 4
    for _ in range(25):
        coeffs = [rng.randint(-4, 4) for _ in range(lat.hirsch_length)]
        g = lat.member_from_coefficients(coeffs)
        assert g in lat
        assert lat.reduce(g) == tuple(coeffs)
    outside = (1, 0, 0)
    assert lat.reduce(outside) is None


def test_closure_is_a_subgroup(heis, rng):
    lat = subgroup_closure(heis, [(2, 0, 0), (0, 2, 0)])
    members = [
        lat.member_from_coefficients([rng.randint(-3, 3) for _ in range(3)])
        for _ in range(12)
    ]
    for g in members:
        assert inverse(g, heis) in lat
    for g in members[:6]:
        for h in members[6:]:
            assert multiply(g, h, heis) in lat


def test_full_group_closure(f23):
    lat = subgroup_closure(f23, [f23.indicator(0), f23.indicator(1)])
    assert lat.hirsch_length == f23.dim
    assert lat.index() == 1
    assert lat.abelianized_index() == 1


def test_infinite_index_closure(heis):
    lat = subgroup_closure(heis, [(1, 0, 0)])
    assert lat.hirsch_length == 1
    assert lat.abelianized_index() is None


# ---------------------------------------------------------------------------
# lower and upper central series


def test_lower_central_series_heisenberg(heis):
    series = lower_central_series(heis)
    assert [lat.hirsch_length for lat in series] == [3, 1]
    assert quotient_ranks(series) == (2, 1)


def test_lower_central_series_free23(f23):
    series = lower_central_series(f23)
    assert [lat.hirsch_length for lat in series] == [5, 3, 2]
    assert quotient_ranks(series) == (2, 1, 2)


def test_upper_central_lengths():
    assert upper_central_lengths(free_nilpotent(2, 1)) == 1
    assert upper_central_lengths(free_nilpotent(2, 2)) == 2
    assert upper_central_lengths(free_nilpotent(2, 3)) == 3
    dims = upper_central_dimensions(free_nilpotent(2, 2))
    assert dims == (1, 2)
    assert sum(dims) == free_nilpotent(2, 2).dim


# ---------------------------------------------------------------------------
# semidirect extensions


def test_semidirect_shear_on_z2_is_class_two():
    z2 = free_nilpotent(2, 1)
    shear = builtin_automorphism("unipotent-shear", z2)
    sd = semidirect_unipotent(z2, shear)
    assert sd.nilpotency_class == 2
    assert sd.hirsch_length == 3
    t = (1, z2.identity())
    x2 = (0, (0, 1))
    # t x2 t^-1 = shear(x2) = x1 x2, so [t, x2] generates the x1 line
    conj = sd.multiply(sd.multiply(t, x2), sd.inverse_element(t))
    assert conj == (0, (1, 1))
    assert sd.commutator_element(t, x2)[1] in ((1, 0), (-1, 0))


def test_semidirect_unipotent_shear_on_heisenberg(heis):
    phi = builtin_automorphism("unipotent-shear", heis)
    sd = semidirect_unipotent(heis, phi)
    assert sd.hirsch_length == 4
    assert 3 <= sd.nilpotency_class <= 4
    assert sd.nilpotency_class == 3


def test_semidirect_central_shear_upper_central_length(heis):
    phi = builtin_automorphism("central-shear", heis)
    sd = semidirect_unipotent(heis, phi)
    assert upper_central_lengths(sd) == 2


def test_semidirect_rejects_non_unipotent(heis):
    fib = builtin_automorphism("fib", heis)
    with pytest.raises(SpecError):
        semidirect_unipotent(heis, fib)


def test_semidirect_group_axioms(heis, rng):
    phi = builtin_automorphism("unipotent-shear", heis)
    sd = semidirect_unipotent(heis, phi)

    def rand():
        return (rng.randint(-2, 2), random_vector(heis, rng, span=3))

    e = sd.identity()
    for _ in range(40):
        a, b, c = rand(), rand(), rand()
        assert sd.multiply(sd.multiply(a, b), c) == sd.multiply(a, sd.multiply(b, c))
        assert sd.multiply(a, sd.inverse_element(a)) == e
        assert sd.multiply(sd.inverse_element(a), a) == e


def test_semidirect_monodromy_power(heis, rng):
    phi = builtin_automorphism("unipotent-shear", heis)
    sd = semidirect_unipotent(heis, phi)
    g = (3, -1, 2)
    assert sd.monodromy_power(2, g) == apply(phi, apply(phi, g))
    assert sd.monodromy_power(-1, sd.monodromy_power(1, g)) == g
    assert sd.monodromy_power(0, g) == g


# ---------------------------------------------------------------------------
# surface quotients


def test_surface_genus_one_is_abelian():
    s = surface_quotient(1, 3)
    assert s.dim == 2
    assert multiply((1, 0), (0, 1), s) == (1, 1)
    assert multiply((0, 1), (1, 0), s) == (1, 1)
    assert commutator((1, 0), (0, 1), s) == (0, 0)


def test_surface_genus_two_ranks():
    s = surface_quotient(2, 3)
    assert s.rank == 4
    assert s.dim == 25
    series = lower_central_series(s)
    assert quotient_ranks(series) == (4, 5, 16)


def test_surface_rank_generating_function():
    # prod_d (1 - t^d)^(r_d) = 1 - 4t + t^2 modulo t^4 for genus 2
    t = sympy.symbols("t")
    ranks = {1: 4, 2: 5, 3: 16}
    prod = sympy.prod((1 - t ** d) ** r for d, r in ranks.items())
    got = sympy.Poly(sympy.expand(prod), t)
    expect = sympy.Poly(1 - 4 * t + t ** 2, t)
    assert (got - expect).rem(sympy.Poly(t ** 4, t)) == sympy.Poly(0, t)


def test_surface_relator_dies_in_the_quotient():
    s = surface_quotient(2, 3)
    relator = identity(s)
    for i in range(2):
        relator = multiply(
            relator,
            commutator(s.indicator(2 * i), s.indicator(2 * i + 1), s),
            s,
        )
    assert relator == identity(s)


def test_surface_group_axioms(rng):
    s = surface_quotient(2, 3)
    for _ in range(40):
        g = random_vector(s, rng, span=3)
        h = random_vector(s, rng, span=3)
        k = random_vector(s, rng, span=3)
        assert multiply(multiply(g, h, s), k, s) == multiply(g, multiply(h, k, s), s)
        assert multiply(g, inverse(g, s), s) == identity(s)
        assert power(g, 3, s) == multiply(multiply(g, g, s), g, s)


def test_surface_truncation_is_a_homomorphism(rng):
    s = surface_quotient(2, 3)
    t = truncate(s, 3)
    assert t.nilpotency_class == 2
    assert t.dim == 9
    for _ in range(25):
        g = random_vector(s, rng, span=3)
        h = random_vector(s, rng, span=3)
        assert project(multiply(g, h, s), 3, s) == multiply(
            project(g, 3, s), project(h, 3, s), t
        )


def test_surface_class_two_matches_direct_construction(rng):
    assert surface_quotient(2, 2).dim == truncate(surface_quotient(2, 3), 3).dim


def test_surface_rejects_bad_genus():
    with pytest.raises(SpecError):
        surface_quotient(0, 3)


def test_relator_check_accepts_defining_images():
    spec = free_nilpotent(4, 2)
    images = [spec.indicator(k) for k in range(4)]
    assert relator_check(images, 2, 2)


def test_relator_check_accepts_handle_swap():
    spec = free_nilpotent(4, 2)
    ids = [spec.indicator(k) for k in range(4)]
    swapped = [ids[2], ids[3], ids[0], ids[1]]
    assert relator_check(swapped, 2, 2)


def test_relator_check_rejects_collapse():
    # collapsing everything to one generator kills the degree-2 class, so
    # the graded screen refuses without any ball search
    spec = free_nilpotent(4, 2)
    x = spec.indicator(0)
    assert not relator_check([x, x, x, x], 2, 2)


def test_relator_check_conjugated_images():
    spec = free_nilpotent(4, 3)
    h = spec.indicator(1)
    images = [
        multiply(multiply(inverse(h, spec), spec.indicator(k), spec), h, spec)
        for k in range(4)
    ]
    assert relator_check(images, 2, 3, search_radius=2)
    # with no search budget the conjugator is out of reach: refuse, loudly
    with pytest.warns(GrowthWarning):
        assert not relator_check(images, 2, 3, search_radius=0)
