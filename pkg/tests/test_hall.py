import random

import pytest
from sympy import divisors, mobius

from nilentropy import HallBasis, LieElement, bracket, graded_dimension
from nilentropy.hall import _hall_pair_ok


def necklace_count(m, d):
    """Number-theoretic rank of the weight-d layer of the free Lie ring."""
    return sum(mobius(e) * m ** (d // e) for e in divisors(d)) // d


@pytest.mark.parametrize("rank", [1, 2, 3])
def test_layer_sizes_match_necklace_counts(rank):
    basis = HallBasis(rank, 6)
    for d in range(1, 7):
        assert basis.graded_dimension(d) == necklace_count(rank, d)
        assert graded_dimension(basis, d) == basis.graded_dimension(d)


def test_layer_sizes_rank2_class5():
    basis = HallBasis(2, 5)
    assert [basis.graded_dimension(d) for d in range(1, 6)] == [2, 1, 2, 3, 6]
    assert len(basis) == 14


def test_entries_sorted_by_weight_and_order():
    basis = HallBasis(3, 4)
    assert list(basis.weights) == sorted(basis.weights)
    for d, idxs in basis.by_weight.items():
        for i in idxs:
            assert basis.entries[i].weight == d
        assert list(idxs) == sorted(idxs)
    # the index ordering refines the basis order used by the Hall condition
    for i, e in enumerate(basis.entries):
        assert basis.index[e] == i


def test_hall_condition_on_every_entry():
    basis = HallBasis(2, 5)
    for e in basis.entries:
        if e.is_generator():
            continue
        assert e.right < e.left
        if not e.left.is_generator():
            assert not e.right < e.left.right
        assert _hall_pair_ok(e.left, e.right)


def test_pair_bracket_agrees_with_lie_bracket():
    basis = HallBasis(2, 4)
    for i in range(len(basis)):
        for j in range(len(basis)):
            u = LieElement.from_entry(basis, i)
            v = LieElement.from_entry(basis, j)
            expect = bracket(u, v, basis)
            got = LieElement(basis, dict(basis.pair_bracket(i, j)))
            assert got == expect


def _random_element(basis, rng, span=3):
    return LieElement(
        basis,
        {i: rng.randint(-span, span) for i in range(len(basis))},
    )


def test_bracket_is_bilinear_alternating():
    basis = HallBasis(2, 4)
    rng = random.Random(7)
    for _ in range(25):
        u = _random_element(basis, rng)
        v = _random_element(basis, rng)
        w = _random_element(basis, rng)
        assert bracket(u, u, basis).is_zero()
        assert (bracket(u, v, basis) + bracket(v, u, basis)).is_zero()
        assert bracket(u + v, w, basis) == bracket(u, w, basis) + bracket(v, w, basis)
        assert bracket(u.scaled(3), v, basis) == bracket(u, v, basis).scaled(3)


def test_jacobi_identity():
    basis = HallBasis(3, 3)
    rng = random.Random(11)
    for _ in range(25):
        u = _random_element(basis, rng, span=2)
        v = _random_element(basis, rng, span=2)
        w = _random_element(basis, rng, span=2)
        total = (
            bracket(u, bracket(v, w, basis), basis)
            + bracket(v, bracket(w, u, basis), basis)
            + bracket(w, bracket(u, v, basis), basis)
        )
        assert total.is_zero()


def test_bracket_respects_grading():
    basis = HallBasis(2, 4)
    for i, u in enumerate(basis.entries):
        for j, v in enumerate(basis.entries):
            out = basis.pair_bracket(i, j)
            for k in out:
                assert basis.weights[k] == u.weight + v.weight


def test_constructor_rejects_bad_parameters():
    with pytest.raises(ValueError):
        HallBasis(0, 2)
    with pytest.raises(ValueError):
        HallBasis(2, 0)
