import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tenreco import bounds as bd
from tenreco.errors import InvalidArgument, ResourceExhausted

# --- Kruskal rank --------------------------------------------------------------


def test_kruskal_rank_identity():
    assert bd.kruskal_rank(np.eye(4)) == 4


def test_kruskal_rank_repeated_column(rng):
    A = rng.standard_normal((4, 3))
    A[:, 2] = A[:, 0]
    assert bd.kruskal_rank(A) == 1


def test_kruskal_rank_zero_column():
    assert bd.kruskal_rank(np.array([[1.0, 0.0], [0.0, 0.0]])) == 0


def test_kruskal_rank_needs_cap_for_wide_matrices(rng):
    A = rng.standard_normal((3, 13))
    with pytest.raises(ResourceExhausted):
        bd.kruskal_rank(A)
    assert bd.kruskal_rank(A, cap=2) == 2


@pytest.mark.property
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_kruskal_rank_generic_is_min(I, R, seed):
    A = np.random.default_rng(seed).standard_normal((I, R))
    assert bd.kruskal_rank(A) == min(I, R)


# --- Kruskal conditions --------------------------------------------------------


def test_kruskal_order3_examples():
    assert bd.kruskal_bound_order3(3, 3, 3, 3)
    assert not bd.kruskal_bound_order3(2, 2, 2, 3)
    # rank one never passes the test (3 < 4)
    assert not bd.kruskal_bound_order3(5, 5, 5, 1)


def test_kruskal_orderM_examples():
    assert bd.kruskal_bound_orderM([3] * 4, 4)
    assert not bd.kruskal_bound_orderM([2] * 4, 4)
    with pytest.raises(InvalidArgument):
        bd.kruskal_bound_orderM([3, 3], 2)


def test_kruskal_explicit_kappas():
    assert bd.kruskal_bound_order3(9, 9, 9, 4, generic=False, kappas=[4, 3, 3])
    assert not bd.kruskal_bound_order3(9, 9, 9, 4, generic=False, kappas=[3, 3, 3])
    with pytest.raises(InvalidArgument):
        bd.kruskal_bound_order3(9, 9, 9, 4, generic=False)


@pytest.mark.property
@given(st.lists(st.integers(1, 8), min_size=3, max_size=3), st.integers(1, 12))
def test_order3_is_orderM_with_three_modes(sizes, R):
    assert bd.kruskal_bound_order3(*sizes, R) == bd.kruskal_bound_orderM(sizes, R)


def test_kruskal_generic_max_rank():
    assert bd.kruskal_generic_max_rank([10, 10, 10]) == 14
    assert bd.kruskal_generic_max_rank([2, 2, 2]) == 2


# --- Bocci ---------------------------------------------------------------------


def test_bocci_examples():
    assert bd.bocci_bound(10, 10, 10) == 25
    assert bd.bocci_bound(5, 4, 3) == 1
    assert bd.bocci_bound(3, 4, 5) == 1  # sorted internally
    assert bd.bocci_bound(5, 5, 2) is None


@pytest.mark.parametrize("I", range(4, 21))
def test_bocci_quadratic_growth(I):
    assert bd.bocci_bound(I, I, I) >= I * I / 3 - I - 1


# --- Kargas --------------------------------------------------------------------


def test_kargas_t1_examples():
    assert bd.kargas_t1_bound(4, 10) == 20
    assert bd.kargas_t1_bound(9, 4) == 9
    assert bd.kargas_t1_bound(6, 6) == 24


@pytest.mark.property
@given(st.integers(4, 200), st.integers(2, 50))
def test_kargas_t1_second_branch_floor(M, I):
    if M <= I:
        assert bd.kargas_t1_bound(M, I) == I * (M - 2)
    else:
        k = max(k for k in range(0, M * I) if k * k * I * I <= M * I - 1)  # floor(sqrt(MI-1)/I)
        assert bd.kargas_t1_bound(M, I) == (k * I - 1) ** 2


def test_kargas_t2_examples():
    assert bd.kargas_t2_bound(9, 4) == 16
    assert bd.kargas_t2_bound(6, 2) == 4
    assert bd.kargas_t2_bound(4, 1) is None


@pytest.mark.property
@given(st.integers(4, 300), st.integers(2, 30))
def test_kargas_t2_dominates_implied_form(M, I):
    # the printed sufficient form (floor(M/3) I + 1)^2 / 16 never exceeds 4^(alpha-1)
    assert Fraction(((M // 3) * I + 1) ** 2, 16) <= bd.kargas_t2_bound(M, I) or (M // 3) * I < 4


def test_kargas_reject_small_M():
    with pytest.raises(InvalidArgument):
        bd.kargas_t1_bound(3, 4)
    with pytest.raises(InvalidArgument):
        bd.kargas_t2_bound(3, 4)


# --- even partition ------------------------------------------------------------


def test_even_partition_bound_examples():
    assert bd.even_partition_bound(9, 4) == 18
    assert bd.even_partition_bound(6, 3) == 1
    assert bd.even_partition_bound(4, 2) == 0


@pytest.mark.property
@given(st.integers(4, 100), st.integers(2, 20))
def test_even_partition_bound_formula(M, I):
    K = M // 3
    raw = Fraction(K * K * (I - 1) ** 2, 3) - K * (I - 1)
    assert bd.even_partition_bound(M, I) == max(0, math.floor(raw))


@pytest.mark.property
@given(st.integers(9, 30), st.integers(4, 10))
def test_even_partition_improves_on_kargas_t2(M, I):
    assert bd.even_partition_bound(M, I) >= bd.kargas_t2_bound(M, I), (M, I)
