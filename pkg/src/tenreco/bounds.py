"""Closed-form rank bounds for CP identifiability.

All bounds are returned as integers (ranks are integral), or ``None`` when a
formula's hypotheses do not hold.
"""
import math
from fractions import Fraction
from itertools import combinations

import numpy as np

from .errors import InvalidArgument, ResourceExhausted

MAX_EXHAUSTIVE_COLUMNS = 12


def kruskal_rank(A, cap=None, tol=None):
    """Largest k such that every k columns of ``A`` are linearly independent.

    Exhaustive over column subsets, so matrices wider than 12 columns need an
    explicit ``cap`` on k.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise InvalidArgument("kruskal_rank expects a matrix")
    n = A.shape[1]
    if cap is None:
        if n > MAX_EXHAUSTIVE_COLUMNS:
            raise ResourceExhausted(f"{n} columns is too many for an uncapped exhaustive search")
        cap = n
    limit = min(cap, n, A.shape[0])
    k = 0
    for size in range(1, limit + 1):
        for cols in combinations(range(n), size):
            if np.linalg.matrix_rank(A[:, cols], tol=tol) < size:
                return k
        k = size
    return k


def _generic_kappa(sizes, R):
    return [min(s, R) for s in sizes]


def kruskal_bound_orderM(sizes, R, generic=True, kappas=None):
    """Generalized Kruskal test: ``2R + (M-1) <= sum kappa_m``.

    With ``generic`` the Kruskal ranks take their generic value ``min(I_m, R)``;
    otherwise pass ``kappas`` explicitly.
    """
    if len(sizes) < 3:
        raise InvalidArgument("the Kruskal condition needs at least three modes")
    if generic:
        kappas = _generic_kappa(sizes, R)
    elif kappas is None:
        raise InvalidArgument("non-generic mode needs explicit Kruskal ranks")
    return 2 * R + (len(sizes) - 1) <= sum(kappas)


def kruskal_bound_order3(I1, I2, I3, R, generic=True, kappas=None):
    """Kruskal's order-3 test ``k1 + k2 + k3 >= 2R + 2``.

    R = 1 fails for every size (sum is 3 < 4); rank-one uniqueness is not
    handled through this test.
    """
    return kruskal_bound_orderM([I1, I2, I3], R, generic, kappas)


def kruskal_generic_max_rank(sizes):
    """Largest R passing the generic Kruskal test, or None."""
    best = None
    for R in range(1, sum(sizes) + 1):
        if kruskal_bound_orderM(sizes, R):
            best = R
    return best


def bocci_bound(I1, I2, I3):
    """``floor(I1 I2 I3 / (I1 + I2 + I3 - 2) - I1)`` with sizes sorted so I1 is largest.

    Requires the smallest size to exceed 2.
    """
    a, b, c = sorted((int(I1), int(I2), int(I3)), reverse=True)
    if c <= 2:
        return None
    return max(0, math.floor(Fraction(a * b * c, a + b + c - 2) - a))


def kargas_t1_bound(M, I):
    """Bound for the full set of 3D marginals with the (1)(2)(3..M) partition."""
    if M <= 3:
        raise InvalidArgument("M must exceed 3")
    if M <= I:
        return I * (M - 2)
    # floor(sqrt(x) / I) == isqrt(x) // I for integers
    return (math.isqrt(M * I - 1) // I * I - 1) ** 2


def kargas_t2_bound(M, I):
    """``4^(alpha-1)`` with alpha the largest integer such that ``2^alpha <= floor(M/3) I``."""
    if M <= 3:
        raise InvalidArgument("M must exceed 3")
    q = (M // 3) * I
    if q < 2:
        return None
    alpha = q.bit_length() - 1
    return 4 ** (alpha - 1)


def even_partition_bound(M, I):
    """``floor(K^2 (I-1)^2 / 3 - K (I-1))`` with ``K = floor(M/3)``, clamped at 0."""
    if M <= 3 or I < 2:
        raise InvalidArgument("need M > 3 and I >= 2")
    K = M // 3
    val = math.floor(Fraction(K * K * (I - 1) ** 2, 3) - K * (I - 1))
    return max(0, val)
