"""Exact rank of rational matrices by fraction-free (Bareiss) elimination."""
import math
from fractions import Fraction

import numpy as np

from .errors import ResourceExhausted

# Exact elimination is only attempted below this many entries.
MAX_EXACT_ENTRIES = 100_000
# Mersenne prime; products of two residues fit in int64.
MODULUS = 2**31 - 1


def to_integer_rows(A):
    """Scale each row of a rational matrix by the lcm of its denominators.

    Row scaling by nonzero constants leaves the rank unchanged.
    """
    A = np.asarray(A, dtype=object)
    out = np.empty(A.shape, dtype=object)
    for i, row in enumerate(A):
        fr = [Fraction(x) for x in row]
        scale = math.lcm(*(f.denominator for f in fr)) if fr else 1
        out[i] = [f.numerator * (scale // f.denominator) for f in fr]
    return out


def bareiss_rank(A):
    """Rank of an integer matrix via fraction-free Gaussian elimination.

    Every intermediate entry is a minor of ``A``, so the divisions by the
    previous pivot are exact and the integers stay bounded.
    """
    A = np.array(A, dtype=object)
    if A.ndim != 2 or A.size == 0:
        return 0
    m, n = A.shape
    rank = 0
    prev = 1
    for col in range(n):
        if rank == m:
            break
        nz = [i for i in range(rank, m) if A[i, col] != 0]
        if not nz:
            continue
        piv = nz[0]
        if piv != rank:
            A[[rank, piv]] = A[[piv, rank]]
        p = A[rank, col]
        if rank + 1 < m and col + 1 < n:
            below = A[rank + 1 :, col : col + 1]
            A[rank + 1 :, col + 1 :] = (p * A[rank + 1 :, col + 1 :] - below * A[rank, col + 1 :]) // prev
        A[rank + 1 :, col] = 0
        prev = p
        rank += 1
    return rank


def modular_rank(A, p=MODULUS):
    """Rank of an integer matrix over GF(p); never larger than its rational rank."""
    B = np.array([[int(x) % p for x in row] for row in np.asarray(A, dtype=object)], dtype=np.int64)
    if B.size == 0:
        return 0
    m, n = B.shape
    rank = 0
    for col in range(n):
        if rank == m:
            break
        nz = np.flatnonzero(B[rank:, col]) + rank
        if nz.size == 0:
            continue
        piv = nz[0]
        if piv != rank:
            B[[rank, piv]] = B[[piv, rank]]
        inv = pow(int(B[rank, col]), -1, p)
        B[rank] = B[rank] * inv % p
        f = B[rank + 1 :, col].copy()
        B[rank + 1 :] = (B[rank + 1 :] - f[:, None] * B[rank]) % p
        rank += 1
    return rank


def exact_rank(A):
    """Exact rank of a matrix of Fractions (or ints).

    A rank computed modulo a prime is a lower bound on the rational rank, so
    when it already reaches min(rows, cols) it is the answer; otherwise the
    fraction-free elimination decides.
    """
    A = np.asarray(A, dtype=object)
    if A.size > MAX_EXACT_ENTRIES:
        raise ResourceExhausted(f"exact rank capped at {MAX_EXACT_ENTRIES} entries, got {A.size}")
    Z = to_integer_rows(A)
    if Z.size and modular_rank(Z) == min(Z.shape):
        return min(Z.shape)
    return bareiss_rank(Z)
