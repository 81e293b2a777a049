"""Cartesian couplings: stacking marginals into one order-3 block tensor.

For a partition (S1, S2, S3) of the variables, the marginals of all triplets
in S1 x S2 x S3 tile a tensor of size (I|S1|, I|S2|, I|S3|). That tensor is a
CPD with block factors ``B_i`` (the stacked factor matrices of S_i), and each
``B_i = Q_i C_i`` with a constant lift ``Q_i`` and reduced factors ``C_i``
holding a row of ones over the stacked truncated factors.
"""
from dataclasses import dataclass

import numpy as np

from . import coupling as cp
from .bounds import bocci_bound
from .parameterization import lift_jacobian, triplet_marginal
from .tensor_core import outer_product


@dataclass
class StackedTensor:
    partition: tuple
    I: int
    Y: np.ndarray

    def block(self, r, s, t):
        """I x I x I block at 0-based block coordinates (r, s, t)."""
        I = self.I
        return self.Y[r * I : (r + 1) * I, s * I : (s + 1) * I, t * I : (t + 1) * I]


def _partition(partition, M=None):
    sets, _ = cp.check_partition(partition, M)
    return tuple(sets)


def stack(theta, partition):
    """Tile the triplet marginals ``H^(j_r k_s l_t)`` into one tensor."""
    sets = _partition(partition, theta.M)
    I = theta.I
    sizes = [len(s) for s in sets]
    Y = np.zeros([I * n for n in sizes], dtype=theta.theta.dtype)
    for r, j in enumerate(sets[0]):
        for s, k in enumerate(sets[1]):
            for t, l in enumerate(sets[2]):
                # marginal of the sorted triplet, axes put back in partition order
                order = sorted((j, k, l))
                H = triplet_marginal(theta, order)
                H = np.transpose(H, [order.index(v) for v in (j, k, l)])
                Y[r * I : (r + 1) * I, s * I : (s + 1) * I, t * I : (t + 1) * I] = H
    return StackedTensor(sets, I, Y)


def block_factors(theta, partition):
    """``B_i``: lifted factor matrices of S_i stacked vertically."""
    sets = _partition(partition, theta.M)
    return tuple(np.vstack([theta.factor(m) for m in S]) for S in sets)


def stacked_cpd(theta, partition):
    """The stacked tensor rebuilt as the CPD ``[[lambda; B1, B2, B3]]``."""
    B1, B2, B3 = block_factors(theta, partition)
    w = theta.weights
    out = None
    for r in range(theta.R):
        term = w[r] * outer_product([B1[:, r], B2[:, r], B3[:, r]])
        out = term if out is None else out + term
    return out


def build_q(Mi, I):
    """Constant (Mi I) x (Mi (I-1) + 1) lift matrix.

    Column 0 flags the last row of every I-block; the remaining columns hold
    one copy of the lift Jacobian per variable, block-diagonally.
    """
    Q = np.zeros((Mi * I, Mi * (I - 1) + 1), dtype=int)
    JP = lift_jacobian(I).astype(int)
    for v in range(Mi):
        Q[v * I + I - 1, 0] = 1
        Q[v * I : (v + 1) * I, 1 + v * (I - 1) : 1 + (v + 1) * (I - 1)] = JP
    return Q


def reduced_factors(theta, partition):
    """``C_i``: a row of ones over the truncated factors of S_i."""
    sets = _partition(partition, theta.M)
    out = []
    for S in sets:
        ones = np.ones((1, theta.R), dtype=theta.theta.dtype)
        out.append(np.vstack([ones] + [theta.truncated(m) for m in S]))
    return tuple(out)


def reduced_sizes(partition, I):
    sets = _partition(partition)
    return tuple((I - 1) * len(S) + 1 for S in sets)


def cartesian_ident_bound(partition, I):
    """Rank up to which the Cartesian coupling is identifiable, or None.

    Applies the Bocci bound to the reduced sizes ``(I-1)|S_i| + 1``; None when
    some reduced size is at most 2.
    """
    return bocci_bound(*reduced_sizes(partition, I))
