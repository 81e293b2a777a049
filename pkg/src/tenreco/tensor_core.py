"""Dense tensor arithmetic used by the coupled CP models.

Tensors are plain numpy arrays. Vectorization is column-major throughout, so
``vec(a o b o c) == kron(c, kron(b, a))``. Mode indices in the public API are
1-based, matching the variable numbering of couplings.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument

# Full order-M tensors are only built when M*log2(I) stays under this budget.
FULL_TENSOR_LOG2_BUDGET = 24
SIMPLEX_ATOL = 1e-12


def vec(t):
    """Column-major vectorization."""
    return np.asarray(t).ravel(order="F")


def unvec(y, dims):
    return np.asarray(y).reshape(tuple(dims), order="F")


def outer_product(vectors):
    """Rank-one tensor ``v1 o v2 o ... o vM``.

    Works for float and object (Fraction) arrays alike.
    """
    if len(vectors) == 0:
        raise InvalidArgument("outer_product needs at least one vector")
    vectors = [np.asarray(v) for v in vectors]
    if any(v.ndim != 1 or v.size == 0 for v in vectors):
        raise InvalidArgument("outer_product needs non-empty 1-D vectors")
    out = vectors[0]
    for v in vectors[1:]:
        out = np.multiply.outer(out, v)
    return out


def kron(a, b):
    """Kronecker product of two matrices (vectors are treated as columns)."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim == 1:
        a = a[:, None]
    if b.ndim == 1:
        b = b[:, None]
    if a.size == 0 or b.size == 0:
        raise InvalidArgument("kron of an empty matrix")
    p, q = b.shape
    out = np.multiply.outer(a, b)  # (m, n, p, q)
    return out.transpose(0, 2, 1, 3).reshape(a.shape[0] * p, a.shape[1] * q)


def _check_modes(modes, order):
    modes = list(modes)
    if not modes:
        raise InvalidArgument("at least one mode is required")
    if len(set(modes)) != len(modes):
        raise InvalidArgument(f"repeated mode in {modes}")
    for m in modes:
        if not 1 <= m <= order:
            raise InvalidArgument(f"mode {m} out of range 1..{order}")
    return modes


def marginalize(t, keep):
    """Sum ``t`` over every mode not in ``keep``.

    The kept modes come out in ascending order regardless of how ``keep`` is
    ordered.
    """
    t = np.asarray(t)
    keep = sorted(_check_modes(keep, t.ndim))
    drop = tuple(m for m in range(t.ndim) if m + 1 not in keep)
    if not drop:
        return t.copy()
    return t.sum(axis=drop)


@dataclass
class FactorModel:
    """Weights and M stochastic I x R factor matrices of a simplex-constrained CPD.

    With ``strict=True`` the weights must also sum to one; the relaxed model
    only asks for nonnegative weights.
    """

    weights: np.ndarray
    factors: list = field(default_factory=list)
    strict: bool = False

    def __post_init__(self):
        self.weights = np.asarray(self.weights)
        self.factors = [np.asarray(f) for f in self.factors]
        self.validate()

    @property
    def M(self):
        return len(self.factors)

    @property
    def I(self):
        return self.factors[0].shape[0]

    @property
    def R(self):
        return self.weights.shape[0]

    def validate(self):
        if self.weights.ndim != 1 or self.weights.size == 0:
            raise InvalidArgument("weights must be a non-empty vector")
        if not self.factors:
            raise InvalidArgument("at least one factor matrix is required")
        shape = self.factors[0].shape
        for m, f in enumerate(self.factors, start=1):
            if f.ndim != 2 or f.shape != shape or f.shape[1] != self.R:
                raise InvalidArgument(f"factor {m} has shape {f.shape}, expected (I, {self.R})")
            if np.any(f < 0):
                raise InvalidArgument(f"factor {m} has negative entries")
            colsum = f.sum(axis=0)
            if np.any(np.abs(colsum.astype(float) - 1.0) > SIMPLEX_ATOL):
                raise InvalidArgument(f"columns of factor {m} do not sum to one")
        if np.any(self.weights < 0):
            raise InvalidArgument("weights must be nonnegative")
        if self.strict and abs(float(self.weights.sum()) - 1.0) > SIMPLEX_ATOL:
            raise InvalidArgument("strict model requires weights summing to one")


def cpd_eval(model, modes=None):
    """Evaluate the CPD restricted to ``modes`` (all modes by default).

    ``sum_r w_r * A^(m1)[:, r] o A^(m2)[:, r] o ...``. Because every factor
    column sums to one, this equals the marginal of the full tensor over the
    selected modes.
    """
    if modes is None:
        modes = range(1, model.M + 1)
    modes = _check_modes(modes, model.M)
    if len(modes) == model.M and model.M * np.log2(max(model.I, 2)) > FULL_TENSOR_LOG2_BUDGET:
        raise InvalidArgument("full tensor exceeds the size budget")
    out = None
    for r in range(model.R):
        term = model.weights[r] * outer_product([model.factors[m - 1][:, r] for m in modes])
        out = term if out is None else out + term
    return out
