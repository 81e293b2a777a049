"""Truncated simplex parameterization of the coupled rank-R model.

Each stochastic column ``a`` of length I is represented by its first I-1
entries; the last one is implied by ``1 - sum``. A parameter vector holds R
consecutive blocks ``(lambda_r, ua^(1)_r, ..., ua^(M)_r)`` of length
``n1 = 1 + M(I-1)``. ``mu`` maps it to the stacked column-major 3D marginals of
a coupling, ``jacobian`` assembles the exact derivative of that map.

Everything here works on float arrays and, for certificates, on object arrays
of ``fractions.Fraction``.
"""
import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InvalidArgument
from .tensor_core import FactorModel

GENERIC = "generic"
RATIONAL = "rational"

# Rational draws: simplex columns are compositions of this denominator.
RATIONAL_DENOMINATOR = 64
# lambda = k / 32 with k in [16, 48], i.e. within [0.5, 1.5].
RATIONAL_LAMBDA_DENOMINATOR = 32


def block_size(M, I):
    return 1 + M * (I - 1)


def lift(ua):
    """Append ``1 - sum(ua)`` so the result sums to one."""
    ua = np.asarray(ua)
    one = Fraction(1) if ua.dtype == object else 1.0
    return np.concatenate([ua, np.array([one - ua.sum()], dtype=ua.dtype)])


def truncate(a):
    return np.asarray(a)[:-1]


def lift_jacobian(I):
    """Jacobian of ``lift``: identity on top, a row of -1 at the bottom."""
    JP = np.zeros((I, I - 1))
    JP[: I - 1] = np.eye(I - 1)
    JP[I - 1] = -1.0
    return JP


@dataclass
class ParamVector:
    M: int
    I: int
    R: int
    theta: np.ndarray
    mode: str = GENERIC

    def __post_init__(self):
        self.theta = np.asarray(self.theta)
        if self.I < 2 or self.M < 1 or self.R < 1:
            raise InvalidArgument(f"bad dimensions M={self.M}, I={self.I}, R={self.R}")
        n = self.R * block_size(self.M, self.I)
        if self.theta.shape != (n,):
            raise InvalidArgument(f"theta has shape {self.theta.shape}, expected ({n},)")

    @property
    def n1(self):
        return block_size(self.M, self.I)

    def block(self, r):
        """Parameters of term r (0-based)."""
        return self.theta[r * self.n1 : (r + 1) * self.n1]

    @property
    def weights(self):
        return self.theta[:: self.n1].copy()

    def truncated(self, m):
        """(I-1) x R truncated factor matrix of variable m (1-based)."""
        blocks = self.theta.reshape(self.R, self.n1)
        lo = 1 + (m - 1) * (self.I - 1)
        return blocks[:, lo : lo + self.I - 1].T.copy()

    def factor(self, m):
        """I x R lifted (column-stochastic) factor matrix of variable m."""
        U = self.truncated(m)
        return np.vstack([U, (1 - U.sum(axis=0))[None, :]])

    def factors(self):
        return [self.factor(m) for m in range(1, self.M + 1)]

    def is_feasible(self, strict=False):
        """Nonnegative weights and truncated columns inside the simplex."""
        if np.any(self.weights < 0):
            return False
        for m in range(1, self.M + 1):
            U = self.truncated(m)
            s = U.sum(axis=0)
            if strict:
                if np.any(U <= 0) or np.any(s >= 1):
                    return False
            elif np.any(U < 0) or np.any(s > 1):
                return False
        return True

    def to_model(self, strict=False):
        return FactorModel(self.weights, self.factors(), strict=strict)

    @classmethod
    def from_model(cls, model, mode=GENERIC):
        M, I, R = model.M, model.I, model.R
        blocks = []
        for r in range(R):
            blocks.append([model.weights[r]])
            for f in model.factors:
                blocks.append(list(f[: I - 1, r]))
        theta = np.array([x for b in blocks for x in b], dtype=object if mode == RATIONAL else float)
        return cls(M, I, R, theta, mode)

    def head(self, R):
        """The first R terms."""
        return ParamVector(self.M, self.I, R, self.theta[: R * self.n1].copy(), self.mode)

    def permuted(self, order):
        blocks = self.theta.reshape(self.R, self.n1)[list(order)]
        return ParamVector(self.M, self.I, self.R, blocks.reshape(-1).copy(), self.mode)

    def to_dict(self):
        if self.mode == RATIONAL:
            values = [f"{Fraction(x).numerator}/{Fraction(x).denominator}" for x in self.theta]
        else:
            values = [float(x) for x in self.theta]
        return {"M": self.M, "I": self.I, "R": self.R, "mode": self.mode, "theta": values}

    @classmethod
    def from_dict(cls, data):
        mode = data.get("mode", GENERIC)
        if mode == RATIONAL:
            theta = np.array([Fraction(x) for x in data["theta"]], dtype=object)
        elif mode == GENERIC:
            theta = np.array(data["theta"], dtype=float)
        else:
            raise InvalidArgument(f"unknown mode {mode!r}")
        return cls(int(data["M"]), int(data["I"]), int(data["R"]), theta, mode)

    def dumps(self):
        return json.dumps(self.to_dict())

    @classmethod
    def loads(cls, text):
        return cls.from_dict(json.loads(text))


def _block_rng(seed, r):
    # Term r gets its own stream, so the first R terms do not depend on how
    # many terms are drawn in total.
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, r])


def _rational_column(rng, I):
    cuts = np.sort(rng.choice(np.arange(1, RATIONAL_DENOMINATOR), size=I - 1, replace=False))
    parts = np.diff(np.concatenate([[0], cuts, [RATIONAL_DENOMINATOR]]))
    return [Fraction(int(p), RATIONAL_DENOMINATOR) for p in parts]


def sample_block(M, I, seed, r, mode=GENERIC):
    rng = _block_rng(seed, r)
    if mode == GENERIC:
        lam = rng.uniform(0.5, 1.5)
        cols = rng.dirichlet(np.ones(I), size=M)
        return np.concatenate([[lam], cols[:, : I - 1].reshape(-1)])
    if mode == RATIONAL:
        k = int(rng.integers(RATIONAL_LAMBDA_DENOMINATOR // 2, 3 * RATIONAL_LAMBDA_DENOMINATOR // 2 + 1))
        out = [Fraction(k, RATIONAL_LAMBDA_DENOMINATOR)]
        for _ in range(M):
            out.extend(_rational_column(rng, I)[: I - 1])
        return np.array(out, dtype=object)
    raise InvalidArgument(f"unknown mode {mode!r}")


def sample_params(M, I, R, seed, mode=GENERIC):
    """Random feasible parameters.

    Generic mode draws weights uniformly on [0.5, 1.5] and each factor column
    from the flat Dirichlet on the I-simplex. Rational mode draws weights
    k/32 in the same range and columns as random compositions of 64, so every
    entry is an exact small fraction strictly inside the simplex.
    """
    if R < 1:
        raise InvalidArgument("R must be >= 1")
    blocks = [sample_block(M, I, seed, r, mode) for r in range(R)]
    return ParamVector(M, I, R, np.concatenate(blocks), mode)


def _check(theta, coupling):
    if theta.M != coupling.M:
        raise InvalidArgument(f"theta has M={theta.M} but coupling has M={coupling.M}")


def triplet_marginal(theta, triplet):
    """I x I x I marginal of the modes in ``triplet`` (in the given order)."""
    j, k, l = triplet
    A, B, C = theta.factor(j), theta.factor(k), theta.factor(l)
    w = theta.weights
    out = None
    for r in range(theta.R):
        term = w[r] * np.multiply.outer(np.multiply.outer(A[:, r], B[:, r]), C[:, r])
        out = term if out is None else out + term
    return out


def mu(theta, coupling):
    """Stacked column-major marginals, triplets in the coupling's canonical order."""
    _check(theta, coupling)
    return np.concatenate([triplet_marginal(theta, t).ravel(order="F") for t in coupling.triplets])


def _kron3(c, b, a):
    """``kron(c, kron(b, a))`` for matrices (vectors as columns); object-safe."""
    a = a if a.ndim == 2 else a[:, None]
    b = b if b.ndim == 2 else b[:, None]
    c = c if c.ndim == 2 else c[:, None]
    t = c[:, None, None, :, None, None] * b[None, :, None, None, :, None] * a[None, None, :, None, None, :]
    n0 = c.shape[0] * b.shape[0] * a.shape[0]
    n1 = c.shape[1] * b.shape[1] * a.shape[1]
    return t.reshape(n0, n1)


def jacobian_block(theta_r, coupling, I):
    """T*I^3 x n1 Jacobian of one rank-one term.

    ``theta_r`` is the block ``(lambda, ua^(1), ..., ua^(M))``. Within each
    triplet row block, with lifted columns a, b, c of the triplet's variables:
    the weight column is ``c (x) b (x) a`` and the truncated-factor blocks are
    ``lambda * (c (x) b (x) JP)``, ``lambda * (c (x) JP (x) a)`` and
    ``lambda * (JP (x) b (x) a)``. Other variables' columns stay zero.
    """
    M = coupling.M
    theta_r = np.asarray(theta_r)
    exact = theta_r.dtype == object
    n1 = block_size(M, I)
    lam = theta_r[0]
    lifted = [lift(theta_r[1 + m * (I - 1) : 1 + (m + 1) * (I - 1)]) for m in range(M)]
    JP = lift_jacobian(I)
    if exact:
        JP = JP.astype(int).astype(object)
    I3 = I**3
    J = np.zeros((coupling.T * I3, n1), dtype=object if exact else float)
    if exact:
        J[:] = 0
    for t, (j, k, l) in enumerate(coupling.triplets):
        a, b, c = lifted[j - 1], lifted[k - 1], lifted[l - 1]
        rows = slice(t * I3, (t + 1) * I3)
        J[rows, 0] = _kron3(c, b, a)[:, 0]
        for var, blk in ((j, _kron3(c, b, JP)), (k, _kron3(c, JP, a)), (l, _kron3(JP, b, a))):
            lo = 1 + (var - 1) * (I - 1)
            J[rows, lo : lo + I - 1] = lam * blk
    return J


def jacobian(theta, coupling):
    """Full Jacobian ``[J_1 ... J_R]``: rows by triplet, column blocks by term."""
    _check(theta, coupling)
    return np.hstack([jacobian_block(theta.block(r), coupling, theta.I) for r in range(theta.R)])
