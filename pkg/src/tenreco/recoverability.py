"""Jacobian rank tests and the maximum recoverable rank search.

A coupled model of rank R is generically recoverable iff its Jacobian is full
column rank at one parameter point. ``rmax_search`` grows R one random term
at a time while that holds, and records the seeds of the certifying points.
"""
import hashlib
import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from . import coupling as cp
from .errors import InvalidArgument, ResourceExhausted
from .exact import exact_rank
from .parameterization import GENERIC, RATIONAL, block_size, jacobian_block, sample_block, sample_params

DEFAULT_REL_TOL = 1e-10
DEFAULT_RETRIES = 3
TAIL_LENGTH = 8


@dataclass
class RankReport:
    rows: int
    cols: int
    rank: int
    singular_values: list
    tolerance: float | None
    method: str

    @property
    def full_column_rank(self):
        return self.rank == self.cols


def numerical_rank(J, rel_tol=DEFAULT_REL_TOL, method="svd"):
    """Rank of ``J``.

    ``svd`` counts singular values above ``rel_tol * sigma_max``.
    ``exact`` runs fraction-free elimination on rational entries.
    """
    if method == "exact":
        A = np.asarray(J, dtype=object)
        if A.ndim != 2 or A.size == 0:
            raise InvalidArgument("rank needs a non-empty matrix")
        return RankReport(A.shape[0], A.shape[1], exact_rank(A), [], None, "exact_rational")
    if method != "svd":
        raise InvalidArgument(f"unknown rank method {method!r}")
    if rel_tol <= 0:
        raise InvalidArgument("rel_tol must be positive")
    A = np.asarray(J, dtype=float)
    if A.ndim != 2 or A.size == 0:
        raise InvalidArgument("rank needs a non-empty matrix")
    if not np.all(np.isfinite(A)):
        raise InvalidArgument("matrix has non-finite entries")
    s = np.linalg.svd(A, compute_uv=False)
    rank = 0 if s[0] == 0 else int(np.count_nonzero(s > rel_tol * s[0]))
    return RankReport(A.shape[0], A.shape[1], rank, s.tolist(), rel_tol, "svd")


def n_obs(coupling, I):
    """Dimension of the image of the coupled parameterization."""
    if I < 2:
        raise InvalidArgument("I must be >= 2")
    st = cp.stats(coupling)
    return 1 + coupling.M * (I - 1) + st.P * (I - 1) ** 2 + st.T * (I - 1) ** 3


def necessary_bound(coupling, I):
    """Largest R whose parameter count fits in the image dimension."""
    return n_obs(coupling, I) // block_size(coupling.M, I)


def defect_bound(stats, I):
    """Rank cap forced by degree-1 variables, or None."""
    if stats.defect_class == cp.DEFECT_SINGLE:
        return I * I
    if stats.defect_class == cp.DEFECT_DOUBLE:
        return I * (I + 1) // 2
    return None


def derive_seed(*parts):
    """Stable 63-bit seed from integers (independent of PYTHONHASHSEED)."""
    h = hashlib.blake2b(",".join(str(int(p)) for p in parts).encode(), digest_size=8)
    return int.from_bytes(h.digest(), "little") >> 1


@dataclass
class RmaxResult:
    coupling: cp.Coupling
    I: int
    R_max: int
    necessary_bound: int
    base_seed: int
    rel_tol: float
    mode: str = GENERIC
    certificates: dict = field(default_factory=dict)
    retries_used: dict = field(default_factory=dict)
    defect_bound: int | None = None
    failing_R: int | None = None
    failing_tail: list = field(default_factory=list)

    @property
    def achieved(self):
        return self.R_max == self.necessary_bound

    def to_dict(self):
        d = asdict(self)
        d["coupling"] = self.coupling.to_dict()
        d["achieved"] = self.achieved
        d["certificates"] = {str(k): v for k, v in self.certificates.items()}
        d["retries_used"] = {str(k): v for k, v in self.retries_used.items()}
        return d

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        data.pop("achieved", None)
        data["coupling"] = cp.Coupling.from_dict(data["coupling"])
        data["certificates"] = {int(k): v for k, v in data.get("certificates", {}).items()}
        data["retries_used"] = {int(k): v for k, v in data.get("retries_used", {}).items()}
        return cls(**data)

    def dumps(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def certificate_jacobian(coupling, I, R, seed, mode=GENERIC, exact=False):
    """Jacobian at the seeded point; ``exact`` assembles it over the rationals.

    A float point is converted entrywise to the exact fraction it stores, so an
    exact rank certifies that very point rather than a rounded Jacobian.
    """
    theta = sample_params(coupling.M, I, R, seed, mode)
    blocks = []
    for r in range(R):
        b = theta.block(r)
        if exact and b.dtype != object:
            b = np.array([Fraction(float(x)) for x in b], dtype=object)
        blocks.append(jacobian_block(b, coupling, I))
    return np.hstack(blocks)


class _TermCache:
    """Jacobian column blocks per seed, drawn term by term on demand."""

    def __init__(self, coupling, I, mode):
        self.coupling, self.I, self.mode = coupling, I, mode
        self.blocks = {}

    def jacobian(self, seed, R):
        blocks = self.blocks.setdefault(seed, [])
        while len(blocks) < R:
            term = sample_block(self.coupling.M, self.I, seed, len(blocks), self.mode)
            blocks.append(jacobian_block(term, self.coupling, self.I))
        return np.hstack(blocks[:R])


def rmax_search(coupling, I, seed, rel_tol=DEFAULT_REL_TOL, retries_per_R=DEFAULT_RETRIES, r_cap=None, mode=GENERIC):
    """Largest R at which a random point has a full-column-rank Jacobian.

    Terms are appended one at a time from a seeded stream; the search stops
    at the first R whose Jacobian is column-rank deficient after
    ``retries_per_R`` redraws of all R terms (each from a derived seed), and
    never goes past the necessary bound or ``r_cap``.

    For a fixed stream, rank-at-tolerance of a column prefix is monotone in
    the prefix length (sigma_max only grows, sigma_min only shrinks), so the
    first failing R is located by bisection instead of testing every R. The
    outcome is the same as growing R one step at a time.
    """
    if I < 2:
        raise InvalidArgument("I must be >= 2")
    bound = necessary_bound(coupling, I)
    cap = bound if r_cap is None else min(bound, r_cap)
    if cap < 1:
        raise ResourceExhausted(f"r_cap={r_cap} leaves nothing to search")
    result = RmaxResult(
        coupling=coupling,
        I=I,
        R_max=0,
        necessary_bound=bound,
        base_seed=seed,
        rel_tol=rel_tol,
        mode=mode,
        defect_bound=defect_bound(cp.stats(coupling), I),
    )
    cache = _TermCache(coupling, I, mode)

    def rank_at(s, R):
        J = cache.jacobian(s, R)
        if mode == RATIONAL:
            return numerical_rank(J, method="exact")
        return numerical_rank(J, rel_tol)

    cur = seed
    good = 0
    while True:
        bad = cap + 1
        last_fail = None
        probe = cap
        while bad - good > 1:
            rep = rank_at(cur, probe)
            if rep.full_column_rank:
                good = probe
            else:
                bad, last_fail = probe, rep
            probe = (good + bad) // 2
        for R in range(result.R_max + 1, good + 1):
            result.certificates[R] = cur
            result.retries_used.setdefault(R, 0)
        result.R_max = good
        if good == cap:
            return result

        R = good + 1
        if last_fail is None or last_fail.cols != R * block_size(coupling.M, I):
            last_fail = rank_at(cur, R)
        cache.blocks.pop(cur, None)
        for attempt in range(1, retries_per_R + 1):
            s = derive_seed(seed, R, attempt)
            rep = rank_at(s, R)
            if rep.full_column_rank:
                result.retries_used[R] = attempt
                cur = s
                break
            last_fail = rep
            cache.blocks.pop(s, None)
        else:
            result.retries_used[R] = retries_per_R
            result.failing_R = R
            result.failing_tail = last_fail.singular_values[-TAIL_LENGTH:]
            return result


def verify_certificate(coupling, I, R, seed, mode=GENERIC, rel_tol=DEFAULT_REL_TOL, exact=False):
    """Rebuild the certified point and recompute the rank of its Jacobian."""
    J = certificate_jacobian(coupling, I, R, seed, mode, exact=exact)
    if exact:
        return numerical_rank(J, method="exact")
    return numerical_rank(J.astype(float), rel_tol)


def rank_saturation_check(coupling, I, R_big, seed, rel_tol=DEFAULT_REL_TOL):
    """True iff the Jacobian rank at a generic point with R_big terms equals n_obs."""
    if R_big <= necessary_bound(coupling, I) + 2:
        raise InvalidArgument("R_big must exceed the necessary bound by more than 2")
    J = certificate_jacobian(coupling, I, R_big, seed)
    return numerical_rank(J, rel_tol).rank == n_obs(coupling, I)


def image_rank(coupling, I, R, seed, rel_tol=DEFAULT_REL_TOL):
    return numerical_rank(certificate_jacobian(coupling, I, R, seed), rel_tol).rank

