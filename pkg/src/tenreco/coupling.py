"""Couplings: 3-uniform hypergraphs over variables 1..M.

A coupling lists which 3D marginals are jointly factorized. Triplets are kept
as sorted tuples in lexicographic order; that order fixes the row-block layout
of every stacked marginal vector and Jacobian built from the coupling.
"""
import hashlib
import json
import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import InvalidArgument, ResourceExhausted

MAX_RESAMPLES = 10_000

DEFECT_NONE = "none"
DEFECT_SINGLE = "single_deg1"
DEFECT_DOUBLE = "double_deg1_shared"


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def _components(M, triplets):
    uf = _UnionFind(M)
    for j, k, l in triplets:
        uf.union(j - 1, k - 1)
        uf.union(j - 1, l - 1)
    return len({uf.find(v) for v in range(M)})


@dataclass(frozen=True)
class Coupling:
    M: int
    triplets: tuple

    def __post_init__(self):
        canon = tuple(sorted(tuple(sorted(int(v) for v in t)) for t in self.triplets))
        object.__setattr__(self, "triplets", canon)
        self.validate()

    @property
    def T(self):
        return len(self.triplets)

    def validate(self):
        M = self.M
        if M < 4:
            raise InvalidArgument(f"a coupling needs M >= 4, got {M}")
        if not self.triplets:
            raise InvalidArgument("a coupling needs at least one triplet")
        for t in self.triplets:
            if len(t) != 3 or len(set(t)) != 3:
                raise InvalidArgument(f"{t} is not a 3-subset")
            if t[0] < 1 or t[2] > M:
                raise InvalidArgument(f"{t} has variables outside 1..{M}")
        if len(set(self.triplets)) != len(self.triplets):
            raise InvalidArgument("duplicate triplets")
        covered = {v for t in self.triplets for v in t}
        if len(covered) != M:
            missing = sorted(set(range(1, M + 1)) - covered)
            raise InvalidArgument(f"variables {missing} appear in no triplet")
        if _components(M, self.triplets) != 1:
            raise InvalidArgument("coupling hypergraph is not connected")

    def incidence(self):
        """T x M 0/1 incidence matrix."""
        V = np.zeros((self.T, self.M), dtype=int)
        for t, trip in enumerate(self.triplets):
            V[t, [v - 1 for v in trip]] = 1
        return V

    def to_dict(self):
        return {"M": self.M, "triplets": [list(t) for t in self.triplets]}

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(int(data["M"]), tuple(tuple(t) for t in data["triplets"]))
        except (KeyError, TypeError) as exc:
            raise InvalidArgument(f"malformed coupling: {exc}") from exc

    def dumps(self):
        return json.dumps(self.to_dict())

    @classmethod
    def loads(cls, text):
        return cls.from_dict(json.loads(text))

    def is_full(self):
        return self.T == math.comb(self.M, 3)

    def digest(self):
        """Short stable identifier for scan output."""
        return hashlib.blake2b(self.dumps().encode(), digest_size=8).hexdigest()


def is_connected(M, triplets):
    """True iff variables 1..M form one component under triplet co-membership."""
    return _components(M, triplets) == 1


@dataclass(frozen=True)
class CouplingStats:
    T: int
    d: tuple
    P: int
    defect_class: str
    connected: bool = True

    def to_dict(self):
        return {
            "T": self.T,
            "d": list(self.d),
            "P": self.P,
            "defect_class": self.defect_class,
            "connected": self.connected,
        }


def pair_count(V):
    """Pairs of variables sharing a triplet: (||V^T V||_0 - M) / 2."""
    G = V.T @ V
    return int((np.count_nonzero(G) - V.shape[1]) // 2)


def defect_class(c):
    """Degree-1 pattern of a coupling.

    Any triplet holding two degree-1 variables gives ``double_deg1_shared``;
    otherwise any degree-1 variable gives ``single_deg1``.
    """
    V = c.incidence()
    d = V.sum(axis=0)
    lonely = set(np.flatnonzero(d == 1) + 1)
    if not lonely:
        return DEFECT_NONE
    for t in c.triplets:
        if len(lonely.intersection(t)) >= 2:
            return DEFECT_DOUBLE
    return DEFECT_SINGLE


def stats(c):
    V = c.incidence()
    d = tuple(int(x) for x in V.sum(axis=0))
    return CouplingStats(
        T=c.T,
        d=d,
        P=pair_count(V),
        defect_class=defect_class(c),
        connected=is_connected(c.M, c.triplets),
    )


def _check_M(M):
    if M < 4:
        raise InvalidArgument(f"M must be >= 4, got {M}")


def make_full(M):
    _check_M(M)
    return Coupling(M, tuple(combinations(range(1, M + 1), 3)))


def _check_T(M, T):
    _check_M(M)
    lo, hi = math.ceil(M / 3), math.comb(M, 3)
    if not lo <= T <= hi:
        raise InvalidArgument(f"T must lie in [{lo}, {hi}] for M={M}, got {T}")


def sample_triplets(M, T, rng):
    """T distinct triplets drawn uniformly, with no validity check."""
    pool = list(combinations(range(1, M + 1), 3))
    idx = rng.choice(len(pool), size=T, replace=False)
    return tuple(pool[i] for i in sorted(idx))


def _is_valid(M, triplets):
    covered = {v for t in triplets for v in t}
    return len(covered) == M and is_connected(M, triplets)


def make_random(M, T, seed, max_resamples=MAX_RESAMPLES):
    """Uniform random coupling, resampled wholesale until it covers and connects."""
    _check_T(M, T)
    rng = np.random.default_rng(seed)
    for _ in range(max_resamples):
        triplets = sample_triplets(M, T, rng)
        if _is_valid(M, triplets):
            return Coupling(M, triplets)
    raise ResourceExhausted(f"no valid random coupling for M={M}, T={T} in {max_resamples} draws")


def _greedy_balanced(M, T, rng, pool):
    d = np.zeros(M + 1, dtype=int)
    chosen = []
    used = set()
    component = set()
    for _ in range(T):
        best = None
        best_keys = []
        for t in pool:
            if t in used:
                continue
            if component and component.isdisjoint(t):
                continue
            key = (max(d[v] for v in t) + 1, sum(d[v] for v in t))
            if best is None or key < best:
                best, best_keys = key, [t]
            elif key == best:
                best_keys.append(t)
        if not best_keys:
            return None
        pick = best_keys[rng.integers(len(best_keys))]
        chosen.append(pick)
        used.add(pick)
        component.update(pick)
        for v in pick:
            d[v] += 1
    return chosen


def make_balanced(M, T, seed, max_resamples=MAX_RESAMPLES):
    """Coupling with a degree sequence as flat as possible.

    Randomized greedy: each step adds a triplet touching the already-covered
    variables that minimizes the resulting max degree (then the degree sum),
    ties broken by the seeded generator. Growing from the covered set keeps the
    hypergraph connected. Restarts until every variable is covered and the
    degree spread is at most one; the flattest valid attempt is returned if
    that never happens.
    """
    _check_T(M, T)
    rng = np.random.default_rng(seed)
    pool = list(combinations(range(1, M + 1), 3))
    best = None
    best_spread = None
    for _ in range(max_resamples):
        chosen = _greedy_balanced(M, T, rng, pool)
        if chosen is None or not _is_valid(M, chosen):
            continue
        deg = np.bincount([v for t in chosen for v in t], minlength=M + 1)[1:]
        spread = int(deg.max() - deg.min())
        if best is None or spread < best_spread:
            best, best_spread = chosen, spread
        if spread <= 1:
            break
    if best is None:
        raise ResourceExhausted(f"no valid balanced coupling for M={M}, T={T}")
    return Coupling(M, tuple(best))


def check_partition(partition, M=None):
    sets = [sorted(int(v) for v in s) for s in partition]
    if len(sets) != 3 or any(not s for s in sets):
        raise InvalidArgument("a partition needs three non-empty sets")
    flat = [v for s in sets for v in s]
    if len(set(flat)) != len(flat):
        raise InvalidArgument("partition sets overlap")
    if M is None:
        M = max(flat)
    if set(flat) != set(range(1, M + 1)):
        raise InvalidArgument(f"partition does not cover exactly 1..{M}")
    return [tuple(s) for s in sets], M


def make_cartesian(partition):
    """All triplets picking one variable from each of three disjoint sets."""
    sets, M = check_partition(partition)
    triplets = [(j, k, l) for j in sets[0] for k in sets[1] for l in sets[2]]
    return Coupling(M, tuple(triplets))


def even_partition(M):
    """Split 1..M into three consecutive groups, as equal in size as possible.

    The first groups absorb the remainder: sizes (q+1, q, q) or (q+1, q+1, q).
    """
    _check_M(M)
    q, eps = divmod(M, 3)
    sizes = [q + (1 if i < eps else 0) for i in range(3)]
    out = []
    start = 1
    for s in sizes:
        out.append(tuple(range(start, start + s)))
        start += s
    return tuple(out)


def parse_partition(text):
    """Parse ``"1/23/45"`` or ``"1/2,3/4,5"`` into three variable tuples."""
    parts = text.split("/")
    if len(parts) != 3:
        raise InvalidArgument(f"partition {text!r} must have three '/'-separated groups")
    out = []
    for p in parts:
        if "," in p:
            out.append(tuple(int(v) for v in p.split(",") if v))
        else:
            out.append(tuple(int(ch) for ch in p))
    return tuple(out)


def single_deg1_coupling(M):
    """All triplets of 2..M plus (1, M-1, M): variable 1 appears once."""
    _check_M(M)
    trips = list(combinations(range(2, M + 1), 3)) + [(1, M - 1, M)]
    return Coupling(M, tuple(trips))


def double_deg1_coupling(M):
    """All triplets of 3..M plus (1, 2, M): variables 1 and 2 share their only triplet."""
    if M < 5:
        raise InvalidArgument("the double degree-1 pattern needs M >= 5")
    trips = list(combinations(range(3, M + 1), 3)) + [(1, 2, M)]
    return Coupling(M, tuple(trips))
