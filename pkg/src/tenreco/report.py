"""Merged bound report for one (M, I, coupling) configuration."""
import csv
import io
import json
from dataclasses import asdict, dataclass, field

from . import bounds
from . import cartesian as cart
from . import coupling as cp
from . import recoverability as rc
from .errors import InvalidArgument

NECESSARY = "necessary"
SUFFICIENT = "sufficient-identifiability"
EMPIRICAL = "empirical"


class BoundOrderingError(AssertionError):
    """A sufficient identifiability bound exceeded a necessary one."""


@dataclass
class BoundEntry:
    name: str
    kind: str
    value: int | None
    source: str
    note: str = ""


@dataclass
class BoundReport:
    M: int
    I: int
    coupling: str
    entries: list = field(default_factory=list)

    def get(self, name):
        for e in self.entries:
            if e.name == name:
                return e.value
        raise KeyError(name)

    def names(self):
        return [e.name for e in self.entries]

    def violations(self):
        nec = [e for e in self.entries if e.kind == NECESSARY and e.value is not None]
        suf = [e for e in self.entries if e.kind == SUFFICIENT and e.value is not None]
        return [(s.name, n.name) for s in suf for n in nec if s.value > n.value]

    def to_dict(self):
        return {"M": self.M, "I": self.I, "coupling": self.coupling, "entries": [asdict(e) for e in self.entries]}

    def dumps(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    def csv_row(self):
        """(header, row) flattened to one line per configuration."""
        header = ["M", "I", "coupling"] + [e.name for e in self.entries]
        row = [self.M, self.I, self.coupling] + ["" if e.value is None else e.value for e in self.entries]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerow(row)
        return buf.getvalue()


def describe(coupling, partition=None):
    if coupling.is_full():
        return f"full(M={coupling.M})"
    if partition is not None:
        return "cartesian(" + "/".join(",".join(map(str, s)) for s in partition) + ")"
    return f"custom(T={coupling.T},{coupling.digest()})"


def report(M, I, coupling=None, partition=None, rmax=None):
    """Collect every bound that applies to the configuration.

    Kargas bounds and the even-partition bound are attached to full couplings
    only; the Cartesian bounds need ``partition`` (which must generate the
    coupling). ``rmax`` adds an empirical entry.
    """
    if coupling is None:
        coupling = cp.make_cartesian(partition) if partition is not None else cp.make_full(M)
    if coupling.M != M:
        raise InvalidArgument(f"coupling is over M={coupling.M}, not {M}")
    if partition is not None:
        partition = tuple(tuple(sorted(s)) for s in partition)
        if cp.make_cartesian(partition).triplets != coupling.triplets:
            raise InvalidArgument("partition does not generate the given coupling")

    rep = BoundReport(M, I, describe(coupling, partition))
    add = rep.entries.append
    add(BoundEntry("necessary", NECESSARY, rc.necessary_bound(coupling, I), "image-dimension count"))
    st = cp.stats(coupling)
    db = rc.defect_bound(st, I)
    if db is not None:
        add(BoundEntry("defect", NECESSARY, db, f"degree-1 pattern {st.defect_class}"))

    if coupling.is_full():
        add(BoundEntry("kargas_t1", SUFFICIENT, bounds.kargas_t1_bound(M, I), "Kargas et al. 2018, Thm 1"))
        add(BoundEntry("kargas_t2", SUFFICIENT, bounds.kargas_t2_bound(M, I), "Kargas et al. 2018, Thm 2"))
        ev = bounds.even_partition_bound(M, I)
        raw = (M // 3) ** 2 * (I - 1) ** 2 / 3 - (M // 3) * (I - 1)
        add(BoundEntry("even_partition", SUFFICIENT, ev, "Cartesian even partition, closed form",
                       "vacuous" if raw <= 0 else ""))

    if partition is not None:
        sizes = cart.reduced_sizes(partition, I)
        val = cart.cartesian_ident_bound(partition, I)
        add(BoundEntry("cartesian", SUFFICIENT, val, f"Bocci bound on reduced sizes {sizes}",
                       "" if val is not None else "some reduced size <= 2"))
        add(BoundEntry("kruskal_generic", SUFFICIENT, bounds.kruskal_generic_max_rank(list(sizes)),
                       f"generic Kruskal on reduced sizes {sizes}"))

    if rmax is not None:
        add(BoundEntry("rmax", EMPIRICAL, rmax, "Jacobian rank search"))

    bad = rep.violations()
    if bad:
        raise BoundOrderingError(f"sufficient bounds exceed necessary ones: {bad}")
    return rep
