"""Seeded, resumable trial farm over coupling configurations.

Each trial gets its seed from a stable hash of (base seed, trial index), so the
number of worker processes never changes the data. Finished trials are
appended to a JSON-lines journal by the parent process only; rerunning with
the same journal skips them. The CSV is always regenerated from the journal,
sorted by trial index.
"""
import csv
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from contextlib import ExitStack
from dataclasses import asdict, dataclass, field
from itertools import product
from pathlib import Path

from . import coupling as cp
from . import recoverability as rc
from .errors import InvalidArgument, ResourceExhausted

log = logging.getLogger(__name__)

CSV_VERSION_LINE = "# tenreco-scan v1"
STRATEGIES = ("full", "random", "balanced")
COLUMNS = [
    "trial", "M", "I", "T", "strategy", "seed", "coupling_hash", "P", "d_spread",
    "defect_class", "defect_bound", "R_max", "necessary_bound", "achieved",
]


@dataclass
class ScanConfig:
    name: str
    M: list
    I: list
    T: list = field(default_factory=lambda: [None])
    strategy: str = "random"
    trials: int = 1
    base_seed: int = 0
    rel_tol: float = rc.DEFAULT_REL_TOL
    retries: int = rc.DEFAULT_RETRIES
    out: str | None = None
    journal: str | None = None
    jobs: int | None = None

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise InvalidArgument(f"unknown strategy {self.strategy!r}")
        if self.trials < 1:
            raise InvalidArgument("trials must be >= 1")
        if self.strategy == "full":
            self.T = [None]
        for M in self.M:
            if M < 4:
                raise InvalidArgument(f"M must be >= 4, got {M}")
        for I in self.I:
            if I < 2:
                raise InvalidArgument(f"I must be >= 2, got {I}")

    @classmethod
    def from_dict(cls, data):
        return cls(**data)

    def tasks(self):
        """(trial index, M, I, T, trial seed) for every trial, in canonical order."""
        out = []
        idx = 0
        for M, I, T in product(self.M, self.I, self.T):
            for _ in range(self.trials):
                out.append((idx, M, I, T, rc.derive_seed(self.base_seed, idx)))
                idx += 1
        return out


PRESETS = {
    "rand-M8-I4": dict(M=[8], I=[4], T=list(range(6, 21, 2)), strategy="random", trials=100),
    "bal-M8-I4": dict(M=[8], I=[4], T=list(range(4, 17)), strategy="balanced", trials=20),
    "full-sweep": dict(M=[4, 5, 6, 7], I=[2, 3, 4], strategy="full", trials=1),
}


def preset(name, **overrides):
    if name not in PRESETS:
        raise InvalidArgument(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    params = dict(PRESETS[name])
    params.update({k: v for k, v in overrides.items() if v is not None})
    return ScanConfig(name=name, **params)


def build_coupling(strategy, M, T, seed):
    if strategy == "full":
        return cp.make_full(M)
    if strategy == "random":
        return cp.make_random(M, T, seed)
    if strategy == "balanced":
        return cp.make_balanced(M, T, seed)
    raise InvalidArgument(f"unknown strategy {strategy!r}")


def run_trial(task, strategy, rel_tol, retries):
    idx, M, I, T, seed = task
    c = build_coupling(strategy, M, T, seed)
    st = cp.stats(c)
    res = rc.rmax_search(c, I, rc.derive_seed(seed, 1), rel_tol=rel_tol, retries_per_R=retries)
    return {
        "trial": idx,
        "M": M,
        "I": I,
        "T": c.T,
        "strategy": strategy,
        "seed": seed,
        "coupling_hash": c.digest(),
        "P": st.P,
        "d_spread": max(st.d) - min(st.d),
        "defect_class": st.defect_class,
        "defect_bound": res.defect_bound,
        "R_max": res.R_max,
        "necessary_bound": res.necessary_bound,
        "achieved": res.achieved,
    }


def _worker(args):
    task, strategy, rel_tol, retries = args
    try:
        return run_trial(task, strategy, rel_tol, retries)
    except ResourceExhausted as exc:
        return {"trial": task[0], "error": str(exc)}


def read_journal(path):
    done = {}
    if path and Path(path).exists():
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                if "error" in rec:
                    continue
                done[rec["trial"]] = rec
    return done


def default_jobs():
    env = os.environ.get("TENRECO_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_scan(config, limit=None):
    """Run (or resume) a scan; returns rows sorted by trial index.

    ``limit`` stops after that many new trials, which is how an interrupted
    run is simulated in tests.
    """
    tasks = config.tasks()
    done = read_journal(config.journal)
    pending = [t for t in tasks if t[0] not in done]
    if limit is not None:
        pending = pending[:limit]
    jobs = config.jobs or default_jobs()
    env_cap = os.environ.get("TENRECO_THREADS")
    if env_cap:
        jobs = min(jobs, max(1, int(env_cap)))
    log.info("scan %s: %d trials, %d pending, %d jobs", config.name, len(tasks), len(pending), jobs)

    failures = []
    args = [(t, config.strategy, config.rel_tol, config.retries) for t in pending]
    with ExitStack() as stack:
        journal = stack.enter_context(open(config.journal, "a")) if config.journal else None
        if jobs == 1:
            results = map(_worker, args)
        else:
            pool = stack.enter_context(ProcessPoolExecutor(max_workers=jobs))
            results = (f.result() for f in as_completed([pool.submit(_worker, a) for a in args]))
        for rec in results:
            if "error" in rec:
                failures.append(rec)
            else:
                done[rec["trial"]] = rec
            if journal:
                journal.write(json.dumps(rec) + "\n")
                journal.flush()

    rows = [done[k] for k in sorted(done)]
    if config.out:
        write_csv(rows, config.out)
    if failures:
        raise ResourceExhausted(f"{len(failures)} trials failed, e.g. trial {failures[0]['trial']}: {failures[0]['error']}")
    return rows


def write_csv(rows, path_or_file):
    own = isinstance(path_or_file, (str, Path))
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        fh.write(CSV_VERSION_LINE + "\n")
        w = csv.DictWriter(fh, fieldnames=COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if r[k] is None else r[k]) for k in COLUMNS})
    finally:
        if own:
            fh.close()


def read_csv(path):
    with open(path) as fh:
        first = fh.readline().rstrip("\n")
        if first != CSV_VERSION_LINE:
            raise InvalidArgument(f"{path} is not a {CSV_VERSION_LINE!r} file")
        return list(csv.DictReader(fh))


def config_dict(config):
    return asdict(config)
