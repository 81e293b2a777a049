"""``tenreco`` command line: couplings, rank searches, bounds, scans, certificates.

Exit codes: 0 success, 1 verification failure or bound-ordering violation,
2 usage error, 3 infeasible input, 4 resource exhausted.
"""
import argparse
import json
import logging
import sys
from pathlib import Path

from . import coupling as cp
from . import recoverability as rc
from . import report as rp
from . import scan as sc
from .errors import InvalidArgument, ResourceExhausted
from .parameterization import GENERIC, RATIONAL

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_EXHAUSTED = 4

COUPLING_STRATEGIES = ("full", "random", "balanced", "cartesian", "single-deg1", "double-deg1")

log = logging.getLogger("tenreco")


class UsageError(Exception):
    pass


def _emit(text, out=None):
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _int_list(text):
    """``"4,5,6"`` or ``"6:20:2"`` (inclusive start:stop:step) to a list of ints."""
    try:
        if ":" in text:
            parts = [int(x) for x in text.split(":")]
            start, stop = parts[0], parts[1]
            step = parts[2] if len(parts) > 2 else 1
            return list(range(start, stop + 1, step))
        return [int(x) for x in text.split(",") if x]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from exc


def _add_coupling_source(p, seed_flag="--coupling-seed"):
    g = p.add_argument_group("coupling")
    g.add_argument("--coupling", metavar="FILE", help="coupling JSON file")
    g.add_argument("--M", type=int, help="number of variables")
    g.add_argument("--T", type=int, help="number of triplets (random/balanced)")
    g.add_argument("--strategy", choices=COUPLING_STRATEGIES, default="full")
    g.add_argument("--partition", help="Cartesian partition, e.g. 1/23/45 or 1/2,3/4,5")
    g.add_argument(seed_flag, dest="coupling_seed", type=int, default=0, help="seed for random/balanced couplings")


def _coupling_from_args(args, required=True):
    """(coupling, partition) from the shared coupling flags."""
    partition = cp.parse_partition(args.partition) if args.partition else None
    if args.coupling:
        c = cp.Coupling.loads(Path(args.coupling).read_text())
        return c, partition
    strategy = args.strategy
    if partition is not None and strategy == "full":
        strategy = "cartesian"
    if strategy == "cartesian":
        if partition is None:
            raise UsageError("--strategy cartesian needs --partition")
        c = cp.make_cartesian(partition)
        if args.M is not None and args.M != c.M:
            raise InvalidArgument(f"partition covers 1..{c.M}, not 1..{args.M}")
        return c, partition
    if args.M is None:
        if not required:
            return None, partition
        raise UsageError("--M is required (or give --coupling FILE)")
    if strategy == "full":
        return cp.make_full(args.M), None
    if strategy == "single-deg1":
        return cp.single_deg1_coupling(args.M), None
    if strategy == "double-deg1":
        return cp.double_deg1_coupling(args.M), None
    if args.T is None:
        raise UsageError(f"--strategy {strategy} needs --T")
    if strategy == "random":
        return cp.make_random(args.M, args.T, args.coupling_seed), None
    return cp.make_balanced(args.M, args.T, args.coupling_seed), None


def cmd_coupling(args):
    c, _ = _coupling_from_args(args)
    if args.action == "gen":
        _emit(c.dumps(), args.out)
        return EXIT_OK
    info = cp.stats(c).to_dict()
    info["M"] = c.M
    info["triplets"] = [list(t) for t in c.triplets]
    if args.I is not None:
        info["n_obs"] = rc.n_obs(c, args.I)
        info["necessary_bound"] = rc.necessary_bound(c, args.I)
    _emit(json.dumps(info), args.out)
    return EXIT_OK


def cmd_rmax(args):
    c, _ = _coupling_from_args(args)
    res = rc.rmax_search(c, args.I, args.seed, rel_tol=args.tol, retries_per_R=args.retries,
                         r_cap=args.r_cap, mode=args.mode)
    _emit(res.dumps(), args.out)
    log.info("R_max=%d necessary=%d achieved=%s", res.R_max, res.necessary_bound, res.achieved)
    return EXIT_OK


def cmd_bounds(args):
    c, partition = _coupling_from_args(args)
    rmax = None
    if args.with_rmax:
        rmax = rc.rmax_search(c, args.I, args.seed, rel_tol=args.tol).R_max
    rep = rp.report(c.M, args.I, c, partition, rmax=rmax)
    _emit(rep.csv_row().rstrip("\n") if args.format == "csv" else rep.dumps(), args.out)
    return EXIT_OK


def _scan_config(args):
    overrides = dict(trials=args.trials, base_seed=args.seed, out=args.out, journal=args.journal, jobs=args.jobs)
    if args.preset:
        cfg = sc.preset(args.preset, **overrides)
    elif args.config:
        data = json.loads(Path(args.config).read_text())
        data.update({k: v for k, v in overrides.items() if v is not None})
        data.setdefault("name", Path(args.config).stem)
        cfg = sc.ScanConfig.from_dict(data)
    else:
        if not args.M or not args.I:
            raise UsageError("scan needs --preset, --config, or --M and --I")
        cfg = sc.ScanConfig(
            name="adhoc",
            M=args.M,
            I=args.I,
            T=args.T or [None],
            strategy=args.strategy,
            **{k: v for k, v in overrides.items() if v is not None},
        )
    if args.strategy_given and args.preset:
        raise UsageError("--strategy cannot override a preset")
    if cfg.strategy != "full" and cfg.T == [None]:
        raise UsageError(f"strategy {cfg.strategy} needs --T")
    return cfg


def cmd_scan(args):
    cfg = _scan_config(args)
    rows = sc.run_scan(cfg, limit=args.limit)
    if not cfg.out:
        sc.write_csv(rows, sys.stdout)
    log.info("scan %s: %d rows", cfg.name, len(rows))
    return EXIT_OK


def cmd_verify(args):
    cert = rc.RmaxResult.from_dict(json.loads(Path(args.certificate).read_text()))
    R = args.R if args.R is not None else cert.R_max
    if R < 1:
        raise InvalidArgument("nothing to verify: R must be >= 1")
    if R in cert.certificates:
        seed = cert.certificates[R]
    elif cert.certificates:
        # Beyond the certified range: extend the last certified stream.
        seed = cert.certificates[max(k for k in cert.certificates if k <= R)]
    else:
        raise InvalidArgument("certificate holds no seeds")
    tol = args.tol if args.tol is not None else cert.rel_tol
    rep = rc.verify_certificate(cert.coupling, cert.I, R, seed, mode=cert.mode, rel_tol=tol, exact=args.exact)
    out = {
        "R": R,
        "seed": seed,
        "method": rep.method,
        "rank": rep.rank,
        "cols": rep.cols,
        "full_column_rank": rep.full_column_rank,
    }
    if not rep.full_column_rank and rep.singular_values:
        out["singular_value_tail"] = rep.singular_values[-rc.TAIL_LENGTH :]
    _emit(json.dumps(out), args.out)
    return EXIT_OK if rep.full_column_rank else EXIT_FAILED


def build_parser():
    parser = argparse.ArgumentParser(prog="tenreco", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("coupling", help="generate or describe a coupling")
    p.add_argument("action", choices=("gen", "info"))
    _add_coupling_source(p, seed_flag="--seed")
    p.add_argument("--I", type=int, help="also report n_obs and the necessary bound (info)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_coupling)

    p = sub.add_parser("rmax", help="maximum recoverable rank search")
    _add_coupling_source(p)
    p.add_argument("--I", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=rc.DEFAULT_REL_TOL)
    p.add_argument("--retries", type=int, default=rc.DEFAULT_RETRIES)
    p.add_argument("--r-cap", type=int)
    p.add_argument("--mode", choices=(GENERIC, RATIONAL), default=GENERIC)
    p.add_argument("--out")
    p.set_defaults(func=cmd_rmax)

    p = sub.add_parser("bounds", help="merged bound report")
    _add_coupling_source(p)
    p.add_argument("--I", type=int, required=True)
    p.add_argument("--with-rmax", action="store_true", help="add an empirical R_max entry")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=rc.DEFAULT_REL_TOL)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("scan", help="seeded, resumable trial farm")
    p.add_argument("--preset", choices=sorted(sc.PRESETS))
    p.add_argument("--config", metavar="FILE", help="ScanConfig JSON")
    p.add_argument("--M", type=_int_list)
    p.add_argument("--I", type=_int_list)
    p.add_argument("--T", type=_int_list)
    p.add_argument("--strategy", choices=sc.STRATEGIES)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--journal")
    p.add_argument("--jobs", type=int)
    p.add_argument("--limit", type=int, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("verify", help="re-check a certificate from `rmax`")
    p.add_argument("--certificate", required=True, metavar="FILE")
    p.add_argument("--R", type=int, help="rank to verify (default: the certificate's R_max)")
    p.add_argument("--exact", action="store_true", help="exact rational rank instead of SVD")
    p.add_argument("--tol", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "scan":
        args.strategy_given = args.strategy is not None
        if args.strategy is None:
            args.strategy = "random"
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"tenreco: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InvalidArgument, json.JSONDecodeError, FileNotFoundError) as exc:
        print(f"tenreco: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ResourceExhausted as exc:
        print(f"tenreco: resource exhausted: {exc}", file=sys.stderr)
        return EXIT_EXHAUSTED
    except rp.BoundOrderingError as exc:
        print(f"tenreco: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
