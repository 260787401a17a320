"""Command line front end: ``flatequi <group> <command> ...``."""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .config import build_surface, load_toml, parse_config
from .errors import FlatequiError, ValidationError

log = logging.getLogger("flatequi")


def _surface_from(cfg_path):
    raw = load_toml(cfg_path)
    if "surface" not in raw or not isinstance(raw["surface"], dict):
        raise ValidationError("surface")
    return build_surface(raw["surface"])


def parse_cocycle(spec, rank):
    """Comma-separated basis values; entries may be complex (``0.5j``, ``1+2j``)."""
    try:
        vals = [complex(tok.strip().replace(" ", "")) for tok in spec.split(",") if tok.strip()]
    except ValueError:
        raise ValidationError("cocycle", f"cannot read {spec!r}") from None
    if len(vals) != rank:
        raise ValidationError("cocycle", f"expected {rank} basis values, got {len(vals)}")
    arr = np.array(vals)
    return arr.real if not arr.imag.any() else arr


def cmd_surface_validate(args):
    x = _surface_from(args.config)
    print(f"ok {x!r}")
    print(f"genus {x.genus} stratum H({', '.join(map(str, x.stratum))}) marked {x.marked_count}")
    print(f"hash {x.content_hash()}")
    return 0


def cmd_sc_enumerate(args):
    from .saddle import ConnectionCache
    x = _surface_from(args.config)
    conns = ConnectionCache(args.cache_dir).get(x, args.radius)
    print(f"# surface {x.content_hash()}")
    print(f"# radius {args.radius!r}")
    print(f"# count {len(conns)}")
    if not args.quiet:
        for sc in conns:
            print(f"{sc.length!r}\t{sc.holonomy.real!r}\t{sc.holonomy.imag!r}\t{sc.start}\t{sc.end}")
    return 0


def cmd_norm_agy(args):
    from .norms import agy_norm, make_context, max_norm
    x = _surface_from(args.config)
    ctx = make_context(x, R_trunc=args.radius)
    c = parse_cocycle(args.cocycle, ctx.n)
    print(f"agy {agy_norm(ctx, c)!r}")
    print(f"max {max_norm(ctx, c)!r}")
    print(f"R_trunc {ctx.R_trunc!r}")
    return 0


def cmd_experiment_run(args):
    from .experiment import run
    plan = parse_config(args.config)
    if args.output:
        from dataclasses import replace
        from pathlib import Path
        plan = replace(plan, output=Path(args.output))
    res = run(plan)
    for name, p in res["paths"].items():
        print(f"{name}\t{p}")
    for w in res["summary"]["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    return 0


def cmd_rates_fit(args):
    from .equidistribution import rate_fit
    from .experiment import read_estimates
    ests = read_estimates(args.csv)
    series = [(e.t, e.value - args.reference, e.stderr) for e in ests if e.t is not None]
    window = tuple(args.window) if args.window else None
    fit = rate_fit(series, window)
    print(f"slope {fit.slope!r}")
    print(f"intercept {fit.intercept!r}")
    print(f"r_squared {fit.r_squared!r}")
    print(f"window {fit.window[0]!r} {fit.window[1]!r}")
    print(f"points {fit.n_points}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="flatequi", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    groups = p.add_subparsers(dest="group", required=True)

    g = groups.add_parser("surface").add_subparsers(dest="command", required=True)
    c = g.add_parser("validate", help="build and validate the configured surface")
    c.add_argument("config")
    c.set_defaults(func=cmd_surface_validate)

    g = groups.add_parser("sc").add_subparsers(dest="command", required=True)
    c = g.add_parser("enumerate", help="saddle connections up to a length")
    c.add_argument("config")
    c.add_argument("--radius", type=float, required=True)
    c.add_argument("--cache-dir", default=None)
    c.add_argument("--quiet", action="store_true", help="print the header only")
    c.set_defaults(func=cmd_sc_enumerate)

    g = groups.add_parser("norm").add_subparsers(dest="command", required=True)
    c = g.add_parser("agy", help="AGY norm of a cocycle given by its basis values")
    c.add_argument("config")
    c.add_argument("--cocycle", required=True)
    c.add_argument("--radius", type=float, default=None, help="truncation radius")
    c.set_defaults(func=cmd_norm_agy)

    g = groups.add_parser("experiment").add_subparsers(dest="command", required=True)
    c = g.add_parser("run", help="run every stage of the configured experiment")
    c.add_argument("config")
    c.add_argument("--output", default=None)
    c.set_defaults(func=cmd_experiment_run)

    g = groups.add_parser("rates").add_subparsers(dest="command", required=True)
    c = g.add_parser("fit", help="log-linear fit of |estimate - reference| against t")
    c.add_argument("csv")
    c.add_argument("--reference", type=float, default=0.0)
    c.add_argument("--window", type=float, nargs=2, default=None)
    c.set_defaults(func=cmd_rates_fit)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except FlatequiError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
