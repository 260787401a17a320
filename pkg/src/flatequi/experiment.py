"""
Orchestration of one experiment plan: stages, CSV files and the summary.

Stages run in order: build, enumerate, norms, richness, reference,
translate, extra_average, (correlation), rates.  Each writes what it
produced; a failing stage is re-raised as ``StageError`` carrying its name.
Soft findings (a measure that is not rich, too few points for a fit) are
warnings in the summary, not failures.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from pathlib import Path

import numpy as np

from .equidistribution import (Estimate, combined_stderr, correlation_decay, extra_average,
                               generic_start, make_test_function, rate_fit, reference_integral,
                               theorem_window, translate_average)
from .errors import FlatequiError, InsufficientPoints, StageError
from .foliation import period_box
from .measures import make_measure, partition_weights, richness_check
from .norms import eta_schedule, injectivity_proxy, make_context
from .saddle import ConnectionCache

log = logging.getLogger(__name__)

CSV_COLUMNS = ("t", "estimate", "stderr", "N", "seed", "method", "surface_hash")
STAGES = ("build", "enumerate", "norms", "richness", "reference", "translate", "extra_average",
          "correlation", "rates")


def stage_seed(master, stage, j=0):
    """Seed for item ``j`` of a stage, derived from the master seed alone."""
    idx = STAGES.index(stage)
    return int(np.random.SeedSequence([int(master), idx, int(j)]).generate_state(1)[0])


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_estimates(path, estimates, surface_hash):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for e in estimates:
            t = None if e.t is None else float(e.t)
            w.writerow([_fmt(t), _fmt(float(e.value)), _fmt(float(e.stderr)), e.N, e.seed,
                        e.method, surface_hash])
    return path


def read_estimates(path):
    out = []
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            t = float(row["t"]) if row["t"] else None
            out.append(Estimate(float(row["estimate"]), float(row["stderr"]), int(row["N"]),
                                int(row["seed"]), t, row["method"]))
    return out


def _stage(name, fn, *args, **kw):
    log.info("stage %s", name)
    try:
        return fn(*args, **kw)
    except StageError:
        raise
    except FlatequiError as exc:
        raise StageError(name, exc) from exc


def run(plan):
    """Execute ``plan``; returns a dict of output paths and the summary."""
    out = Path(plan.output)
    out.mkdir(parents=True, exist_ok=True)
    x = plan.surface
    h = x.content_hash()
    summary = {"surface_hash": h, "stratum": list(x.stratum), "genus": x.genus,
               "space": plan.space, "seed": plan.seed, "delta": str(plan.delta),
               "t_grid": list(plan.t_grid), "notes": list(plan.notes), "warnings": []}
    warn = summary["warnings"].append
    f = make_test_function(plan.test_function["kind"],
                           {k: v for k, v in plan.test_function.items() if k != "kind"})

    # build + enumerate + norms
    ctx = _stage("build", make_context, x)
    cache = ConnectionCache(plan.cache_dir)
    conns = _stage("enumerate", cache.get, x, ctx.R_trunc)
    summary["connections"] = {"R_trunc": ctx.R_trunc, "count": len(conns)}

    def norms():
        r_hat, in_m = injectivity_proxy(ctx)
        box = period_box(x, r_hat, ctx=ctx)
        return r_hat, in_m, box
    r_hat, in_m, box = _stage("norms", norms)
    summary["norms"] = {"systole": ctx.systole, "r_hat": r_hat, "in_M_eta": in_m,
                        "dual_norms": [float(v) for v in ctx.dual_norms], "d": box.d}

    # richness
    meas = plan.measure
    params = {k: v for k, v in meas.items()
              if k not in ("kind", "d", "epsilon", "delta", "b", "seed")}
    rho = _stage("richness", make_measure, meas["kind"], meas["d"], 1.0, params, meas.get("seed", 0))
    rep = _stage("richness", richness_check, rho, float(plan.delta), float(meas["epsilon"]),
                 float(meas["b"]))
    summary["richness"] = {"max_mass": rep.max_mass, "threshold": rep.threshold,
                           "verdict": rep.verdict, "b_min": rep.b_min}
    if not rep.verdict:
        msg = (f"measure {meas['kind']} is not {meas['epsilon']}-rich at scale {plan.delta} "
               f"with b = {meas['b']} (needs b > {rep.b_min:.6g}); continuing")
        log.warning(msg)
        warn(msg)

    # reference
    def reference():
        if plan.reference == "ergodic":
            refs = []
            for j in range(2):
                sd = stage_seed(plan.seed, "reference", j)
                x0 = generic_start(x, sd)
                refs.append(reference_integral(f, plan.space, "ergodic", plan.reference_N, sd, x0=x0))
            return refs
        sd = stage_seed(plan.seed, "reference")
        return [reference_integral(f, plan.space, plan.reference, plan.reference_N, sd,
                                   workers=plan.workers)]
    refs = _stage("reference", reference)
    ref = refs[0]
    paths = {"reference": write_estimates(out / "reference.csv", refs, h)}
    summary["reference"] = [{"method": r.method, "value": r.value, "stderr": r.stderr} for r in refs]
    if len(refs) == 2:
        gap = abs(refs[0].value - refs[1].value)
        summary["reference_agreement"] = {"gap": gap, "combined_stderr": combined_stderr(*refs),
                                          "agree": gap <= 3 * combined_stderr(*refs)}

    # translates
    def translates():
        return [translate_average(box, rho, f, t, plan.N, stage_seed(plan.seed, "translate", j),
                                  plan.workers) for j, t in enumerate(plan.t_grid)]
    trans = _stage("translate", translates)
    paths["translate"] = write_estimates(out / "translate.csv", trans, h)

    # extra average
    def extras():
        pw = partition_weights(rho, plan.delta)
        return [extra_average(box, pw, f, t, plan.l, plan.N_extra,
                              stage_seed(plan.seed, "extra_average", j), plan.workers)
                for j, t in enumerate(plan.t_grid)]
    extra = _stage("extra_average", extras)
    paths["extra_average"] = write_estimates(out / "extra_average.csv", extra, h)

    if plan.correlation:
        if plan.space != "torus":
            warn("correlation stage needs Haar sampling; skipped on a stratum")
        else:
            corr = _stage("correlation", correlation_decay, f, f, "torus", plan.t_grid, plan.N,
                          stage_seed(plan.seed, "correlation"))
            paths["correlation"] = write_estimates(out / "correlation.csv", corr, h)

    # rates
    D = [(e.t, abs(e.value - ref.value), combined_stderr(e, ref)) for e in trans]
    summary["discrepancy"] = [{"t": t, "D": d, "stderr": s} for t, d, s in D]
    window = theorem_window(plan.delta)
    summary["window"] = list(window)
    try:
        fit = rate_fit(D, window)
        summary["rate_fit"] = {"slope": fit.slope, "intercept": fit.intercept,
                               "r_squared": fit.r_squared, "n_points": fit.n_points}
        kappa = -fit.slope
        if kappa > 0 and plan.b_exponent < kappa / 2:
            warn(f"eta(t) = exp(-{plan.b_exponent} t) exceeds exp(-kappa t / 2) "
                 f"for the fitted kappa = {kappa:.6g}")
    except InsufficientPoints as exc:
        summary["rate_fit"] = None
        warn(f"rate fit skipped: {exc}")
    summary["eta"] = [eta_schedule(t, plan.b_exponent) for t in plan.t_grid]

    spath = out / "summary.json"
    spath.write_text(json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")
    paths["summary"] = spath
    return {"paths": paths, "summary": summary}


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(w) for k, w in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(w) for w in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v
