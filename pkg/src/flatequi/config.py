"""
Experiment configuration: TOML in, a validated ``ExperimentPlan`` out.

The grammar is documented in README.md.  Every key except the ``[surface]``
table has a default.
"""
from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
import tomli

from .errors import BadParams, FlatequiError, ParseError, ValidationError
from .measures import KINDS as MEASURE_KINDS
from .measures import snap_delta
from .surface import BUNDLED, PolygonSpec, apply_matrix, from_polygon_spec, lattice_torus, normalize_area

log = logging.getLogger(__name__)

DEFAULTS = {
    "seed": 0,
    "workers": 1,
    "output": "flatequi_out",
    "measure": {"kind": "point_mass", "epsilon": 0.0, "delta": 1 / 81, "b": 1.0, "seed": 0},
    "test_function": {"kind": "siegel_annulus", "a": 1.0, "b": 2.0, "smoothing": 0.1},
    "experiment": {"N": 10_000, "N_extra": None, "l": 2.0, "b_exponent": 0.5, "t_margin": 0.5,
                   "t_points": 5, "reference": None, "reference_N": 20_000, "correlation": False},
}
SECTIONS = ("surface", "measure", "test_function", "experiment")
TOP_KEYS = ("seed", "workers", "output", "cache_dir")


@dataclass(frozen=True)
class ExperimentPlan:
    surface_spec: dict
    surface: object
    measure: dict
    delta: Fraction
    test_function: dict
    t_grid: tuple
    N: int
    N_extra: int
    l: float
    b_exponent: float
    reference: str
    reference_N: int
    correlation: bool
    output: Path
    seed: int
    workers: int
    cache_dir: str | None = None
    notes: tuple = field(default=())

    @property
    def space(self):
        from .lattice import is_lattice_surface
        return "torus" if is_lattice_surface(self.surface) else "stratum"

    def eta(self, t):
        return math.exp(-self.b_exponent * t)


def _line_of(err):
    m = re.search(r"line (\d+)", str(err))
    return int(m.group(1)) if m else None


def _section_at(text, line):
    sect = None
    for i, raw in enumerate(text.splitlines(), 1):
        if i > line:
            break
        m = re.match(r"\s*\[\s*([^\]]+?)\s*\]", raw)
        if m:
            sect = m.group(1)
    return sect


def load_toml(path):
    path = Path(path)
    text = path.read_text()
    try:
        return tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        line = _line_of(exc)
        sect = _section_at(text, line) if line else None
        where = f" in [{sect}]" if sect else ""
        raise ParseError(f"{path}: {exc}{where}", line, sect) from None


def _pt(p):
    if isinstance(p, (list, tuple)) and len(p) == 2:
        return complex(float(p[0]), float(p[1]))
    if isinstance(p, (int, float)):
        return complex(p)
    raise ValidationError("surface", f"cannot read point {p!r}")


def build_surface(spec):
    """Surface from a ``[surface]`` table: ``name``, ``lattice`` or ``polygons`` + ``gluings``."""
    try:
        if "name" in spec:
            name = spec["name"]
            if name not in BUNDLED:
                raise ValidationError("surface", f"unknown bundled surface {name!r}")
            x = BUNDLED[name]()
        elif "lattice" in spec:
            v1, v2 = (_pt(p) for p in spec["lattice"])
            x = lattice_torus(v1, v2)
        elif "polygons" in spec:
            polys = [[_pt(p) for p in poly] for poly in spec["polygons"]]
            glue = [tuple(int(i) for i in g) for g in spec.get("gluings", [])]
            x = from_polygon_spec(PolygonSpec(polys, glue))
        else:
            raise ValidationError("surface", "needs one of name, lattice, polygons")
        if "matrix" in spec:
            x = apply_matrix(x, np.array(spec["matrix"], dtype=float))
        if spec.get("normalize", True):
            x = normalize_area(x)
    except ValidationError:
        raise
    except FlatequiError as exc:
        raise ValidationError("surface", str(exc)) from exc
    return x


def _merge(raw):
    out = {k: raw.get(k, DEFAULTS.get(k)) for k in TOP_KEYS}
    for sect in ("measure", "test_function", "experiment"):
        got = raw.get(sect, {})
        if not isinstance(got, dict):
            raise ValidationError(sect, "must be a table")
        merged = dict(DEFAULTS[sect])
        if sect == "test_function" and "kind" in got and got["kind"] != merged["kind"]:
            merged = {}
        merged.update(got)
        out[sect] = merged
    return out


def parse_config(path):
    """Read and validate an experiment configuration."""
    raw = load_toml(path)
    unknown = set(raw) - set(SECTIONS) - set(TOP_KEYS)
    if unknown:
        raise ValidationError("keys", f"unknown top-level keys {sorted(unknown)}")
    if "surface" not in raw or not isinstance(raw["surface"], dict):
        raise ValidationError("surface")
    cfg = _merge(raw)
    base = Path(path).parent
    return plan_from_dict(raw["surface"], cfg, base)


def plan_from_dict(surface_spec, cfg, base=Path(".")):
    notes = []
    x = build_surface(surface_spec)

    meas = dict(cfg["measure"])
    if meas.get("kind") not in MEASURE_KINDS:
        raise ValidationError("measure.kind", f"expected one of {MEASURE_KINDS}")
    try:
        delta, note = snap_delta(float(meas["delta"]))
    except BadParams as exc:
        raise ValidationError("measure.delta", str(exc)) from None
    if note:
        notes.append(note)
    meas["delta"] = delta
    from .homology import build_basis, tautological_frame
    d = tautological_frame(x, build_basis(x)).d
    if "d" in meas and int(meas["d"]) != d:
        raise ValidationError("measure.d", f"the surface has {d} non-horocyclic directions")
    meas["d"] = d
    if not float(meas.get("b", 1.0)) > 0:
        raise ValidationError("measure.b", "must be positive")
    if not 0 <= float(meas.get("epsilon", 0.0)) < 1:
        raise ValidationError("measure.epsilon", "must lie in [0, 1)")

    exp = cfg["experiment"]
    l = float(exp["l"])
    if l < 2:
        raise ValidationError("experiment.l", "l must be at least 2")
    b_exp = float(exp["b_exponent"])
    if not 0 < b_exp < 1:
        raise ValidationError("experiment.b_exponent", "must lie in (0, 1)")
    L = abs(math.log(delta))
    t_max = L / 4 + float(exp["t_margin"])
    if "t_grid" in exp:
        t_grid = tuple(float(t) for t in exp["t_grid"])
    else:
        n = int(exp["t_points"])
        t_grid = tuple(float(t) for t in np.linspace(L / 8, L / 4, n))
    if not t_grid:
        raise ValidationError("experiment.t_grid", "empty")
    if any(t < 0 or t > t_max + 1e-12 for t in t_grid):
        raise ValidationError("experiment.t_grid", f"times must lie in [0, {t_max:.6g}]")
    N = int(exp["N"])
    if N < 2:
        raise ValidationError("experiment.N", "need at least two samples")
    N_extra = int(exp["N_extra"]) if exp.get("N_extra") else N

    from .lattice import is_lattice_surface
    space = "torus" if is_lattice_surface(x) else "stratum"
    tf = dict(cfg["test_function"])
    reference = exp.get("reference") or ("siegel_formula" if space == "torus" and
                                          tf.get("kind") == "siegel_annulus" else
                                          "haar" if space == "torus" else "ergodic")
    if reference not in ("haar", "siegel_formula", "ergodic"):
        raise ValidationError("experiment.reference", f"unknown method {reference!r}")

    from .equidistribution import make_test_function
    try:
        make_test_function(tf.get("kind"), {k: v for k, v in tf.items() if k != "kind"})
    except BadParams as exc:
        raise ValidationError("test_function", str(exc)) from None

    workers = int(cfg["workers"])
    if workers < 1:
        raise ValidationError("workers", "must be positive")
    out = Path(cfg["output"])
    if not out.is_absolute():
        out = base / out
    for n in notes:
        log.info(n)
    return ExperimentPlan(dict(surface_spec), x, meas, delta, tf, t_grid, N, N_extra, l, b_exp,
                          reference, int(exp["reference_N"]), bool(exp["correlation"]), out,
                          int(cfg["seed"]), workers, cfg.get("cache_dir"), tuple(notes))
