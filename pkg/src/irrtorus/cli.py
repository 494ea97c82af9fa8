"""Command line sweeps: config parsing, deterministic CSV/SVG output, fit reports.

Every subcommand resolves a RunConfig (defaults < config file < --set < flags),
splits the experiment into independent cells, evaluates them in order (on a
process pool when more than one worker is allowed) and writes
``<out>/<experiment>.csv`` whose leading '#' lines carry the tool version,
the config hash and the config itself as JSON.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import math
import os
import re
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import circle, expsum, nls, strichartz
from .field import SpaceTimeGrid, level_set_profile, make_field, propagate_eval
from .quadform import Annulus, FreqBox, QuadraticForm

SCHEMA_VERSION = 1
EXPERIMENTS = ("moment", "strichartz", "multilinear", "levelset", "arcs", "kernel", "nls")
WORKERS_ENV = "IRRTORUS_WORKERS"

# columns of every per-experiment CSV (after the '#' header lines)
SCHEMAS = {
    "moment": ["row", "r", "N", "value", "normalized", "method", "status"],
    "strichartz": ["row", "d", "theta", "p", "N", "family", "seed", "value", "status"],
    "multilinear": ["row", "d", "theta", "k", "scales", "seed", "lhs", "rhs_subcritical", "rhs_critical",
                    "s", "delta", "status"],
    "levelset": ["row", "d", "theta", "N", "lambda", "measure", "constant", "status"],
    "arcs": ["row", "r", "N", "total", "major", "minor", "m1", "m2", "major_share", "comparator", "status"],
    "kernel": ["row", "N", "samples", "seed", "max_ratio", "status"],
    "nls": ["row", "d", "theta", "k", "N", "dt", "T", "seed", "mass_drift", "hamiltonian_drift", "status"],
}
FIT_COLUMNS = ("row", "d", "theta", "p", "N", "value")


class ConfigError(ValueError):
    pass


class SchemaError(ValueError):
    pass


# ---------------------------------------------------------------- config

@dataclass
class RunConfig:
    """Everything that determines the output of one sweep.

    ``workers`` and ``out`` affect neither the numbers nor the CSV bytes and
    are left out of the hash and the serialized header.
    """

    experiment: str
    d: int = 2
    theta: tuple = (1.0, math.sqrt(2))
    theta_tags: tuple = ()
    p: float | None = None
    r: float | None = None
    N: tuple = ()
    interval: tuple = (0.0, 1.0)
    seed: int = 0
    seeds: int = 1
    families: tuple = ("all-ones",)
    grid_oversample: int | None = None
    k: int = 1
    mu: float = 1.0
    dt: float = 1e-3
    T: float = 1.0
    eps: float = 0.2
    level_exponent: float = 0.8
    level_decay: float = 5.7
    samples: int = 256
    tolerance: float = 0.15
    out: str = "."
    workers: int | None = field(default=None, compare=False)

    @property
    def form(self) -> QuadraticForm:
        return QuadraticForm(self.theta, tag=",".join(self.theta_tags) or None)

    @property
    def seed_list(self) -> list:
        return [self.seed + i for i in range(self.seeds)]

    def payload(self) -> dict:
        data = asdict(self)
        data.pop("workers")
        data.pop("out")
        data["schema_version"] = SCHEMA_VERSION
        return data

    def to_json(self) -> str:
        return json.dumps(self.payload(), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]


_DEFAULT_N = {
    "moment": (32, 64, 128),
    "strichartz": (4, 8, 16),
    "multilinear": (8, 4),
    "levelset": (8, 16, 32),
    "arcs": (32, 64, 128),
    "kernel": (64, 128, 256, 512),
    "nls": (16,),
}

_TAG = re.compile(r"^sqrt\(?(\d+(?:\.\d+)?)\)?$")


def parse_theta(text: str) -> tuple[tuple, tuple]:
    """'1, sqrt2, 1.7' -> values and tags (tags only for symbolic entries)."""
    vals, tags = [], []
    for tok in (t.strip() for t in text.split(",")):
        if not tok:
            continue
        m = _TAG.match(tok)
        if m:
            vals.append(math.sqrt(float(m.group(1))))
            tags.append(f"sqrt{m.group(1)}")
        else:
            vals.append(float(tok))
            tags.append(tok)
    if not vals:
        raise ConfigError("theta is empty")
    symbolic = any(_TAG.match(t) for t in tags)
    return tuple(vals), tuple(tags) if symbolic else ()


def _num_list(text: str, cast) -> tuple:
    try:
        return tuple(cast(t) for t in str(text).replace(" ", "").split(",") if t)
    except ValueError as exc:
        raise ConfigError(f"bad list {text!r}: {exc}") from None


def _opt_float(text):
    return None if str(text).lower() in ("", "none") else float(text)


def _opt_int(text):
    return None if str(text).lower() in ("", "none") else int(text)


_PARSERS = {
    "d": int, "p": _opt_float, "r": _opt_float, "seed": int, "seeds": int,
    "grid_oversample": _opt_int, "k": int, "mu": float, "dt": float, "T": float, "eps": float,
    "level_exponent": float, "level_decay": float, "samples": int, "tolerance": float,
    "workers": _opt_int, "out": str, "experiment": str,
    "N": lambda s: _num_list(s, int),
    "interval": lambda s: _num_list(s, float),
    "families": lambda s: tuple(t.strip() for t in s.split(",") if t.strip()),
}


def _apply(settings: dict, values: dict) -> None:
    for key, raw in values.items():
        if key == "schema_version":
            if int(raw) != SCHEMA_VERSION:
                raise ConfigError(f"unsupported schema_version {raw} (expected {SCHEMA_VERSION})")
            continue
        if key == "theta":
            settings["theta"], settings["theta_tags"] = parse_theta(raw)
            continue
        if key not in _PARSERS:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            settings[key] = _PARSERS[key](raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from None


def read_config_file(path) -> dict:
    """Keys of the [irrtorus] section of an INI file."""
    cp = configparser.ConfigParser()
    cp.optionxform = str
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if "irrtorus" not in cp:
        raise ConfigError(f"{path}: missing [irrtorus] section")
    return dict(cp["irrtorus"])


def build_config(experiment: str, file_values: dict | None = None, overrides: dict | None = None) -> RunConfig:
    settings: dict = {"experiment": experiment}
    _apply(settings, dict(file_values or {}))
    if settings["experiment"] != experiment:
        raise ConfigError(f"config is for {settings['experiment']!r}, not {experiment!r}")
    _apply(settings, {k: v for k, v in (overrides or {}).items() if v is not None})
    if "theta" in settings and "d" not in settings:
        settings["d"] = len(settings["theta"])
    if "d" in settings and "theta" not in settings and settings["d"] != 2:
        settings["theta"] = tuple(math.sqrt(j + 1) for j in range(settings["d"]))
    settings.setdefault("N", _DEFAULT_N[experiment])
    cfg = RunConfig(**settings)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    """Preconditions of each experiment, checked before any work starts."""
    ex = cfg.experiment
    if ex not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {ex!r}")
    if len(cfg.theta) != cfg.d:
        raise ConfigError(f"theta has {len(cfg.theta)} entries but d={cfg.d}")
    if any(not (t > 0 and math.isfinite(t)) for t in cfg.theta):
        raise ConfigError("theta entries must be positive")
    if not cfg.N or any(n < 1 for n in cfg.N):
        raise ConfigError("N must be a nonempty list of positive integers")
    if len(cfg.interval) != 2 or not cfg.interval[1] > cfg.interval[0]:
        raise ConfigError("interval must be 't0, t1' with t1 > t0")
    if cfg.seeds < 1 or cfg.seed < 0 or cfg.seed >= 2 ** 64:
        raise ConfigError("need seeds >= 1 and 0 <= seed < 2^64")
    if cfg.grid_oversample is not None and cfg.grid_oversample < 1:
        raise ConfigError("grid_oversample must be >= 1")
    if cfg.workers is not None and cfg.workers < 1:
        raise ConfigError("workers must be >= 1")
    if ex == "moment" and (cfg.r is None or cfg.r <= 0):
        raise ConfigError("moment needs r > 0")
    if ex == "arcs" and (cfg.r is None or cfg.r <= 0 or not 0 < cfg.eps < 0.5):
        raise ConfigError("arcs needs r > 0 and 0 < eps < 1/2")
    if ex in ("moment", "strichartz") and len(cfg.N) < 3:
        raise ConfigError(f"{ex} fits a slope and needs at least 3 values of N")
    if ex == "strichartz":
        if cfg.p is None or cfg.p < 2:
            raise ConfigError("strichartz needs p >= 2")
        bad = set(cfg.families) - {"all-ones", "gaussian-random", "extremizer"}
        if bad or not cfg.families:
            raise ConfigError(f"unknown families {sorted(bad)}")
    if ex == "multilinear":
        if len(cfg.N) < 2 or any(a < b for a, b in zip(cfg.N, cfg.N[1:])):
            raise ConfigError("multilinear needs N_1 >= N_2 >= ... (at least two scales)")
    if ex == "levelset" and cfg.level_exponent <= 0:
        raise ConfigError("level_exponent must be positive")
    if ex == "nls":
        if cfg.k < 1 or cfg.dt <= 0 or cfg.T <= 0:
            raise ConfigError("nls needs k >= 1, dt > 0 and T > 0")


# ---------------------------------------------------------------- cells

def _moment_cell(cfg: RunConfig, N: int) -> list:
    r = cfg.r
    if float(r).is_integer() and int(r) % 2 == 0:
        val = float(expsum.even_moment_exact(N, int(r) // 2))
        method = "exact"
    else:
        res = expsum.moment_quadrature(N, r, oversample=cfg.grid_oversample or 64)
        val, method = res.value, "quadrature"
    return [["data", r, N, val, val / N ** (r - 2), method, "ok"]]


def _strichartz_cell(cfg: RunConfig, N: int) -> list:
    form = cfg.form
    tos = cfg.grid_oversample or 64
    grid = SpaceTimeGrid.default(form, N, cfg.interval, time_oversample=tos)
    box = FreqBox(form.d, N)
    th = _theta_text(cfg)
    rows = []
    for fam in cfg.families:
        if fam == "all-ones":
            rows.append(["data", cfg.d, th, cfg.p, N, fam, "",
                         strichartz.strichartz_quotient(form, make_field(fam, box), cfg.p, grid), "ok"])
        elif fam == "gaussian-random":
            for s in cfg.seed_list:
                v = strichartz.strichartz_quotient(form, make_field(fam, box, seed=s), cfg.p, grid)
                rows.append(["data", cfg.d, th, cfg.p, N, fam, s, v, "ok"])
        else:
            res = strichartz.extremizer_search(form, N, cfg.p, grid, seed=cfg.seed)
            rows.append(["data", cfg.d, th, cfg.p, N, fam, cfg.seed, res.quotient,
                         "ok" if res.converged else "ok (not converged)"])
    return rows


def _multilinear_cell(cfg: RunConfig, seed: int) -> list:
    form = cfg.form
    rng = np.random.default_rng(seed)
    fields_ = []
    for j, Nj in enumerate(cfg.N):
        box = FreqBox(form.d, Nj)
        f = make_field("gaussian-random", box, seed=int(rng.integers(2 ** 32)))
        if Nj > 1:
            f = f.restrict(Annulus(form.d, Nj).contains)
        fields_.append(f.scaled(1 / f.l2norm))
    grid = strichartz.product_grid(form, fields_, cfg.interval, cfg.grid_oversample or 16)
    res = strichartz.multilinear_quotient(form, fields_, grid)
    return [["data", cfg.d, _theta_text(cfg), len(cfg.N) - 1, ",".join(map(str, cfg.N)), seed,
             res.lhs, res.rhs_subcritical, res.rhs_critical, res.s, res.delta, "ok"]]


def _levelset_cell(cfg: RunConfig, N: int) -> list:
    form = cfg.form
    grid = SpaceTimeGrid.default(form, N, cfg.interval, time_oversample=cfg.grid_oversample or 64)
    lam = N ** cfg.level_exponent
    prof = level_set_profile(propagate_eval(form, make_field("all-ones", FreqBox(form.d, N)), grid), [lam])
    meas = float(prof.measures[0])
    const = meas * lam ** cfg.level_decay / N ** (2 * (cfg.d - 1))
    return [["data", cfg.d, _theta_text(cfg), N, lam, meas, const, "ok"]]


def _arcs_cell(cfg: RunConfig, N: int) -> list:
    am = circle.arc_moments(N, cfg.r, oversample=cfg.grid_oversample or 64, eps=cfg.eps)
    comp = circle.major_lower_comparator(N, cfg.r) if cfg.r > 4 else ""
    status = "ok (under-resolved arcs)" if am.under_resolved else "ok"
    return [["data", cfg.r, N, am.total, am.major_total, am.minor_total, am.m1_total, am.m2_total,
             am.major_share, comp, status]]


def _kernel_cell(cfg: RunConfig, N: int) -> list:
    val = expsum.weyl_bound_check(N, cfg.samples, cfg.seed, cfg.grid_oversample or 4)
    return [["data", N, cfg.samples, cfg.seed, val, "ok"]]


def _nls_cell(cfg: RunConfig, key: tuple) -> list:
    N, seed = key
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        prob = nls.NLSProblem(cfg.form, k=cfg.k, mu=cfg.mu, N=N, dt=cfg.dt, T=cfg.T)
    u0 = nls.random_data(prob, seed, s=1.0, size=1.0)
    m0, h0 = nls.invariants(prob, u0)
    u1 = nls.evolve(prob, u0)
    m1, h1 = nls.invariants(prob, u1)
    status = "ok" if prob.resolved() else "ok (dt does not resolve N)"
    return [["data", cfg.d, _theta_text(cfg), cfg.k, N, cfg.dt, cfg.T, seed,
             abs(m1 - m0) / m0, abs(h1 - h0) / abs(h0), status]]


_CELLS = {
    "moment": _moment_cell, "strichartz": _strichartz_cell, "multilinear": _multilinear_cell,
    "levelset": _levelset_cell, "arcs": _arcs_cell, "kernel": _kernel_cell, "nls": _nls_cell,
}


def _cell_keys(cfg: RunConfig) -> list:
    if cfg.experiment == "multilinear":
        return cfg.seed_list
    if cfg.experiment == "nls":
        return [(N, s) for N in cfg.N for s in cfg.seed_list]
    return list(cfg.N)


def _theta_text(cfg: RunConfig) -> str:
    return ",".join(cfg.theta_tags) if cfg.theta_tags else ",".join(repr(float(t)) for t in cfg.theta)


def _run_cell(args) -> list:
    cfg, key = args
    try:
        return _CELLS[cfg.experiment](cfg, key)
    except Exception as exc:  # recorded per cell, the sweep goes on
        cols = SCHEMAS[cfg.experiment]
        row = ["error"] + [""] * (len(cols) - 2) + [f"error: {type(exc).__name__}: {exc}"]
        if "N" in cols:
            row[cols.index("N")] = key[0] if isinstance(key, tuple) else key
        if "seed" in cols and cfg.experiment in ("multilinear", "nls"):
            row[cols.index("seed")] = key[1] if isinstance(key, tuple) else key
        return [row]


def resolve_workers(requested: int | None) -> int:
    if requested is not None:
        return requested
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
        if n < 1:
            raise ConfigError(f"{WORKERS_ENV} must be >= 1")
        return n
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


def evaluate(cfg: RunConfig) -> list:
    """Rows of all cells, in cell order regardless of the worker count."""
    jobs = [(cfg, key) for key in _cell_keys(cfg)]
    workers = min(resolve_workers(cfg.workers), len(jobs))
    if workers <= 1:
        chunks = [_run_cell(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_cell, jobs))
    return [row for chunk in chunks for row in chunk]


# ---------------------------------------------------------------- summaries

def _fit_rows(cfg: RunConfig, rows: list) -> list:
    """Slope row appended to sweeps that have a predicted law."""
    cols = SCHEMAS[cfg.experiment]
    ok = [r for r in rows if r[0] == "data"]
    out = []
    if cfg.experiment == "moment":
        pts = [(r[2], r[3]) for r in ok]
        if len(pts) >= 3:
            fit = strichartz.exponent_fit(pts)
            out.append(["fit", cfg.r, "", fit.slope, "", f"slope (predicted {cfg.r - 2:g})", "ok"])
    elif cfg.experiment == "strichartz":
        best = _best_per_N(ok, cols)
        if len(best) >= 3:
            fit = strichartz.exponent_fit(best)
            out.append(["fit", cfg.d, _theta_text(cfg), cfg.p, "", "max", "", fit.slope, "ok"])
    elif cfg.experiment == "levelset":
        if ok:
            out.append(["fit", cfg.d, _theta_text(cfg), "", "", "", max(r[6] for r in ok), "ok"])
    return out


def _best_per_N(rows: list, cols: list) -> list:
    iN, iv = cols.index("N"), cols.index("value")
    best: dict = {}
    for r in rows:
        n, v = int(r[iN]), float(r[iv])
        best[n] = max(best.get(n, -math.inf), v)
    return sorted(best.items())


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def header_lines(cfg: RunConfig) -> list:
    return [f"# irrtorus {__version__}",
            f"# experiment: {cfg.experiment}",
            f"# config_hash: {cfg.config_hash()}",
            f"# config: {cfg.to_json()}"]


def render_csv(cfg: RunConfig, rows: list) -> str:
    buf = io.StringIO()
    for line in header_lines(cfg):
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\r\n")  # RFC 4180 line endings
    w.writerow(SCHEMAS[cfg.experiment])
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def svg_loglog(points, slope: float | None, intercept: float | None, title: str, data_comment: str = "",
               width: int = 480, height: int = 360) -> str:
    """Standalone log-log scatter with an optional fitted line; the data are
    repeated in a comment so the file is self-describing."""
    pts = [(math.log(x), math.log(y)) for x, y in points if x > 0 and y > 0]
    lines = ['<?xml version="1.0" encoding="UTF-8"?>',
             f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">',
             f"<!-- {title} -->"]
    if data_comment:
        lines.append("<!-- data\n" + data_comment.replace("--", "- -") + "\n-->")
    lines.append("<!-- points (N, value)\n" + "\n".join(f"{x!r},{y!r}" for x, y in points) + "\n-->")
    lines.append(f'<rect width="{width}" height="{height}" fill="white"/>')
    lines.append(f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="13" '
                 f'font-family="sans-serif">{_xml(title)}</text>')
    if pts:
        xs, ys = [p[0] for p in pts], [p[1] for p in pts]
        if slope is not None:
            ys = ys + [slope * x + intercept for x in xs]
        x0, x1 = min(xs), max(xs)
        y0, y1 = min(ys), max(ys)
        x1 = x1 if x1 > x0 else x0 + 1
        y1 = y1 if y1 > y0 else y0 + 1
        ml, mr, mt, mb = 60, 20, 40, 50
        sx = lambda x: ml + (x - x0) / (x1 - x0) * (width - ml - mr)
        sy = lambda y: height - mb - (y - y0) / (y1 - y0) * (height - mt - mb)
        lines.append(f'<line x1="{ml}" y1="{height - mb}" x2="{width - mr}" y2="{height - mb}" stroke="black"/>')
        lines.append(f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{height - mb}" stroke="black"/>')
        lines.append(f'<text x="{width / 2:.1f}" y="{height - 15}" text-anchor="middle" font-size="11" '
                     f'font-family="sans-serif">log N</text>')
        lines.append(f'<text x="15" y="{height / 2:.1f}" font-size="11" font-family="sans-serif" '
                     f'transform="rotate(-90 15 {height / 2:.1f})" text-anchor="middle">log value</text>')
        for x, y in pts:
            lines.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="3.5" fill="#1f77b4"/>')
        if slope is not None:
            lines.append(f'<line x1="{sx(x0):.2f}" y1="{sy(slope * x0 + intercept):.2f}" '
                         f'x2="{sx(x1):.2f}" y2="{sy(slope * x1 + intercept):.2f}" '
                         f'stroke="#d62728" stroke-width="1.5"/>')
            lines.append(f'<text x="{width - mr}" y="{mt + 12}" text-anchor="end" font-size="11" '
                         f'font-family="sans-serif">slope {slope:.4f}</text>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def _xml(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def run(cfg: RunConfig) -> tuple[int, list]:
    """Evaluate the sweep and write its CSV (and SVG when a slope is fitted).

    Returns (exit status, written paths); status 3 flags failed cells.
    """
    rows = evaluate(cfg)
    rows += _fit_rows(cfg, rows)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{cfg.experiment}.csv"
    text = render_csv(cfg, rows)
    path.write_bytes(text.encode())
    written = [path]
    if cfg.experiment in ("moment", "strichartz"):
        cols = SCHEMAS[cfg.experiment]
        data = [r for r in rows if r[0] == "data"]
        pts = _best_per_N(data, cols) if cfg.experiment == "strichartz" else [(r[2], r[3]) for r in data]
        if len(pts) >= 3:
            fit = strichartz.exponent_fit(pts)
            svg = svg_loglog(pts, fit.slope, fit.intercept,
                             f"{cfg.experiment} d={cfg.d} slope fit (config {cfg.config_hash()})", text)
            p = out / f"{cfg.experiment}.svg"
            p.write_bytes(svg.encode())
            written.append(p)
    failed = sum(1 for r in rows if r[0] == "error")
    return (3 if failed else 0), written


# ---------------------------------------------------------------- fit report

@dataclass(frozen=True)
class Verdict:
    d: int
    p: float
    theta: str
    predicted: float
    measured: float
    tolerance: float
    status: str
    points: tuple

    @property
    def delta(self) -> float:
        return abs(self.measured - self.predicted)

    def line(self) -> str:
        return (f"d={self.d} p={self.p:g} theta={self.theta} predicted={self.predicted:.6f} "
                f"measured={self.measured:.6f} |delta|={self.delta:.6f} tolerance={self.tolerance:g} "
                f"{self.status}")


def read_sweep_csv(path) -> tuple[dict, list]:
    """Header metadata ('#' lines) and data rows as dicts."""
    meta, body = {}, []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition(": ")
                if val:
                    meta[key] = val
            else:
                body.append(line)
    reader = csv.DictReader(body)
    missing = [c for c in FIT_COLUMNS if c not in (reader.fieldnames or [])]
    if missing:
        raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
    return meta, list(reader)


def _is_partial(d: int, theta: str) -> bool:
    if d != 3:
        return False
    vals, _ = parse_theta(theta)
    return len(vals) == 3 and vals[0] == vals[1]


def fit_report(paths, tolerance: float = 0.15) -> list[Verdict]:
    """One verdict per (d, p, theta): PASS / FAIL where the predicted exponent
    is sharp, REPORT-ONLY where it carries an eps-loss."""
    hashes = {}
    rows = []
    for path in paths:
        meta, rs = read_sweep_csv(path)
        hashes[str(path)] = meta.get("config_hash")
        rows += rs
    if len(set(hashes.values())) > 1:
        raise SchemaError("inputs come from different configs: "
                          + ", ".join(f"{k}={v}" for k, v in sorted(hashes.items())))
    cells: dict = {}
    for r in rows:
        if r["row"] != "data":
            continue
        try:
            key = (int(r["d"]), float(r["p"]), r["theta"])
            n, v = int(r["N"]), float(r["value"])
        except ValueError as exc:
            raise SchemaError(f"malformed row {r}: {exc}") from None
        cell = cells.setdefault(key, {})
        cell[n] = max(cell.get(n, -math.inf), v)
    out = []
    for (d, p, th), best in sorted(cells.items()):
        pred, eps = strichartz.predicted_exponent(d, p, _is_partial(d, th))
        pts = tuple(sorted(best.items()))
        if len(pts) < 3:
            out.append(Verdict(d, p, th, pred, math.nan, tolerance, "REPORT-ONLY", pts))
            continue
        fit = strichartz.exponent_fit(pts, pred, tolerance)
        status = "REPORT-ONLY" if eps else ("PASS" if fit.verdict else "FAIL")
        out.append(Verdict(d, p, th, pred, fit.slope, tolerance, status, pts))
    return out


# ---------------------------------------------------------------- argparse

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="irrtorus", description="Strichartz and Weyl-sum sweeps on irrational tori")
    ap.add_argument("--version", action="version", version=f"irrtorus {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        sp = sub.add_parser(name, help=f"run the {name} sweep")
        sp.add_argument("--config", help="INI file with an [irrtorus] section")
        sp.add_argument("--out", help="output directory (default .)")
        sp.add_argument("--seed", type=int, help="base seed (unsigned 64-bit)")
        sp.add_argument("--workers", type=int, help=f"process count (default ${WORKERS_ENV} or all cores)")
        sp.add_argument("--grid-oversample", type=int, help="time-grid (or quadrature) oversampling")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key, e.g. --set N=4,8,16")
    fp = sub.add_parser("fit", help="compare fitted slopes in strichartz CSVs with the predicted exponents")
    fp.add_argument("csv", nargs="+", help="strichartz sweep CSV file(s) from one config")
    fp.add_argument("--out", help="directory for fit_report.txt and fit_report.svg")
    fp.add_argument("--tolerance", type=float, default=0.15)
    return ap


def _overrides(args) -> dict:
    out = {}
    for item in args.set:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        out[key.strip()] = val.strip()
    for key in ("out", "seed", "workers", "grid_oversample"):
        val = getattr(args, key)
        if val is not None:
            out[key] = str(val)
    return out


def _cmd_fit(args) -> int:
    verdicts = fit_report(args.csv, args.tolerance)
    text = "".join(v.line() + "\n" for v in verdicts)
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "fit_report.txt").write_bytes(text.encode())
        if verdicts and len(verdicts[0].points) >= 3:
            v = verdicts[0]
            fit = strichartz.exponent_fit(v.points)
            (out / "fit_report.svg").write_bytes(
                svg_loglog(v.points, fit.slope, fit.intercept, v.line(), text).encode())
    return 1 if any(v.status == "FAIL" for v in verdicts) else 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "fit":
            return _cmd_fit(args)
        file_values = read_config_file(args.config) if args.config else {}
        cfg = build_config(args.command, file_values, _overrides(args))
        status, written = run(cfg)
    except (ConfigError, SchemaError) as exc:
        print(f"irrtorus: error: {exc}", file=sys.stderr)
        return 2
    for p in written:
        print(p)
    if status:
        print("irrtorus: some cells failed (see status column)", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
