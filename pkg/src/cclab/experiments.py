"""Experiment configs, per-kind runners and run reports.

A config is flat text, one ``key = value`` per line, ``#`` starting a
comment. Values are read as JSON when possible (numbers, lists, objects,
``true``/``false``) and as bare strings otherwise. Every kind has its own
schema; unknown keys are rejected before anything runs.

Common keys: ``kind`` (required), ``seed`` (int, default 0), ``name`` (file
stem of the outputs, default: the config file stem or the kind).

Each run writes ``<name>.csv`` (the kind's data table, columns listed in
``KINDS[kind].columns``) and ``<name>.txt`` (a ``key: value`` summary). CSV
content depends only on the config and seed.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from . import codim, concentration, covers, inradius
from .bodies import Ball, Box, Intersection, Polytope, QuadLin, Scale, body_from_dict
from .errors import CclabError, ConfigError, SearchExhausted, VerificationError
from .spaces import AmbientNorm, Subspace, derive_rng, random_subspace


def thread_count() -> int:
    raw = os.environ.get("CCLAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"CCLAB_THREADS must be an integer, got {raw!r}")


# ---------------------------------------------------------------------------
# parsing

def _value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_config_text(text: str) -> dict:
    cfg = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("#"):
            continue
        line = line.split(" #", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in cfg:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        cfg[key] = _value(val)
    return cfg


def load_config(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}")
    cfg = parse_config_text(text)
    cfg.setdefault("name", path.stem)
    return cfg


# ---------------------------------------------------------------------------
# schemas

INT, FLOAT, STR, LIST, DICT, BOOL = "int", "float", "str", "list", "dict", "bool"


def _check_type(key, v, kind):
    if kind == INT and not (isinstance(v, int) and not isinstance(v, bool)):
        raise ConfigError(f"{key} must be an integer")
    if kind == FLOAT and not (isinstance(v, (int, float)) and not isinstance(v, bool)):
        raise ConfigError(f"{key} must be a number")
    if kind == STR and not isinstance(v, str):
        raise ConfigError(f"{key} must be a string")
    if kind == LIST and not isinstance(v, list):
        raise ConfigError(f"{key} must be a list")
    if kind == DICT and not isinstance(v, dict):
        raise ConfigError(f"{key} must be an object")
    if kind == BOOL and not isinstance(v, bool):
        raise ConfigError(f"{key} must be true or false")


@dataclass
class Kind:
    params: Dict[str, tuple]  # key -> (type, default)
    columns: List[str]
    runner: Callable = None
    samples_key: Optional[str] = None
    budget_key: Optional[str] = None
    choices: Dict[str, tuple] = field(default_factory=dict)


KINDS: Dict[str, Kind] = {}

COMMON = {"kind": (STR, None), "seed": (INT, 0), "name": (STR, None)}


def validate(cfg: dict) -> dict:
    """Return a completed copy of ``cfg`` or raise :class:`ConfigError`."""
    if "kind" not in cfg:
        raise ConfigError("missing 'kind'")
    kind = cfg["kind"]
    if kind not in KINDS:
        raise ConfigError(f"unknown kind {kind!r}; expected one of {sorted(KINDS)}")
    spec = KINDS[kind]
    allowed = {**COMMON, **spec.params}
    unknown = sorted(set(cfg) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown keys for kind {kind}: {unknown}")
    out = {}
    for key, (typ, default) in allowed.items():
        if key in cfg and not (cfg[key] is None and default is None):
            v = cfg[key]
            _check_type(key, v, typ)
            if typ == FLOAT:
                v = float(v)
        else:
            v = default
        if key in spec.choices and v not in spec.choices[key]:
            raise ConfigError(f"{key} must be one of {list(spec.choices[key])}")
        out[key] = v
    if out["name"] is None:
        out["name"] = kind
    for key, (typ, _) in spec.params.items():
        if typ in (INT, FLOAT) and isinstance(out[key], (int, float)) and out[key] < 0:
            raise ConfigError(f"{key} must be >= 0")
    return out


def apply_overrides(cfg: dict, seed=None, samples=None, budget=None) -> dict:
    cfg = dict(cfg)
    kind = KINDS.get(cfg.get("kind"))
    if seed is not None:
        cfg["seed"] = int(seed)
    if samples is not None:
        if kind is None or kind.samples_key is None:
            raise ConfigError(f"kind {cfg.get('kind')!r} has no sample budget")
        cfg[kind.samples_key] = int(samples)
    if budget is not None:
        if kind is None or kind.budget_key is None:
            raise ConfigError(f"kind {cfg.get('kind')!r} has no search budget")
        cfg[kind.budget_key] = int(budget)
    return cfg


# ---------------------------------------------------------------------------
# reports

@dataclass
class RunReport:
    config: dict
    status: str  # pass | fail | recorded
    metrics: Dict[str, object]
    rows: List[list]
    columns: List[str]
    wall_time: float = 0.0
    artifacts: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status in ("pass", "recorded")

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_fmt(v) for v in r])
        return buf.getvalue()

    def summary_text(self) -> str:
        lines = [f"kind: {self.config['kind']}", f"name: {self.config['name']}",
                 f"seed: {self.config['seed']}", f"status: {self.status}"]
        lines += [f"{k}: {_fmt(v)}" for k, v in self.metrics.items()]
        lines.append(f"wall_time: {self.wall_time:.3f}")
        lines.append("config: " + json.dumps(self.config, sort_keys=True))
        return "\n".join(lines) + "\n"

    def write(self, out_dir) -> List[str]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = self.config["name"]
        paths = [out / f"{stem}.csv", out / f"{stem}.txt"]
        self.artifacts = [str(p) for p in paths]
        paths[0].write_text(self.csv_text())
        paths[1].write_text(self.summary_text())
        return self.artifacts


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (list, tuple, np.ndarray)):
        return " ".join(_fmt(x) for x in v)
    if v is None:
        return ""
    return str(v)


def run_config(cfg: dict, out_dir=None) -> RunReport:
    """Validate, run and (if ``out_dir``) write one experiment."""
    cfg = validate(cfg)
    spec = KINDS[cfg["kind"]]
    t0 = time.perf_counter()
    status, metrics, rows = spec.runner(cfg)
    rep = RunReport(cfg, status, metrics, rows, spec.columns, time.perf_counter() - t0)
    if out_dir is not None:
        rep.write(out_dir)
    return rep


def _kind(name, params, columns, samples_key=None, budget_key=None, choices=None):
    def deco(fn):
        KINDS[name] = Kind(params, columns, fn, samples_key, budget_key, choices or {})
        return fn
    return deco


def _verdict(ok: bool) -> str:
    return "pass" if ok else "fail"


# ---------------------------------------------------------------------------
# runners

@_kind("cover-verify",
       {"cover": (STR, "hilbert"), "k": (INT, 2), "N": (INT, 20), "samples": (INT, 100000),
        "tol": (FLOAT, 1e-9), "ambient": (STR, "ball"), "offset_scale": (FLOAT, 0.3)},
       ["index", "x"], samples_key="samples",
       choices={"cover": ("hilbert", "random-cells"), "ambient": ("ball", "cube")})
def _run_cover_verify(c):
    rng = derive_rng(c["seed"], 0)
    if c["cover"] == "hilbert":
        cover = covers.build_hilbert_cover(covers.HilbertCoverSpec(c["k"], c["N"]))
    else:
        amb = Ball.unit(c["N"]) if c["ambient"] == "ball" else Box.cube(c["N"])
        cover = covers.random_cell_cover(amb, c["k"], rng, c["offset_scale"])
    rep = covers.verify_cover(cover, c["samples"], derive_rng(c["seed"], 1), c["tol"],
                              workers=thread_count())
    rows = [[i, x] for i, x in enumerate(rep.uncovered[:100])]
    m = {"samples": rep.total_samples, "uncovered": rep.uncovered.shape[0],
         "max_violation": rep.max_violation, "certificate_ok": rep.certificate_ok,
         "min_certificate": rep.min_certificate}
    return _verdict(rep.covered), m, rows


@_kind("hilbert-example",
       {"k": (INT, 1), "N": (INT, 12), "n": (INT, 2), "restarts": (INT, 16), "steps": (INT, 200),
        "slack": (FLOAT, 1e-3), "table_k": (INT, 5)},
       ["row", "k", "piece", "radius", "rk_bound"], budget_key="restarts")
def _run_hilbert_example(c):
    spec = covers.HilbertCoverSpec(c["k"], c["N"])
    cover = covers.build_hilbert_cover(spec)
    bound = covers.rk_bound(c["k"])
    rows, ok = [], True
    for j, piece in enumerate(cover.pieces, 1):
        W = covers.hilbert_search_space(spec, j)
        if W.dim < c["n"]:
            raise ConfigError(f"piece {j} constrains only {W.dim} coordinates; need N larger")
        ball = inradius.max_inscribed_ball(piece, c["n"], c["restarts"], c["steps"],
                                           c["seed"] * 1009 + j, search_space=W)
        ok &= ball.radius <= bound + c["slack"]
        rows.append(["piece", c["k"], j, ball.radius, bound])
    for kk in range(1, c["table_k"] + 1):
        rows.append(["bound", kk, "", "", covers.rk_bound(kk)])
    radii = [r[3] for r in rows if r[0] == "piece"]
    return _verdict(bool(ok)), {"rk_bound": bound, "max_radius": max(radii)}, rows


def _random_covers(c, ambient, count):
    for i in range(count):
        g = derive_rng(c["seed"], i)
        k = int(g.integers(2, c["max_pieces"] + 1))
        yield i, covers.random_cell_cover(ambient, k, g)


@_kind("cube-cylinder", {"N": (INT, 10), "covers": (INT, 50), "max_pieces": (INT, 3)},
       ["run", "pieces", "piece", "prefix_len", "prefix", "verified"], budget_key="covers")
def _run_cube_cylinder(c):
    rows, ok = [], 0
    for i, cover in _random_covers(c, Box.cube(c["N"]), c["covers"]):
        r = covers.find_cube_cylinder(cover)
        if r is None:
            rows.append([i, len(cover), "", "", "", False])
            continue
        ok += bool(r.verified)
        rows.append([i, len(cover), r.piece, len(r.prefix), list(r.prefix), r.verified])
    return _verdict(ok == c["covers"]), {"covers": c["covers"], "verified": ok}, rows


@_kind("diameter", {"N": (INT, 3), "covers": (INT, 100), "max_pieces": (INT, 3),
                    "resolution": (INT, 128), "tol": (FLOAT, 1e-6), "min_success": (FLOAT, 0.99)},
       ["run", "pieces", "piece", "gap", "x"], budget_key="covers")
def _run_diameter(c):
    rows, ok = [], 0
    for i, cover in _random_covers(c, Ball.unit(c["N"]), c["covers"]):
        try:
            r = covers.find_diameter(cover, c["resolution"], rng=derive_rng(c["seed"], 10 ** 6 + i),
                                     tol=c["tol"])
            ok += 1
            rows.append([i, len(cover), r.piece, r.gap, r.x])
        except SearchExhausted as exc:
            rows.append([i, len(cover), "", exc.best.get("gap"), ""])
    rate = ok / max(1, c["covers"])
    return _verdict(rate >= c["min_success"]), {"successes": ok, "rate": rate}, rows


def _body(c):
    try:
        return body_from_dict(c["body"])
    except CclabError as exc:
        raise ConfigError(f"bad body: {exc}")
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad body: {exc!r}")


_NORMS = ("l1", "l2", "linf")


@_kind("inradius", {"body": (DICT, {"type": "ball", "dim": 4}), "n": (INT, 2),
                    "restarts": (INT, 16), "steps": (INT, 200), "norm": (STR, "l2"),
                    "max_radius": (FLOAT, None)},
       ["radius", "exact", "flag", "center", "basis"], budget_key="restarts",
       choices={"norm": _NORMS})
def _run_inradius(c):
    body = _body(c)
    ball = inradius.max_inscribed_ball(body, c["n"], c["restarts"], c["steps"], c["seed"],
                                       AmbientNorm.parse(c["norm"]))
    rows = [[ball.radius, ball.exact, ball.flag, ball.center, ball.subspace.basis.T.ravel()]]
    status = "recorded" if c["max_radius"] is None else _verdict(ball.radius <= c["max_radius"])
    return status, {"radius": ball.radius}, rows


@_kind("rho-curve", {"body": (DICT, {"type": "ball", "dim": 8}), "n_list": (LIST, [1, 2, 4]),
                     "restarts": (INT, 16), "steps": (INT, 200), "norm": (STR, "l2")},
       ["n", "radius", "center_norm", "seed"], budget_key="restarts", choices={"norm": _NORMS})
def _run_rho_curve(c):
    curve = inradius.rho_hat(_body(c), c["n_list"], c["restarts"], c["steps"], c["seed"],
                             AmbientNorm.parse(c["norm"]))
    rows = [[e.n, e.radius, float(np.linalg.norm(e.witness.center)), curve.seed]
            for e in curve.entries]
    return "recorded", {"radii": curve.radii}, rows


@_kind("concentration", {"Ns": (LIST, [50, 100, 200, 400]), "n": (INT, 2), "eps": (FLOAT, 0.25),
                         "trials": (INT, 100), "reps": (INT, 20), "p": (STR, "linf"),
                         "samples": (INT, None), "trend_tol": (FLOAT, 0.1),
                         "max_oscillation": (FLOAT, 0.5)},
       ["N", "n", "epsilon", "trials", "median_successes", "median_rate", "best_oscillation", "seed"],
       samples_key="samples", budget_key="trials", choices={"p": ("l2", "linf")})
def _run_concentration(c):
    rows = concentration.concentration_trend(c["Ns"], c["n"], c["eps"], c["trials"], c["reps"],
                                             c["seed"], AmbientNorm.parse(c["p"]), c["samples"])
    rates = [r.successes / r.trials for r in rows]
    mono = all(b >= a - c["trend_tol"] for a, b in zip(rates, rates[1:]))
    osc = rows[-1].best_oscillation
    out = [[r.N, r.n, r.epsilon, r.trials, r.successes, rt, r.best_oscillation, r.seed]
           for r, rt in zip(rows, rates)]
    return _verdict(mono and osc <= c["max_oscillation"]), {"monotone": mono, "final_oscillation": osc}, out


@_kind("sphere-cover", {"cover": (STR, "hemisphere"), "pieces": (INT, 3), "N": (INT, 50),
                        "n": (INT, 2), "eps": (FLOAT, 0.3), "p": (STR, "l2"), "trials": (INT, 200),
                        "samples": (INT, 1000)},
       ["index", "max_fresh", "eps", "basis"], samples_key="samples", budget_key="trials",
       choices={"cover": ("hemisphere", "sectors"), "p": _NORMS})
def _run_sphere_cover(c):
    N = c["N"]
    pieces = concentration.hemisphere_cover(N) if c["cover"] == "hemisphere" else \
        concentration.sector_cover(N, c["pieces"])
    p = AmbientNorm.parse(c["p"])
    try:
        if p is AmbientNorm.L2:
            r = concentration.multi_set_flat(pieces, N, c["n"], c["eps"], c["seed"], c["trials"],
                                             c["samples"])
        else:
            r = concentration.sphere_cover_ball_experiment(p, pieces, N, c["n"], c["eps"], c["seed"],
                                                           trials=c["trials"],
                                                           verify_samples=c["samples"])
    except (SearchExhausted, VerificationError) as exc:
        return "fail", {"error": str(exc)}, []
    return "pass", {"index": r.index, "max_fresh": r.max_fresh}, \
        [[r.index, r.max_fresh, c["eps"], r.subspace.basis.T.ravel()]]


@_kind("projection", {"N": (INT, 12), "dim_F": (INT, 2), "delta": (FLOAT, 0.1), "count": (INT, 20),
                      "samples": (INT, 10000)},
       ["run", "dim_Y", "net_points", "max_ratio", "idempotence_error", "passed"],
       samples_key="samples", budget_key="count")
def _run_projection(c):
    rows, ok = [], True
    for i in range(c["count"]):
        g = derive_rng(c["seed"], i)
        P = codim.random_polytope(c["N"], g)
        F = random_subspace(c["N"], c["dim_F"], g)
        try:
            s = codim.build_projection(P, F, c["delta"], g, c["samples"])
            good = s.idempotence_error() <= 1e-8
            rows.append([i, s.Y.dim, len(s.net.points), s.max_ratio, s.idempotence_error(), good])
        except VerificationError:
            good = False
            rows.append([i, "", "", "", "", False])
        ok &= good
    return _verdict(ok), {"count": c["count"], "passed": sum(r[-1] for r in rows)}, rows


def translate_case(case: str, N: int):
    """Preset (A, O) pairs for the translate experiments."""
    if case == "counterexample":
        A, _ = codim.counterexample_bodies(N)
        O = np.zeros((2, N))
        O[0, 0], O[1, 0] = 0.25, -0.25
        # O is a 1/2-net of K and B/2 ⊂ A, so B ⊂ A + K ⊂ A + O + B/2 ⊂ 2A + O
        return Scale(A, 2.0), O
    if case == "hexagon-pad":
        hexA, H = codim.hexagon()
        rows = np.hstack([hexA.A, np.zeros((6, N - 2))])
        q = np.r_[0.0, 0.0, np.ones(N - 2)]
        A = Intersection((Polytope(rows, hexA.b), QuadLin(q, np.zeros(N), 1.0)))
        return A, np.hstack([H, np.zeros((6, N - 2))])
    if case == "cube-ball":
        E = np.eye(N)[:3]
        A = Intersection((Ball.unit(N), Polytope(np.vstack([E, -E]), np.full(6, 0.5))))
        g = np.array([-0.5, 0.0, 0.5])
        O = np.zeros((27, N))
        O[:, :3] = np.stack(np.meshgrid(g, g, g, indexing="ij"), axis=-1).reshape(-1, 3)
        return A, O
    raise ConfigError(f"unknown case {case!r}")


@_kind("translate", {"case": (STR, "counterexample"), "N": (INT, 16), "eps": (FLOAT, 0.2),
                     "lam": (FLOAT, None), "samples": (INT, 10000)},
       ["case", "dim_F", "dim_Y", "net_points", "delta", "max_dist", "lam", "largest_lam"],
       samples_key="samples", choices={"case": ("counterexample", "hexagon-pad", "cube-ball")})
def _run_translate(c):
    A, O = translate_case(c["case"], c["N"])
    try:
        if c["lam"] is not None:
            h = codim.half_radius_check(A, O, c["lam"], c["seed"], c["samples"])
            t = h.translate
            row = [c["case"], t.F.dim, t.Y.dim, len(t.H), t.delta, t.max_dist, h.lam, h.largest_validated]
            return _verdict(h.validated), {"largest_validated": h.largest_validated}, [row]
        t = codim.translate_theorem(codim.TranslateCoverSpec(A, O, c["eps"]), c["seed"], c["samples"])
    except VerificationError as exc:
        return "fail", {"error": str(exc)}, []
    row = [c["case"], t.F.dim, t.Y.dim, len(t.H), t.delta, t.max_dist, "", ""]
    return _verdict(t.passed), {"max_dist": t.max_dist, "dim_Y": t.Y.dim}, [row]


@_kind("hilbert-codim", {"N": (INT, 16), "eps": (FLOAT, 0.1), "samples": (INT, 10000)},
       ["N", "eps", "delta", "cut", "tail", "max_dist", "passed"], samples_key="samples")
def _run_hilbert_codim(c):
    A, K = codim.counterexample_bodies(c["N"])
    r = codim.hilbert_codim(A, K, c["eps"], c["seed"], c["samples"])
    return _verdict(r.passed), {"delta": r.delta, "cut": r.cut}, \
        [[c["N"], c["eps"], r.delta, r.cut, r.tail, r.max_dist, r.passed]]


@_kind("counterexample", {"N": (INT, 16), "eps_list": (LIST, [0.2, 0.1, 0.05]),
                          "samples": (INT, 100000)},
       ["n", "dist_axis", "expected", "tail_dist"], samples_key="samples")
def _run_counterexample(c):
    r = codim.counterexample_check(c["N"], c["eps_list"], c["samples"], c["seed"])
    expected = 2.0 ** -np.arange(1, c["N"] + 1)
    exact = bool(np.all(np.abs(r.axis_dist - expected) <= 1e-9))
    rows = [[n + 1, r.axis_dist[n], expected[n], r.tail_dist[n]] for n in range(c["N"])]
    m = {"cover_ok": r.cover_ok, "max_residual": r.max_residual, "axis_exact": exact,
         "escapes": r.escapes, "cuts": json.dumps(r.cuts, sort_keys=True)}
    return _verdict(r.cover_ok and exact and r.escapes), m, rows


@_kind("hexagon", {"samples": (INT, 100000), "mesh": (INT, 512), "tol": (FLOAT, 1e-9)},
       ["index", "x"], samples_key="samples")
def _run_hexagon(c):
    r = codim.hexagon_check(c["samples"], c["mesh"], c["seed"], c["tol"])
    rows = [[i, x] for i, x in enumerate(r.uncovered[:100])]
    return _verdict(r.passed), {"samples": r.samples, "mesh_points": r.mesh_points,
                                "uncovered": r.uncovered.shape[0]}, rows
