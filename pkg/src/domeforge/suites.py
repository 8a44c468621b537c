"""Random configurations and the named verification suites."""

from __future__ import annotations

import hashlib
import json
import math
import os
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import formulas
from ._quad import adaptive_simpson
from .confmetric import (
    annulus_bp_envelope,
    annulus_closed_forms,
    annulus_points,
    annulus_poincare_density,
    annulus_qh_density,
    mm_demo,
    tau_distance_bracket,
)
from .dome import (
    ClosedGeodesic,
    closed_geodesic_for_cycle,
    closed_geodesics,
    geodesic_distance,
    injectivity_radius,
    trace_geodesic,
)
from .geom import INF, GeometryError, chordal_distance, is_inf
from .hull import validate
from .npr import FiniteDomain, pullback_path

ASINH1 = formulas.ASINH1


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configurations


_FAMILY = re.compile(
    r"^(?:(?P<random>random)(?:-(?P<n>\d+))?(?P<inf>-inf)?"
    r"|two-cluster[(:](?P<r>[0-9.eE+-]+)\)?"
    r"|annulus[(:](?P<ann>[^)]*)\)?)$"
)


def parse_family(family: str) -> dict:
    m = _FAMILY.match(family.strip())
    if not m:
        raise ConfigError(f"unknown configuration family {family!r}")
    if m.group("random"):
        n = int(m.group("n")) if m.group("n") else None
        if n is not None and n < 3:
            raise ConfigError("random-N needs N >= 3")
        return {"kind": "random", "n": n, "inf": bool(m.group("inf"))}
    if m.group("r") is not None:
        r = float(m.group("r"))
        if not 0 < r < 1:
            raise ConfigError("cluster radius must lie in (0, 1)")
        return {"kind": "two-cluster", "r": r}
    opts = {"s": 2.0, "n": 8, "twist": None, "aligned": False}
    for part in filter(None, (p.strip() for p in m.group("ann").split(","))):
        key, _, val = part.partition("=")
        key = key.strip()
        if key not in opts:
            raise ConfigError(f"unknown annulus option {key!r}")
        if key == "aligned":
            opts[key] = val.strip().lower() in ("1", "true", "yes", "")
        elif key == "twist":
            opts[key] = _num(val)
        elif key == "n":
            opts[key] = int(val)
        else:
            opts[key] = _num(val)
    return {"kind": "annulus", **opts}


def _num(text: str) -> float:
    t = text.strip().replace("pi", str(math.pi))
    if "/" in t:
        a, b = t.split("/")
        return float(a) / float(b)
    if "*" in t:
        a, b = t.split("*")
        return float(a) * float(b)
    return float(t)


def _random_points(rng, n: int, with_inf: bool) -> list[complex]:
    k = n - 1 if with_inf else n
    pts = [complex(x, y) for x, y in rng.normal(size=(k, 2))]
    return pts + [INF] if with_inf else pts


def _two_cluster_points(rng, r: float) -> list[complex]:
    a, b = (int(rng.integers(4, 7)) for _ in range(2))
    inner = []
    for j in range(a):
        ang = 2.0 * math.pi * (j + rng.uniform(-0.3, 0.3)) / a
        inner.append(r * rng.uniform(0.5, 1.0) * complex(math.cos(ang), math.sin(ang)))
    outer = []
    for j in range(b):
        ang = 2.0 * math.pi * (j + rng.uniform(-0.3, 0.3)) / b
        outer.append(complex(math.cos(ang), math.sin(ang)) / (r * rng.uniform(0.5, 1.0)))
    return inner + outer


def _acceptable(pts, min_chordal: float = 0.02) -> bool:
    for i in range(len(pts)):
        for j in range(i):
            if chordal_distance(pts[i], pts[j]) < min_chordal:
                return False
    return True


def gen_config(family: str, seed: int, max_tries: int = 100) -> FiniteDomain:
    """Random configuration from a named family, resampled until its hull
    passes validation (and, for tight clusters, carries a short geodesic)."""
    spec = parse_family(family)
    rng = np.random.default_rng(seed)
    if spec["kind"] == "annulus":
        pts = annulus_points(spec["s"], spec["n"], spec["twist"], spec["aligned"])
        return FiniteDomain(pts)
    for _ in range(max_tries):
        if spec["kind"] == "random":
            n = spec["n"] if spec["n"] is not None else int(rng.integers(4, 13))
            pts = _random_points(rng, n, spec["inf"])
        else:
            pts = _two_cluster_points(rng, spec["r"])
        if not _acceptable(pts):
            continue
        try:
            D = FiniteDomain(pts)
        except GeometryError:
            continue
        if not validate(D.hull).ok():
            continue
        if spec["kind"] == "two-cluster" and spec["r"] <= 0.03:
            found = closed_geodesics(D.surface, 2.0 * ASINH1).geodesics
            if not any(g.length < 2.0 * ASINH1 for g in found):
                continue
        return D
    raise ConfigError(f"family {family!r} exhausted {max_tries} resampling attempts")


def annulus_core(D: FiniteDomain, n: int) -> ClosedGeodesic:
    """Core geodesic of an annulus approximation whose first ``n`` points lie
    on the inner circle: the cycle of faces across the inner-outer edges."""
    P = D.hull
    cross = [e for e, ed in enumerate(P.edges) if (ed.v[0] < n) != (ed.v[1] < n)]
    e0 = cross[0]
    f, e = P.edges[e0].left, e0
    faces, edges = [], []
    for _ in range(len(cross) + 1):
        nxt = next(c for c in cross if c != e and f in (P.edges[c].left, P.edges[c].right))
        faces.append(f)
        edges.append(nxt)
        f, e = P.other_face(nxt, f), nxt
        if e == e0:
            break
    g = closed_geodesic_for_cycle(D.surface, faces, edges)
    if g is None:
        raise GeometryError("annulus band holonomy is not hyperbolic")
    return g


def circle_tau_length(D: FiniteDomain, radius: float, pieces: int = 64) -> float:
    """Thurston length of the circle ``|z| = radius``."""

    def f(t):
        return D.tau(radius * np.exp(1j * t)) * radius

    step = 2.0 * math.pi / pieces
    return sum(adaptive_simpson(f, k * step, (k + 1) * step, 1e-10) for k in range(pieces))


# ---------------------------------------------------------------------------
# reports


DEFAULT_TOLERANCES = {
    "angle": 1e-8,
    "length_identity": 1e-5,
    "sandwich_slack": 0.05,
    "vertex_sum": 1e-8,
    "theta_total": 1e-7,
    "bound": 1e-6,
    "pointwise": 1e-9,
    "mm": 1e-6,
    "appendix": 1e-4,
    "continuity": 1e-12,
    "convergence": 0.02,
    "gap": 0.05,
    "unrefined_fraction": 0.10,
}

DEFAULT_SAMPLES = {
    "vertex-sums": {"configs": 50, "n_min": 4, "n_max": 12},
    "finiteptoh": {"hulls": 10, "paths": 10},
    "thick": {"hulls": 10, "arcs": 500},
    "thin": {"radii": [0.3, 0.1, 0.03], "configs": 3},
    "sandwich": {"hulls": 20, "pairs": 50},
    "pointwise": {"configs": 20, "points": 10_000, "annulus_s": [0.5, 1.0, 2.0, 4.0, 8.0], "annulus_points": 10_000},
    "annulus": {"s": 2.0, "n": [8, 16, 32, 64]},
    "mmdemo": {"n": [1, 2, 3, 4, 5, 6, 7, 8]},
    "appendix": {"triangles": 1000},
    "constants": {},
}

SUITES = tuple(DEFAULT_SAMPLES)


@dataclass
class SuiteConfig:
    suite: str
    seed: int = 0
    samples: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    family: str | None = None
    points: list | None = None

    def __post_init__(self):
        if self.suite not in SUITES:
            raise ConfigError(f"unknown suite {self.suite!r}; choose from {', '.join(SUITES)}")
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ConfigError(f"unknown tolerance keys {sorted(unknown)}")
        if self.family is not None:
            parse_family(self.family)

    def tol(self, key: str) -> float:
        return float(self.tolerances.get(key, DEFAULT_TOLERANCES[key]))

    def n(self, key: str):
        return self.samples.get(key, DEFAULT_SAMPLES[self.suite][key])

    @classmethod
    def from_json(cls, data: dict) -> SuiteConfig:
        if not isinstance(data, dict) or "suite" not in data:
            raise ConfigError("suite config must be an object with a 'suite' key")
        known = {"suite", "seed", "samples", "tolerances", "family", "points"}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        return cls(
            suite=str(data["suite"]),
            seed=int(data.get("seed", 0)),
            samples=dict(data.get("samples", {})),
            tolerances=dict(data.get("tolerances", {})),
            family=data.get("family"),
            points=data.get("points"),
        )


def digest(obj) -> str:
    text = json.dumps(obj, sort_keys=True, default=_jsonable)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _jsonable(x):
    if isinstance(x, complex):
        return "inf" if is_inf(x) else [x.real, x.imag]
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    raise TypeError(type(x))


@dataclass
class CheckRecord:
    check: str
    inputs: str  # digest of the inputs
    value: float
    bound: float
    margin: float
    passed: bool
    note: str = ""

    def to_json(self) -> dict:
        d = {
            "check": self.check,
            "inputs": self.inputs,
            "value": _num_out(self.value),
            "bound": _num_out(self.bound),
            "margin": _num_out(self.margin),
            "pass": self.passed,
        }
        if self.note:
            d["note"] = self.note
        return d


def _num_out(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def upper_check(name, inputs, value, bound, note="") -> CheckRecord:
    """Record for ``value <= bound``."""
    return CheckRecord(name, digest(inputs), value, bound, bound - value, bool(value <= bound), note)


def lower_check(name, inputs, value, bound, note="") -> CheckRecord:
    """Record for ``value >= bound``."""
    return CheckRecord(name, digest(inputs), value, bound, value - bound, bool(value >= bound), note)


@dataclass
class VerifyReport:
    suite: str
    seed: int
    records: list[CheckRecord]
    flags: list[str] = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def failures(self) -> list[CheckRecord]:
        return [r for r in self.records if not r.passed]

    def to_json(self) -> dict:
        # wall time is left out so that reports are reproducible byte for byte
        return {
            "suite": self.suite,
            "seed": self.seed,
            "pass": self.passed,
            "checks": len(self.records),
            "failures": len(self.failures()),
            "flags": list(self.flags),
            "records": [r.to_json() for r in self.records],
        }

    def to_bytes(self) -> bytes:
        return (json.dumps(self.to_json(), indent=2, sort_keys=False) + "\n").encode("utf-8")

    def summary(self) -> str:
        worst = min(self.records, key=lambda r: r.margin, default=None)
        tail = f", worst margin {worst.margin:.3g} ({worst.check})" if worst else ""
        return f"{self.suite}: {'PASS' if self.passed else 'FAIL'} {len(self.records) - len(self.failures())}/{len(self.records)}{tail}"


def workers() -> int:
    raw = os.environ.get("DOMEFORGE_THREADS", "")
    cpus = os.cpu_count() or 1
    if raw.strip():
        try:
            return max(1, min(int(raw), cpus))
        except ValueError:
            raise ConfigError("DOMEFORGE_THREADS must be an integer") from None
    return 1


def _map(fn, tasks: list):
    k = workers()
    if k <= 1 or len(tasks) < 2:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=k) as ex:
        return list(ex.map(fn, tasks))


def _seeds(seed: int, k: int) -> list[int]:
    ss = np.random.SeedSequence(seed).spawn(k)
    return [int(s.generate_state(1)[0]) for s in ss]


# ---------------------------------------------------------------------------
# suites


def _suite_constants(cfg: SuiteConfig):
    table = formulas.constants().as_table()
    targets = {
        "G_asinh1": (0.838682, 1e-5),
        "K0": (7.1219, 1e-3),
        "K": (8.49, 1e-2),
        "Kprime": (4.56, 1e-2),
        "K0prime": (8.05, 1e-2),
        "Phi": (0.4084, 1e-3),
        "k": (5.76, 1e-2),
        "m": (2.69, 1e-2),
    }
    recs = []
    for key, (target, tol) in targets.items():
        err = abs(table[key] - target)
        recs.append(upper_check(f"constant {key}", {"key": key, "target": target}, err, tol, f"value {table[key]:.8g}"))
    return recs, []


def _vertex_sum_task(args):
    seed, n = args
    D = gen_config(f"random-{n}", seed)
    diag = validate(D.hull)
    return seed, n, diag.max_vertex_residual, diag.theta_sum_residual


def _suite_vertex_sums(cfg: SuiteConfig):
    rng = np.random.default_rng(cfg.seed)
    k = cfg.n("configs")
    ns = rng.integers(cfg.n("n_min"), cfg.n("n_max") + 1, size=k)
    seeds = _seeds(cfg.seed, k)
    recs = []
    for seed, n, vres, tres in _map(_vertex_sum_task, list(zip(seeds, (int(x) for x in ns)))):
        inp = {"seed": seed, "n": n}
        recs.append(upper_check("vertex angle sum = 2pi", inp, vres, cfg.tol("vertex_sum")))
        recs.append(upper_check("total angle = pi|X|", inp, tres, cfg.tol("theta_total")))
    return recs, []


def _finiteptoh_task(args):
    seed, paths, rtol = args
    rng = np.random.default_rng(seed)
    D = gen_config(f"random-{int(rng.integers(5, 10))}", seed)
    S = D.surface
    out = []
    tries = 0
    while len(out) < paths and tries < 20 * paths:
        tries += 1
        a, b = S.random_point(rng), S.random_point(rng)
        if a.face == b.face and tries % 2:
            continue
        try:
            L, path = geodesic_distance(S, a, b)
            pb = pullback_path(D, path)
        except GeometryError:
            continue
        rel = abs(pb.l_structural - pb.l_quadrature) / pb.l_structural
        out.append((seed, len(out), len(path.crossings), pb.l_structural, rel))
    return out


def _suite_finiteptoh(cfg: SuiteConfig):
    rtol = cfg.tol("length_identity")
    tasks = [(s, cfg.n("paths"), rtol) for s in _seeds(cfg.seed, cfg.n("hulls"))]
    recs = []
    for rows in _map(_finiteptoh_task, tasks):
        for seed, j, ncross, l_s, rel in rows:
            recs.append(upper_check("l_tau(pullback) = l_h + i", {"seed": seed, "path": j}, rel, rtol, f"crossings {ncross}, length {l_s:.6g}"))
    return recs, []


def _thick_task(args):
    seed, arcs, tol = args
    rng = np.random.default_rng(seed)
    D = gen_config(f"random-{int(rng.integers(5, 10))}", seed)
    S = D.surface
    out = []
    tries = 0
    while len(out) < arcs and tries < 10 * arcs:
        tries += 1
        x = S.random_point(rng)
        inj, cert = injectivity_radius(S, x)
        if not cert or inj < 0.05:
            continue
        L = formulas.G(inj) * rng.uniform(0.05, 1.0)
        ang = rng.uniform(0.0, 2.0 * math.pi)
        path = trace_geodesic(S, x, complex(math.cos(ang), math.sin(ang)), L)
        out.append((seed, len(out), inj, L, path.intersection))
    return out


def _suite_thick(cfg: SuiteConfig):
    hulls = cfg.n("hulls")
    total = cfg.n("arcs")
    per = [total // hulls + (1 if j < total % hulls else 0) for j in range(hulls)]
    tasks = [(s, k, cfg.tol("bound")) for s, k in zip(_seeds(cfg.seed, hulls), per)]
    recs = []
    for rows in _map(_thick_task, tasks):
        for seed, j, inj, L, i in rows:
            recs.append(upper_check("thick arc i <= 2pi", {"seed": seed, "arc": j}, i, 2.0 * math.pi + cfg.tol("bound"), f"inj {inj:.4g}, length {L:.4g}"))
    return recs, []


def _thin_task(args):
    seed, r = args
    D = gen_config(f"two-cluster({r})", seed)
    search = closed_geodesics(D.surface, 2.0 * ASINH1)
    rows = [(g.length, g.intersection, g.max_angle, g.min_angle, len(g.edges)) for g in search.geodesics if g.length < 2.0 * ASINH1]
    return seed, r, rows, search.exhausted


def _suite_thin(cfg: SuiteConfig):
    tol = cfg.tol("bound")
    tasks = []
    for r in cfg.n("radii"):
        tasks += [(s, float(r)) for s in _seeds(cfg.seed + int(round(1e6 * r)), cfg.n("configs"))]
    recs, flags = [], []
    short_found = {}
    for seed, r, rows, exhausted in _map(_thin_task, tasks):
        if not exhausted:
            flags.append(f"closed geodesic search truncated (r={r}, seed={seed})")
        short_found[r] = short_found.get(r, 0) + len(rows)
        for j, (l, i, amax, amin, k) in enumerate(rows):
            inp = {"seed": seed, "r": r, "geodesic": j}
            note = f"length {l:.6g}, {k} crossings"
            recs.append(lower_check("i(gamma) >= 2pi", inp, i, 2.0 * math.pi - tol, note))
            recs.append(upper_check("i(gamma) <= 2pi + 2atan(sinh(l/2))", inp, i, 2.0 * math.pi + 2.0 * math.atan(math.sinh(l / 2.0)) + tol, note))
            recs.append(lower_check("max angle >= asin(4/5)", inp, amax, math.asin(0.8) - tol, note))
            recs.append(lower_check("min angle >= Phi", inp, amin, formulas.PHI - tol, note))
    for r, cnt in sorted(short_found.items()):
        if r <= 0.03:
            recs.append(lower_check("short geodesics found", {"r": r}, cnt, 1))
    return recs, flags


def _sandwich_task(args):
    seed, pairs, slack, gap = args
    rng = np.random.default_rng(seed)
    D = gen_config(f"random-{int(rng.integers(4, 11))}", seed)
    X = D.finite_points
    lo = complex(X.real.min(), X.imag.min())
    hi = complex(X.real.max(), X.imag.max())
    scale = max(hi.real - lo.real, hi.imag - lo.imag)
    out = []
    while len(out) < pairs:
        z, w = (complex(rng.uniform(lo.real, hi.real), rng.uniform(lo.imag, hi.imag)) for _ in range(2))
        if min(np.min(np.abs(X - z)), np.min(np.abs(X - w))) < 0.01 * scale:
            continue
        b = tau_distance_bracket(D, z, w, gap_target=gap)
        out.append((seed, len(out), b.lower, b.upper, b.dome, b.converged, b.certified))
    return out


def _suite_sandwich(cfg: SuiteConfig):
    c = formulas.constants()
    slack = cfg.tol("sandwich_slack")
    tasks = [(s, cfg.n("pairs"), slack, cfg.tol("gap")) for s in _seeds(cfg.seed, cfg.n("hulls"))]
    recs, flags = [], []
    total = unrefined = 0
    for rows in _map(_sandwich_task, tasks):
        for seed, j, lower, upper, dome, conv, cert in rows:
            inp = {"seed": seed, "pair": j}
            total += 1
            unrefined += not conv
            if not cert:
                flags.append(f"search budget exhausted (seed={seed}, pair={j})")
            if not conv:
                flags.append(f"gap above target (seed={seed}, pair={j}, gap={(upper - lower) / lower:.3g})")
            recs.append(upper_check("lower <= upper", inp, lower, upper))
            recs.append(upper_check("upper <= K d_dome + K0", inp, upper, c.K * dome + c.K0 + slack, f"dome {dome:.6g}"))
    frac = unrefined / max(total, 1)
    recs.append(CheckRecord("unrefined fraction", digest({"pairs": total}), frac, cfg.tol("unrefined_fraction"), cfg.tol("unrefined_fraction") - frac, frac < cfg.tol("unrefined_fraction"), f"{unrefined} of {total}"))
    return recs, flags


def _pointwise_task(args):
    seed, npts = args
    rng = np.random.default_rng(seed)
    D = gen_config(f"random-{int(rng.integers(4, 11))}-inf", seed)
    X = D.finite_points
    lo = complex(X.real.min(), X.imag.min()) - 1 - 1j
    hi = complex(X.real.max(), X.imag.max()) + 1 + 1j
    z = rng.uniform(lo.real, hi.real, npts) + 1j * rng.uniform(lo.imag, hi.imag, npts)
    d = np.min(np.abs(z[:, None] - X[None, :]), axis=1)
    z = z[d > 1e-6]
    q = 1.0 / np.min(np.abs(z[:, None] - X[None, :]), axis=1)
    tau = D.tau(z)
    # relative violations of tau/2 <= q <= tau
    low = np.max((0.5 * tau - q) / q)
    high = np.max((q - tau) / q)
    return seed, len(z), float(low), float(high)


def _suite_pointwise(cfg: SuiteConfig):
    tol = cfg.tol("pointwise")
    k = cfg.n("configs")
    per = int(math.ceil(cfg.n("points") / k))
    recs = []
    for seed, m, low, high in _map(_pointwise_task, [(s, per) for s in _seeds(cfg.seed, k)]):
        inp = {"seed": seed, "points": m}
        recs.append(upper_check("tau/2 <= q", inp, low, tol))
        recs.append(upper_check("q <= tau", inp, high, tol))
    rng = np.random.default_rng(cfg.seed)
    svals = cfg.n("annulus_s")
    per = int(math.ceil(cfg.n("annulus_points") / len(svals)))
    for s in svals:
        r = np.exp(rng.uniform(0.0, s, per))
        r = r[(r > 1.0) & (r < math.exp(s))]
        z = r * np.exp(1j * rng.uniform(0.0, 2.0 * math.pi, len(r)))
        rho = annulus_poincare_density(s, z)
        q = annulus_qh_density(s, z)
        lo_v = hi_v = two_v = -math.inf
        for zz, rr, qq in zip(z, rho, q):
            lo_b, hi_b = annulus_bp_envelope(s, zz)
            lo_v = max(lo_v, (lo_b - rr) / rr)
            hi_v = max(hi_v, (rr - hi_b) / rr)
            two_v = max(two_v, (rr - 2.0 * qq) / rr)
        inp = {"s": s, "points": len(z)}
        recs.append(upper_check("annulus rho >= BP lower", inp, lo_v, tol))
        recs.append(upper_check("annulus rho <= BP upper", inp, hi_v, tol))
        recs.append(upper_check("annulus rho <= 2q", inp, two_v, tol))
    return recs, []


def _suite_annulus(cfg: SuiteConfig):
    s = float(cfg.n("s"))
    cf = annulus_closed_forms(s)
    tol = cfg.tol("convergence")
    dome_err, tau_err, recs, flags = [], [], [], []
    for n in cfg.n("n"):
        D = FiniteDomain(annulus_points(s, int(n)))
        g = annulus_core(D, int(n))
        lt = circle_tau_length(D, math.exp(0.5 * s), 8 * int(n))
        dome_err.append(abs(g.length - cf.dome_core) / cf.dome_core)
        tau_err.append(abs(lt - cf.tau_core) / cf.tau_core)
        recs.append(lower_check("tau core length > 2pi", {"s": s, "n": n}, lt, 2.0 * math.pi, f"dome core {g.length:.8g}, tau core {lt:.8g}"))
    ns = list(cfg.n("n"))
    steps = [dome_err[j] - dome_err[j + 1] for j in range(len(ns) - 1)]
    recs.append(lower_check("dome core error strictly decreasing", {"s": s, "n": ns}, min(steps) if steps else 0.0, 0.0, " ".join(f"{e:.3g}" for e in dome_err)))
    recs[-1].passed = bool(steps) and all(d > 0 for d in steps)
    recs.append(upper_check(f"dome core error at n={ns[-1]}", {"s": s, "n": ns[-1]}, dome_err[-1], tol))
    recs.append(upper_check(f"tau core error at n={ns[-1]}", {"s": s, "n": ns[-1]}, tau_err[-1], tol, " ".join(f"{e:.3g}" for e in tau_err)))
    if tau_err[-1] > tol:
        tsteps = [tau_err[j] - tau_err[j + 1] for j in range(len(ns) - 1)]
        trend = "decreasing" if all(d > 0 for d in tsteps) else "not decreasing"
        flags.append(f"tau core error {tau_err[-1]:.3g} above {tol} at n={ns[-1]} ({trend} in n)")
    return recs, flags


def _suite_mmdemo(cfg: SuiteConfig):
    tol = cfg.tol("mm")
    recs = []
    ratios = []
    for n in cfg.n("n"):
        d_rho, d_q = mm_demo(int(n))
        ratios.append(d_q / d_rho)
        recs.append(upper_check("radial rho-length = 2 asinh 1", {"n": n}, abs(d_rho - 2.0 * ASINH1), tol, f"{d_rho:.12g}"))
        recs.append(lower_check("radial q-length >= n", {"n": n}, d_q, float(n)))
    steps = [ratios[j + 1] - ratios[j] for j in range(len(ratios) - 1)]
    if steps:
        recs.append(lower_check("q/rho ratio increasing", {"n": list(cfg.n("n"))}, min(steps), 0.0))
        recs[-1].passed = all(d > 0 for d in steps)
    return recs, []


def brute_triangle_perimeter(C: float, gamma: float, n: int = 2000) -> float:
    """Largest perimeter of a hyperbolic triangle with side ``C`` opposite the
    angle ``gamma``, by scanning the other two angles."""
    ch, cg = math.cosh(C), math.cos(gamma)

    def perims(alpha):
        alpha = np.asarray(alpha, dtype=float)
        # cos(gamma) = -cos(alpha)cos(beta) + sin(alpha)sin(beta)cosh(C)
        A = np.sin(alpha) * ch
        B = -np.cos(alpha)
        R = np.hypot(A, B)
        ok = np.abs(cg) <= R
        base = np.arcsin(np.clip(cg / np.where(ok, R, 1.0), -1.0, 1.0))
        ph = np.arctan2(B, A)
        best = np.full(alpha.shape, -np.inf)
        sC = math.sinh(C) / math.sin(gamma)
        for beta in (base - ph, math.pi - base - ph):
            beta = np.mod(beta, 2.0 * math.pi)
            good = ok & (beta > 0) & (beta < math.pi) & (alpha + beta + gamma < math.pi)
            a = np.arcsinh(sC * np.sin(alpha))
            b = np.arcsinh(sC * np.sin(beta))
            best = np.where(good, np.maximum(best, C + a + b), best)
        return best

    hi = math.pi - gamma
    xs = np.linspace(hi * 1e-9, hi * (1 - 1e-9), n)
    vals = perims(xs)
    for _ in range(6):
        k = int(np.argmax(vals))
        lo_, hi_ = xs[max(k - 2, 0)], xs[min(k + 2, len(xs) - 1)]
        xs = np.linspace(lo_, hi_, 200)
        vals = perims(xs)
    return float(np.max(vals))


def _suite_appendix(cfg: SuiteConfig):
    tol = cfg.tol("appendix")
    rng = np.random.default_rng(cfg.seed)
    recs = []
    worst_dom = -math.inf
    worst_match = 0.0
    k = cfg.n("triangles")
    for _ in range(k):
        C = float(rng.uniform(0.05, 3.0))
        g = float(rng.uniform(0.1, math.pi - 0.1))
        iso = formulas.isosceles_max_perimeter(C, g)
        brute = brute_triangle_perimeter(C, g)
        worst_dom = max(worst_dom, brute - iso)
        worst_match = max(worst_match, abs(brute - iso))
    inp = {"seed": cfg.seed, "triangles": k}
    recs.append(upper_check("isosceles perimeter dominates", inp, worst_dom, 1e-9))
    recs.append(upper_check("isosceles perimeter matches brute force", inp, worst_match, tol))
    half = 0.5 * math.pi
    jump = abs(formulas.R(math.nextafter(half, 4.0)) - formulas.R(half))
    recs.append(upper_check("R continuous at pi/2", {"theta": half}, jump, cfg.tol("continuity")))
    a0 = formulas.arc_angle_lower(0.0)
    a1 = formulas.arc_angle_lower(2.0 * ASINH1)
    recs.append(upper_check("arc_angle_lower(0) = pi", {"L": 0.0}, abs(a0 - math.pi), 0.0))
    recs.append(upper_check("arc_angle_lower(2 asinh 1) = 0", {"L": 2.0 * ASINH1}, abs(a1), 0.0))
    return recs, []


_RUNNERS = {
    "constants": _suite_constants,
    "vertex-sums": _suite_vertex_sums,
    "finiteptoh": _suite_finiteptoh,
    "thick": _suite_thick,
    "thin": _suite_thin,
    "sandwich": _suite_sandwich,
    "pointwise": _suite_pointwise,
    "annulus": _suite_annulus,
    "mmdemo": _suite_mmdemo,
    "appendix": _suite_appendix,
}


def run_suite(cfg: SuiteConfig) -> VerifyReport:
    t0 = time.perf_counter()
    recs, flags = _RUNNERS[cfg.suite](cfg)
    return VerifyReport(cfg.suite, cfg.seed, recs, flags, time.perf_counter() - t0)
