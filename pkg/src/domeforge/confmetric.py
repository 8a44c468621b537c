"""Conformal metrics on planar domains.

Quasihyperbolic density, the Beardon-Pommerenke gap and the Poincare density
envelope it gives, the round annulus in closed form, path lengths of
arbitrary densities, and two-sided bounds for Thurston distance.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra
from scipy.spatial import Delaunay, QhullError

from ._quad import adaptive_simpson, simpson_weights
from .dome import (
    DEFAULT_BUDGET,
    DomePoint,
    _build_path,
    _real,
    dist_to_geodesic,
    geodesic_distance,
    segment_frame,
)
from .formulas import ASINH1, BP_K
from .geom import GeometryError, MobiusMap, ext, h2_distance, is_inf
from .npr import FiniteDomain, RetractionError, pullback_path, retract


class MetricError(GeometryError):
    pass


def _finite(X) -> np.ndarray:
    return np.array([p for p in (ext(x) for x in X) if not is_inf(p)], dtype=complex)


def _check(X, z) -> tuple[np.ndarray, complex]:
    z = ext(z)
    if is_inf(z):
        raise MetricError("z must be finite")
    pts = _finite(X)
    if pts.size == 0:
        raise MetricError("X has no finite points")
    if np.min(np.abs(pts - z)) <= 1e-12 * (1.0 + abs(z)):
        raise MetricError(f"{z} lies on the boundary")
    return pts, z


def qh_density(X, z) -> float:
    pts, z = _check(X, z)
    return 1.0 / float(np.min(np.abs(pts - z)))


def beta(X, z) -> float:
    """Log-ratio gap between the nearest boundary point and the rest of X."""
    pts, z = _check(X, z)
    d = np.abs(pts - z)
    delta = d.min()
    near = np.nonzero(d <= delta * (1.0 + 1e-12))[0]
    best = math.inf
    for a in near:
        others = np.delete(d, a)
        if others.size:
            best = min(best, float(np.min(np.abs(np.log(others / d[a])))))
    return best


def bp_envelope(X, z) -> tuple[float, float]:
    return _envelope(qh_density(X, z), beta(X, z))


def _envelope(q: float, b: float) -> tuple[float, float]:
    if math.isinf(b):
        return 0.0, 0.0
    lo = q / (math.sqrt(2.0) * (BP_K + b))
    hi = min((2.0 * BP_K + 0.5 * math.pi) / (BP_K + b), 2.0) * q
    return lo, hi


# ---------------------------------------------------------------------------
# round annulus {1 < |z| < e^s}


@dataclass(frozen=True)
class AnnulusSpec:
    s: float
    n: int | None = None
    twist: float | None = None

    def __post_init__(self):
        if not self.s > 0:
            raise MetricError("annulus modulus must be positive")
        if self.n is not None and self.n < 3:
            raise MetricError("need at least 3 points per boundary circle")


def _annulus_r(s: float, z) -> np.ndarray:
    r = np.abs(np.asarray(z, dtype=complex))
    if np.any(r <= 1.0) or np.any(r >= math.exp(s)):
        raise MetricError("point outside the annulus")
    return r


def annulus_poincare_density(s: float, z):
    r = _annulus_r(s, z)
    lam = (math.pi / s) / (r * np.sin(math.pi * np.log(r) / s))
    return float(lam) if np.ndim(z) == 0 else lam


def annulus_qh_density(s: float, z):
    r = _annulus_r(s, z)
    q = 1.0 / np.minimum(r - 1.0, math.exp(s) - r)
    return float(q) if np.ndim(z) == 0 else q


def annulus_thurston_density(s: float, z):
    """Thurston density of the round annulus: the smallest Poincare density
    at ``z`` among the maximal disks, which are tangent to both circles."""
    r = _annulus_r(s, z)
    a = 0.5 * (math.exp(s) - 1.0)
    t = 2.0 * a / ((r - 1.0) * (math.exp(s) - r))
    return float(t) if np.ndim(z) == 0 else t


def annulus_beta(s: float, z):
    """Log-modulus of the largest round annulus about ``z`` separating the
    boundary circles."""
    lr = np.log(_annulus_r(s, z))
    b = np.minimum(lr, s - lr)
    return float(b) if np.ndim(z) == 0 else b


def annulus_bp_envelope(s: float, z) -> tuple[float, float]:
    return _envelope(annulus_qh_density(s, z), annulus_beta(s, z))


@dataclass(frozen=True)
class AnnulusClosedForms:
    rho_core: float
    dome_core: float
    tau_core: float
    t_s: float | None  # None outside its domain

    @property
    def t_s_defined(self) -> bool:
        return self.t_s is not None


def annulus_closed_forms(s: float) -> AnnulusClosedForms:
    if not s > 0:
        raise MetricError("s must be positive")
    dome = 2.0 * math.pi / math.sinh(0.5 * s)
    nu = math.pi**2 / s
    t_s = None
    if nu < ASINH1:
        t_s = math.acosh(1.0 / math.asinh(nu))
    return AnnulusClosedForms(2.0 * math.pi**2 / s, dome, 2.0 * math.pi + dome, t_s)


def annulus_points(s: float, n: int, twist: float | None = None, aligned: bool = False) -> list[complex]:
    """``n`` points on each boundary circle, the outer ring rotated by
    ``twist`` (half a step by default, zero when aligned)."""
    if n < 3:
        raise MetricError("need n >= 3")
    if twist is None:
        twist = 0.0 if aligned else math.pi / n
    ang = 2.0 * math.pi * np.arange(n) / n
    inner = np.exp(1j * ang)
    outer = math.exp(s) * np.exp(1j * (ang + twist))
    return [complex(z) for z in np.concatenate([inner, outer])]


# ---------------------------------------------------------------------------
# lengths


def path_length(density, polyline, tol: float = 1e-8) -> float:
    """Length of a polyline for a vectorized conformal density."""
    pts = [ext(p) for p in polyline]
    if any(is_inf(p) for p in pts):
        raise MetricError("polyline passes through infinity")
    total = 0.0
    for p, q in zip(pts, pts[1:]):
        if p == q:
            continue
        d = q - p

        def f(t, p=p, d=d):
            v = np.asarray(density(p + np.asarray(t) * d), dtype=float) * abs(d)
            if not np.all(np.isfinite(v)):
                raise MetricError("density is singular on the path")
            return v

        total += adaptive_simpson(f, 0.0, 1.0, tol / max(1, len(pts) - 1))
    return total


def mm_demo(n: int) -> tuple[float, float]:
    """Radial Poincare and quasihyperbolic lengths between ``e^-n`` and
    ``e^n`` in the annulus ``e^-2n < |z| < e^2n``."""
    if n < 1:
        raise MetricError("n must be >= 1")
    s = 4.0 * n
    shift = math.exp(2.0 * n)
    a, b = math.exp(-n), math.exp(n)

    def rho(z):
        return annulus_poincare_density(s, np.asarray(z) * shift) * shift

    def q(z):
        r = np.abs(z)
        return 1.0 / np.minimum(r - math.exp(-2.0 * n), math.exp(2.0 * n) - r)

    d_rho = path_length(rho, [a, 1.0, b], 1e-10)
    d_q = path_length(q, [a, 1.0, b], 1e-10)
    return d_rho, d_q


# ---------------------------------------------------------------------------
# exact Thurston distance for finite complements
#
# (Omega, tau) is the union of the face cells, each isometric to a
# hyperbolic ideal polygon, and the bigons, each a Euclidean strip whose
# width is the bending angle.  A shortest path runs through a gallery of
# cells; for a fixed gallery its length is a convex function of where it
# crosses the cell boundaries.


@dataclass(frozen=True)
class _Loc:
    kind: str  # "face" or "bigon"
    index: int
    w: complex = 0j  # chart point (faces)
    s: float = 0.0  # strip coordinates (bigons)
    phi: float = 0.0


class _Grafting:
    def __init__(self, D: FiniteDomain):
        self.D = D
        S = D.surface
        P = D.hull
        self.S = S
        self.M = {}
        self.start_face = []
        self.to_strip = []
        for e, ed in enumerate(P.edges):
            fr = S.frames[e]
            for f in (ed.left, ed.right):
                n = fr.normal[f]
                self.M[(f, e)] = S.charts[f].to_chart @ fr.S.inverse() @ MobiusMap.from_coefficients(n, 0.0, 0.0, 1.0)
            sf = ed.left if fr.sweep > 0 else ed.right
            n0 = fr.normal[sf]
            self.start_face.append(sf)
            self.to_strip.append(MobiusMap.from_coefficients(n0.conjugate(), 0.0, 0.0, 1.0) @ fr.S)

    def theta(self, e: int) -> float:
        return self.D.hull.edges[e].theta

    def locate(self, z: complex) -> _Loc:
        r = retract(self.D, z)
        if r.kind == "face":
            return _Loc("face", r.index, w=r.foot.w)
        e = r.index
        zeta = self.to_strip[e](z)
        phi = math.atan2(zeta.imag, zeta.real)
        th = self.theta(e)
        if phi < -0.5 * (2.0 * math.pi - th):
            phi += 2.0 * math.pi
        return _Loc("bigon", e, s=math.log(abs(zeta)), phi=min(max(phi, 0.0), th))

    def side_phi(self, e: int, f: int) -> float:
        return 0.0 if f == self.start_face[e] else self.theta(e)

    def edge_point(self, f: int, e: int, s: float) -> complex:
        return self.M[(f, e)](math.exp(s))

    def strip_to_plane(self, e: int, s, phi) -> np.ndarray:
        return self.to_strip[e].inverse().apply_array(np.exp(np.asarray(s) + 1j * np.asarray(phi)))

    def face_to_plane(self, f: int, w) -> np.ndarray:
        return self.S.charts[f].from_chart.apply_array(np.asarray(w, dtype=complex))


@dataclass
class _Problem:
    """Gallery length as a function of the boundary crossing parameters."""

    faces: list  # (face, nodeA, nodeB); node = ("fix", w) or ("var", M, k)
    strips: list  # (k1, k2, theta) full crossings, k = variable index
    partial: list  # (k, s_fixed, phi)
    x0: np.ndarray
    crossings: list = field(default_factory=list)

    def value_grad(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        g = np.zeros_like(x)
        total = 0.0
        for _, A, B in self.faces:
            wa, da, ka = _node(A, x)
            wb, db, kb = _node(B, x)
            dx, dy = wa.real - wb.real, wa.imag - wb.imag
            y1, y2 = wa.imag, wb.imag
            N = dx * dx + dy * dy
            r2 = N / (4.0 * y1 * y2)
            r = math.sqrt(r2)
            total += 2.0 * math.asinh(r)
            if r < 1e-300:
                continue
            den = 2.0 * r * math.sqrt(1.0 + r2)
            if ka is not None:
                dux = dx / (y1 * y2)
                duy = dy / (y1 * y2) - N / (2.0 * y1 * y1 * y2)
                g[ka] += (dux * da.real + duy * da.imag) / den
            if kb is not None:
                dux = -dx / (y1 * y2)
                duy = -dy / (y1 * y2) - N / (2.0 * y1 * y2 * y2)
                g[kb] += (dux * db.real + duy * db.imag) / den
        for k1, k2, th in self.strips:
            ds = x[k2] - x[k1]
            L = math.hypot(ds, th)
            total += L
            if L > 0:
                g[k2] += ds / L
                g[k1] -= ds / L
        for k, s0, phi in self.partial:
            ds = x[k] - s0
            L = math.hypot(ds, phi)
            total += L
            if L > 0:
                g[k] += ds / L
        return total, g

    def solve(self) -> tuple[float, np.ndarray]:
        if self.x0.size == 0:
            return self.value_grad(self.x0)[0], self.x0
        res = minimize(
            self.value_grad,
            self.x0,
            jac=True,
            method="L-BFGS-B",
            options={"gtol": 1e-11, "ftol": 1e-15, "maxiter": 2000, "maxcor": 20},
        )
        v, _ = self.value_grad(res.x)
        v0, _ = self.value_grad(self.x0)
        return (v, res.x) if v <= v0 else (v0, self.x0)


def _node(n, x):
    if n[0] == "fix":
        return n[1], 0j, None
    _, M, k = n
    t = math.exp(x[k])
    return M(t), M.derivative(t) * t, k


@dataclass
class TauGeodesic:
    """Shortest path for the Thurston metric, described cell by cell."""

    length: float
    pieces: list  # ("face", f, wa, wb) | ("strip", e, s0, phi0, s1, phi1)
    certified: bool
    lower: float = 0.0

    def polyline(self, G: _Grafting, spacing: float = 0.05) -> np.ndarray:
        out = []
        for pc in self.pieces:
            if pc[0] == "face":
                _, f, wa, wb = pc
                N, L = segment_frame(wa, wb) if wa != wb else (None, 0.0)
                m = max(2, int(math.ceil(L / spacing)) + 1)
                if N is None:
                    w = np.array([wa])
                else:
                    w = N.inverse().apply_array(1j * np.exp(np.linspace(0.0, L, m)))
                pts = G.face_to_plane(f, w)
            else:
                _, e, s0, p0, s1, p1 = pc
                L = math.hypot(s1 - s0, p1 - p0)
                m = max(2, int(math.ceil(L / spacing)) + 1)
                t = np.linspace(0.0, 1.0, m)
                pts = G.strip_to_plane(e, s0 + t * (s1 - s0), p0 + t * (p1 - p0))
            out.append(pts if not out else pts[1:])
        return np.concatenate(out)


def _gallery_problem(G: _Grafting, zl: _Loc, wl: _Loc, start_face: int, steps, end_face: int):
    """Convex program for the gallery ``start_face -steps-> end_face``.

    Returns the problem and a decoder turning a solution into path pieces.
    """
    faces = []
    strips = []
    partial = []
    x0 = []
    meta = []  # per variable: (face, edge)

    def var(f, e, guess):
        x0.append(guess)
        meta.append((f, e))
        return len(x0) - 1

    if zl.kind == "face":
        A = ("fix", zl.w)
        k_start = None
    else:
        k_start = var(start_face, zl.index, zl.s)
        A = ("var", G.M[(start_face, zl.index)], k_start)
        partial.append((k_start, zl.s, abs(zl.phi - G.side_phi(zl.index, start_face))))
    f = start_face
    crossing_vars = []
    for e, nf in steps:
        k1 = var(f, e, 0.0)
        k2 = var(nf, e, 0.0)
        faces.append((f, A, ("var", G.M[(f, e)], k1)))
        strips.append((k1, k2, G.theta(e)))
        crossing_vars.append((e, f, nf, k1, k2))
        A = ("var", G.M[(nf, e)], k2)
        f = nf
    if wl.kind == "face":
        B = ("fix", wl.w)
        k_end = None
    else:
        k_end = var(end_face, wl.index, wl.s)
        B = ("var", G.M[(end_face, wl.index)], k_end)
        partial.append((k_end, wl.s, abs(wl.phi - G.side_phi(wl.index, end_face))))
    faces.append((f, A, B))
    prob = _Problem(faces, strips, partial, np.array(x0, dtype=float))
    prob.crossings = [(k1, k2) for _, _, _, k1, k2 in crossing_vars]

    def decode(x):
        out = []
        if k_start is not None:
            e = zl.index
            out.append(("strip", e, zl.s, zl.phi, x[k_start], G.side_phi(e, start_face)))
        for j, (fc, An, Bn) in enumerate(faces):
            out.append(("face", fc, _node(An, x)[0], _node(Bn, x)[0]))
            if j < len(crossing_vars):
                e, fa, fb, k1, k2 = crossing_vars[j]
                out.append(("strip", e, x[k1], G.side_phi(e, fa), x[k2], G.side_phi(e, fb)))
        if k_end is not None:
            e = wl.index
            out.append(("strip", e, x[k_end], G.side_phi(e, end_face), wl.s, wl.phi))
        return out

    return prob, decode


def _warm_start(G: _Grafting, prob: _Problem, a, b, start_face, steps, end_face):
    """Initial crossing parameters from the straight dome path."""
    S = G.S
    Ts = [MobiusMap.identity()]
    for e, nf in steps:
        Ts.append(Ts[-1] @ S.glue(e, nf))
    try:
        path = _build_path(S, DomePoint(start_face, a), DomePoint(end_face, b), list(steps), Ts)
    except (GeometryError, ValueError, ZeroDivisionError):
        return
    for (k1, k2), c in zip(prob.crossings, path.crossings):
        prob.x0[k1] = prob.x0[k2] = c.s


def tau_geodesic(D: FiniteDomain, z, w, budget: int = DEFAULT_BUDGET, _G: _Grafting | None = None) -> TauGeodesic:
    """Thurston distance between two points of the domain with a shortest
    path.  ``certified`` is False when the gallery search was truncated, in
    which case ``length`` is the best value found and a lower bound is
    recorded in ``lower``."""
    z = D.check_point(z)
    w = D.check_point(w)
    G = _G or _Grafting(D)
    S = G.S
    zl, wl = G.locate(z), G.locate(w)
    best = math.inf
    best_pieces: list = []
    if z == w:
        return TauGeodesic(0.0, [], True, 0.0)
    if zl.kind == "face" and wl.kind == "face" and zl.index == wl.index:
        best = h2_distance(zl.w, wl.w)
        best_pieces = [("face", zl.index, zl.w, wl.w)]
    if zl.kind == "bigon" and wl.kind == "bigon" and zl.index == wl.index:
        best = math.hypot(wl.s - zl.s, wl.phi - zl.phi)
        best_pieces = [("strip", zl.index, zl.s, zl.phi, wl.s, wl.phi)]

    # start options: (face, chart point, partial angle, forbidden first edge)
    starts = []
    if zl.kind == "face":
        starts.append((zl.index, zl.w, 0.0, -1))
    else:
        e = zl.index
        ed = D.hull.edges[e]
        for f in (ed.left, ed.right):
            starts.append((f, G.edge_point(f, e, zl.s), abs(zl.phi - G.side_phi(e, f)), e))
    ends = {}
    if wl.kind == "face":
        ends[wl.index] = [(wl.w, 0.0, -1)]
    else:
        e = wl.index
        ed = D.hull.edges[e]
        for f in (ed.left, ed.right):
            ends.setdefault(f, []).append((G.edge_point(f, e, wl.s), abs(wl.phi - G.side_phi(e, f)), e))

    counter = 0
    heap = []
    for si, (f, a, I0, last) in enumerate(starts):
        heap.append((I0, counter, si, f, MobiusMap.identity(), last, (), I0))
        counter += 1
    heapq.heapify(heap)
    expansions = 0
    certified = True
    floor = math.inf

    def consider(si, face, T, last, steps, I):
        nonlocal best, best_pieces
        f0, a, I0, _ = starts[si]
        for b, Iend, forbid in ends.get(face, []):
            if forbid == last and forbid != -1:
                continue
            if not steps and zl.kind == "bigon" and wl.kind == "bigon" and zl.index == wl.index:
                continue
            bb = T(b)
            if is_inf(bb) or bb.imag <= 0:
                continue
            lb = math.hypot(h2_distance(a, bb), I + Iend)
            if lb >= best:
                continue
            prob, decode = _gallery_problem(G, zl, wl, f0, steps, face)
            _warm_start(G, prob, a, b, f0, steps, face)
            v, x = prob.solve()
            if v < best:
                best, best_pieces = v, decode(x)

    for si, (f, a, I0, last) in enumerate(starts):
        consider(si, f, MobiusMap.identity(), last, (), I0)

    while heap:
        bound, _, si, face, T, last, steps, I = heapq.heappop(heap)
        if bound >= best:
            break
        expansions += 1
        if expansions > budget:
            certified = False
            floor = bound
            break
        a = starts[si][1]
        for e in S.sides(face):
            if e == last:
                continue
            nf = S.other_face(e, face)
            p, q = S.lines[(face, e)]
            In = I + G.theta(e)
            lb = max(bound, math.hypot(dist_to_geodesic(a, _real(T(p)), _real(T(q))), In))
            if lb >= best:
                continue
            Tn = T @ S.glue(e, nf)
            nsteps = steps + ((e, nf),)
            consider(si, nf, Tn, e, nsteps, In)
            counter += 1
            heapq.heappush(heap, (lb, counter, si, nf, Tn, e, nsteps, In))
    if math.isinf(best):
        raise MetricError("no path found within the search budget")
    return TauGeodesic(best, best_pieces, certified, min(best, floor))


def tau_distance(D: FiniteDomain, z, w, budget: int = DEFAULT_BUDGET) -> float:
    return tau_geodesic(D, z, w, budget).length


# ---------------------------------------------------------------------------
# bracketing by planar shortest paths


DEFAULT_SCHEDULE = (0.2, 0.1, 0.05)
GAP_TARGET = 0.05


@dataclass
class DistanceBracket:
    lower: float
    upper: float
    dome: float
    refined_to: float | None
    converged: bool
    certified: bool = True
    levels: list = field(default_factory=list)  # (h, upper at that level)

    @property
    def gap(self) -> float:
        if self.upper == 0.0:
            return 0.0
        return (self.upper - self.lower) / max(self.lower, 1e-300)

    def to_json(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "dome": self.dome,
            "refined_to": self.refined_to,
            "converged": self.converged,
            "certified": self.certified,
            "gap": self.gap,
            "levels": [{"h": h, "upper": u} for h, u in self.levels],
        }


def _edge_weights(D: FiniteDomain, P: np.ndarray, Q: np.ndarray, rtol: float = 1e-6) -> np.ndarray:
    """Thurston length of straight segments by composite Simpson, doubling
    the node count until two successive estimates agree."""
    n = 2
    L = np.abs(Q - P)

    def est(idx, n):
        t = np.linspace(0.0, 1.0, 2 * n + 1)
        pts = P[idx, None] + t[None, :] * (Q - P)[idx, None]
        tau = D.tau(pts.ravel()).reshape(pts.shape)
        return (tau @ simpson_weights(n)) * L[idx]

    idx = np.arange(len(P))
    cur = est(idx, n)
    out = np.empty(len(P))
    while idx.size:
        n *= 2
        nxt = est(idx, n)
        done = (np.abs(nxt - cur) <= rtol * np.abs(nxt)) | (n >= 512)
        out[idx[done]] = nxt[done]
        idx, cur = idx[~done], nxt[~done]
    return out


def _quadtree_fill(D: FiniteDomain, lo: complex, hi: complex, h: float, max_nodes: int = 1500, max_depth: int = 10) -> np.ndarray:
    size = max(hi.real - lo.real, hi.imag - lo.imag)
    centers = np.array([lo + 0.5 * size * (1 + 1j)])
    half = 0.5 * size
    leaves = []
    for _ in range(max_depth):
        tau = D.tau(centers)
        split = np.isfinite(tau) & (2.0 * half * tau > h)
        leaves.append(centers[~split])
        centers = centers[split]
        if centers.size == 0 or sum(len(x) for x in leaves) + 4 * centers.size > max_nodes:
            break
        q = 0.5 * half
        offs = np.array([q * (1 + 1j), q * (1 - 1j), q * (-1 + 1j), q * (-1 - 1j)])
        centers = (centers[:, None] + offs[None, :]).ravel()
        half = q
    leaves.append(centers)
    pts = np.concatenate(leaves)
    return pts[np.isfinite(D.tau(pts))]


def _graph_upper(D: FiniteDomain, z: complex, w: complex, chains: list[np.ndarray], h: float) -> float:
    chains = [c[np.isfinite(c)] for c in chains if len(c)]
    allc = np.concatenate([np.array([z, w])] + chains)
    lo = complex(allc.real.min(), allc.imag.min())
    hi = complex(allc.real.max(), allc.imag.max())
    pad = 0.1 * max(hi.real - lo.real, hi.imag - lo.imag, 1e-3)
    lo -= pad * (1 + 1j)
    hi += pad * (1 + 1j)
    fill = _quadtree_fill(D, lo, hi, h)
    X = D.finite_points
    nodes = np.concatenate([np.array([z, w])] + chains + [fill])
    # drop near duplicates, which upset the triangulation
    key = np.round(nodes.real * 1e9) + 1j * np.round(nodes.imag * 1e9)
    _, first = np.unique(key, return_index=True)
    keep = np.sort(first)
    nodes = nodes[keep]
    n = len(nodes)
    pts = np.concatenate([nodes, X])
    edges = set()
    try:
        tri = Delaunay(np.column_stack([pts.real, pts.imag]))
        for simp in tri.simplices:
            for i in range(3):
                a, b = int(simp[i]), int(simp[(i + 1) % 3])
                if a < n and b < n:
                    edges.add((min(a, b), max(a, b)))
    except QhullError:
        pass
    index = {k: i for i, k in enumerate(keep)}
    base = 2
    for c in chains:
        for j in range(len(c) - 1):
            a, b = index.get(base + j), index.get(base + j + 1)
            if a is not None and b is not None and a != b:
                edges.add((min(a, b), max(a, b)))
        base += len(c)
    E = np.array(sorted(edges), dtype=int)
    wts = _edge_weights(D, nodes[E[:, 0]], nodes[E[:, 1]])
    ok = np.isfinite(wts)
    E, wts = E[ok], wts[ok]
    g = coo_matrix((wts, (E[:, 0], E[:, 1])), shape=(n, n)).tocsr()
    dist = dijkstra(g, directed=False, indices=0)
    return float(dist[1])


def tau_distance_bracket(
    D: FiniteDomain,
    z,
    w,
    schedule=DEFAULT_SCHEDULE,
    gap_target: float = GAP_TARGET,
    budget: int = DEFAULT_BUDGET,
    spacing: float = 0.05,
) -> DistanceBracket:
    """Bracket the Thurston distance between ``z`` and ``w``.

    The lower end is the exact value from the cell structure less a small
    numerical allowance; the upper end is a shortest path in a planar graph
    whose edge lengths are quadratures of the density, refined over
    ``schedule``.  The dome distance between the retractions is reported
    alongside.
    """
    z = D.check_point(z)
    w = D.check_point(w)
    rz, rw = retract(D, z), retract(D, w)
    if z == w:
        return DistanceBracket(0.0, 0.0, 0.0, None, True)
    dome, dpath = geodesic_distance(D.surface, rz.foot, rw.foot, budget)
    G = _Grafting(D)
    geo = tau_geodesic(D, z, w, budget, G)
    lower = max(0.0, geo.lower - 1e-7 * (1.0 + geo.lower))
    chains = [geo.polyline(G, spacing)]
    try:
        chains.append(pullback_path(D, dpath).polyline(24))
    except RetractionError:
        pass
    upper = math.inf
    levels = []
    refined = None
    for h in schedule:
        upper = min(upper, _graph_upper(D, z, w, chains, h))
        levels.append((h, upper))
        refined = h
        if (upper - lower) <= gap_target * lower:
            break
    converged = (upper - lower) <= gap_target * lower
    return DistanceBracket(lower, upper, dome, refined, converged, geo.certified and dpath.certified, levels)
