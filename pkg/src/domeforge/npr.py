"""Nearest point retraction of a punctured sphere onto its dome.

For ``z`` in the domain the retraction is the point where the smallest
horoball based at ``z`` touches the dome, and the Thurston density is one
over that horoball's Euclidean radius.  The minimizer is either the
tangency point with a face plane (only valid when it lands inside the face)
or the closest point of an edge; both have closed forms.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

from ._quad import adaptive_simpson
from .dome import (
    Chart,
    DomePath,
    DomePoint,
    DomeSurface,
    develop,
    polygon_contains,
    segment_frame,
)
from .geom import GenCircle, GeometryError, H3Point, MobiusMap, chordal_distance, ext, is_inf
from .hull import IdealPolyhedron, build_hull

MEMBERSHIP_TOL = 1e-10
# face candidates must beat the best edge by this relative margin
TIE_RTOL = 1e-12


class RetractionError(GeometryError):
    pass


class FiniteDomain:
    """The complement of a finite set ``X`` with its hull and dome."""

    def __init__(self, points, tol: float = 1e-10):
        self.points = tuple(ext(p) for p in points)
        self.hull: IdealPolyhedron = build_hull(self.points, tol)
        self.surface: DomeSurface = develop(self.hull)
        self._prepare()

    @classmethod
    def from_hull(cls, P: IdealPolyhedron, S: DomeSurface | None = None) -> FiniteDomain:
        D = cls.__new__(cls)
        D.points = P.vertices
        D.hull = P
        D.surface = S if S is not None else develop(P)
        D._prepare()
        return D

    def _prepare(self):
        P = self.hull
        self.finite_points = np.array([p for p in self.points if not is_inf(p)], dtype=complex)
        us, vs, kinds = [], [], []
        for ed in P.edges:
            u, v = P.vertices[ed.v[0]], P.vertices[ed.v[1]]
            if is_inf(u):
                u, v = v, u
            us.append(u)
            vs.append(0j if is_inf(v) else v)
            kinds.append(is_inf(v))
        self._eu = np.array(us, dtype=complex)
        self._ev = np.array(vs, dtype=complex)
        self._einf = np.array(kinds, dtype=bool)
        self._euv = np.where(self._einf, 1.0, np.abs(self._eu - self._ev))
        self._fA = np.array([f.circle.A for f in P.faces])
        self._fB = np.array([f.circle.B for f in P.faces], dtype=complex)
        self._fC = np.array([f.circle.C for f in P.faces])
        self._fxs = [np.asarray(ch.coords) for ch in self.surface.charts]

    def __len__(self) -> int:
        return len(self.points)

    # -- vectorized horoball radius -----------------------------------------

    def horoball_data(self, z) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(h, is_face, index)`` for an array of finite points."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        du = np.abs(z[:, None] - self._eu[None, :])
        dv = np.where(self._einf[None, :], 1.0, np.abs(z[:, None] - self._ev[None, :]))
        he = du * dv / self._euv[None, :]
        ke = np.argmin(he, axis=1)
        hE = he[np.arange(len(z)), ke]
        hF = np.full(len(z), np.inf)
        kF = np.full(len(z), -1)
        az2 = np.abs(z) ** 2
        for f, ch in enumerate(self.surface.charts):
            Q = self._fA[f] * az2 + 2.0 * (np.conj(self._fB[f]) * z).real + self._fC[f]
            inside = np.nonzero(Q < 0)[0]
            if inside.size == 0:
                continue
            w = ch.to_chart.apply_array(z[inside])
            ok = polygon_contains(self._fxs[f], w, MEMBERSHIP_TOL)
            idx = inside[ok]
            hf = -0.5 * Q[idx]
            better = hf < hF[idx]
            hF[idx[better]] = hf[better]
            kF[idx[better]] = f
        use_face = hF < hE * (1.0 - TIE_RTOL)
        h = np.where(use_face, hF, hE)
        index = np.where(use_face, kF, ke)
        return h, use_face, index

    def tau(self, z) -> np.ndarray:
        h, _, _ = self.horoball_data(z)
        with np.errstate(divide="ignore"):
            return 1.0 / h

    def check_point(self, z) -> complex:
        z = ext(z)
        if is_inf(z):
            raise RetractionError("the point at infinity has no planar density")
        for x in self.points:
            if chordal_distance(z, x) <= 1e-8:
                raise RetractionError(f"{z} is a boundary point of the domain")
        return z


@dataclass(frozen=True)
class RetractionResult:
    foot: DomePoint
    ambient: H3Point
    h: float
    kind: str  # "face" or "edge"
    index: int  # face id or edge id

    @property
    def tau(self) -> float:
        return 1.0 / self.h


def retract(D: FiniteDomain, z) -> RetractionResult:
    z = D.check_point(z)
    h, is_face, idx = D.horoball_data(np.array([z]))
    h, is_face, idx = float(h[0]), bool(is_face[0]), int(idx[0])
    S = D.surface
    if is_face:
        ch = S.charts[idx]
        w = ch.to_chart(z)
        circ = D.hull.faces[idx].circle
        return RetractionResult(DomePoint(idx, complex(w)), circ.lift(z), h, "face", idx)
    fr = S.frames[idx]
    t = abs(fr.S(z))
    foot = S.edge_point(idx, math.log(t))
    return RetractionResult(foot, S.edge_ambient(idx, math.log(t)), h, "edge", idx)


def thurston_density(D: FiniteDomain, z) -> float:
    return retract(D, z).tau


# ---------------------------------------------------------------------------
# cells


@dataclass(frozen=True)
class FaceCell:
    face: int
    circle: GenCircle
    chart: Chart

    def contains(self, z: complex, tol: float = 0.0) -> bool:
        if self.circle.value(z) >= 0:
            return False
        w = self.chart.to_chart(z)
        return bool(polygon_contains(np.asarray(self.chart.coords), np.array([w]), -tol)[0])

    def density(self, z: complex) -> float:
        """Poincare density of the support disk."""
        return 2.0 / -self.circle.value(z)


@dataclass(frozen=True)
class Bigon:
    edge: int
    S: MobiusMap
    start: complex  # unit vector of the sector's first side in S-coordinates
    theta: float

    def to_sector(self, z: complex) -> complex:
        """The map onto the sector ``0 <= arg <= theta``."""
        return self.S(z) * self.start.conjugate()

    def angle(self, z: complex) -> float:
        return cmath.phase(self.to_sector(z))

    def contains(self, z: complex, tol: float = 0.0) -> bool:
        a = self.angle(z)
        if a < -math.pi / 2:
            a += 2.0 * math.pi
        return tol < a < self.theta - tol

    def density(self, z: complex) -> float:
        return abs(self.S.derivative(z)) / abs(self.S(z))


@dataclass
class CellDecomposition:
    domain: FiniteDomain
    faces: list[FaceCell]
    bigons: list[Bigon]

    def classify(self, z) -> tuple[str, int]:
        r = retract(self.domain, z)
        return (r.kind if r.kind == "face" else "bigon", r.index)

    def cells_containing(self, z, tol: float = 0.0) -> list[tuple[str, int]]:
        out = [("face", c.face) for c in self.faces if c.contains(z, tol)]
        out += [("bigon", b.edge) for b in self.bigons if b.contains(z, tol)]
        return out

    def density(self, kind: str, index: int, z) -> float:
        cell = self.faces[index] if kind == "face" else self.bigons[index]
        return cell.density(z)


def cell_decomposition(D: FiniteDomain) -> CellDecomposition:
    S = D.surface
    faces = [FaceCell(f, D.hull.faces[f].circle, S.charts[f]) for f in range(S.n_faces)]
    bigons = []
    for e, ed in enumerate(D.hull.edges):
        fr = S.frames[e]
        start = fr.normal[ed.left] if fr.sweep > 0 else fr.normal[ed.right]
        bigons.append(Bigon(e, fr.S, start, ed.theta))
    return CellDecomposition(D, faces, bigons)


# ---------------------------------------------------------------------------
# pulling dome paths back to the plane


@dataclass(frozen=True)
class FacePiece:
    face: int
    frame: MobiusMap  # chart -> normalized frame, the segment is i e^s, 0 <= s <= L
    length: float
    chart_inv: MobiusMap

    def points(self, s: np.ndarray) -> np.ndarray:
        w = self.frame.inverse().apply_array(1j * np.exp(s))
        return self.chart_inv.apply_array(w)

    def speed(self, s: np.ndarray) -> np.ndarray:
        w = self.frame.inverse().apply_array(1j * np.exp(s))
        return np.abs(self.chart_inv.derivative_array(w)) * w.imag

    @property
    def span(self) -> tuple[float, float]:
        return 0.0, self.length


@dataclass(frozen=True)
class BigonPiece:
    edge: int
    Sinv: MobiusMap
    t: float
    phi0: float
    phi1: float

    def points(self, phi: np.ndarray) -> np.ndarray:
        return self.Sinv.apply_array(self.t * np.exp(1j * phi))

    def speed(self, phi: np.ndarray) -> np.ndarray:
        zeta = self.t * np.exp(1j * phi)
        return np.abs(self.Sinv.derivative_array(zeta)) * self.t

    @property
    def span(self) -> tuple[float, float]:
        return min(self.phi0, self.phi1), max(self.phi0, self.phi1)

    @property
    def length(self) -> float:
        return abs(self.phi1 - self.phi0)


@dataclass
class PullbackPath:
    pieces: list
    l_structural: float
    l_quadrature: float

    def polyline(self, per_piece: int = 32) -> np.ndarray:
        out = []
        for pc in self.pieces:
            a, b = pc.span
            s = np.linspace(a, b, per_piece)
            if isinstance(pc, BigonPiece) and pc.phi1 < pc.phi0:
                s = s[::-1]
            pts = pc.points(s)
            out.append(pts if not out else pts[1:])
        return np.concatenate(out) if out else np.zeros(0, dtype=complex)


def _pieces(D: FiniteDomain, alpha: DomePath) -> list:
    S = D.surface
    pieces = []
    for j, seg in enumerate(alpha.segments):
        if seg.length > 1e-14:
            N, L = segment_frame(seg.start, seg.end)
            pieces.append(FacePiece(seg.face, N, L, S.charts[seg.face].from_chart))
        if j < len(alpha.crossings):
            c = alpha.crossings[j]
            if c.angle <= 1e-12:
                raise RetractionError("path is not transverse to the edges")
            fr = S.frames[c.edge]
            ed = D.hull.edges[c.edge]
            n0 = fr.normal[c.from_face]
            phi0 = cmath.phase(n0)
            sgn = fr.sweep if c.from_face == ed.left else -fr.sweep
            if ed.left == ed.right:
                raise RetractionError("degenerate edge")
            pieces.append(BigonPiece(c.edge, fr.S.inverse(), math.exp(c.s), phi0, phi0 + sgn * ed.theta))
    return pieces


def pullback_path(D: FiniteDomain, alpha: DomePath, tol: float = 1e-8) -> PullbackPath:
    """Planar curve retracting onto ``alpha`` and its Thurston length, both
    from the cell structure and by quadrature of the density."""
    pieces = _pieces(D, alpha)
    structural = sum(seg.length for seg in alpha.segments) + alpha.intersection

    quad = 0.0
    for pc in pieces:
        a, b = pc.span
        if b - a <= 0:
            continue

        def integrand(s, pc=pc):
            return D.tau(pc.points(s)) * pc.speed(s)

        quad += adaptive_simpson(integrand, a, b, tol)
    return PullbackPath(pieces, structural, quad)


# ---------------------------------------------------------------------------
# SVG drawing


def _clip(points: np.ndarray, R: float) -> list[complex]:
    """Close a sampled boundary curve inside the disk of radius ``R``; runs
    outside it become arcs of the big circle."""
    pts = [complex(p) for p in points if np.isfinite(p)]
    n = len(pts)
    if n == 0:
        return []
    out_mask = [abs(p) > R for p in pts]
    if all(out_mask):
        return []
    k0 = next(k for k in range(n) if not out_mask[k])
    pts = pts[k0:] + pts[:k0]
    out_mask = out_mask[k0:] + out_mask[:k0]
    res: list[complex] = []
    k = 0
    while k < n:
        if not out_mask[k]:
            res.append(pts[k])
            k += 1
            continue
        run = [pts[k - 1]]
        while k < n and out_mask[k]:
            run.append(pts[k])
            k += 1
        run.append(pts[k % n])
        total = 0.0
        for p, q in zip(run, run[1:]):
            d = cmath.phase(q) - cmath.phase(p)
            d = (d + math.pi) % (2 * math.pi) - math.pi
            if abs(d) > math.pi - 0.2:
                d = d % (2 * math.pi)  # passage through infinity: counterclockwise
            total += d
        a0 = cmath.phase(run[1])
        m = max(2, int(abs(total) / 0.05))
        for j in range(m + 1):
            res.append(R * cmath.exp(1j * (a0 + total * j / m)))
    return res


def _signed_area(pts: list[complex]) -> float:
    s = 0.0
    for p, q in zip(pts, pts[1:] + pts[:1]):
        s += p.real * q.imag - q.real * p.imag
    return 0.5 * s


def _fmt(x: float) -> str:
    s = f"{x:.6f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _path_data(pts: list[complex]) -> str:
    cmds = [f"M{_fmt(pts[0].real)},{_fmt(-pts[0].imag)}"]
    cmds += [f"L{_fmt(p.real)},{_fmt(-p.imag)}" for p in pts[1:]]
    return " ".join(cmds) + " Z"


def _face_boundary(cell: FaceCell, m: int) -> np.ndarray:
    xs = np.asarray(cell.chart.coords)
    chunks = []
    psi = 0.5 * math.pi * (1.0 - np.cos(np.linspace(0.0, math.pi, m)))  # 0..pi, dense at ends
    for a, b in zip(xs[:-1], xs[1:]):
        c, r = 0.5 * (a + b), 0.5 * (b - a)
        chunks.append(c + r * np.exp(1j * (math.pi - psi[:-1])))
    c, r = 0.5 * (xs[0] + xs[-1]), 0.5 * (xs[-1] - xs[0])
    chunks.append(c + r * np.exp(1j * psi[:-1]))
    w = np.concatenate(chunks)
    w = w.real + 1j * np.maximum(w.imag, 0.0)
    return cell.chart.from_chart.apply_array(w)


def _bigon_boundary(b: Bigon, m: int) -> np.ndarray:
    rho = np.exp(np.linspace(-14.0, 14.0, m))
    out_ray = rho * b.start
    back = rho[::-1] * b.start * cmath.exp(1j * b.theta)
    return b.S.inverse().apply_array(np.concatenate([out_ray, back]))


def svg_export(C: CellDecomposition, viewport=(-3.0, -3.0, 3.0, 3.0), samples: int = 200, size: int = 600) -> str:
    xmin, ymin, xmax, ymax = (float(v) for v in viewport)
    if not (xmax > xmin and ymax > ymin) or not all(map(math.isfinite, (xmin, ymin, xmax, ymax))):
        raise ValueError("viewport must be a finite box")
    R = 4.0 * math.hypot(xmax - xmin, ymax - ymin) + 4.0 * max(abs(xmin), abs(xmax), abs(ymin), abs(ymax))
    regions = []
    for cell in C.faces:
        regions.append(("face", cell.face, _face_boundary(cell, samples)))
    for b in C.bigons:
        regions.append(("bigon", b.edge, _bigon_boundary(b, samples)))
    w, h = xmax - xmin, ymax - ymin
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size}" '
        f'height="{_fmt(size * h / w)}" viewBox="{_fmt(xmin)} {_fmt(-ymax)} {_fmt(w)} {_fmt(h)}">',
        "<style>.face{fill:#8fb8de;fill-opacity:0.6;stroke:#1f3b57;stroke-width:0.005}"
        ".bigon{fill:#f2c14e;fill-opacity:0.6;stroke:#6b4e00;stroke-width:0.005}"
        ".puncture{fill:#b00020}</style>",
    ]
    for kind, idx, pts in regions:
        ring = _clip(pts, R)
        if len(ring) < 3:
            continue
        d = _path_data(ring)
        if _signed_area(ring) < 0:
            outer = [R * 1.01 * cmath.exp(2j * math.pi * j / 256) for j in range(256)]
            d = _path_data(outer) + " " + d
        lines.append(f'<path class="{kind}" id="{kind}-{idx}" fill-rule="nonzero" d="{escape(d)}"/>')
    rad = 0.01 * max(w, h)
    for x in C.domain.points:
        if not is_inf(x):
            lines.append(f'<circle class="puncture" cx="{_fmt(x.real)}" cy="{_fmt(-x.imag)}" r="{_fmt(rad)}"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
