"""Independent reference computations used only by the tests."""

from __future__ import annotations

import heapq
import math

import numpy as np

from domeforge.geom import H3Point, h3_distance, normalizing_map


def edge_samples(P, e, spacing=0.02, span=6.0):
    """Ambient points along a hull edge at hyperbolic spacing."""
    u, v = P.vertices[P.edges[e].v[0]], P.vertices[P.edges[e].v[1]]
    Si = normalizing_map(u, v).inverse()
    ss = np.arange(-span, span + 1e-12, spacing)
    return [Si.extend(H3Point(0j, math.exp(s))) for s in ss]


def mesh_distance(S, a, b, spacing=0.02, span=6.0):
    """Shortest path in the graph whose nodes are ambient edge samples plus
    the endpoints; two nodes are joined when they share a face, weighted by
    their H^3 distance (faces are totally geodesic).  Uses only the hull
    combinatorics and ambient positions, never the charts or gluings."""
    P = S.hull
    nodes = []
    face_nodes = {f: [] for f in range(len(P.faces))}
    for e, ed in enumerate(P.edges):
        for p in edge_samples(P, e, spacing, span):
            k = len(nodes)
            nodes.append(p)
            face_nodes[ed.left].append(k)
            face_nodes[ed.right].append(k)
    ia = len(nodes)
    nodes.append(S.ambient(a))
    face_nodes[a.face].append(ia)
    ib = len(nodes)
    nodes.append(S.ambient(b))
    face_nodes[b.face].append(ib)
    X = np.array([[p.x.real, p.x.imag, p.t] for p in nodes])

    def dists(i, idx):
        d = X[idx]
        dx2 = (d[:, 0] - X[i, 0]) ** 2 + (d[:, 1] - X[i, 1]) ** 2 + (d[:, 2] - X[i, 2]) ** 2
        return 2.0 * np.arcsinh(np.sqrt(dx2) / (2.0 * np.sqrt(d[:, 2] * X[i, 2])))

    node_faces = [[] for _ in nodes]
    for f, idx in face_nodes.items():
        for k in idx:
            node_faces[k].append(f)
    face_arr = {f: np.array(idx) for f, idx in face_nodes.items()}
    dist = np.full(len(nodes), np.inf)
    dist[ia] = 0.0
    heap = [(0.0, ia)]
    while heap:
        d, i = heapq.heappop(heap)
        if d > dist[i]:
            continue
        if i == ib:
            return d
        for f in node_faces[i]:
            idx = face_arr[f]
            nd = d + dists(i, idx)
            better = nd < dist[idx]
            for j, val in zip(idx[better], nd[better]):
                dist[j] = val
                heapq.heappush(heap, (val, j))
    return math.inf


def triangle_perimeter_max(C, gamma, n_scan=4000):
    """Largest perimeter of a hyperbolic triangle with side C opposite the
    angle gamma, by scanning one base angle and golden-section refinement."""

    def perim(alpha):
        # second law of cosines for the third angle beta
        # cos C = (cos a cos b + cos gamma) / (sin a sin b) in angle form;
        # instead parameterize by alpha and solve for beta from
        # cosh C = (cos alpha cos beta + cos gamma) / (sin alpha sin beta)
        ch = math.cosh(C)
        # ch sin a sin b - cos a cos b = cos gamma  ->  R cos(b + phi) form
        A = ch * math.sin(alpha)
        B = -math.cos(alpha)
        # A sin b + B cos b = cos gamma
        Rr = math.hypot(A, B)
        if abs(math.cos(gamma)) > Rr:
            return -math.inf
        phi = math.atan2(B, A)
        best = -math.inf
        for b0 in (math.asin(math.cos(gamma) / Rr) - phi, math.pi - math.asin(math.cos(gamma) / Rr) - phi):
            b = b0 % (2 * math.pi)
            if not 0 < b < math.pi or alpha + b + gamma >= math.pi:
                continue
            sC = math.sinh(C) / math.sin(gamma)
            sa = math.asinh(sC * math.sin(alpha))
            sb = math.asinh(sC * math.sin(b))
            best = max(best, C + sa + sb)
        return best

    xs = np.linspace(1e-6, math.pi - gamma - 1e-6, n_scan)
    vals = [perim(x) for x in xs]
    k = int(np.argmax(vals))
    lo, hi = xs[max(k - 1, 0)], xs[min(k + 1, n_scan - 1)]
    g = (math.sqrt(5) - 1) / 2
    for _ in range(100):
        m1 = hi - g * (hi - lo)
        m2 = lo + g * (hi - lo)
        if perim(m1) < perim(m2):
            lo = m1
        else:
            hi = m2
    return max(max(vals), perim(0.5 * (lo + hi)))


def horoball_min(S, z, starts=6, seed=0):
    """Smallest horoball at ``z`` meeting the dome, by direct minimization of
    the horoball radius over each face and each edge line separately."""
    from scipy.optimize import minimize, minimize_scalar

    from domeforge.dome import polygon_contains
    from domeforge.geom import horoball_radius

    P = S.hull
    rng = np.random.default_rng(seed)
    best = math.inf
    for e, ed in enumerate(P.edges):
        u, v = P.vertices[ed.v[0]], P.vertices[ed.v[1]]
        Si = normalizing_map(u, v).inverse()

        def g(s, Si=Si):
            return horoball_radius(z, Si.extend(H3Point(0j, math.exp(s))))

        r = minimize_scalar(g, bounds=(-40, 40), method="bounded", options={"xatol": 1e-12})
        best = min(best, r.fun)
    for f, ch in enumerate(S.charts):
        xs = np.asarray(ch.coords)

        def h(p, ch=ch, xs=xs):
            w = complex(p[0], math.exp(p[1]))
            if not polygon_contains(xs, np.array([w]), 0.0)[0]:
                return 1e300
            return horoball_radius(z, ch.from_chart.extend(H3Point(complex(w.real, 0.0), w.imag)))

        for _ in range(starts):
            w0 = S.random_point(rng, f).w
            r = minimize(h, [w0.real, math.log(w0.imag)], method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000})
            best = min(best, r.fun)
    return best


def _polyline_tau(D, pts, n=4):
    from domeforge._quad import simpson_weights

    t = np.linspace(0.0, 1.0, 2 * n + 1)
    P = pts[:-1, None] + t[None, :] * (pts[1:] - pts[:-1])[:, None]
    tau = D.tau(P.ravel()).reshape(P.shape)
    return float(np.sum((tau @ simpson_weights(n)) * np.abs(pts[1:] - pts[:-1])))


def optimized_polyline_length(D, z, w, nodes=30):
    """Thurston length of a polyline from ``z`` to ``w`` whose interior nodes
    are optimized freely from the straight segment.  An upper estimate of
    the distance that knows nothing about cells or galleries."""
    from scipy.optimize import minimize

    pts = np.linspace(z, w, nodes)
    m = nodes - 2

    def f(x):
        p = np.concatenate([[z], x[:m] + 1j * x[m:], [w]])
        v = _polyline_tau(D, p)
        return v if np.isfinite(v) else 1e9

    x0 = np.concatenate([pts[1:-1].real, pts[1:-1].imag])
    r = minimize(f, x0, method="L-BFGS-B", options={"maxiter": 2000, "maxfun": 10**6})
    p = np.concatenate([[z], r.x[:m] + 1j * r.x[m:], [w]])
    return _polyline_tau(D, p, 16)
