from __future__ import annotations

import numpy as np


def adaptive_simpson(f, a: float, b: float, tol: float = 1e-8, max_depth: int = 40) -> float:
    """Adaptive Simpson quadrature of a vectorized integrand ``f``."""
    if b == a:
        return 0.0
    m = 0.5 * (a + b)
    fa, fm, fb = f(np.array([a, m, b]))
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    total = 0.0
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        a0, b0, fa0, fm0, fb0, S0, eps, depth = stack.pop()
        m0 = 0.5 * (a0 + b0)
        lm, rm = 0.5 * (a0 + m0), 0.5 * (m0 + b0)
        flm, frm = f(np.array([lm, rm]))
        Sl = (m0 - a0) / 6.0 * (fa0 + 4.0 * flm + fm0)
        Sr = (b0 - m0) / 6.0 * (fm0 + 4.0 * frm + fb0)
        err = Sl + Sr - S0
        if depth >= max_depth or abs(err) <= 15.0 * eps:
            total += Sl + Sr + err / 15.0
        else:
            stack.append((a0, m0, fa0, flm, fm0, Sl, eps / 2.0, depth + 1))
            stack.append((m0, b0, fm0, frm, fb0, Sr, eps / 2.0, depth + 1))
    return float(total)


def simpson_weights(n: int) -> np.ndarray:
    """Composite Simpson weights on ``2n + 1`` equispaced nodes of [0, 1]."""
    w = np.ones(2 * n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w / (6.0 * n)
