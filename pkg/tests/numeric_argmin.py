"""Brute-force minimizers of the proximal objective <h p, u> + V(x, u).

These never call ``mirror_step``; they minimize the objective directly so the
closed-form updates can be checked against them.
"""

import numpy as np
from scipy.optimize import minimize


def simplex_argmin(x, p, h, iterations=200):
    """Damped Newton on the simplex-constrained entropy objective."""
    x = np.asarray(x, float)
    n = x.size
    u = np.full(n, 1.0 / n)

    def objective(v):
        return h * p @ v + np.sum(v * np.log(v / x))

    for _ in range(iterations):
        grad = h * p + np.log(u / x) + 1.0
        kkt = np.zeros((n + 1, n + 1))
        kkt[:n, :n] = np.diag(1.0 / u)
        kkt[:n, n] = 1.0
        kkt[n, :n] = 1.0
        du = np.linalg.solve(kkt, np.append(-grad, 0.0))[:n]
        t = 1.0
        while np.any(u + t * du <= 0):
            t *= 0.5
        f0 = objective(u)
        while objective(u + t * du) > f0 + 0.25 * t * (grad @ du) and t > 1e-20:
            t *= 0.5
        u = u + t * du
        u /= u.sum()
        if np.max(np.abs(t * du)) < 1e-16:
            break
    return u


def ball_argmin(x, p, h, norm_power=2.0):
    """SLSQP on the unit l_r ball, r = ``norm_power``, with d = ||u||_r^2 / (2(r-1))."""
    x = np.asarray(x, float)
    r = norm_power

    def d(v):
        return np.sum(np.abs(v) ** r) ** (2.0 / r) / (2.0 * (r - 1.0))

    def grad_d(v):
        nv = np.sum(np.abs(v) ** r) ** (1.0 / r)
        if nv == 0:
            return np.zeros_like(v)
        return np.sign(v) * np.abs(v) ** (r - 1.0) * nv ** (2.0 - r) / (r - 1.0)

    gx = grad_d(x)

    def objective(u):
        return h * p @ u + d(u) - d(x) - gx @ (u - x)

    cons = [{"type": "ineq", "fun": lambda u: 1.0 - np.sum(np.abs(u) ** r)}]
    best = None
    for start in (np.zeros_like(x), x):
        res = minimize(objective, start, method="SLSQP", constraints=cons,
                       options={"ftol": 1e-16, "maxiter": 2000})
        if best is None or res.fun < best.fun:
            best = res
    return best.x
