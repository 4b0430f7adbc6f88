"""Half-line cosine/sine transforms against exponential-decay envelopes.

Used by the EISE objective and the test statistic, which both need integrals

    2 int_0^inf cos(t y) exp(-phi(t)) dt          (and t*sin, t^a*log(t)*cos)

with phi(t) a sum of power terms c * t^p.  Moderate |y| goes through a
shared panelized Gauss-Legendre grid; the few points beyond ``ysplit`` fall
back to adaptive oscillatory quadrature so heavy-tail outliers cannot alias
into the grid sum.
"""

import math

import numpy as np
from scipy import integrate

from .errors import QuadratureError

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)
_LOG_EPS = 41.5


def envelope_cutoff(terms):
    """T such that phi(T) = -log(eps) for phi(t) = sum c*t^p, c > 0."""
    def phi(t):
        return sum(c * t**p for c, p in terms)

    hi = 1.0
    while phi(hi) < _LOG_EPS:
        hi *= 2.0
        if hi > 1e18:
            raise QuadratureError("envelope does not decay; bad exponent terms")
    lo = hi / 2.0 if hi > 1.0 else 0.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if phi(mid) < _LOG_EPS:
            lo = mid
        else:
            hi = mid
    return hi


def panel_grid(T, xmax):
    """Gauss-Legendre nodes/weights on [0, T], graded near 0, resolving cos(t*xmax)."""
    edges = [0.0]
    t0 = min(1.0, T) * 2.0 ** -14
    while t0 < T:
        edges.append(t0)
        t0 *= 2.0
    edges.append(T)
    edges = np.unique(np.asarray(edges))
    h_osc = math.pi / max(xmax, 1e-9)
    pieces = []
    for a, b in zip(edges[:-1], edges[1:]):
        nsub = max(1, int(math.ceil((b - a) / h_osc)))
        pieces.append(np.linspace(a, b, nsub + 1)[:-1])
    lo = np.concatenate(pieces)
    hi = np.concatenate([lo[1:], [T]])
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    t = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    w = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return t, w


def cos_transforms(y, alpha, terms, ysplit=60.0):
    """Evaluate the three envelope transforms at each point of ``y``.

    Returns arrays (c0, s1, ca) with

        c0(y) = 2 int_0^inf cos(t y)              exp(-phi(t)) dt
        s1(y) = 2 int_0^inf t sin(t y)            exp(-phi(t)) dt
        ca(y) = 2 int_0^inf t^alpha log(t) cos(ty) exp(-phi(t)) dt

    where phi(t) = sum c * t^p over ``terms``.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    ay = np.abs(y)
    sgn = np.where(y < 0, -1.0, 1.0)
    T = envelope_cutoff(terms)
    c0 = np.empty_like(ay)
    s1 = np.empty_like(ay)
    ca = np.empty_like(ay)
    near = ay <= ysplit
    if np.any(near):
        t, w = panel_grid(T, float(np.max(ay[near])))
        phi = np.zeros_like(t)
        for c, p in terms:
            phi += c * t**p
        env = np.exp(-phi)
        lt = np.log(np.maximum(t, 1e-300))
        e = np.exp(1j * np.outer(ay[near], t))
        c0[near] = 2.0 * (e.real @ (w * env))
        s1[near] = 2.0 * (e.imag @ (w * t * env))
        ca[near] = 2.0 * (e.real @ (w * t**alpha * lt * env))
    far = ~near
    if np.any(far):
        def env_s(t):
            return math.exp(-sum(c * t**p for c, p in terms))

        for i in np.nonzero(far)[0]:
            v = ay[i]
            c0[i] = 2.0 * integrate.quad(env_s, 0, T, weight="cos", wvar=v, limit=400)[0]
            s1[i] = 2.0 * integrate.quad(lambda t: t * env_s(t), 0, T, weight="sin", wvar=v, limit=400)[0]
            ca[i] = 2.0 * integrate.quad(
                lambda t: t**alpha * math.log(t) * env_s(t) if t > 0 else 0.0,
                0, T, weight="cos", wvar=v, limit=400,
            )[0]
    # cos transforms even in y, the sine one odd
    return c0, s1 * sgn, ca


def envelope_moment(terms, power=0.0, logpow=0):
    """2 int_0^inf t^power log(t)^logpow exp(-phi(t)) dt by adaptive quadrature."""
    T = envelope_cutoff(terms)

    def g(t):
        if t <= 0:
            return 0.0
        return t**power * math.log(t) ** logpow * math.exp(-sum(c * t**p for c, p in terms))

    val, err = integrate.quad(g, 0.0, T, limit=400, epsabs=1e-14, epsrel=1e-11)
    if err > 1e-8 * max(abs(val), 1e-10):
        raise QuadratureError(f"envelope moment failed: err={err}")
    return 2.0 * val
