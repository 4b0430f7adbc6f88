"""Asymptotic covariance kernels of the ECF process with estimated parameters.

Each kernel Gamma(s, t) is the covariance of the limiting Gaussian process
of the empirical-characteristic-function distance, and depends on which
parameters were estimated (all three under H1, location/scale only under
H2) and by which estimator (MLE or EISE).  ``transformed_kernel`` folds in
the exponential test weight and maps the plane onto [-1, 1]^2 through
s = -sgn(u) log(1 - |u|), which is the form the eigenvalue solver consumes.
"""

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from ._fourier import envelope_cutoff
from .errors import QuadratureError
from .estimators import (
    EiseMatrices,
    WeightSpec,
    eise_matrices,
    fisher_info,
    fisher_location_scale,
)
from .stable_core import cf, cf_grad

__all__ = [
    "KERNEL_KINDS",
    "KernelSpec",
    "make_kernel",
    "gamma_mle",
    "gamma_mle_fixed",
    "gamma_cauchy",
    "gamma_eise",
    "gamma_efficient",
    "transformed_kernel",
    "kernel_fn",
]

KERNEL_KINDS = ("mle_h1", "mle_h2", "cauchy_mle", "eise_h1", "eise_fixed", "efficient_general")

EULER_GAMMA = 0.5772156649015328606


def _safe_log_abs(a):
    return np.where(a > 0, np.log(np.where(a > 0, a, 1.0)), 0.0)


def gamma_mle(s, t, alpha, inv_entries):
    """MLE/H1 covariance kernel.

    ``inv_entries`` are (I^11, I^22, I^23, I^33) of the inverse Fisher
    matrix.  Vanishes on the axes: every correction term carries s and t.
    """
    i11, i22, i23, i33 = inv_entries
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    a_s, a_t = np.abs(s), np.abs(t)
    sa, ta = a_s**alpha, a_t**alpha
    e_pp = np.exp(-(sa + ta))
    ls, lt = _safe_log_abs(a_s), _safe_log_abs(a_t)
    ast = sa * ta
    bracket = (
        i11 * s * t
        + i22 * ast * alpha**2
        + i23 * ast * alpha * (ls + lt)
        + i33 * ast * ls * lt
    )
    return np.exp(-np.abs(t - s) ** alpha) - e_pp - bracket * e_pp


def gamma_mle_fixed(s, t, alpha, inv_entries):
    """MLE/H2 kernel (alpha fixed): only the location/scale bracket remains."""
    i11, i22 = inv_entries[:2]
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    sa, ta = np.abs(s) ** alpha, np.abs(t) ** alpha
    e_pp = np.exp(-(sa + ta))
    bracket = i11 * s * t + i22 * sa * ta * alpha**2
    return np.exp(-np.abs(t - s) ** alpha) - e_pp - bracket * e_pp


def gamma_cauchy(s, t):
    """Closed-form Cauchy (alpha = 1) kernel with all parameters estimated."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    a_s, a_t = np.abs(s), np.abs(t)
    c = EULER_GAMMA + math.log(2.0) - 1.0
    ls, lt = _safe_log_abs(a_s), _safe_log_abs(a_t)
    e_pp = np.exp(-(a_s + a_t))
    st = s * t
    out = (
        np.exp(-np.abs(t - s))
        - (1.0 + 2.0 * (st + np.abs(st))) * e_pp
        - 12.0 / math.pi**2 * (ls + c) * (lt + c) * np.abs(st) * e_pp
    )
    return out


def gamma_efficient(s, t, params, fisher_inverse):
    """General efficient-estimator kernel (complex, Hermitian).

    Gamma(s,t) = Phi(s-t) - Phi(s) conj(Phi(t))
               - grad Phi(s)' I^-1 conj(grad Phi(t))
    for any family with characteristic function ``cf`` and an efficient
    estimator whose asymptotic covariance is the inverse information
    ``fisher_inverse`` (p x p).
    """
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    gs = np.stack(cf_grad(s, params))
    gt = np.stack(cf_grad(t, params))
    quad_form = np.einsum("i...,ij,j...->...", gs, np.asarray(fisher_inverse), np.conj(gt))
    return cf(s - t, params) - cf(s, params) * np.conj(cf(t, params)) - quad_form


class _EiseInnerCache:
    """Cubic-spline cache of the three EISE inner integrals.

    M1(s) = int exp(-|s-u|^a - |u|^a) u         w(u) du   (odd)
    M2(s) = int exp(-|s-u|^a - |u|^a) |u|^a      w(u) du   (even)
    M3(s) = int exp(-|s-u|^a - |u|^a) |u|^a ln|u| w(u) du  (even)

    Each kernel evaluation needs all three at both arguments; computing
    them on a fixed grid once keeps the Nystrom assembly O(N^2) cheap.
    """

    def __init__(self, alpha, weight, s_max=65.0, n_grid=2048):
        self.alpha = alpha
        self.weight = weight
        self.s_max = s_max
        u_cut = envelope_cutoff(((1.0, alpha),) + weight.terms())
        self._ucut = u_cut
        grid = np.linspace(0.0, s_max, n_grid)
        vals = np.array([self._direct(si) for si in grid])
        self._spl = [CubicSpline(grid, vals[:, i]) for i in range(3)]

    def _direct(self, s):
        alpha, w = self.alpha, self.weight
        U = self._ucut

        def base(u):
            return math.exp(-abs(s - u) ** alpha - abs(u) ** alpha) * float(w.values(u))

        pts = sorted({0.0, min(max(s, -U), U)})

        def do(g):
            val, err = integrate.quad(g, -U, U, points=pts, limit=300, epsabs=1e-13, epsrel=1e-10)
            return val

        m1 = do(lambda u: base(u) * u)
        m2 = do(lambda u: base(u) * abs(u) ** alpha)
        m3 = do(lambda u: base(u) * abs(u) ** alpha * (math.log(abs(u)) if u != 0 else 0.0))
        return np.array([m1, m2, m3])

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        a_s = np.minimum(np.abs(s), self.s_max)
        sgn = np.where(s < 0, -1.0, 1.0)
        return sgn * self._spl[0](a_s), self._spl[1](a_s), self._spl[2](a_s)


@dataclass(frozen=True)
class KernelSpec:
    """Which asymptotic kernel to evaluate, with its precomputed pieces."""

    kind: str
    alpha: float
    kappa: float
    weight: WeightSpec | None = None
    fisher_inv: tuple | None = None
    eise: EiseMatrices | None = None
    inner: object | None = None

    def label(self):
        return f"{self.kind}(alpha={self.alpha:g}, kappa={self.kappa:g})"


def make_kernel(kind, alpha, kappa=1.0, weight=None):
    """Build a :class:`KernelSpec`, computing Fisher/EISE inputs as needed."""
    if kind not in KERNEL_KINDS:
        raise ValueError(f"unknown kernel kind {kind!r}; choose from {KERNEL_KINDS}")
    if kind == "mle_h1":
        inv = fisher_info(alpha).inverse_entries()
        return KernelSpec(kind, alpha, kappa, fisher_inv=inv)
    if kind == "mle_h2":
        i11, i22 = fisher_location_scale(alpha)
        return KernelSpec(kind, alpha, kappa, fisher_inv=(1.0 / i11, 1.0 / i22))
    if kind == "cauchy_mle":
        if alpha != 1.0:
            raise ValueError("cauchy_mle kernel is the alpha = 1 case")
        return KernelSpec(kind, alpha, kappa)
    if kind == "efficient_general":
        inv = np.linalg.inv(fisher_info(alpha).matrix())
        return KernelSpec(kind, alpha, kappa, fisher_inv=tuple(map(tuple, inv)))
    if weight is None:
        raise ValueError(f"{kind} kernel needs a WeightSpec")
    em = eise_matrices(alpha, weight)
    cache = _EiseInnerCache(alpha, weight)
    return KernelSpec(kind, alpha, kappa, weight=weight, eise=em, inner=cache)


def gamma_eise(s, t, spec):
    """EISE/H1 covariance kernel (symmetrized form, negative-exponent inner integrals)."""
    em = spec.eise
    a = spec.alpha
    a11, a22, a23, a33 = em.a_inverse_entries()
    J = em.J
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    a_s, a_t = np.abs(s), np.abs(t)
    sa, ta = a_s**a, a_t**a
    ls, lt = _safe_log_abs(a_s), _safe_log_abs(a_t)
    e_s, e_t = np.exp(-sa), np.exp(-ta)
    e_pp = e_s * e_t
    ast = sa * ta
    jbr = (
        J[0, 0] * s * t
        + J[1, 1] * a**2 * ast
        + J[1, 2] * a * ast * (ls + lt)
        + J[2, 2] * ast * ls * lt
    )
    bbr = (em.Bsigma * a22 + em.Balpha * a23) * a * (ta + sa) + (
        em.Bsigma * a23 + em.Balpha * a33
    ) * (ta * lt + sa * ls)
    m1s, m2s, m3s = spec.inner(s)
    m1t, m2t, m3t = spec.inner(t)

    def half(tt, ta_, lt_, e_t_, m1, m2, m3):
        # cross terms with the roles (t-side CF gradient) x (s-side inner integral)
        return (
            -a11 * tt * e_t_ * m1
            - a * (a22 * a + a23 * lt_) * ta_ * e_t_ * m2
            - (a23 * a + a33 * lt_) * ta_ * e_t_ * m3
        )

    cross = half(t, ta, lt, e_t, m1s, m2s, m3s) + half(s, sa, ls, e_s, m1t, m2t, m3t)
    return np.exp(-np.abs(t - s) ** a) - e_pp + (jbr + bbr) * e_pp + cross


def gamma_eise_fixed(s, t, spec):
    """EISE kernel with alpha fixed: location/scale blocks only."""
    em = spec.eise
    a = spec.alpha
    a11inv = 1.0 / em.A[0, 0]
    a22inv = 1.0 / em.A[1, 1]
    j11 = em.H[0, 0] * a11inv**2
    j22 = em.H[1, 1] * a22inv**2
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    sa, ta = np.abs(s) ** a, np.abs(t) ** a
    e_s, e_t = np.exp(-sa), np.exp(-ta)
    e_pp = e_s * e_t
    m1s, m2s, _ = spec.inner(s)
    m1t, m2t, _ = spec.inner(t)
    cross = (
        -a11inv * (t * e_t * m1s + s * e_s * m1t)
        - a22inv * a**2 * (ta * e_t * m2s + sa * e_s * m2t)
    )
    bracket = j11 * s * t + j22 * a**2 * sa * ta + a22inv * em.Bsigma * a * (ta + sa)
    return np.exp(-np.abs(t - s) ** a) - e_pp + bracket * e_pp + cross


def kernel_fn(spec):
    """Gamma(s, t) evaluator for a kernel spec (vectorized, real kinds)."""
    if spec.kind == "mle_h1":
        return lambda s, t: gamma_mle(s, t, spec.alpha, spec.fisher_inv)
    if spec.kind == "mle_h2":
        return lambda s, t: gamma_mle_fixed(s, t, spec.alpha, spec.fisher_inv)
    if spec.kind == "cauchy_mle":
        return lambda s, t: gamma_cauchy(s, t)
    if spec.kind == "eise_h1":
        return lambda s, t: gamma_eise(s, t, spec)
    if spec.kind == "eise_fixed":
        return lambda s, t: gamma_eise_fixed(s, t, spec)
    raise ValueError(f"no real-valued kernel for kind {spec.kind!r}")


def transform_point(u):
    """Map u in [-1, 1] to the line: s = -sgn(u) log(1 - |u|)."""
    u = np.asarray(u, dtype=float)
    return -np.sign(u) * np.log1p(-np.abs(u))


def transformed_kernel(u, v, spec):
    """Weighted kernel on [-1, 1]^2 consumed by the eigenvalue solver.

    K(u, v) = Gamma(s(u), s(v)) * ((1-|u|)(1-|v|))^((kappa-1)/2), which is
    the plane kernel with the weight e^{-kappa|t|} folded in and the
    Jacobian of the log map absorbed.  For kappa > 1 the kernel vanishes
    at |u| = 1; for kappa <= 1 the endpoints are evaluated just inside
    (quadrature grids never place nodes at +-1).
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(np.abs(u) > 1) or np.any(np.abs(v) > 1):
        raise ValueError("transformed kernel arguments must lie in [-1, 1]")
    g = kernel_fn(spec)
    k = spec.kappa
    at_edge = (np.abs(u) >= 1.0) | (np.abs(v) >= 1.0)
    u = np.clip(u, -1.0 + 1e-12, 1.0 - 1e-12)
    v = np.clip(v, -1.0 + 1e-12, 1.0 - 1e-12)
    au, av = np.abs(u), np.abs(v)
    fac = ((1.0 - au) * (1.0 - av)) ** (0.5 * (k - 1.0))
    out = g(transform_point(u), transform_point(v)) * fac
    if k > 1.0:
        out = np.where(at_edge, 0.0, out)
    return out


@lru_cache(maxsize=64)
def cached_kernel(kind, alpha, kappa):
    """Memoized make_kernel for the MLE-family kinds used by table runs."""
    return make_kernel(kind, alpha, kappa)
