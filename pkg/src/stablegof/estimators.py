"""Fitting symmetric stable laws: maximum likelihood and EISE.

Both estimators are affine equivariant.  The MLE maximizes
sum_j log f((x_j - mu)/sigma; alpha) - n log sigma using analytic score
functions built from the density derivatives; the EISE minimizes the
weighted integrated squared distance Q between the empirical
characteristic function of the standardized data and exp(-|t|^alpha).

The module also computes the asymptotic ingredients both estimators feed
into the covariance kernels: the Fisher information matrix (numerically
integrated, with the Cauchy closed form available as a cross-check) and the
A/H/J matrices plus the B constants of the EISE influence functions.
"""

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
from scipy import integrate, optimize
from scipy.interpolate import CubicSpline
from scipy.special import gammaln

from ._fourier import cos_transforms, envelope_moment, envelope_cutoff
from .errors import DataError, NonConvergenceError, QuadratureError
from .stable_core import (
    StableParams,
    pdf_batch,
    _pdf_quad,
    _pdf0_triple,
    _crossover,
    _tail_series,
)

__all__ = [
    "FisherInfo",
    "EiseMatrices",
    "WeightSpec",
    "FitResult",
    "fisher_info",
    "fisher_location_scale",
    "cauchy_al",
    "eise_matrices",
    "mle_fit",
    "eise_fit",
    "loglik",
    "q_objective",
    "q_objective_direct",
]

EULER_GAMMA = 0.5772156649015328606


# ----------------------------------------------------------------------
# Fisher information
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class FisherInfo:
    """Fisher information entries of (mu, sigma, alpha) at the standard case.

    The matrix is block diagonal: I12 = I13 = 0 by symmetry of the density.
    """

    I11: float
    I22: float
    I23: float
    I33: float
    alpha: float

    def matrix(self):
        return np.array(
            [
                [self.I11, 0.0, 0.0],
                [0.0, self.I22, self.I23],
                [0.0, self.I23, self.I33],
            ]
        )

    def inverse_entries(self):
        """(I^11, I^22, I^23, I^33) of the inverse matrix."""
        det = self.I22 * self.I33 - self.I23**2
        if det <= 0 or self.I11 <= 0:
            raise ValueError("Fisher matrix not positive definite")
        return 1.0 / self.I11, self.I33 / det, -self.I23 / det, self.I22 / det


def _score_products(x, alpha, xc):
    """[h_mu^2, h_sigma^2, h_sigma*h_alpha, h_alpha^2] * f at a point x >= 0."""
    if x <= xc:
        f, fp, fa = _pdf_quad(x, alpha) if x > 0 else _pdf0_triple(alpha)
    else:
        fv, fpv, fav, _ = _tail_series(np.array([x]), alpha)
        f, fp, fa = float(fv[0]), float(fpv[0]), float(fav[0])
    fs = -f - x * fp  # location-scale identity for the sigma derivative
    return np.array([fp * fp / f, fs * fs / f, fs * fa / f, fa * fa / f])


@lru_cache(maxsize=128)
def fisher_info(alpha):
    """Fisher information of the standard symmetric stable law.

    Entries are E[h_i h_j] with the score functions expressed through the
    density derivatives, integrated adaptively over the half line (the
    integrands are even).  alpha = 2 is rejected: the information for the
    characteristic exponent diverges there.
    """
    alpha = float(alpha)
    if not (0 < alpha < 2):
        raise ValueError(f"fisher_info requires 0 < alpha < 2, got {alpha}")
    xc = _crossover(alpha)
    core, err1 = integrate.quad_vec(
        lambda x: _score_products(x, alpha, xc), 0.0, xc, epsabs=1e-12, epsrel=1e-10
    )
    tail, err2 = integrate.quad_vec(
        lambda x: _score_products(x, alpha, xc), xc, np.inf, epsabs=1e-12, epsrel=1e-10
    )
    vals = 2.0 * (core + tail)
    if max(err1, err2) > 1e-6:
        raise QuadratureError(f"fisher_info integration error {max(err1, err2)}")
    return FisherInfo(I11=vals[0], I22=vals[1], I23=vals[2], I33=vals[3], alpha=alpha)


def fisher_location_scale(alpha):
    """(I11, I22) of the location-scale submodel; valid up to alpha = 2.

    With alpha fixed the information matrix of (mu, sigma) is
    diag(I11, I22); at alpha = 2 the stable member is N(mu, 2 sigma^2),
    giving the closed forms 1/2 and 2.
    """
    if alpha == 2.0:
        return 0.5, 2.0
    fi = fisher_info(alpha)
    return fi.I11, fi.I22


def cauchy_al(x):
    """Closed-form score triple (h_mu, h_sigma, h_alpha) in the Cauchy case."""
    x = np.asarray(x, dtype=float)
    d = x * x + 1.0
    h_mu = 2.0 * x / d
    h_sigma = (x * x - 1.0) / d
    h_alpha = (1.0 - x * x) / d * (0.5 * np.log(d) - 1.0 + EULER_GAMMA) + (
        2.0 * x / d
    ) * np.arctan(x)
    return h_mu, h_sigma, h_alpha


# ----------------------------------------------------------------------
# EISE weight and asymptotic matrices
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class WeightSpec:
    """Even weight function for the EISE criterion.

    kind "exp_abs" is w(t) = exp(-kappa |t|); kind "exp_power" is
    w(t) = exp(-nu |t|^bar_alpha).
    """

    kind: str
    kappa_or_nu: float
    bar_alpha: float | None = None

    def __post_init__(self):
        if self.kind not in ("exp_abs", "exp_power"):
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if not (self.kappa_or_nu > 0):
            raise ValueError("weight constant must be positive")
        if self.kind == "exp_power":
            if self.bar_alpha is None or not (0 < self.bar_alpha <= 2):
                raise ValueError("exp_power weight needs bar_alpha in (0, 2]")

    def terms(self):
        """Exponent terms (c, p) so that w(t) = exp(-sum c t^p) on t >= 0."""
        if self.kind == "exp_abs":
            return ((self.kappa_or_nu, 1.0),)
        return ((self.kappa_or_nu, self.bar_alpha),)

    def values(self, t):
        t = np.abs(np.asarray(t, dtype=float))
        c, p = self.terms()[0]
        return np.exp(-c * t**p)


@dataclass(frozen=True)
class EiseMatrices:
    """A, H and J = A^-1 H A^-1 of the EISE influence functions."""

    A: np.ndarray
    H: np.ndarray
    J: np.ndarray
    Bsigma: float
    Balpha: float
    alpha: float
    weight: WeightSpec

    def a_inverse_entries(self):
        """(A^11, A^22, A^23, A^33) of the inverse of A."""
        det = self.A[1, 1] * self.A[2, 2] - self.A[1, 2] ** 2
        return (
            1.0 / self.A[0, 0],
            self.A[2, 2] / det,
            -self.A[1, 2] / det,
            self.A[1, 1] / det,
        )


def eise_matrices(alpha, weight):
    """Compute the EISE A/H/J matrices and B constants at one alpha.

    A and the B constants are one-dimensional quadratures; the H entries are
    the double integrals over (s, t), reduced to the positive quadrant by
    evenness and integrated with the |s - t|^alpha cusp split out.
    """
    if not (0 < alpha <= 2):
        raise ValueError(f"alpha must be in (0, 2], got {alpha}")
    terms2 = ((2.0, alpha),) + weight.terms()
    a11 = envelope_moment(terms2, power=2.0)
    m0 = envelope_moment(terms2, power=2.0 * alpha)
    m1 = envelope_moment(terms2, power=2.0 * alpha, logpow=1)
    m2 = envelope_moment(terms2, power=2.0 * alpha, logpow=2)
    A = np.array(
        [
            [a11, 0.0, 0.0],
            [0.0, alpha**2 * m0, alpha * m1],
            [0.0, alpha * m1, m2],
        ]
    )
    bsigma = alpha * envelope_moment(terms2, power=alpha)
    balpha = envelope_moment(terms2, power=alpha, logpow=1)

    T = envelope_cutoff(((1.0, alpha),) + weight.terms())
    wc, wp = weight.terms()[0]

    def h_inner(t):
        def integrand(s):
            em = math.exp(-(s**alpha) - t**alpha - wc * (s**wp + t**wp))
            dm = math.exp(-abs(s - t) ** alpha)
            dp = math.exp(-((s + t) ** alpha))
            br_mu = 0.5 * (dm - dp)
            br = 0.5 * (dm + dp) - math.exp(-(s**alpha) - t**alpha)
            sta = (s * t) ** alpha
            ls, lt_ = math.log(s) if s > 0 else 0.0, math.log(t) if t > 0 else 0.0
            return np.array(
                [
                    br_mu * s * t * em,
                    br * sta * em,
                    br * sta * 0.5 * (ls + lt_) * em,
                    br * sta * ls * lt_ * em,
                ]
            )

        lo, _ = integrate.quad_vec(integrand, 0.0, min(t, T), epsabs=1e-13, epsrel=1e-9)
        hi, _ = integrate.quad_vec(integrand, min(t, T), T, epsabs=1e-13, epsrel=1e-9)
        return lo + hi

    hv, herr = integrate.quad_vec(h_inner, 0.0, T, epsabs=1e-12, epsrel=1e-8)
    if herr > 1e-5:
        raise QuadratureError(f"H integration error {herr}")
    hv *= 4.0  # quadrant -> whole plane by evenness in s and in t
    H = np.array(
        [
            [hv[0], 0.0, 0.0],
            [0.0, alpha**2 * hv[1], alpha * hv[2]],
            [0.0, alpha * hv[2], hv[3]],
        ]
    )
    ainv = np.linalg.inv(A)
    J = ainv @ H @ ainv.T
    return EiseMatrices(A=A, H=H, J=J, Bsigma=bsigma, Balpha=balpha, alpha=alpha, weight=weight)


# ----------------------------------------------------------------------
# profile-likelihood initialization shared by both fitters
# ----------------------------------------------------------------------

_INIT_ALPHA_GRID = tuple(np.round(np.arange(0.5, 2.0001, 0.05), 10))


@lru_cache(maxsize=128)
def _log_density_spline(alpha):
    u = np.linspace(0.0, math.asinh(1e9), 480)
    x = np.sinh(u)
    f, _, _ = pdf_batch(x, alpha)
    return CubicSpline(u, np.log(np.maximum(f, 1e-300)))


def _logf_lookup(alpha, ax):
    """log f(|x|; alpha) from the cached spline, analytic beyond its range."""
    spl = _log_density_spline(alpha)
    u = np.arcsinh(ax)
    out = spl(np.minimum(u, spl.x[-1]))
    big = u > spl.x[-1]
    if np.any(big):
        if alpha == 2.0:
            out[big] = -0.25 * ax[big] ** 2 - math.log(2.0 * math.sqrt(math.pi))
        else:
            lc1 = gammaln(alpha + 1.0) + math.log(math.sin(0.5 * math.pi * alpha) / math.pi)
            out[big] = lc1 - (alpha + 1.0) * np.log(ax[big])
    return out


def _grid_init(x, alpha_grid, n_sigma=40, fix_alpha=None):
    """Median location plus profile grid search over (sigma, alpha)."""
    mu0 = float(np.median(x))
    q75, q25 = np.percentile(x, [75, 25])
    iqr = max(q75 - q25, 1e-12)
    sigma_grid = 0.5 * iqr * np.logspace(math.log10(0.15), math.log10(8.0), n_sigma)
    ax = np.abs(x - mu0)
    grid = (fix_alpha,) if fix_alpha is not None else alpha_grid
    best = (-np.inf, sigma_grid[0], grid[0])
    for a in grid:
        lf = _logf_lookup(a, ax[None, :] / sigma_grid[:, None])
        ll = lf.sum(axis=1) - len(x) * np.log(sigma_grid)
        i = int(np.argmax(ll))
        if ll[i] > best[0]:
            best = (float(ll[i]), float(sigma_grid[i]), float(a))
    return mu0, best[1], best[2]


# ----------------------------------------------------------------------
# maximum likelihood
# ----------------------------------------------------------------------


@dataclass
class FitResult:
    """Outcome of a fit: parameters plus convergence diagnostics."""

    params: StableParams
    converged: bool
    n_iter: int
    objective: float
    message: str
    boundary_alpha: bool = False
    estimator: str = "mle"


def _accepted(res, floor=1e-6):
    """Whether an L-BFGS-B result counts as converged.

    A line search can abort at the floating-point floor of the objective
    while the projected gradient is already at its achievable minimum; such
    exits are solutions, not failures.
    """
    if res.success:
        return True
    return bool(np.max(np.abs(res.jac)) <= floor)


def loglik(data, params):
    """Mean log-likelihood of a symmetric stable sample."""
    y = params.standardize(data)
    f, _, _ = pdf_batch(y, params.alpha)
    return float(np.mean(np.log(np.maximum(f, 1e-300)))) - math.log(params.sigma)


def _check_sample(data, min_n=5):
    x = np.asarray(data, dtype=float).ravel()
    if x.size < min_n:
        raise DataError(f"need at least {min_n} observations, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise DataError("sample contains non-finite values")
    if np.ptp(x) == 0:
        raise DataError("degenerate sample: all observations identical")
    return x


def mle_fit(
    data,
    fix_alpha=None,
    alpha_bounds=(0.3, 2.0),
    sigma_min=1e-6,
    gtol=1e-8,
    maxiter=300,
    init=None,
):
    """Maximum likelihood fit of (mu, sigma, alpha).

    Starts from the sample median and a profile-likelihood grid over
    (sigma, alpha), then runs bounded L-BFGS ascent with analytic scores.
    ``fix_alpha`` freezes the characteristic exponent (the fixed-alpha
    hypothesis), fitting location and scale only.  An estimate pinned at
    the upper alpha bound is flagged as a boundary solution.  Raises
    :class:`~stablegof.errors.NonConvergenceError` (carrying the best
    iterate) if the optimizer gives up.
    """
    x = _check_sample(data)
    amin, amax = alpha_bounds
    if fix_alpha is not None and not (0 < fix_alpha <= 2):
        raise ValueError(f"fix_alpha must be in (0, 2], got {fix_alpha}")
    if init is None:
        mu0, s0, a0 = _grid_init(x, _INIT_ALPHA_GRID, fix_alpha=fix_alpha)
    else:
        mu0, s0, a0 = init
    n = x.size

    if fix_alpha is not None:
        alpha = float(fix_alpha)

        def negll(theta):
            mu, sigma = theta
            y = (x - mu) / sigma
            f, fp, _ = pdf_batch(y, alpha)
            f = np.maximum(f, 1e-300)
            r = fp / f
            val = -(np.log(f).mean() - math.log(sigma))
            g = np.array([r.mean() / sigma, (1.0 + (y * r).mean()) / sigma])
            return val, g

        res = optimize.minimize(
            negll,
            x0=np.array([mu0, s0]),
            jac=True,
            method="L-BFGS-B",
            bounds=[(None, None), (sigma_min, None)],
            options={"maxiter": maxiter, "gtol": gtol, "ftol": 1e-13},
        )
        params = StableParams(float(res.x[0]), float(res.x[1]), alpha)
        boundary = False
    else:

        def negll(theta):
            mu, sigma, alpha = theta
            y = (x - mu) / sigma
            f, fp, fa = pdf_batch(y, alpha)
            f = np.maximum(f, 1e-300)
            r = fp / f
            val = -(np.log(f).mean() - math.log(sigma))
            g = np.array(
                [
                    r.mean() / sigma,
                    (1.0 + (y * r).mean()) / sigma,
                    -(fa / f).mean(),
                ]
            )
            return val, g

        res = optimize.minimize(
            negll,
            x0=np.array([mu0, s0, min(max(a0, amin), amax)]),
            jac=True,
            method="L-BFGS-B",
            bounds=[(None, None), (sigma_min, None), (amin, amax)],
            options={"maxiter": maxiter, "gtol": gtol, "ftol": 1e-13},
        )
        params = StableParams(float(res.x[0]), float(res.x[1]), float(res.x[2]))
        boundary = params.alpha >= amax - 1e-8

    ok = _accepted(res)
    result = FitResult(
        params=params,
        converged=ok,
        n_iter=int(res.nit),
        objective=-float(res.fun) * n,
        message=str(res.message),
        boundary_alpha=boundary,
        estimator="mle",
    )
    if not ok:
        raise NonConvergenceError(f"MLE did not converge: {res.message}", best=result)
    return result


# ----------------------------------------------------------------------
# EISE criterion and fit
# ----------------------------------------------------------------------


def _w0_and_deriv(d, weight):
    """W0(d) = int cos(td) w(t) dt over the real line, and dW0/dd."""
    if weight.kind == "exp_abs":
        k = weight.kappa_or_nu
        den = k * k + d * d
        return 2.0 * k / den, -4.0 * k * d / den**2
    nu, ba = weight.kappa_or_nu, weight.bar_alpha
    c = nu ** (-1.0 / ba)
    f, fp, _ = pdf_batch((c * d).ravel(), ba)
    return (
        2.0 * math.pi * c * f.reshape(d.shape),
        2.0 * math.pi * c * c * fp.reshape(d.shape),
    )


def q_objective(data, params, weight, grad=False):
    """EISE criterion Q via the pairwise cosine expansion.

    Q = (1/n^2) sum_jk W0((x_j-x_k)/sigma) - (2/n) sum_j W1(y_j) + W2 with
    W0, W1, W2 the weighted cosine integrals; all three are evaluated
    against the characteristic-function envelope, so heavy outliers are
    exact rather than aliased.  With ``grad=True`` also returns dQ/dtheta.
    """
    x = np.asarray(data, dtype=float).ravel()
    n = x.size
    mu, sigma, alpha = params.mu, params.sigma, params.alpha
    dmat = (x[:, None] - x[None, :]) / sigma
    w0, w0p = _w0_and_deriv(dmat, weight)
    y = (x - mu) / sigma
    terms1 = ((1.0, alpha),) + weight.terms()
    c0, s1, ca = cos_transforms(y, alpha, terms1)
    terms2 = ((2.0, alpha),) + weight.terms()
    w2 = envelope_moment(terms2)
    q = w0.mean() - 2.0 * c0.mean() + w2
    if not grad:
        return q
    w1p = -s1  # d/dy of the cosine transform
    dq_mu = 2.0 / sigma * w1p.mean()
    dq_sigma = -(w0p * dmat).mean() / sigma + 2.0 / sigma * (y * w1p).mean()
    w2a = -2.0 * envelope_moment(terms2, power=alpha, logpow=1)
    dq_alpha = 2.0 * ca.mean() + w2a
    return q, np.array([dq_mu, dq_sigma, dq_alpha])


def q_objective_direct(data, params, weight, limit=3000):
    """Q by direct adaptive quadrature of |Phi_n(t) - exp(-|t|^alpha)|^2 w(t).

    Independent evaluation path used to validate :func:`q_objective`.
    """
    x = np.asarray(data, dtype=float).ravel()
    y = (x - params.mu) / params.sigma
    alpha = params.alpha
    T = envelope_cutoff(weight.terms())

    def integrand(t):
        re = np.cos(t * y).mean()
        im = np.sin(t * y).mean()
        g = math.exp(-(t**alpha))
        return ((re - g) ** 2 + im**2) * float(weight.values(t))

    val, err = integrate.quad(integrand, 0.0, T, limit=limit, epsabs=1e-13, epsrel=1e-10)
    if err > 1e-7 * max(abs(val), 1e-12):
        raise QuadratureError(f"direct Q quadrature error {err}")
    return 2.0 * val


def eise_fit(
    data,
    weight,
    fix_alpha=None,
    alpha_bounds=(0.3, 2.0),
    sigma_min=1e-6,
    gtol=1e-9,
    maxiter=300,
    init=None,
):
    """Fit (mu, sigma, alpha) by minimizing the EISE criterion Q.

    Initialization reuses the profile-likelihood grid of :func:`mle_fit`;
    the minimization is bounded L-BFGS with the analytic gradient of Q.
    """
    x = _check_sample(data)
    amin, amax = alpha_bounds
    if init is None:
        mu0, s0, a0 = _grid_init(x, _INIT_ALPHA_GRID, fix_alpha=fix_alpha)
    else:
        mu0, s0, a0 = init

    if fix_alpha is not None:
        alpha = float(fix_alpha)

        def fun(theta):
            p = StableParams(theta[0], max(theta[1], sigma_min), alpha)
            q, g = q_objective(x, p, weight, grad=True)
            return q, g[:2]

        res = optimize.minimize(
            fun,
            x0=np.array([mu0, s0]),
            jac=True,
            method="L-BFGS-B",
            bounds=[(None, None), (sigma_min, None)],
            options={"maxiter": maxiter, "gtol": gtol, "ftol": 1e-15},
        )
        params = StableParams(float(res.x[0]), float(res.x[1]), alpha)
        boundary = False
    else:

        def fun(theta):
            p = StableParams(theta[0], max(theta[1], sigma_min), theta[2])
            return q_objective(x, p, weight, grad=True)

        res = optimize.minimize(
            fun,
            x0=np.array([mu0, s0, min(max(a0, amin), amax)]),
            jac=True,
            method="L-BFGS-B",
            bounds=[(None, None), (sigma_min, None), (amin, amax)],
            options={"maxiter": maxiter, "gtol": gtol, "ftol": 1e-15},
        )
        params = StableParams(float(res.x[0]), float(res.x[1]), float(res.x[2]))
        boundary = params.alpha >= amax - 1e-8

    ok = _accepted(res)
    result = FitResult(
        params=params,
        converged=ok,
        n_iter=int(res.nit),
        objective=float(res.fun),
        message=str(res.message),
        boundary_alpha=boundary,
        estimator="eise",
    )
    if not ok:
        raise NonConvergenceError(f"EISE did not converge: {res.message}", best=result)
    return result
