"""Distribution of the limiting statistic by contour inversion.

The limit law is a weighted sum of independent chi-square(1) variables,
sum_j X_j^2 / lambda_j, whose characteristic function is 1/sqrt(D(2it))
with D the Fredholm determinant.  Rotating the inversion contour turns the
wildly oscillating Fourier integral into an alternating series of smooth
integrals between consecutive eigenvalue half-points; the cosine change of
variable removes the square-root endpoint singularities, and the two
factors of the determinant product that vanish on each interval are
cancelled analytically against the square-root numerator.
"""

from dataclasses import dataclass
import math
import warnings

import numpy as np
from scipy import integrate, optimize

from .errors import SeriesDivergenceError
from .spectral import Spectrum

__all__ = ["InversionConfig", "default_inversion_config", "cdf_dk", "pdf_dk", "quantile_dk", "cdf_dk_with_bound"]


@dataclass(frozen=True)
class InversionConfig:
    """Truncation (l series terms, m product terms) and tolerance settings."""

    spectrum: Spectrum
    l: int
    m: int
    quad_rel_tol: float = 1e-6

    def __post_init__(self):
        n_avail = len(self.spectrum.lambdas)
        if 2 * self.l > n_avail:
            raise ValueError(f"need 2l <= {n_avail} eigenvalues, got l={self.l}")
        if not (self.l < self.m <= n_avail):
            raise ValueError(f"need l < m <= {n_avail}, got l={self.l}, m={self.m}")
        if self.quad_rel_tol > 1e-5:
            raise ValueError("quad_rel_tol must be at most 1e-5")


def default_inversion_config(spectrum):
    """Truncation defaults by weight size: m=500 (300 for kappa=10), l=25 (10 for kappa>=5)."""
    kappa = spectrum.kappa
    n_avail = len(spectrum.lambdas)
    m = 500 if kappa <= 5.0 else 300
    l = 25 if kappa <= 2.5 else 10
    m = min(m, n_avail)
    l = min(l, (n_avail - 1) // 2, m - 1)
    return InversionConfig(spectrum=spectrum, l=l, m=m)


def _pair_structure(config):
    """Classify the leading spectrum: "simple" or fully "paired" eigenvalues.

    The Cauchy-case kernels carry every eigenvalue with multiplicity two;
    there the branch-cut intervals of the contour integral collapse and the
    limit law is a finite sum of exponentials instead.  Anything between
    the two clean structures is not supported.
    """
    lam = config.spectrum.lambdas
    k = min(2 * config.l, len(lam) - len(lam) % 2)
    gaps = (lam[1:k:2] - lam[0:k:2]) / lam[1:k:2]
    if np.all(gaps < 1e-8):
        return "paired"
    if np.all(gaps > 1e-6):
        return "simple"
    raise SeriesDivergenceError(
        "spectrum mixes simple and multiple eigenvalues; inversion undefined"
    )


def _paired_rates(config):
    """Collapse double eigenvalues into exponential rates lambda_j/2."""
    lam = config.spectrum.lambdas[: config.m]
    k = len(lam) - len(lam) % 2
    pairs = np.sqrt(lam[0:k:2] * lam[1:k:2])
    return 0.5 * pairs


def _hypoexp_sf_terms(x, rates):
    """Signed terms of P(sum_j Exp(rate_j) > x) = sum_j c_j e^{-r_j x}.

    c_j = prod_{i != j} r_i / (r_i - r_j), evaluated in log magnitude with
    the sign (-1)^(j-1) of the sorted-rate products.
    """
    r = np.asarray(rates)
    logr = np.log(r)
    terms = []
    for j in range(len(r)):
        diff = r - r[j]
        diff = np.delete(diff, j)
        logc = float(np.sum(np.delete(logr, j)) - np.sum(np.log(np.abs(diff))))
        sign = -1.0 if j % 2 else 1.0
        expo = logc - r[j] * x
        terms.append(sign * math.exp(expo) if expo > -745.0 else 0.0)
    return np.asarray(terms)


def _series_terms(x, config, with_inverse_y):
    """Magnitudes of the first l alternating-series terms at argument x.

    Term k integrates over y in [lambda_{2k-1}/2, lambda_{2k}/2]; the two
    determinant factors vanishing there are cancelled analytically, leaving
    sqrt(lambda_{2k-1} lambda_{2k})/2 over the deflated product.
    """
    lam = config.spectrum.lambdas
    lm = lam[: config.m]
    terms = []
    for k in range(1, config.l + 1):
        lo = lam[2 * k - 2]
        hi = lam[2 * k - 1]
        a, b = 0.5 * lo, 0.5 * hi
        if (hi - lo) <= 1e-10 * hi:
            # degenerate (multiple) eigenvalue pair: zero-width interval
            warnings.warn(
                f"eigenvalue pair {2 * k - 1},{2 * k} coincides; term skipped",
                RuntimeWarning,
            )
            terms.append(0.0)
            continue
        const = 0.5 * math.sqrt(lo * hi)
        mask = np.ones(len(lm), dtype=bool)
        mask[2 * k - 2] = mask[2 * k - 1] = False
        lm_rest = lm[mask]

        def integrand(z):
            y = 0.5 * (b - a) * math.cos(math.pi * z) + 0.5 * (a + b)
            logprod = float(np.sum(np.log(np.abs(1.0 - 2.0 * y / lm_rest))))
            v = const * math.exp(-x * y - 0.5 * logprod)
            return v / y if with_inverse_y else v

        val, _ = integrate.quad(
            integrand, 0.0, 1.0, epsabs=1e-16, epsrel=config.quad_rel_tol, limit=200
        )
        terms.append(val)
    return np.asarray(terms)


def _check_alternating(terms):
    mags = np.abs(terms)
    for k in range(1, len(mags)):
        if mags[k] >= mags[k - 1] and mags[k] > 1e-13:
            raise SeriesDivergenceError(
                f"series terms stopped decreasing at k={k + 1} "
                f"({mags[k - 1]:.3e} -> {mags[k]:.3e}); x too small for this truncation"
            )


def cdf_dk_with_bound(x, config):
    """CDF of the limit statistic plus the alternating-series error bound."""
    if x <= 0:
        raise ValueError(f"the statistic is positive; got x={x}")
    if _pair_structure(config) == "paired":
        r = _paired_rates(config)
        terms = _hypoexp_sf_terms(x, r)
        sf = float(np.sum(terms))
        smallest = float(np.min(np.abs(terms[np.abs(terms) > 0]))) if np.any(terms) else 0.0
        return 1.0 - sf, smallest
    terms = _series_terms(x, config, with_inverse_y=True)
    _check_alternating(terms)
    signs = np.where(np.arange(1, len(terms) + 1) % 2 == 1, 1.0, -1.0)
    value = 1.0 - float(np.sum(signs * terms))
    bound = 0.5 * float(np.abs(terms[-1])) if len(terms) else 0.0
    return value, bound


def cdf_dk(x, config):
    """P(D <= x) for the limiting statistic."""
    return cdf_dk_with_bound(x, config)[0]


def pdf_dk(x, config):
    """Density of the limiting statistic (same series without the 1/y factor)."""
    if x <= 0:
        raise ValueError(f"the statistic is positive; got x={x}")
    if _pair_structure(config) == "paired":
        r = _paired_rates(config)
        return float(np.sum(r * _hypoexp_sf_terms(x, r)))
    terms = _series_terms(x, config, with_inverse_y=False)
    _check_alternating(terms)
    signs = np.where(np.arange(1, len(terms) + 1) % 2 == 1, 1.0, -1.0)
    return float(np.sum(signs * terms))


def quantile_dk(xi, config):
    """Upper-tail quantile: the x with P(D > x) = xi, for xi in (0, 0.5).

    Brackets around the mean E[D] = sum 1/lambda_j and solves
    cdf(x) = 1 - xi by Brent's method to |F - (1 - xi)| < 1e-5.
    """
    if not (0 < xi < 0.5):
        raise ValueError(f"xi must be in (0, 0.5), got {xi}")
    target = 1.0 - xi
    mean = config.spectrum.trace_sum(config.m)
    lo, hi = mean / 10.0, 10.0 * mean

    def f(x):
        return cdf_dk(x, config) - target

    # the series can misbehave deep in the left tail; walk the lower
    # bracket up until it evaluates
    flo = None
    for _ in range(60):
        try:
            flo = f(lo)
            break
        except SeriesDivergenceError:
            lo *= 1.5
    if flo is None:
        raise SeriesDivergenceError("could not evaluate CDF anywhere in the bracket")
    fhi = f(hi)
    tries = 0
    while flo > 0 and tries < 60:
        lo /= 1.5
        try:
            flo = f(lo)
        except SeriesDivergenceError:
            lo *= 1.5
            break
        tries += 1
    while fhi < 0 and tries < 120:
        hi *= 2.0
        fhi = f(hi)
        tries += 1
    if flo > 0 or fhi < 0:
        raise ValueError(f"failed to bracket the {xi} quantile in [{lo}, {hi}]")
    root = optimize.brentq(f, lo, hi, xtol=1e-12, rtol=8.9e-16)
    if abs(f(root)) > 1e-5:
        raise ValueError("quantile root did not meet the 1e-5 CDF tolerance")
    return float(root)
