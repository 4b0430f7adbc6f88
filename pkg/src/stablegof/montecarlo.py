"""Finite-sample experiments: simulated critical values and power.

Replications are driven by spawned child streams of one seed, so results
are reproducible and order-independent.  Individual fit failures are
tolerated (the replication is redrawn from its own stream) up to a 1%
budget; beyond that the experiment aborts.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import DataError, NonConvergenceError, NumericsError
from .estimators import WeightSpec, eise_fit, mle_fit
from .ecf_test import test_statistic
from .stable_core import rand_stable

__all__ = [
    "ExperimentConfig",
    "SimulatedCritical",
    "PowerResult",
    "CriticalValueTable",
    "simulate_critical",
    "power_study",
    "h1_decision",
]


@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte Carlo experiment: null model, weights, scale and seed."""

    n: int
    alpha: float
    kappas: tuple
    hypothesis: str = "H1"
    estimator: str = "mle"
    replications: int = 2000
    seed: int = 0
    alternative: tuple | None = None
    xis: tuple = (0.10, 0.05)
    eise_weight: WeightSpec | None = None

    def __post_init__(self):
        if self.replications < 100:
            raise ValueError("need at least 100 replications")
        if self.n < 20:
            raise ValueError("need sample size at least 20")
        if self.hypothesis not in ("H1", "H2"):
            raise ValueError("hypothesis must be 'H1' or 'H2'")
        if self.estimator not in ("mle", "eise"):
            raise ValueError("estimator must be 'mle' or 'eise'")
        if not all(k > 0 for k in self.kappas):
            raise ValueError("kappas must be positive")


@dataclass
class SimulatedCritical:
    """Empirical upper quantiles of the statistic with order-statistic SEs."""

    config: ExperimentConfig
    quantiles: dict
    n_failures: int
    statistics: dict = field(repr=False, default_factory=dict)


@dataclass
class PowerResult:
    """Rejection rates against an alternative, with binomial SEs."""

    config: ExperimentConfig
    rates: dict
    n_failures: int


def draw_alternative(alternative, n, alpha, rng):
    """Draw one sample: the stable null or a named alternative."""
    if alternative is None:
        return rand_stable(alpha, n, rng)
    kind, par = alternative
    if kind == "stable":
        return rand_stable(par, n, rng)
    if kind == "student_t":
        if math.isinf(par):
            return rng.normal(0.0, 1.0, n)
        return rng.standard_t(par, n)
    if kind == "normal":
        return rng.normal(0.0, math.sqrt(par), n)
    raise ValueError(f"unknown alternative {kind!r}")


def _fit(x, config):
    fix = config.alpha if config.hypothesis == "H2" else None
    if config.estimator == "mle":
        return mle_fit(x, fix_alpha=fix)
    weight = config.eise_weight or WeightSpec("exp_power", 1.0, config.alpha)
    return eise_fit(x, weight, fix_alpha=fix)


def _replicate(config, worker):
    """Run the replication loop, redrawing on fit failure (1% budget)."""
    children = np.random.SeedSequence(config.seed).spawn(config.replications)
    failures = 0
    max_failures = max(1, config.replications // 100)
    out = []
    for child in children:
        rng = np.random.default_rng(child)
        for attempt in range(4):
            x = draw_alternative(config.alternative, config.n, config.alpha, rng)
            try:
                out.append(worker(x))
                break
            except (NonConvergenceError, NumericsError, DataError):
                failures += 1
                if failures > max_failures:
                    raise NumericsError(
                        f"fit failure rate exceeded 1% ({failures} failures)"
                    )
        else:
            raise NumericsError("replication failed repeatedly; aborting")
    return out, failures


def _order_quantile(sorted_stats, xi):
    """Upper-xi order statistic and its distribution-free standard error."""
    r = len(sorted_stats)
    k = min(max(int(math.ceil((1.0 - xi) * r)) - 1, 0), r - 1)
    half = math.sqrt(r * xi * (1.0 - xi))
    k_lo = max(int(k - half), 0)
    k_hi = min(int(k + half + 1), r - 1)
    se = 0.5 * (sorted_stats[k_hi] - sorted_stats[k_lo])
    return float(sorted_stats[k]), float(se)


def simulate_critical(config):
    """Simulated upper percentage points of the statistic under the null."""
    if config.alternative is not None:
        raise ValueError("critical-value simulation runs under the null (no alternative)")

    def worker(x):
        fit = _fit(x, config)
        return [
            test_statistic(x, fit.params, k, config.hypothesis).statistic
            for k in config.kappas
        ]

    rows, failures = _replicate(config, worker)
    stats = {k: np.sort(np.array([r[i] for r in rows])) for i, k in enumerate(config.kappas)}
    quantiles = {
        (k, xi): _order_quantile(stats[k], xi) for k in config.kappas for xi in config.xis
    }
    return SimulatedCritical(
        config=config, quantiles=quantiles, n_failures=failures, statistics=stats
    )


def power_study(config, critical_values):
    """Rejection rates of the test against ``config.alternative``.

    ``critical_values`` maps (kappa, xi) to the threshold used, asymptotic
    or simulated.
    """
    if config.alternative is None:
        raise ValueError("power study needs an alternative")
    for k in config.kappas:
        for xi in config.xis:
            if (k, xi) not in critical_values:
                raise ValueError(f"missing critical value for kappa={k}, xi={xi}")

    def worker(x):
        fit = _fit(x, config)
        return [
            test_statistic(x, fit.params, k, config.hypothesis).statistic
            for k in config.kappas
        ]

    rows, failures = _replicate(config, worker)
    arr = np.asarray(rows)
    rates = {}
    r = config.replications
    for i, k in enumerate(config.kappas):
        for xi in config.xis:
            p = float(np.mean(arr[:, i] > critical_values[(k, xi)]))
            rates[(k, xi)] = (p, math.sqrt(p * (1.0 - p) / r))
    return PowerResult(config=config, rates=rates, n_failures=failures)


# ----------------------------------------------------------------------
# asymptotic critical-value tables and the composite-hypothesis decision
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class CriticalValueTable:
    """Critical values on an (alpha, kappa, xi) grid with series bounds."""

    alphas: np.ndarray
    kappas: np.ndarray
    xis: np.ndarray
    values: np.ndarray  # shape (len(alphas), len(kappas), len(xis))
    bounds: np.ndarray
    hypothesis: str = "H1"

    def lookup(self, alpha, kappa, xi):
        ia = int(np.argmin(np.abs(self.alphas - alpha)))
        ik = int(np.argmin(np.abs(self.kappas - kappa)))
        ix = int(np.argmin(np.abs(self.xis - xi)))
        if not (
            math.isclose(self.alphas[ia], alpha, rel_tol=1e-9)
            and math.isclose(self.kappas[ik], kappa, rel_tol=1e-9)
            and math.isclose(self.xis[ix], xi, rel_tol=1e-9)
        ):
            raise KeyError(f"({alpha}, {kappa}, {xi}) not tabulated")
        return float(self.values[ia, ik, ix])

    def column(self, kappa, xi):
        ik = int(np.argmin(np.abs(self.kappas - kappa)))
        ix = int(np.argmin(np.abs(self.xis - xi)))
        if not (
            math.isclose(self.kappas[ik], kappa, rel_tol=1e-9)
            and math.isclose(self.xis[ix], xi, rel_tol=1e-9)
        ):
            raise KeyError(f"kappa={kappa}, xi={xi} not tabulated")
        return self.alphas, self.values[:, ik, ix]

    def to_rows(self):
        rows = []
        for ia, a in enumerate(self.alphas):
            for ik, k in enumerate(self.kappas):
                for ix, xi in enumerate(self.xis):
                    rows.append((a, k, xi, self.values[ia, ik, ix], self.bounds[ia, ik, ix]))
        return rows

    @classmethod
    def from_rows(cls, rows, hypothesis="H1"):
        rows = list(rows)
        alphas = np.array(sorted({r[0] for r in rows}))
        kappas = np.array(sorted({r[1] for r in rows}))
        xis = np.array(sorted({r[2] for r in rows}, reverse=True))
        values = np.full((len(alphas), len(kappas), len(xis)), np.nan)
        bounds = np.full_like(values, np.nan)
        for a, k, xi, v, b in rows:
            ia = int(np.searchsorted(alphas, a))
            ik = int(np.searchsorted(kappas, k))
            ix = int(np.argmin(np.abs(xis - xi)))
            values[ia, ik, ix] = v
            bounds[ia, ik, ix] = b
        return cls(alphas=alphas, kappas=kappas, xis=xis, values=values, bounds=bounds, hypothesis=hypothesis)


@dataclass(frozen=True)
class Decision:
    reject: bool
    threshold: float
    method: str


def h1_decision(d_obs, table, kappa, xi, method="plugin", alpha_hat=None, alpha_range=None):
    """Accept/reject the composite stable hypothesis from tabulated points.

    Three procedures: compare against the supremum of the critical curve
    over all tabulated alpha ("sup_all"), over a fixed range
    ("sup_range"), or against the curve interpolated at the estimated
    exponent ("plugin").
    """
    alphas, curve = table.column(kappa, xi)
    if method == "sup_all":
        thr = float(np.max(curve))
    elif method == "sup_range":
        if alpha_range is None:
            raise ValueError("sup_range needs alpha_range=(a, b)")
        a, b = alpha_range
        mask = (alphas >= a - 1e-12) & (alphas <= b + 1e-12)
        if not np.any(mask):
            raise ValueError(f"no tabulated alpha inside [{a}, {b}]")
        thr = float(np.max(curve[mask]))
    elif method == "plugin":
        if alpha_hat is None:
            raise ValueError("plugin method needs alpha_hat")
        if not (alphas[0] - 1e-12 <= alpha_hat <= alphas[-1] + 1e-12):
            raise ValueError(
                f"alpha_hat={alpha_hat} outside tabulated range [{alphas[0]}, {alphas[-1]}]"
            )
        thr = float(np.interp(alpha_hat, alphas, curve))
    else:
        raise ValueError(f"unknown decision method {method!r}")
    return Decision(reject=bool(d_obs >= thr), threshold=thr, method=method)
