"""Fisher information, EISE matrices and the two fitters."""

import math

import numpy as np
import pytest

from stablegof.errors import DataError, NonConvergenceError
from stablegof.estimators import (
    EULER_GAMMA,
    WeightSpec,
    cauchy_al,
    eise_fit,
    eise_matrices,
    fisher_info,
    fisher_location_scale,
    mle_fit,
    q_objective,
    q_objective_direct,
)
from stablegof.stable_core import StableParams, rand_stable


def closed_form_cauchy_info():
    g, l2 = EULER_GAMMA, math.log(2.0)
    return 0.5, 0.5, 0.5 * (1 - g - l2), 0.5 * (math.pi**2 / 6 + (g + l2 - 1) ** 2)


def test_fisher_cauchy_closed_forms():
    fi = fisher_info(1.0)
    i11, i22, i23, i33 = closed_form_cauchy_info()
    assert abs(fi.I11 - i11) < 1e-8
    assert abs(fi.I22 - i22) < 1e-8
    assert abs(fi.I23 - i23) < 1e-8
    assert abs(fi.I33 - i33) < 1e-8


def test_fisher_continuity_near_cauchy():
    i11, i22, i23, i33 = closed_form_cauchy_info()
    for alpha in (0.999, 1.001):
        fi = fisher_info(alpha)
        assert abs(fi.I11 / i11 - 1) < 0.01
        assert abs(fi.I22 / i22 - 1) < 0.01
        assert abs(fi.I23 / i23 - 1) < 0.01
        assert abs(fi.I33 / i33 - 1) < 0.01


def test_fisher_rejects_gaussian_endpoint():
    with pytest.raises(ValueError):
        fisher_info(2.0)


def test_fisher_location_scale_gaussian():
    i11, i22 = fisher_location_scale(2.0)
    assert (i11, i22) == (0.5, 2.0)


def test_fisher_matrix_positive_definite():
    for alpha in (0.8, 1.5, 1.8):
        m = fisher_info(alpha).matrix()
        assert np.all(np.linalg.eigvalsh(m) > 0)
        assert m[0, 1] == m[0, 2] == 0.0


def test_cauchy_al_values():
    hm, hs, ha = cauchy_al(0.0)
    assert (hm, hs) == (0.0, -1.0)
    assert abs(ha - (EULER_GAMMA - 1.0)) < 1e-14
    hm, hs, ha = cauchy_al(1.0)
    assert (hm, hs) == (1.0, 0.0)
    assert abs(ha - math.pi / 4) < 1e-14


def test_cauchy_al_second_moment_is_information():
    # E[h_mu^2] = I11 = 1/2 under the Cauchy law
    rng = np.random.default_rng(101)
    x = rand_stable(1.0, 1_000_000, rng)
    hm, _, _ = cauchy_al(x)
    m = float(np.mean(hm**2))
    se = float(np.std(hm**2) / math.sqrt(x.size))
    assert abs(m - 0.5) < 3 * se


def test_eise_a_closed_form_exp_abs():
    em = eise_matrices(1.0, WeightSpec("exp_abs", 1.0))
    assert abs(em.A[0, 0] - 4.0 / 27.0) < 1e-10
    assert abs(em.A[1, 1] - 4.0 / 27.0) < 1e-10  # same integral at alpha = 1


def test_eise_matrices_structure():
    em = eise_matrices(1.3, WeightSpec("exp_power", 2.0, 1.3))
    assert np.allclose(em.H, em.H.T)
    assert np.allclose(em.J, em.J.T, atol=1e-12)
    assert abs(em.J[0, 1]) < 1e-10 and abs(em.J[0, 2]) < 1e-10
    assert np.all(np.linalg.eigvalsh(em.A) > 0)
    assert np.all(np.linalg.eigvalsh(em.J) > -1e-12)


def test_weight_spec_validation():
    with pytest.raises(ValueError):
        WeightSpec("exp_abs", -1.0)
    with pytest.raises(ValueError):
        WeightSpec("exp_power", 1.0)  # missing bar_alpha
    with pytest.raises(ValueError):
        WeightSpec("gauss", 1.0)


def test_mle_symmetric_pairs_center_at_zero():
    x = np.array([-3.0, 3.0, -1.2, 1.2, -0.4, 0.4, -2.2, 2.2, -5.0, 5.0])
    fit = mle_fit(x)
    assert abs(fit.params.mu) < 1e-6


def test_mle_rejects_bad_samples():
    with pytest.raises(DataError):
        mle_fit(np.array([1.0, 2.0]))
    with pytest.raises(DataError):
        mle_fit(np.ones(50))


def test_mle_nonconvergence_carries_best_iterate():
    rng = np.random.default_rng(4)
    x = rand_stable(1.5, 100, rng)
    with pytest.raises(NonConvergenceError) as exc:
        mle_fit(x, maxiter=1)
    assert exc.value.best is not None
    assert exc.value.best.params.sigma > 0


def test_mle_affine_equivariance():
    rng = np.random.default_rng(21)
    x = rand_stable(1.4, 150, rng)
    base = mle_fit(x).params
    for a, b in ((2.0, 3.0), (-1.0, 0.25)):
        p = mle_fit(a + b * x).params
        assert abs(p.mu - (a + b * base.mu)) < 1e-4 * max(1, abs(base.mu))
        assert abs(p.sigma - b * base.sigma) < 1e-4 * base.sigma
        assert abs(p.alpha - base.alpha) < 1e-4


def test_eise_affine_equivariance():
    rng = np.random.default_rng(22)
    x = rand_stable(1.6, 120, rng)
    w = WeightSpec("exp_abs", 1.0)
    base = eise_fit(x, w).params
    p = eise_fit(5.0 + 0.5 * x, w).params
    assert abs(p.mu - (5.0 + 0.5 * base.mu)) < 1e-5
    assert abs(p.sigma - 0.5 * base.sigma) < 1e-5
    assert abs(p.alpha - base.alpha) < 1e-5


def test_eise_symmetric_data_centers_at_zero():
    x = np.array([-4.0, 4.0, -1.5, 1.5, -0.7, 0.7, -2.4, 2.4, -0.1, 0.1])
    fit = eise_fit(x, WeightSpec("exp_abs", 1.0))
    assert abs(fit.params.mu) < 1e-7


def test_q_nonnegative_and_two_paths_agree():
    rng = np.random.default_rng(31)
    for n, alpha in ((20, 1.0), (50, 1.6)):
        x = rand_stable(alpha, n, rng)
        p = StableParams(0.1, 1.3, min(alpha + 0.1, 2.0))
        for w in (WeightSpec("exp_abs", 1.0), WeightSpec("exp_power", 2.5, alpha)):
            q1 = q_objective(x, p, w)
            q2 = q_objective_direct(x, p, w)
            assert q1 >= 0.0
            assert abs(q1 - q2) < 1e-8 * max(q2, 1e-10)


def test_q_gradient_matches_finite_differences():
    rng = np.random.default_rng(32)
    x = rand_stable(1.4, 40, rng)
    p = StableParams(0.2, 1.1, 1.5)
    w = WeightSpec("exp_abs", 1.5)
    _, g = q_objective(x, p, w, grad=True)
    h = 1e-6
    for i, (dm, ds, da) in enumerate([(h, 0, 0), (0, h, 0), (0, 0, h)]):
        qp = q_objective(x, StableParams(p.mu + dm, p.sigma + ds, p.alpha + da), w)
        qm = q_objective(x, StableParams(p.mu - dm, p.sigma - ds, p.alpha - da), w)
        assert abs(g[i] - (qp - qm) / (2 * h)) < 1e-6 * max(abs(g[i]), 1e-4)


@pytest.mark.slow
def test_mle_replication_means_match_reported_simulation():
    # mean alpha-hat over n=200 replications at alpha=1.5 sits near 1.51
    rng = np.random.default_rng(555)
    alphas = []
    for _ in range(200):
        x = rand_stable(1.5, 200, rng)
        alphas.append(mle_fit(x).params.alpha)
    assert abs(float(np.mean(alphas)) - 1.51) < 0.04


@pytest.mark.slow
def test_mle_cauchy_covariance_matches_information():
    # inverse sample covariance of (mu, sigma) at n=1000 approaches diag(1/2, 1/2)^-1
    rng = np.random.default_rng(556)
    est = []
    for _ in range(150):
        x = rand_stable(1.0, 1000, rng)
        p = mle_fit(x).params
        est.append([p.mu, p.sigma])
    cov = np.cov(np.array(est).T) * 1000.0
    inv = np.linalg.inv(cov)
    assert abs(inv[0, 0] - 0.5) < 0.1
    assert abs(inv[1, 1] - 0.5) < 0.1


@pytest.mark.slow
def test_eise_alpha_variance_matches_j33():
    rng = np.random.default_rng(557)
    w = WeightSpec("exp_abs", 1.0)
    n, reps = 400, 60
    alphas = []
    for _ in range(reps):
        x = rand_stable(1.5, n, rng)
        alphas.append(eise_fit(x, w).params.alpha)
    alphas = np.array(alphas)
    j33 = eise_matrices(1.5, w).J[2, 2]
    target_var = j33 / n
    # chi-square spread of a variance estimate over `reps` draws
    ratio = alphas.var(ddof=1) / target_var
    assert 0.5 < ratio < 1.8
    assert abs(alphas.mean() - 1.5) < 3 * math.sqrt(target_var / reps)
