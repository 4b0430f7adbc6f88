"""Covariance kernels: closed-form consistency, PSD structure, transforms."""

import math

import numpy as np
import pytest
from scipy import integrate

from stablegof.estimators import WeightSpec, fisher_info
from stablegof.kernels import (
    gamma_cauchy,
    gamma_eise,
    gamma_efficient,
    gamma_mle,
    gamma_mle_fixed,
    make_kernel,
    transform_point,
    transformed_kernel,
)
from stablegof.stable_core import StableParams

ACCEPT_GRID = [(a, k) for a in (1.0, 1.5, 1.8) for k in (1.0, 2.5, 5.0, 10.0)]


@pytest.fixture(scope="module")
def eise_spec():
    return make_kernel("eise_h1", 1.5, kappa=2.5, weight=WeightSpec("exp_power", 2.5, 1.5))


@pytest.fixture(scope="module")
def eise_fixed_spec():
    return make_kernel("eise_fixed", 1.0, kappa=1.0, weight=WeightSpec("exp_abs", 1.0))


def test_gamma_mle_vanishes_on_axes():
    inv = fisher_info(1.5).inverse_entries()
    t = np.linspace(-8, 8, 33)
    assert np.allclose(gamma_mle(0.0, t, 1.5, inv), 0.0, atol=1e-14)
    assert np.allclose(gamma_mle(t, 0.0, 1.5, inv), 0.0, atol=1e-14)


def test_gamma_mle_symmetric():
    inv = fisher_info(1.5).inverse_entries()
    rng = np.random.default_rng(1)
    s, t = rng.uniform(-10, 10, 200), rng.uniform(-10, 10, 200)
    np.testing.assert_allclose(
        gamma_mle(s, t, 1.5, inv), gamma_mle(t, s, 1.5, inv), rtol=0, atol=1e-14
    )


def test_cauchy_specialization():
    inv = fisher_info(1.0).inverse_entries()
    rng = np.random.default_rng(2)
    s, t = rng.uniform(-15, 15, 500), rng.uniform(-15, 15, 500)
    np.testing.assert_allclose(gamma_mle(s, t, 1.0, inv), gamma_cauchy(s, t), atol=1e-12)


def test_fixed_alpha_kernel_drops_exponent_terms():
    # zeroing the I23/I33 inverse entries in the H1 kernel gives the H2 kernel
    inv = fisher_info(1.5).inverse_entries()
    rng = np.random.default_rng(3)
    s, t = rng.uniform(-6, 6, 100), rng.uniform(-6, 6, 100)
    left = gamma_mle(s, t, 1.5, (inv[0], inv[1], 0.0, 0.0))
    right = gamma_mle_fixed(s, t, 1.5, (inv[0], inv[1]))
    np.testing.assert_allclose(left, right, atol=1e-15)
    assert np.allclose(gamma_mle_fixed(0.0, t, 1.5, (inv[0], inv[1])), 0.0, atol=1e-15)


def test_gamma_mle_diagonal_bounded():
    for alpha in (1.0, 1.5, 1.8):
        inv = fisher_info(alpha).inverse_entries()
        t = np.linspace(-30, 30, 301)
        assert np.all(gamma_mle(t, t, alpha, inv) <= 1.0 + 1e-12)


def test_gamma_eise_symmetry_and_trace(eise_spec):
    rng = np.random.default_rng(4)
    s, t = rng.uniform(-12, 12, 100), rng.uniform(-12, 12, 100)
    np.testing.assert_allclose(
        gamma_eise(s, t, eise_spec), gamma_eise(t, s, eise_spec), atol=1e-9
    )
    tr, _ = integrate.quad(
        lambda u: float(gamma_eise(u, u, eise_spec)) * math.exp(-2.5 * abs(u)), -30, 30, limit=200
    )
    assert 0.0 < tr < 10.0


def test_gamma_eise_positive_semidefinite(eise_spec, eise_fixed_spec):
    rng = np.random.default_rng(5)
    for spec in (eise_spec, eise_fixed_spec):
        nodes = rng.uniform(-8, 8, 60)
        gram = gamma_eise(nodes[:, None], nodes[None, :], spec) if spec.kind == "eise_h1" else None
        if gram is None:
            from stablegof.kernels import gamma_eise_fixed

            gram = gamma_eise_fixed(nodes[:, None], nodes[None, :], spec)
        gram = 0.5 * (gram + gram.T)
        w = np.linalg.eigvalsh(gram)
        assert w.min() >= -1e-8 * max(w.max(), 1.0)


def test_gamma_efficient_properties():
    fi = np.linalg.inv(fisher_info(1.5).matrix())
    p = StableParams(0.0, 1.0, 1.5)
    rng = np.random.default_rng(6)
    s, t = rng.uniform(-5, 5, 50), rng.uniform(-5, 5, 50)
    g_st = gamma_efficient(s, t, p, fi)
    g_ts = gamma_efficient(t, s, p, fi)
    np.testing.assert_allclose(g_st, np.conj(g_ts), atol=1e-12)
    diag = gamma_efficient(t, t, p, fi)
    assert np.allclose(diag.imag, 0.0, atol=1e-12)
    assert np.all(diag.real >= -1e-12)
    assert abs(gamma_efficient(0.0, 0.0, p, fi)) < 1e-14


@pytest.mark.parametrize("alpha", [1.0, 1.5])
def test_gamma_efficient_specializes_to_mle(alpha):
    fi_mat = np.linalg.inv(fisher_info(alpha).matrix())
    inv = fisher_info(alpha).inverse_entries()
    p = StableParams(0.0, 1.0, alpha)
    rng = np.random.default_rng(7)
    s, t = rng.uniform(-10, 10, 300), rng.uniform(-10, 10, 300)
    eff = gamma_efficient(s, t, p, fi_mat)
    assert np.max(np.abs(eff.imag)) < 1e-12
    np.testing.assert_allclose(eff.real, gamma_mle(s, t, alpha, inv), atol=1e-10)


def test_transformed_kernel_basics():
    spec = make_kernel("mle_h1", 1.5, kappa=2.5)
    rng = np.random.default_rng(8)
    u, v = rng.uniform(-0.99, 0.99, 100), rng.uniform(-0.99, 0.99, 100)
    np.testing.assert_allclose(
        transformed_kernel(u, v, spec), transformed_kernel(v, u, spec), atol=1e-13
    )
    assert np.allclose(transformed_kernel(0.0, v, spec), 0.0, atol=1e-14)
    with pytest.raises(ValueError):
        transformed_kernel(1.2, 0.0, spec)


def test_transformed_kernel_endpoints():
    smooth = make_kernel("mle_h2", 1.5, kappa=2.5)
    assert transformed_kernel(1.0, 1.0, smooth) == 0.0
    near = transformed_kernel(0.999999, 0.999999, smooth)
    assert abs(near) < 1e-3  # continuous decay into the corner
    rough = make_kernel("mle_h2", 1.5, kappa=1.0)
    corner = transformed_kernel(0.999999, 0.999999, rough)
    assert abs(corner) > 0.01  # kappa = 1 keeps the corner discontinuity


def test_transform_map():
    u = np.array([-0.5, 0.0, 0.5])
    s = transform_point(u)
    assert s[1] == 0.0
    assert np.isclose(s[2], -math.log(0.5))
    assert np.isclose(s[0], -s[2])


@pytest.mark.parametrize("alpha,kappa", ACCEPT_GRID)
def test_gram_psd_on_acceptance_grid(alpha, kappa):
    rng = np.random.default_rng(int(alpha * 100 + kappa))
    u = rng.uniform(-0.999, 0.999, 60)
    for kind in ("mle_h1", "mle_h2"):
        spec = make_kernel(kind, alpha, kappa)
        gram = transformed_kernel(u[:, None], u[None, :], spec)
        gram = 0.5 * (gram + gram.T)
        w = np.linalg.eigvalsh(gram)
        assert w.min() >= -1e-7 * w.max()


def test_change_of_variables_identity():
    for kind, alpha, kappa in (("mle_h1", 1.5, 2.5), ("mle_h2", 1.0, 1.0)):
        spec = make_kernel(kind, alpha, kappa)
        from stablegof.kernels import kernel_fn

        g = kernel_fn(spec)
        lhs, _ = integrate.quad(
            lambda u: float(transformed_kernel(u, u, spec)), -1, 1, limit=400
        )
        rhs, _ = integrate.quad(
            lambda t: float(g(t, t)) * math.exp(-kappa * abs(t)), -40, 40, limit=400
        )
        assert abs(lhs - rhs) < 1e-6 * abs(rhs)
