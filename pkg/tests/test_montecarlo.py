"""Samplers and the Monte Carlo estimators built on them."""

from __future__ import annotations

import math

import numpy as np
import pytest

import tcfbm.montecarlo as mc
from tcfbm.errors import (
    DomainError,
    EmbeddingError,
    HorizonExceededError,
    ReplicateFailureError,
    SamplerStallError,
)
from tcfbm.moments import cov_Y, increment_moment_Y
from tcfbm.montecarlo import (
    McEstimate,
    PathConfig,
    RngStream,
    estimate,
    fgn_path,
    inverse_values_at,
    sample_D_at,
    sample_D_increments,
    sample_stable_increment,
    sample_tempered_increment,
    sample_Z_at,
    simulate,
)
from tcfbm.subordinators import CustomBernstein, DeterministicDrift, Stable, StableMixture, TemperedStable
from tcfbm.tfbm import TfbmModel, fgn_autocov

N = 200_000


def laplace_z(draws, lam, expected):
    """z-score of the empirical Laplace transform against its exact value."""
    est = McEstimate.from_samples(np.exp(-lam * draws))
    return est.z_score(expected)


# --- random streams ------------------------------------------------------------------


def test_streams_are_reproducible_and_distinct():
    a = RngStream(7, 3).generator().standard_normal(5)
    b = RngStream(7, 3).generator().standard_normal(5)
    c = RngStream(7, 4).generator().standard_normal(5)
    d = RngStream(8, 3).generator().standard_normal(5)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_generator_argument_types():
    gen = np.random.default_rng(1)
    assert isinstance(sample_stable_increment(0.5, 1.0, gen), float)
    with pytest.raises(TypeError):
        sample_stable_increment(0.5, 1.0, 1234)


# --- increment samplers -----------------------------------------------------------------


@pytest.mark.parametrize("alpha", [0.2, 0.5, 0.85])
@pytest.mark.parametrize("lam", [0.3, 1.0, 4.0])
def test_stable_sampler_laplace_transform(alpha, lam):
    draws = sample_stable_increment(alpha, 0.7, RngStream(11, 0), size=N)
    assert abs(laplace_z(draws, lam, math.exp(-0.7 * lam**alpha))) < 4.5


@pytest.mark.parametrize("alpha,a", [(0.4, 1.0), (0.7, 3.0)])
@pytest.mark.parametrize("lam", [0.5, 2.0])
def test_tempered_sampler_laplace_transform(alpha, a, lam):
    draws = sample_tempered_increment(alpha, a, 0.5, RngStream(12, 0), size=N)
    expected = math.exp(-0.5 * ((a + lam) ** alpha - a**alpha))
    assert abs(laplace_z(draws, lam, expected)) < 4.5


@pytest.mark.parametrize("lam", [0.5, 2.0])
def test_mixture_sampler_laplace_transform(lam):
    spec = StableMixture(0.3, 0.8, 0.4, 0.6)
    draws = sample_D_at(spec, 0.5, N, RngStream(13, 0))
    assert abs(laplace_z(draws, lam, math.exp(-0.5 * spec.phi(lam)))) < 4.5


def test_drift_sampler_is_deterministic():
    np.testing.assert_array_equal(sample_D_at(DeterministicDrift(2.0), 0.5, 3, RngStream(1)), [1.0, 1.0, 1.0])


def test_sampler_argument_errors():
    with pytest.raises(DomainError):
        sample_stable_increment(1.0, 1.0, RngStream(0))
    with pytest.raises(DomainError):
        sample_stable_increment(0.5, 0.0, RngStream(0))
    with pytest.raises(DomainError):
        sample_tempered_increment(0.5, -1.0, 1.0, RngStream(0))
    with pytest.raises(DomainError):
        sample_D_at(Stable(0.5), 0.0, 3, RngStream(0))
    with pytest.raises(DomainError):
        sample_D_at(CustomBernstein(lambda lam: lam**0.5, 0.5), 1.0, 3, RngStream(0))


def test_tempered_sampler_reports_stall(monkeypatch):
    monkeypatch.setattr(mc, "_MAX_TILT_ATTEMPTS", 5)
    # acceptance rate exp(-scale a^alpha) = exp(-100)
    with pytest.raises(SamplerStallError, match="acceptance rate"):
        sample_tempered_increment(0.5, 100.0, 10.0, RngStream(0), size=10)


# --- paths and the inverse ------------------------------------------------------------------


def test_subordinator_path_grid():
    grid, d = sample_D_increments(Stable(0.6), PathConfig(1.0, dt=0.01), RngStream(2))
    assert grid.shape == d.shape == (101,)
    assert d[0] == 0.0
    assert np.all(np.diff(d) > 0)
    assert grid[-1] == pytest.approx(1.0)


@pytest.mark.parametrize("spec", [Stable(0.6), TemperedStable(0.5, 1.0), StableMixture(0.3, 0.8, 0.4, 0.6)], ids=lambda s: s.family)
def test_inverse_is_nondecreasing(spec):
    times = np.linspace(0.0, 3.0, 40)
    y = inverse_values_at(spec, times, PathConfig(3.0), RngStream(3))
    assert y[0] == 0.0
    assert np.all(np.diff(y) >= 0)


def test_drift_inverse_is_exact():
    y = inverse_values_at(DeterministicDrift(2.0), [1.0, 3.0], PathConfig(3.0), RngStream(0))
    np.testing.assert_array_equal(y, [0.5, 1.5])


def test_inverse_horizon_errors():
    with pytest.raises(DomainError):
        inverse_values_at(Stable(0.5), [2.0], PathConfig(1.0), RngStream(0))
    with pytest.raises(DomainError):
        inverse_values_at(Stable(0.5), [-1.0], PathConfig(1.0), RngStream(0))
    # mean D(u) = u alpha a^(alpha-1) = 5e-4 u: ten doublings cannot reach t = horizon
    with pytest.raises(HorizonExceededError):
        inverse_values_at(TemperedStable(0.5, 1e6), [1.0], PathConfig(1.0), RngStream(0))


def test_sample_Z_at_ties_and_zero():
    model = TfbmModel(0.3, 1.0, DeterministicDrift(1.0))
    z = sample_Z_at(model, [0.0, 1.0, 1.0], PathConfig(1.0), RngStream(4))
    assert z[0] == 0.0
    assert z[1] == z[2]


def test_path_config():
    assert PathConfig(2.0).dt == pytest.approx(2e-3)
    with pytest.raises(DomainError):
        PathConfig(0.0)
    with pytest.raises(DomainError):
        PathConfig(1.0, dt=-1.0)


# --- simulation and estimates -----------------------------------------------------------------


def test_simulate_is_independent_of_workers():
    model = TfbmModel(0.7, 1.0, TemperedStable(0.5, 1.0))
    serial = simulate(model, [1.0, 2.0], 300, seed=5, cfg=PathConfig(2.0, dt=0.01))
    parallel = simulate(model, [1.0, 2.0], 300, seed=5, cfg=PathConfig(2.0, dt=0.01), workers=2)
    np.testing.assert_array_equal(serial[0], parallel[0])
    np.testing.assert_array_equal(serial[1], parallel[1])
    again = simulate(model, [1.0, 2.0], 300, seed=5, cfg=PathConfig(2.0, dt=0.01))
    np.testing.assert_array_equal(serial[1], again[1])


def test_simulate_bare_spec_has_no_z():
    ys, zs = simulate(Stable(0.5), [1.0], 10, seed=1)
    assert ys.shape == (10, 1)
    assert zs is None


def test_simulate_reports_mass_failure():
    with pytest.raises(ReplicateFailureError):
        simulate(TemperedStable(0.5, 1e6), [1.0], 5, seed=1, cfg=PathConfig(1.0))


def test_simulate_argument_errors():
    with pytest.raises(DomainError):
        simulate(Stable(0.5), [1.0], 1, seed=1)
    with pytest.raises(DomainError):
        simulate(Stable(0.5), [2.0], 10, seed=1, cfg=PathConfig(1.0))


def test_drift_variance_estimate():
    model = TfbmModel(0.3, 2.0, DeterministicDrift(2.0))
    est = estimate(model, "var_Z", {"t": 3.0}, 20_000, seed=9)
    assert abs(est.z_score(2.0 * 1.5**0.6)) < 4.5


def test_stable_cov_Y_estimate():
    spec = Stable(0.6)
    est = estimate(spec, "cov_Y", {"t": 2.0, "s": 1.0}, 20_000, seed=10, cfg=PathConfig(2.0, dt=1e-3))
    assert abs(est.z_score(cov_Y(spec, 2.0, 1.0))) < 4.5


def test_increment_moment_estimate():
    spec = TemperedStable(0.5, 1.0)
    est = estimate(spec, "increment_moment_Y", {"t": 2.0, "s": 0.5, "kappa": 1.5}, 8_000, seed=11,
                   cfg=PathConfig(2.0, dt=1e-3))
    assert abs(est.z_score(increment_moment_Y(spec, 1.5, 2.0, 0.5))) < 4.5


def test_corr_estimate_for_brownian_drift():
    # Z is Brownian motion at times t / mu: corr = sqrt(s / t)
    model = TfbmModel(0.5, 1.0, DeterministicDrift(1.0))
    est = estimate(model, "corr_Z", {"t": 4.0, "s": 1.0}, 20_000, seed=12)
    assert abs(est.z_score(0.5)) < 4.5


def test_estimate_errors():
    model = TfbmModel(0.3, 1.0, Stable(0.5))
    with pytest.raises(DomainError, match="unknown quantity"):
        estimate(model, "kurtosis", {"t": 1.0}, 200, seed=1)
    with pytest.raises(DomainError, match=">= 100"):
        estimate(model, "var_Z", {"t": 1.0}, 50, seed=1)
    with pytest.raises(DomainError, match="needs a TfbmModel"):
        estimate(Stable(0.5), "var_Z", {"t": 1.0}, 200, seed=1)
    with pytest.raises(DomainError):
        estimate(model, "increment_cov_Z", {"t": 2.0, "v": 1.0}, 200, seed=1)
    with pytest.raises(DomainError):
        estimate(TfbmModel(0.3, 1.0, CustomBernstein(lambda lam: lam**0.5, 0.5)), "var_Z", {"t": 1.0}, 200, seed=1)
    with pytest.raises(DomainError, match="custom"):
        simulate(CustomBernstein(lambda lam: lam**0.5, 0.5), [1.0], 10, seed=1)


def test_mc_estimate():
    est = McEstimate.from_samples([1.0, 2.0, 3.0])
    assert est.mean == 2.0
    assert est.std_error == pytest.approx(1.0 / math.sqrt(3))
    assert est.z_score(2.0) == 0.0
    exact = McEstimate(1.0, 0.0, 10)
    assert exact.z_score(1.0) == 0.0
    assert exact.z_score(0.0) == math.inf
    with pytest.raises(DomainError):
        McEstimate(1.0, -1.0, 10)
    with pytest.raises(DomainError):
        McEstimate.from_samples([1.0])


# --- fractional Gaussian noise --------------------------------------------------------------


@pytest.mark.parametrize("hurst", [0.2, 0.5, 0.85])
def test_fgn_path_autocovariance(hurst):
    n, paths = 512, 400
    gen = np.random.default_rng(20)
    x = np.array([fgn_path(hurst, 1.0, n, gen) for _ in range(paths)])
    for lag in range(4):
        products = (x[:, : n - lag] * x[:, lag:]).mean(axis=1)
        est = McEstimate.from_samples(products)
        assert abs(est.z_score(fgn_autocov(hurst, 1.0, lag))) < 4.5


def test_fgn_path_errors():
    with pytest.raises(DomainError):
        fgn_path(0.3, 1.0, 100, RngStream(0))
    assert fgn_path(0.3, 1.0, 8, RngStream(0)).shape == (8,)


def test_embedding_error_is_reported(monkeypatch):
    # a non-covariance sequence has negative circulant eigenvalues
    monkeypatch.setattr(mc, "fgn_autocov", lambda h, s2, j: 1.0 if j == 0 else -0.9 if j == 1 else 0.0)
    with pytest.raises(EmbeddingError):
        fgn_path(0.3, 1.0, 8, RngStream(0))
