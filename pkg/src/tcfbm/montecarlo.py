"""Monte Carlo oracle for inverse subordinators and time-changed fBm.

Each replicate draws from its own counter-based stream ``RngStream(seed, i)``
(Philox keyed by the pair), so estimates are identical for a fixed seed and
replicate count however the replicates are scheduled.

Subordinator increments over a step ``dt`` are exact: positive stable draws
come from Kanter's representation, tempered draws from exponential tilting by
rejection, mixtures from independent stable pairs. ``Y`` is obtained by
inverting the simulated path on its grid with linear interpolation, which is
the only discretisation in the scheme (bias of order ``dt``).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import (
    DomainError,
    EmbeddingError,
    HorizonExceededError,
    ReplicateFailureError,
    SamplerStallError,
    TcfbmError,
)
from .subordinators import (
    CustomBernstein,
    DeterministicDrift,
    Stable,
    StableMixture,
    SubordinatorSpec,
    TemperedStable,
    validate_spec,
)
from .tfbm import TfbmModel, fgn_autocov

_MASK64 = (1 << 64) - 1
_MAX_TILT_ATTEMPTS = 1_000_000
_MAX_DOUBLINGS = 10
_FAILURE_FRACTION = 1e-3

QUANTITIES = (
    "cov_Z",
    "var_Z",
    "corr_Z",
    "increment_moment_Y",
    "abs_increment_moment_Z",
    "cov_Y",
    "increment_cov_Z",
)


@dataclass(frozen=True)
class RngStream:
    """Identifies one independent random stream by ``(seed, stream_id)``."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        key = ((int(self.seed) & _MASK64) << 64) | (int(self.stream_id) & _MASK64)
        return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class McEstimate:
    """Sample mean with standard error ``sample_std / sqrt(n)``."""

    mean: float
    std_error: float
    n_replicates: int

    def __post_init__(self):
        if self.n_replicates < 2:
            raise DomainError("an estimate needs at least 2 replicates")
        if not self.std_error >= 0:
            raise DomainError("std_error must be >= 0")

    def z_score(self, value: float) -> float:
        """``(mean - value) / std_error``; infinite if the error is zero and they differ."""
        diff = self.mean - value
        if self.std_error == 0:
            return 0.0 if diff == 0 else math.copysign(math.inf, diff)
        return diff / self.std_error

    @classmethod
    def from_samples(cls, values) -> "McEstimate":
        values = np.asarray(values, dtype=float)
        n = values.size
        if n < 2:
            raise DomainError("an estimate needs at least 2 replicates")
        return cls(float(np.mean(values)), float(np.std(values, ddof=1) / math.sqrt(n)), n)


@dataclass(frozen=True)
class PathConfig:
    """Grid for subordinator paths. ``dt`` defaults to ``1e-3 * horizon``."""

    horizon: float
    dt: float | None = None

    def __post_init__(self):
        if not self.horizon > 0:
            raise DomainError("horizon must be > 0")
        if self.dt is None:
            object.__setattr__(self, "dt", 1e-3 * self.horizon)
        if not self.dt > 0:
            raise DomainError("dt must be > 0")


def _gen(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError("rng must be an RngStream or numpy Generator")


# ---------------------------------------------------------------------------
# Increment samplers
# ---------------------------------------------------------------------------


def _standard_stable(alpha, size, gen):
    """Positive stable variates with ``E exp(-lam S) = exp(-lam^alpha)`` (Kanter)."""
    u = gen.uniform(0.0, math.pi, size)
    e = gen.standard_exponential(size)
    logs = (
        np.log(np.sin(alpha * u))
        - np.log(np.sin(u)) / alpha
        + (1.0 - alpha) / alpha * (np.log(np.sin((1.0 - alpha) * u)) - np.log(e))
    )
    return np.exp(logs)


def sample_stable_increment(alpha, scale_t, rng, size=None):
    """``D(scale_t)`` for the standard alpha-stable subordinator.

    Uses ``D(scale_t) = scale_t^(1/alpha) S`` with S a standard positive stable
    draw. Returns a float, or an array when ``size`` is given.
    """
    if not (0 < alpha < 1):
        raise DomainError("alpha must lie in (0,1)")
    if not scale_t > 0:
        raise DomainError("scale_t must be > 0")
    out = scale_t ** (1.0 / alpha) * _standard_stable(alpha, size or 1, _gen(rng))
    return float(out[0]) if size is None else out


def _tempered_draws(alpha, a, scale_t, n, gen):
    out = scale_t ** (1.0 / alpha) * _standard_stable(alpha, n, gen)
    accept = gen.uniform(size=n) < np.exp(-a * out)
    pending = np.flatnonzero(~accept)
    attempts = 1
    while pending.size:
        attempts += 1
        if attempts > _MAX_TILT_ATTEMPTS:
            raise SamplerStallError(
                f"tempered sampler exceeded {_MAX_TILT_ATTEMPTS} attempts "
                f"(acceptance rate exp(-scale_t a^alpha) = {math.exp(-scale_t * a**alpha):.3g})"
            )
        trial = scale_t ** (1.0 / alpha) * _standard_stable(alpha, pending.size, gen)
        ok = gen.uniform(size=pending.size) < np.exp(-a * trial)
        out[pending[ok]] = trial[ok]
        pending = pending[~ok]
    return out


def sample_tempered_increment(alpha, a, scale_t, rng, size=None):
    """``D(scale_t)`` for the tempered stable subordinator with rate ``a``.

    A stable draw S over ``scale_t`` is accepted with probability
    ``exp(-a S)``; the acceptance rate is ``exp(-scale_t a^alpha)``.
    """
    if not (0 < alpha < 1) or not a > 0:
        raise DomainError("need 0 < alpha < 1 and a > 0")
    if not scale_t > 0:
        raise DomainError("scale_t must be > 0")
    out = _tempered_draws(alpha, a, scale_t, size or 1, _gen(rng))
    return float(out[0]) if size is None else out


def _increments(spec, dt, n, gen):
    """``n`` i.i.d. increments of D over steps of length ``dt``."""
    if isinstance(spec, Stable):
        return dt ** (1.0 / spec.alpha) * _standard_stable(spec.alpha, n, gen)
    if isinstance(spec, TemperedStable):
        return _tempered_draws(spec.alpha, spec.a, dt, n, gen)
    if isinstance(spec, StableMixture):
        a1, a2 = spec.alpha1, spec.alpha2
        first = (spec.c1 * dt) ** (1.0 / a1) * _standard_stable(a1, n, gen)
        return first + (spec.c2 * dt) ** (1.0 / a2) * _standard_stable(a2, n, gen)
    if isinstance(spec, DeterministicDrift):
        return np.full(n, spec.mu * dt)
    if isinstance(spec, CustomBernstein):
        raise DomainError("no sampler is available for a custom Laplace exponent")
    raise DomainError(f"unsupported spec {spec!r}")


def sample_D_at(spec: SubordinatorSpec, u, size, rng) -> np.ndarray:
    """``size`` independent draws of ``D(u)`` (one increment of length u each)."""
    spec = validate_spec(spec)
    if not u > 0:
        raise DomainError("u must be > 0")
    return _increments(spec, float(u), int(size), _gen(rng))


def sample_D_increments(spec: SubordinatorSpec, cfg: PathConfig, rng):
    """One path of D on the grid ``0, dt, ..., >= cfg.horizon``.

    Returns ``(grid_times, D_values)`` with ``D(0) = 0``.
    """
    spec = validate_spec(spec)
    n = int(math.ceil(cfg.horizon / cfg.dt))
    d = np.concatenate(([0.0], np.cumsum(_increments(spec, cfg.dt, n, _gen(rng)))))
    return cfg.dt * np.arange(n + 1), d


def _inverse_from_gen(spec, times, cfg, gen):
    times = np.asarray(times, dtype=float)
    if isinstance(spec, DeterministicDrift):
        return times / spec.mu
    t_max = float(np.max(times)) if times.size else 0.0
    dt = cfg.dt
    n = max(int(math.ceil(cfg.horizon / dt)), 16)
    d = np.concatenate(([0.0], np.cumsum(_increments(spec, dt, n, gen))))
    doublings = 0
    while d[-1] <= t_max:
        if doublings == _MAX_DOUBLINGS:
            raise HorizonExceededError(
                f"D stayed below t={t_max!r} over {len(d) - 1} steps of dt={dt!r}"
            )
        more = np.cumsum(_increments(spec, dt, len(d) - 1, gen)) + d[-1]
        d = np.concatenate((d, more))
        doublings += 1
    # first grid index k with D_k > t, then interpolate on [D_{k-1}, D_k]
    k = np.searchsorted(d, times, side="right")
    lo, hi = d[k - 1], d[k]
    return dt * (k - 1 + (times - lo) / (hi - lo))


def inverse_values_at(spec: SubordinatorSpec, times, cfg: PathConfig, rng) -> np.ndarray:
    """One joint draw of ``(Y(t_1), ..., Y(t_k))``; nondecreasing in t.

    D is simulated on a grid of step ``cfg.dt`` until it exceeds
    ``max(times)``; the span starts at ``cfg.horizon`` and doubles at most ten
    times before :class:`HorizonExceededError` is raised.
    """
    spec = validate_spec(spec)
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise DomainError("times must be >= 0")
    if times.size and np.max(times) > cfg.horizon:
        raise DomainError("a query time exceeds cfg.horizon")
    return _inverse_from_gen(spec, times, cfg, _gen(rng))


def _z_from_y(model, y, gen):
    """Joint fBm values at the (random) times ``y``; ties give equal values."""
    z = np.zeros(y.shape)
    pos = y > 0
    if not np.any(pos):
        return z
    uniq, inverse = np.unique(y[pos], return_inverse=True)
    h2 = 2.0 * model.hurst
    cov = 0.5 * model.sigma2 * (uniq[:, None] ** h2 + uniq[None, :] ** h2 - np.abs(uniq[:, None] - uniq[None, :]) ** h2)
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        k = len(uniq)
        cov = cov + np.eye(k) * (1e-12 * np.trace(cov) / k)
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise EmbeddingError("fBm covariance at the sampled times is not positive definite") from exc
    draws = chol @ gen.standard_normal(len(uniq))
    z[pos] = draws[inverse]
    return z


def sample_Z_at(model: TfbmModel, times, cfg: PathConfig, rng) -> np.ndarray:
    """One joint draw of ``(Z(t_1), ..., Z(t_k))`` with ``Z = B_H(Y)``."""
    gen = _gen(rng)
    y = inverse_values_at(model.sub, times, cfg, gen)
    return _z_from_y(model, y, gen)


# ---------------------------------------------------------------------------
# Replicated simulation and estimators
# ---------------------------------------------------------------------------


def _replicate_block(args):
    spec, model, times, cfg, seed, start, stop = args
    k = len(times)
    ys = np.full((stop - start, k), np.nan)
    zs = np.full((stop - start, k), np.nan) if model is not None else None
    for j, i in enumerate(range(start, stop)):
        gen = RngStream(seed, i).generator()
        try:
            y = _inverse_from_gen(spec, times, cfg, gen)
            ys[j] = y
            if model is not None:
                zs[j] = _z_from_y(model, y, gen)
        except TcfbmError:
            continue
    return ys, zs


def simulate(model_or_spec, times, n_replicates: int, seed: int, cfg: PathConfig | None = None, workers: int | None = None):
    """Replicated joint draws of Y (and Z for a model) at ``times``.

    Returns ``(Y, Z)`` arrays of shape ``(n_ok, len(times))`` in replicate
    order (``Z`` is None for a bare spec). Replicates that raise a package
    error are dropped; more than 0.1% failures raise
    :class:`ReplicateFailureError`. ``workers > 1`` spreads blocks of
    replicates over processes without changing the result.
    """
    model = model_or_spec if isinstance(model_or_spec, TfbmModel) else None
    spec = validate_spec(model.sub if model is not None else model_or_spec)
    if isinstance(spec, CustomBernstein):
        raise DomainError("no sampler is available for a custom Laplace exponent")
    times = np.asarray(times, dtype=float)
    cfg = cfg or PathConfig(horizon=float(np.max(times)))
    if np.max(times) > cfg.horizon:
        raise DomainError("a query time exceeds cfg.horizon")
    n = int(n_replicates)
    if n < 2:
        raise DomainError("need at least 2 replicates")
    nblocks = max(1, min(n, 64 * (workers or 1)))
    edges = np.linspace(0, n, nblocks + 1).astype(int)
    jobs = [(spec, model, times, cfg, seed, int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_replicate_block, jobs))
    else:
        parts = [_replicate_block(j) for j in jobs]
    ys = np.concatenate([p[0] for p in parts])
    zs = np.concatenate([p[1] for p in parts]) if model is not None else None
    ok = ~np.isnan(ys).any(axis=1)
    failed = n - int(ok.sum())
    if failed > _FAILURE_FRACTION * n:
        raise ReplicateFailureError(f"{failed} of {n} replicates failed")
    return ys[ok], (zs[ok] if zs is not None else None)


def _influence_estimate(value, influence):
    influence = np.asarray(influence, dtype=float)
    n = influence.size
    return McEstimate(float(value), float(np.std(influence, ddof=1) / math.sqrt(n)), n)


def estimate(
    model_or_spec,
    quantity: str,
    params: dict,
    n_replicates: int,
    seed: int,
    cfg: PathConfig | None = None,
    workers: int | None = None,
) -> McEstimate:
    """Monte Carlo estimate of one analytic quantity.

    ``params`` holds the times (``t``, ``s`` or ``t``, ``v``) and the order
    (``kappa`` for increment_moment_Y, ``m`` for abs_increment_moment_Z).
    Ratio-type quantities (corr_Z, cov_Y) report delta-method standard
    errors from their influence functions.
    """
    if quantity not in QUANTITIES:
        raise DomainError(f"unknown quantity {quantity!r}; choose from {QUANTITIES}")
    if int(n_replicates) < 100:
        raise DomainError("estimate needs n_replicates >= 100")
    needs_z = quantity in ("cov_Z", "var_Z", "corr_Z", "abs_increment_moment_Z", "increment_cov_Z")
    if needs_z and not isinstance(model_or_spec, TfbmModel):
        raise DomainError(f"{quantity} needs a TfbmModel")
    p = dict(params)
    if quantity == "var_Z":
        times = [p["t"]]
    elif quantity == "increment_cov_Z":
        t, v = float(p["t"]), float(p["v"])
        if not (t > 0 and v >= t):
            raise DomainError("increment_cov_Z needs v >= t > 0")
        times = [t, v, t + v]
    else:
        times = [p["t"], p["s"]]
    ys, zs = simulate(model_or_spec, times, n_replicates, seed, cfg, workers)
    if quantity == "var_Z":
        return McEstimate.from_samples(zs[:, 0] ** 2)
    if quantity == "cov_Z":
        return McEstimate.from_samples(zs[:, 0] * zs[:, 1])
    if quantity == "increment_moment_Y":
        return McEstimate.from_samples(np.abs(ys[:, 0] - ys[:, 1]) ** float(p["kappa"]))
    if quantity == "abs_increment_moment_Z":
        return McEstimate.from_samples(np.abs(zs[:, 0] - zs[:, 1]) ** float(p["m"]))
    if quantity == "increment_cov_Z":
        return McEstimate.from_samples(zs[:, 0] * (zs[:, 2] - zs[:, 1]))
    if quantity == "cov_Y":
        dt_, ds_ = ys[:, 0] - ys[:, 0].mean(), ys[:, 1] - ys[:, 1].mean()
        cov = float(np.mean(dt_ * ds_)) * len(ys) / (len(ys) - 1)
        return _influence_estimate(cov, dt_ * ds_ - cov)
    # corr_Z with known zero means: c / sqrt(a b)
    a, b, c = zs[:, 0] ** 2, zs[:, 1] ** 2, zs[:, 0] * zs[:, 1]
    ma, mb, mc = a.mean(), b.mean(), c.mean()
    rho = mc / math.sqrt(ma * mb)
    influence = (c - mc) / math.sqrt(ma * mb) - 0.5 * rho * ((a - ma) / ma + (b - mb) / mb)
    return _influence_estimate(rho, influence)


# ---------------------------------------------------------------------------
# Fractional Gaussian noise
# ---------------------------------------------------------------------------


def fgn_path(hurst, sigma0_2, n: int, rng) -> np.ndarray:
    """Exact fractional Gaussian noise of length ``n`` (a power of two) by
    circulant embedding."""
    n = int(n)
    if n < 2 or n & (n - 1):
        raise DomainError("n must be a power of two >= 2")
    r = np.array([fgn_autocov(hurst, sigma0_2, j) for j in range(n + 1)])
    row = np.concatenate((r, r[-2:0:-1]))
    lam = np.fft.fft(row).real
    if lam.min() < -1e-10 * lam.max():
        raise EmbeddingError(f"circulant embedding has a negative eigenvalue {lam.min()!r}")
    lam = np.clip(lam, 0.0, None)
    gen = _gen(rng)
    m = 2 * n
    w = gen.standard_normal(m) + 1j * gen.standard_normal(m)
    return np.fft.fft(np.sqrt(lam / m) * w).real[:n]
