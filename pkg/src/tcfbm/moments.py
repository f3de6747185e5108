"""Moment functions of inverse subordinators.

``U^kappa(t) = E[Y(t)^kappa]`` has Laplace transform
``Gamma(1 + kappa) / (lam phi(lam)^kappa)``. Closed forms are used where
available (stable for every order, two-point mixtures through the Prabhakar
function, the tempered renewal function, pure drift); every other case is
obtained by numerical Laplace inversion.

Increment moments and covariances reduce to Stieltjes integrals
``int_0^m U^p(M - y) dU(y)``, evaluated by tanh-sinh quadrature after a
substitution that absorbs the ``y^(p0 - 1)`` singularity of ``U'`` at zero,
``p0`` being the small-time exponent of the family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy import special as sc

from .config import DEFAULT_EVAL, EvalConfig, InversionConfig
from .errors import ConvergenceError, DomainError
from .inversion import invert_laplace_at
from .quadrature import tanh_sinh
from .specfun import mittag_leffler, prabhakar
from .subordinators import (
    CustomBernstein,
    DeterministicDrift,
    Stable,
    StableMixture,
    SubordinatorSpec,
    TemperedStable,
    tempered_phi,
    validate_spec,
)

__all__ = [
    "MomentQuery",
    "laplace_U_moment",
    "invert_laplace_at",
    "moment_U",
    "renewal_density",
    "increment_moment_Y",
    "cov_Y",
    "stieltjes_integral",
    "integrand_cfg",
]

_TEMPERED_MAX_TERMS = 10_000
_TEMPERED_BLOCK = 256


@dataclass(frozen=True)
class MomentQuery:
    """A request for ``U^kappa(t)``; evaluate with :meth:`value`."""

    spec: SubordinatorSpec
    kappa: float
    t: float

    def __post_init__(self):
        validate_spec(self.spec)
        if not self.kappa > 0:
            raise DomainError("kappa must be > 0")
        if not self.t >= 0:
            raise DomainError("t must be >= 0")

    def value(self, cfg: EvalConfig | None = None) -> float:
        return moment_U(self.spec, self.kappa, self.t, cfg)


def laplace_U_moment(spec: SubordinatorSpec, gamma, lam):
    """``Gamma(1 + gamma) / (lam phi(lam)^gamma)``, the transform of ``U^gamma``.

    ``lam`` may be complex (Talbot contour) or ``mpmath.mpf`` (Stehfest); the
    positivity checks apply to real arguments only.
    """
    if not gamma > -1:
        raise DomainError("laplace_U_moment needs gamma > -1")
    if np.isrealobj(lam) and not _is_mp(lam):
        arr = np.asarray(lam, dtype=float)
        if np.any(~(arr > 0)):
            raise DomainError("laplace_U_moment needs lambda > 0")
        phi = np.asarray(spec.phi(arr), dtype=float)
        if np.any(phi <= 0):
            raise DomainError(f"phi(lambda) = 0 at lambda > 0: degenerate {spec.family} spec")
        out = math.gamma(1.0 + gamma) / (arr * phi**gamma)
        return float(out) if out.ndim == 0 else out
    return _gamma1p(gamma, lam) / (lam * spec.phi(lam) ** gamma)


def _is_mp(x) -> bool:
    return type(x).__module__.startswith("mpmath")


def _gamma1p(gamma, lam):
    if _is_mp(lam):
        import mpmath

        return mpmath.gamma(1 + mpmath.mpf(gamma))
    return math.gamma(1.0 + gamma)


def _inversion_cfg(cfg: EvalConfig) -> InversionConfig:
    return cfg.inversion


# ---------------------------------------------------------------------------
# U^kappa(t)
# ---------------------------------------------------------------------------


def moment_U(spec: SubordinatorSpec, kappa, t, cfg: EvalConfig | None = None):
    """``U^kappa(t) = E[Y(t)^kappa]`` for ``kappa > -1`` (vectorised in ``t``).

    ``kappa == 0`` gives 1. Orders in (-1, 0) are accepted because the
    increment-moment integrals need ``U^(kappa - 1)`` for ``kappa < 1``; there
    ``U^kappa(0)`` is infinite. For ``kappa > 0``, ``U^kappa(0) = 0``.
    """
    cfg = cfg or DEFAULT_EVAL
    kappa = float(kappa)
    if not kappa > -1:
        raise DomainError("moment order must be > -1")
    scalar = np.ndim(t) == 0
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(~(tt >= 0)):
        raise DomainError("moment_U needs t >= 0")
    if kappa == 0:
        out = np.ones_like(tt)
    else:
        out = np.full_like(tt, 0.0 if kappa > 0 else np.inf)
        pos = tt > 0
        if np.any(pos):
            out[pos] = _moment_pos(spec, kappa, tt[pos], cfg)
    return float(out[0]) if scalar else out.reshape(np.shape(t))


def _moment_pos(spec, kappa, t, cfg):
    if isinstance(spec, Stable):
        a = spec.alpha
        return np.exp(sc.gammaln(kappa + 1) - sc.gammaln(a * kappa + 1) + a * kappa * np.log(t))
    if isinstance(spec, DeterministicDrift):
        return (t / spec.mu) ** kappa
    if isinstance(spec, StableMixture):
        return _mixture_moment(spec, kappa, t, cfg)
    if isinstance(spec, TemperedStable):
        if kappa == 1:
            out = _tempered_renewal(spec, t, cfg)
            if out is not None:
                return out
        if cfg.inversion.method == "talbot":
            return _tempered_scaled_inversion(spec, kappa, t, cfg)
    return invert_laplace_at(lambda lam: laplace_U_moment(spec, kappa, lam), t, _inversion_cfg(cfg))


def _tempered_scaled_inversion(spec: TemperedStable, kappa, t, cfg):
    """Invert at unit time using ``U_a^kappa(t) = t^(alpha kappa) U_(a t)^kappa(1)``.

    Inverting at the original t overflows the transform for very small t,
    where the contour nodes scale like 1/t.
    """
    al = spec.alpha
    b = spec.a * t
    g = math.gamma(1.0 + kappa)

    def transform(lam):
        bb = b[:, None] if np.ndim(lam) == 2 else b
        return g / (lam * tempered_phi(al, bb, lam) ** kappa)

    unit = invert_laplace_at(transform, np.ones_like(t), cfg.inversion)
    return unit * np.exp(al * kappa * np.log(t))


def _mixture_moment(spec: StableMixture, k, t, cfg):
    a1, a2, c1, c2 = spec.alpha1, spec.alpha2, spec.c1, spec.c2
    z = -c1 * t ** (a2 - a1) / c2
    e = prabhakar(a2 - a1, a2 * k + 1, k, z, cfg)
    return np.exp(sc.gammaln(k + 1) - k * math.log(c2) + a2 * k * np.log(t)) * e


def _tempered_renewal(spec: TemperedStable, t, cfg):
    """``U(t) = a^-alpha sum_n P(a t, alpha (1 + n))``; None if the cap is hit."""
    al, a = spec.alpha, spec.a
    x = a * t
    total = np.zeros_like(t)
    done = np.zeros(t.shape, dtype=bool)
    for start in range(0, _TEMPERED_MAX_TERMS, _TEMPERED_BLOCK):
        n = np.arange(start, start + _TEMPERED_BLOCK)
        terms = sc.gammainc(al * (1 + n)[None, :], x[:, None])
        terms[done] = 0.0
        # terms decrease in n; keep everything up to the first negligible one
        running = total[:, None] + np.cumsum(terms, axis=1)
        small = terms < 0.25 * cfg.rel_tol * running
        hit = small.any(axis=1)
        first = np.where(hit, small.argmax(axis=1), terms.shape[1] - 1)
        terms[np.arange(terms.shape[1])[None, :] > first[:, None]] = 0.0
        total = total + np.sum(terms, axis=1)
        done |= hit
        if np.all(done):
            return total * a**-al
    return None


# ---------------------------------------------------------------------------
# U'(t)
# ---------------------------------------------------------------------------


def renewal_density(spec: SubordinatorSpec, t, cfg: EvalConfig | None = None):
    """Renewal density ``U'(t)`` for ``t > 0`` (vectorised).

    It blows up like ``t^(p0 - 1)`` at zero for families with a small-time
    exponent ``p0 < 1``; integrate against it rather than evaluating at 0.
    """
    cfg = cfg or DEFAULT_EVAL
    scalar = np.ndim(t) == 0
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(~(tt > 0)):
        raise DomainError("renewal_density needs t > 0")
    out = _density_pos(spec, tt, cfg)
    return float(out[0]) if scalar else np.asarray(out).reshape(np.shape(t))


def _density_pos(spec, t, cfg):
    if isinstance(spec, Stable):
        a = spec.alpha
        return np.exp((a - 1) * np.log(t) - sc.gammaln(a))
    if isinstance(spec, DeterministicDrift):
        return np.full_like(t, 1.0 / spec.mu)
    if isinstance(spec, StableMixture):
        a1, a2, c1, c2 = spec.alpha1, spec.alpha2, spec.c1, spec.c2
        z = -c1 * t ** (a2 - a1) / c2
        return t ** (a2 - 1) / c2 * mittag_leffler(a2 - a1, a2, z, cfg)
    if isinstance(spec, TemperedStable):
        out = _tempered_density(spec, t, cfg)
        if out is not None:
            return out
    return invert_laplace_at(lambda lam: 1.0 / spec.phi(lam), t, _inversion_cfg(cfg))


def _tempered_density(spec: TemperedStable, t, cfg):
    """``a^(1-alpha) e^(-at) sum_n (at)^(alpha(1+n)-1) / Gamma(alpha(1+n))`` in log space."""
    al, a = spec.alpha, spec.a
    logx = np.log(a * t)
    # terms peak near alpha (1 + n) ~ a t and decay superexponentially beyond
    n_max = int(np.max((a * t) / al)) + 50 + int(12 * np.sqrt(np.max(a * t) / al + 1))
    if n_max > _TEMPERED_MAX_TERMS:
        return None
    n = np.arange(n_max + 1)
    shape = al * (1 + n)
    logt = (shape[None, :] - 1) * logx[:, None] - sc.gammaln(shape)[None, :]
    peak = np.max(logt, axis=1, keepdims=True)
    tail = np.exp(logt[:, -1] - peak[:, 0])
    if np.any(tail > cfg.rel_tol * 1e-3):
        return None
    s = np.sum(np.exp(logt - peak), axis=1)
    return a ** (1 - al) * np.exp(peak[:, 0] - a * t) * s


# ---------------------------------------------------------------------------
# Stieltjes integrals, increment moments, Cov[Y(t), Y(s)]
# ---------------------------------------------------------------------------


def _small_time_exponent(spec) -> float:
    return float(spec.small_time_exponent)


@lru_cache(maxsize=64)
def integrand_cfg(cfg: EvalConfig) -> EvalConfig:
    """Config for evaluations at quadrature nodes, with ``rel_tol`` relaxed to
    ``cfg.integrand_rel_tol``."""
    return replace(cfg, rel_tol=max(cfg.rel_tol, cfg.integrand_rel_tol))


def stieltjes_integral(spec: SubordinatorSpec, g, m: float, cfg: EvalConfig | None = None) -> float:
    """``int_0^m g(y, r) dU(y)`` where ``r = m - y`` is passed without cancellation.

    ``g`` should evaluate special functions with :func:`integrand_cfg`. The interval is split at ``m/2``. On the left piece ``y = (m/2) u^(1/p0)``
    removes the ``y^(p0-1)`` singularity of ``U'``; on the right piece the
    integrand may carry an integrable power singularity in ``r`` at ``r = 0``.
    """
    cfg = cfg or DEFAULT_EVAL
    if m <= 0:
        return 0.0
    p0 = _small_time_exponent(spec)
    half = 0.5 * m
    icfg = integrand_cfg(cfg)

    def left(dl, dr):
        u = dl
        y = half * u ** (1.0 / p0)
        jac = half / p0 * u ** (1.0 / p0 - 1.0)
        ok = (y > 0) & (jac > 0)
        out = np.zeros_like(u)
        if np.any(ok):
            yy = y[ok]
            out[ok] = g(yy, m - yy) * renewal_density(spec, yy, icfg) * jac[ok]
        return out

    def right(dl, dr):
        r = half * dr
        y = m - r
        return g(y, r) * renewal_density(spec, y, icfg) * half

    scale_tol = cfg.quad_tol
    v1, _ = tanh_sinh(left, scale_tol, cfg.quad_max_level)
    v2, _ = tanh_sinh(right, scale_tol, cfg.quad_max_level)
    return v1 + v2


def _lemma_integral(spec, p, m, M, cfg) -> float:
    """``int_0^m U^p(M - y) dU(y)`` for ``m <= M``."""
    if p == 0:
        return float(moment_U(spec, 1.0, m, cfg))
    gap = M - m
    icfg = integrand_cfg(cfg)
    return stieltjes_integral(spec, lambda y, r: moment_U(spec, p, gap + r, icfg), m, cfg)


def _order(t, s):
    t, s = float(t), float(s)
    if not (t >= 0 and s >= 0):
        raise DomainError("times must be >= 0")
    return (t, s) if t >= s else (s, t)


def increment_moment_Y(spec: SubordinatorSpec, kappa, t, s, cfg: EvalConfig | None = None) -> float:
    """``E|Y(t) - Y(s)|^kappa`` for ``kappa > 0`` (symmetric in t and s).

    Computed as ``U^kappa(M) - kappa int_0^m U^(kappa-1)(M - y) dU(y)`` with
    ``M = max(t, s)``, ``m = min(t, s)``.
    """
    cfg = cfg or DEFAULT_EVAL
    kappa = float(kappa)
    if not kappa > 0:
        raise DomainError("kappa must be > 0")
    M, m = _order(t, s)
    if M == m:
        return 0.0
    if isinstance(spec, DeterministicDrift):
        return ((M - m) / spec.mu) ** kappa
    if m == 0:
        return float(moment_U(spec, kappa, M, cfg))
    if kappa == 1:
        return float(moment_U(spec, 1.0, M, cfg) - moment_U(spec, 1.0, m, cfg))
    return float(moment_U(spec, kappa, M, cfg)) - kappa * _lemma_integral(spec, kappa - 1.0, m, M, cfg)


def cov_Y(spec: SubordinatorSpec, t, s, cfg: EvalConfig | None = None) -> float:
    """``Cov[Y(t), Y(s)] = U^2(m)/2 + int_0^m U(M - y) dU(y) - U(M) U(m)``."""
    cfg = cfg or DEFAULT_EVAL
    M, m = _order(t, s)
    if isinstance(spec, DeterministicDrift) or m == 0:
        return 0.0
    u2 = float(moment_U(spec, 2.0, m, cfg))
    uM = float(moment_U(spec, 1.0, M, cfg))
    um = float(moment_U(spec, 1.0, m, cfg))
    if M == m:
        return u2 - um * um
    return 0.5 * u2 + _lemma_integral(spec, 1.0, m, M, cfg) - uM * um
