"""Second-order structure of time-changed fractional Brownian motion.

``Z(t) = B_H(Y(t))`` with ``B_H`` an fBm independent of the inverse
subordinator ``Y``. Conditioning on ``Y`` gives

    Cov(Z(t), Z(s)) = (sigma^2 / 2) {U^{2H}(m) + 2H int_0^m U^{2H-1}(M - y) dU(y)}

with ``m = min(t, s)``, ``M = max(t, s)``. All ``(t, s)`` entry points accept
unordered pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sc

from .config import DEFAULT_EVAL, EvalConfig
from .errors import ConsistencyError, DegenerateVarianceError, DomainError
from .moments import increment_moment_Y, integrand_cfg, moment_U, stieltjes_integral
from .subordinators import (
    DeterministicDrift,
    Stable,
    StableMixture,
    SubordinatorSpec,
    TemperedStable,
    validate_spec,
)

_COV_METHODS = ("auto", "quadrature", "closed_form")
_DEGENERATE_C = 1e-8


@dataclass(frozen=True)
class TfbmModel:
    """Hurst index, variance scale ``sigma2 = Var B_H(1)`` and time change."""

    hurst: float
    sigma2: float
    sub: SubordinatorSpec

    def __post_init__(self):
        _check_hurst(self.hurst, self.sigma2)
        validate_spec(self.sub)


@dataclass(frozen=True)
class AsymptoticReport:
    """Leading term of a quantity in one limiting regime.

    ``regime`` is one of ``"t_inf"`` (t to infinity, s fixed), ``"s_0"``
    (s to zero, t fixed), ``"v_inf"`` (increment lag to infinity) and
    ``"t_0"`` (t to zero). ``leading_exponent`` is the power of the running
    variable in the leading term; ``exponents`` lists every power appearing
    in the reported expression (for mixed power laws) or the order of the
    next correction.
    """

    regime: str
    quantity: str
    leading_value: float
    leading_exponent: float
    description: str
    exponents: tuple = ()
    degenerate: bool = False


def _check_hurst(hurst, sigma2):
    if not (0 < hurst < 1):
        raise DomainError(f"hurst={hurst!r} outside (0,1)")
    if not sigma2 > 0:
        raise DomainError(f"sigma2={sigma2!r} must be > 0")


def _order(t, s):
    t, s = float(t), float(s)
    if not (t >= 0 and s >= 0):
        raise DomainError("times must be >= 0")
    return (t, s) if t >= s else (s, t)


# ---------------------------------------------------------------------------
# fBm and fractional Gaussian noise
# ---------------------------------------------------------------------------


def fbm_cov(hurst, sigma2, t, s):
    """``(sigma2/2)(|t|^2H + |s|^2H - |t-s|^2H)`` for real t, s (vectorised)."""
    _check_hurst(hurst, sigma2)
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    h2 = 2.0 * hurst
    out = 0.5 * sigma2 * (np.abs(s) ** h2 + np.abs(t) ** h2 - np.abs(t - s) ** h2)
    return float(out) if out.ndim == 0 else out


def _fgn_bracket(h2, j):
    """``(j+1)^h2 - 2 j^h2 + (j-1)^h2`` without cancellation for large j."""
    # the direct form loses about eps * j^2 to cancellation
    if j < 10:
        return (j + 1) ** h2 - 2 * j**h2 + abs(j - 1) ** h2
    x = 1.0 / j
    total, coef = 0.0, 1.0
    # even terms of the binomial series of (1+x)^h2 + (1-x)^h2 - 2
    for k in range(1, 80):
        coef *= (h2 - k + 1) / k
        if k % 2 == 0:
            term = 2.0 * coef * x**k
            total += term
            if abs(term) < 1e-17 * abs(total):
                break
    return j**h2 * total


def fgn_autocov(hurst, sigma0_2, j):
    """Fractional Gaussian noise autocovariance at integer lag ``j >= 0``."""
    _check_hurst(hurst, sigma0_2)
    j = int(j)
    if j < 0:
        raise DomainError("lag j must be >= 0")
    if j == 0:
        return float(sigma0_2)
    return 0.5 * sigma0_2 * _fgn_bracket(2.0 * hurst, j)


# ---------------------------------------------------------------------------
# Variance, covariance, correlation
# ---------------------------------------------------------------------------


def var_Z(model: TfbmModel, t, cfg: EvalConfig | None = None):
    """``Var Z(t) = sigma^2 U^{2H}(t)`` (vectorised in t)."""
    return model.sigma2 * moment_U(model.sub, 2.0 * model.hurst, t, cfg)


def _lemma_term(model, m, M, cfg):
    """``2H int_0^m U^{2H-1}(M - y) dU(y)``."""
    p = 2.0 * model.hurst - 1.0
    if p == 0:
        return float(moment_U(model.sub, 1.0, m, cfg))
    gap = M - m
    icfg = integrand_cfg(cfg)
    integral = stieltjes_integral(model.sub, lambda y, r: moment_U(model.sub, p, gap + r, icfg), m, cfg)
    return 2.0 * model.hurst * integral


def _cov_quadrature(model, M, m, cfg):
    u2h = float(moment_U(model.sub, 2.0 * model.hurst, m, cfg))
    return 0.5 * model.sigma2 * (u2h + _lemma_term(model, m, M, cfg))


def cov_Z(model: TfbmModel, t, s, cfg: EvalConfig | None = None, method: str = "auto") -> float:
    """``Cov(Z(t), Z(s))``.

    ``method="quadrature"`` always integrates numerically. For stable time
    changes ``"auto"`` returns the incomplete-beta closed form and, unless
    ``cfg.cross_check_tol`` is None, verifies it against the quadrature,
    raising :class:`ConsistencyError` on disagreement. ``"closed_form"`` is
    stable-only and skips the check.
    """
    cfg = cfg or DEFAULT_EVAL
    if method not in _COV_METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {_COV_METHODS}")
    M, m = _order(t, s)
    if m == 0:
        return 0.0
    stable = isinstance(model.sub, Stable)
    if method == "closed_form" and not stable:
        raise DomainError("closed-form covariance is available for stable time changes only")
    if method == "quadrature" or not stable:
        return _cov_quadrature(model, M, m, cfg)
    closed = stable_cov_closed_form(model.sub.alpha, model.hurst, model.sigma2, M, m)
    if method == "auto" and cfg.cross_check_tol is not None:
        quad = _cov_quadrature(model, M, m, cfg)
        if abs(quad - closed) > cfg.cross_check_tol * abs(closed):
            raise ConsistencyError(
                f"stable covariance at (t={float(M)!r}, s={float(m)!r}): closed form {float(closed)!r} "
                f"vs quadrature {float(quad)!r}"
            )
    return closed


def stable_cov_closed_form(alpha, hurst, sigma2, t, s) -> float:
    """Stable-time-change covariance through the incomplete beta function.

    For ``0 < s <= t``::

        (sigma2/2) {Gamma(2H+1) s^{2aH} / Gamma(2aH+1)
                    + Gamma(2H+1) t^{2aH} B(a, a(2H-1)+1; s/t) / (Gamma(a) Gamma(a(2H-1)+1))}
    """
    _check_hurst(hurst, sigma2)
    if not (0 < alpha < 1):
        raise DomainError("alpha must lie in (0,1)")
    t, s = _order(t, s)
    if s == 0:
        return 0.0
    b = alpha * (2.0 * hurst - 1.0) + 1.0
    if not b > 0:
        raise DomainError("alpha(2H-1) + 1 must be positive")
    g2h = sc.gammaln(2.0 * hurst + 1.0)
    ah = 2.0 * alpha * hurst
    first = math.exp(g2h - sc.gammaln(ah + 1.0) + ah * math.log(s))
    inc_beta = sc.betainc(alpha, b, s / t) * sc.beta(alpha, b)
    second = math.exp(g2h + ah * math.log(t) - sc.gammaln(alpha) - sc.gammaln(b)) * inc_beta
    return 0.5 * sigma2 * (first + second)


def corr_Z(model: TfbmModel, t, s, cfg: EvalConfig | None = None) -> float:
    """``corr(Z(t), Z(s))``; for ``H = 1/2`` this is ``sqrt(U(min)/U(max))``."""
    cfg = cfg or DEFAULT_EVAL
    M, m = _order(t, s)
    if m == 0:
        raise DegenerateVarianceError("Var Z vanishes at time 0")
    if model.hurst == 0.5:
        um, uM = (float(moment_U(model.sub, 1.0, x, cfg)) for x in (m, M))
        if um <= 0:
            raise DegenerateVarianceError("U vanishes at a positive time")
        return math.sqrt(um / uM)
    vm, vM = (float(var_Z(model, x, cfg)) for x in (m, M))
    if vm <= 0 or vM <= 0:
        raise DegenerateVarianceError("Var Z vanishes at a positive time")
    if M == m:
        return 1.0
    return cov_Z(model, M, m, cfg) / math.sqrt(vm * vM)


def abs_increment_moment_Z(model: TfbmModel, m_order, t, s, cfg: EvalConfig | None = None) -> float:
    """``E|Z(t) - Z(s)|^m = (2 sigma^2)^{m/2} Gamma((m+1)/2) / sqrt(pi) * E|Y(t) - Y(s)|^{mH}``."""
    m_order = float(m_order)
    if not m_order > 0:
        raise DomainError("moment order m must be > 0")
    prefactor = math.exp(
        0.5 * m_order * math.log(2.0 * model.sigma2) + sc.gammaln(0.5 * (m_order + 1.0))
    ) / math.sqrt(math.pi)
    return prefactor * increment_moment_Y(model.sub, m_order * model.hurst, t, s, cfg)


def _power_law(spec, p):
    """``(c, q)`` with ``U^p(x) = c x^q`` exactly, or None."""
    if isinstance(spec, Stable):
        a = spec.alpha
        return math.exp(sc.gammaln(p + 1.0) - sc.gammaln(a * p + 1.0)), a * p
    if isinstance(spec, DeterministicDrift):
        return spec.mu**-p, p
    return None


def increment_cov_Z(model: TfbmModel, t, v, cfg: EvalConfig | None = None) -> float:
    """``Cov(Z(t) - Z(0), Z(t+v) - Z(v))`` for ``v >= t > 0``::

        sigma^2 H int_0^t (U^{2H-1}(t+v-y) - U^{2H-1}(v-y)) dU(y)
    """
    cfg = cfg or DEFAULT_EVAL
    t, v = float(t), float(v)
    if not (t > 0 and v >= t):
        raise DomainError("increment_cov_Z needs v >= t > 0")
    if model.hurst == 0.5:
        return 0.0
    p = 2.0 * model.hurst - 1.0
    gap = v - t
    law = _power_law(model.sub, p)
    if law is not None:
        c, q = law

        # c[(v + r)^q - (gap + r)^q] written to avoid cancellation for v >> t
        def g(y, r):
            base = gap + r
            return c * base**q * np.expm1(q * np.log1p(t / base))

    else:
        icfg = integrand_cfg(cfg)

        def g(y, r):
            return moment_U(model.sub, p, v + r, icfg) - moment_U(model.sub, p, gap + r, icfg)

    return model.sigma2 * model.hurst * stieltjes_integral(model.sub, g, t, cfg)


# ---------------------------------------------------------------------------
# Asymptotic regimes
# ---------------------------------------------------------------------------


def stable_asymptotics(alpha, hurst, sigma2, t, s=1.0, v=None, regime=None) -> AsymptoticReport:
    """Leading terms for a stable time change.

    ``"t_inf"``: correlation for fixed s as t grows, a mixture of the powers
    ``(s/t)^{aH}`` and ``(s/t)^{a(1-H)}``. ``"v_inf"``: covariance of
    increments of length t a lag v apart, decaying like ``v^{a(2H-1)-1}``.
    The regime defaults to ``"v_inf"`` when v is given, else ``"t_inf"``.
    """
    _check_hurst(hurst, sigma2)
    if not (0 < alpha < 1):
        raise DomainError("alpha must lie in (0,1)")
    regime = regime or ("v_inf" if v is not None else "t_inf")
    a, h = float(alpha), float(hurst)
    if regime == "t_inf":
        t, s = float(t), float(s)
        if not (t > 0 and s > 0):
            raise DomainError("t and s must be positive")
        b = a * (2 * h - 1) + 1
        coef = 1.0 / (a * sc.beta(a, b))
        x = s / t
        value = 0.5 * (x ** (a * h) + coef * x ** (a * (1 - h)))
        return AsymptoticReport(
            regime, "corr", value, -a * min(h, 1 - h),
            "correlation as t -> infinity with s fixed: "
            f"0.5 (s/t)^{float(a * h)!r} + {float(0.5 * coef)!r} (s/t)^{float(a * (1 - h))!r}",
            exponents=(a * h, a * (1 - h)),
        )
    if regime == "v_inf":
        if v is None:
            raise DomainError("regime v_inf needs v")
        t, v = float(t), float(v)
        q = a * (2 * h - 1) - 1
        const = 0.5 * sigma2 * math.gamma(2 * h + 1) * t ** (a + 1) / math.gamma(a + 1) * sc.rgamma(a * (2 * h - 1))
        return AsymptoticReport(
            regime, "increment_cov", const * v**q, q,
            f"increment covariance as v -> infinity with t fixed: {float(const)!r} v^{float(q)!r}",
            exponents=(q,),
        )
    raise DomainError(f"stable asymptotics support regimes t_inf and v_inf, not {regime!r}")


def mixture_asymptotics(spec: StableMixture, hurst, sigma2, t, s=None, regime="t_inf") -> AsymptoticReport:
    """Leading terms for a two-point stable mixture time change.

    ``"t_inf"`` / ``"t_0"``: the variance at large / small t (governed by the
    smaller / larger index). With ``s`` given, ``"t_inf"`` reports the
    covariance for fixed s. ``"s_0"``: the covariance as s shrinks with t fixed.
    """
    spec = validate_spec(spec)
    if not isinstance(spec, StableMixture):
        raise DomainError("mixture_asymptotics needs a StableMixture")
    _check_hurst(hurst, sigma2)
    a1, a2, c1, c2 = spec.alpha1, spec.alpha2, spec.c1, spec.c2
    h = float(hurst)
    t = float(t)
    g2h1 = math.gamma(2 * h + 1)
    degenerate = c1 < _DEGENERATE_C
    if regime == "t_inf" and s is None:
        e = 2 * a1 * h
        value = sigma2 * g2h1 * t**e / (c1 ** (2 * h) * math.gamma(e + 1))
        return AsymptoticReport(
            regime, "var", value, e,
            "variance as t -> infinity, governed by the smaller index alpha1"
            + ("; c1 is near zero so the constant 1/c1^{2H} degenerates" if degenerate else ""),
            exponents=(e,), degenerate=degenerate or not math.isfinite(value),
        )
    if regime == "t_0":
        e = 2 * a2 * h
        value = sigma2 * g2h1 * t**e / (c2 ** (2 * h) * math.gamma(e + 1))
        return AsymptoticReport(
            regime, "var", value, e,
            "variance as t -> 0, governed by the larger index alpha2; "
            f"next correction of order t^{float(a2 * (2 * h + 1) - a1)!r}",
            exponents=(e, a2 * (2 * h + 1) - a1),
        )
    if regime == "t_inf":
        s = float(s)
        e = a1 * (2 * h - 1)
        u2h = float(moment_U(spec, 2 * h, s))
        u1 = float(moment_U(spec, 1.0, s))
        growth = g2h1 * t**e / (c1 ** (2 * h - 1) * math.gamma(e + 1))
        value = 0.5 * sigma2 * (u2h + growth * u1)
        return AsymptoticReport(
            regime, "cov", value, e,
            "covariance as t -> infinity with s fixed: "
            "(sigma2/2){U^{2H}(s) + Gamma(2H+1) t^{alpha1(2H-1)} U(s) / (c1^{2H-1} Gamma(alpha1(2H-1)+1))}",
            exponents=(e,), degenerate=degenerate or not math.isfinite(value),
        )
    if regime == "s_0":
        if s is None:
            raise DomainError("regime s_0 needs s")
        s = float(s)
        e1, e2 = 2 * a2 * h, a2
        first = g2h1 * s**e1 / (c2 ** (2 * h) * math.gamma(e1 + 1))
        # 2H U^{2H-1}(t) U(s) with the small-s form of U(s)
        second = 2 * h * float(moment_U(spec, 2 * h - 1, t)) * s**e2 / (c2 * math.gamma(a2 + 1))
        value = 0.5 * sigma2 * (first + second)
        return AsymptoticReport(
            regime, "cov", value, min(e1, e2),
            "covariance as s -> 0 with t fixed: the s^{2 alpha2 H} term dominates for H < 1/2, "
            "the s^{alpha2} term for H > 1/2",
            exponents=(e1, e2),
        )
    raise DomainError(f"unknown regime {regime!r}")


def tempered_asymptotics(spec: TemperedStable, hurst, sigma2, t, s=None, regime="t_inf") -> AsymptoticReport:
    """Leading terms for a tempered stable time change.

    ``"t_inf"``: Karamata growth ``U^k(t) ~ t^k / (a^k a^{(a-1)k})``, reported
    for the variance, or with ``s`` given for the correlation at fixed s.
    ``"t_0"``: the small-time variance, where tempering is invisible.
    ``"s_0"`` (H = 1/2 only): correlation ``~ s^{a/2} / sqrt(Gamma(1+a) U(t))``.
    """
    spec = validate_spec(spec)
    if not isinstance(spec, TemperedStable):
        raise DomainError("tempered_asymptotics needs a TemperedStable")
    _check_hurst(hurst, sigma2)
    al, a = spec.alpha, spec.a
    h = float(hurst)
    t = float(t)
    # U^k(t) ~ t^k / (alpha^k a^{(alpha-1)k})
    def karamata(k, x):
        return x**k / (al**k * a ** ((al - 1) * k))

    if regime == "t_inf" and s is None:
        value = sigma2 * karamata(2 * h, t)
        return AsymptoticReport(
            regime, "var", value, 2 * h,
            "variance as t -> infinity (Karamata): sigma2 t^{2H} / (alpha^{2H} a^{2H(alpha-1)})",
            exponents=(2 * h,),
        )
    if regime == "t_inf":
        s = float(s)
        u2h = float(moment_U(spec, 2 * h, s))
        u1 = float(moment_U(spec, 1.0, s))
        c_h = al**h * a ** ((al - 1) * h)
        c_1h = al ** (1 - h) * a ** ((al - 1) * (1 - h))
        value = 0.5 * (c_h * math.sqrt(u2h) * t**-h + 2 * h * c_1h * u1 / math.sqrt(u2h) * t ** (h - 1))
        return AsymptoticReport(
            regime, "corr", value, -min(h, 1 - h),
            "correlation as t -> infinity with s fixed, a mixture of t^{-H} and t^{-(1-H)}",
            exponents=(h, 1 - h),
        )
    if regime == "t_0":
        e = 2 * al * h
        value = sigma2 * math.gamma(2 * h + 1) * t**e / math.gamma(e + 1)
        return AsymptoticReport(
            regime, "var", value, e,
            "variance as t -> 0, matching the untempered stable law; "
            f"next correction of order t^{float(e + al)!r}",
            exponents=(e, e + al),
        )
    if regime == "s_0":
        if h != 0.5:
            raise DomainError("tempered s_0 regime is available for H = 1/2 only")
        if s is None:
            raise DomainError("regime s_0 needs s")
        s = float(s)
        ut = float(moment_U(spec, 1.0, t))
        value = s ** (al / 2) / math.sqrt(math.gamma(1 + al) * ut)
        return AsymptoticReport(
            regime, "corr", value, al / 2,
            "correlation as s -> 0 with t fixed (H = 1/2): s^{alpha/2} / sqrt(Gamma(1+alpha) U(t))",
            exponents=(al / 2, al),
        )
    raise DomainError(f"unknown regime {regime!r}")
