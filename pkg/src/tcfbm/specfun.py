"""Special functions behind the closed-form renewal moments.

Gamma, incomplete gamma and incomplete beta are thin, domain-checked wrappers
around :mod:`scipy.special`. Kummer's M and the two- and three-parameter
Mittag-Leffler functions are evaluated here directly.

Mittag-Leffler evaluation for real arguments runs through a cascade of
branches, accepting the first whose error estimate meets ``cfg.rel_tol``:

1. the defining power series in double precision (tried for
   ``|z| <= series_radius`` and for all ``z >= 0``), with an a-posteriori
   rounding-error estimate driven by the largest term;
2. the algebraic asymptotic expansion for large negative ``z`` (``alpha < 2``),
   optimally truncated, with a bound on the exponentially small remainder
   that appears for ``alpha >= 1``;
3. fixed-Talbot inversion of the Laplace pair in double precision
   ``L[t^(b-1) E^g_{a,b}(-x t^a)](s) = s^(a g - b) / (s^a + x)^g``
   (``alpha <= 1`` only, where the transform has no poles off the cut);
4. the same inversion carried out in 30-digit arithmetic;
5. the defining series in extended precision, with the working precision set
   from the size of the largest term.
"""

from __future__ import annotations

import math

import mpmath
import numpy as np
from scipy import special as sc

from .config import DEFAULT_EVAL, EvalConfig
from .errors import ConvergenceError, DomainError
from .inversion import talbot, talbot_with_scale

_EPS = float(np.finfo(float).eps)
_POLE_TOL = 1e-9
_TALBOT_DOUBLE = (20, 24)
_ML_METHODS = ("auto", "series", "asymptotic", "laplace", "mp")


def _wrap(value, scalar):
    if scalar:
        return float(np.asarray(value).reshape(-1)[0])
    return value


def gamma_fn(x):
    """Gamma function for positive real arguments."""
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("gamma_fn needs x > 0")
    out = sc.gamma(x)
    if np.any(np.isinf(out)):
        raise OverflowError("gamma_fn overflows for x >= 171.62")
    return _wrap(out, scalar)


def lower_incomplete_gamma(x, v):
    """Unregularised lower incomplete gamma ``int_0^x e^-u u^(v-1) du``."""
    scalar = np.ndim(x) == 0 and np.ndim(v) == 0
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(~(x >= 0)) or np.any(~(v > 0)):
        raise DomainError("lower_incomplete_gamma needs x >= 0 and v > 0")
    p = sc.gammainc(v, x)
    with np.errstate(divide="ignore", over="ignore"):
        out = np.where(v < 150.0, p * sc.gamma(np.minimum(v, 150.0)),
                       np.exp(np.log(p) + sc.gammaln(v)))
    return _wrap(out, scalar)


def regularized_lower_gamma(x, v):
    """``P(x, v) = gamma(x; v) / Gamma(v)``, the Gamma(v, 1) distribution function."""
    scalar = np.ndim(x) == 0 and np.ndim(v) == 0
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(~(x >= 0)) or np.any(~(v > 0)):
        raise DomainError("regularized_lower_gamma needs x >= 0 and v > 0")
    return _wrap(sc.gammainc(v, x), scalar)


def incomplete_beta(a, b, z):
    """Unregularised incomplete beta ``B(a, b; z) = int_0^z u^(a-1) (1-u)^(b-1) du``."""
    scalar = all(np.ndim(q) == 0 for q in (a, b, z))
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    z = np.asarray(z, dtype=float)
    if np.any(~(a > 0)) or np.any(~(b > 0)):
        raise DomainError("incomplete_beta needs a > 0 and b > 0")
    if np.any(~((z >= 0) & (z <= 1))):
        raise DomainError("incomplete_beta needs 0 <= z <= 1")
    return _wrap(sc.betainc(a, b, z) * sc.beta(a, b), scalar)


# ---------------------------------------------------------------------------
# Kummer's confluent hypergeometric function
# ---------------------------------------------------------------------------


def _kummer_series(a, b, x, max_terms):
    term = 1.0
    total, comp, absum = 1.0, 0.0, 1.0
    for k in range(max_terms):
        term *= (a + k) * x / ((b + k) * (k + 1))
        # Neumaier-compensated accumulation
        new = total + term
        if abs(total) >= abs(term):
            comp += (total - new) + term
        else:
            comp += (term - new) + total
        total = new
        absum += abs(term)
        if abs(term) <= 0.5 * _EPS * abs(total) and abs((a + k + 1) * x) < (b + k + 1) * (k + 2):
            return total + comp, (k + 4) * _EPS * absum
    raise ConvergenceError(f"Kummer series for M({a}, {b}; {x}) exhausted {max_terms} terms")


def kummer_m(a, b, x, cfg: EvalConfig | None = None) -> float:
    """Kummer's confluent hypergeometric function ``M(a, b; x)`` for real x.

    Negative arguments below -1 go through Kummer's transformation
    ``M(a, b; x) = e^x M(b - a, b; -x)``, whose series has no cancellation
    when ``b >= a``.
    """
    cfg = cfg or DEFAULT_EVAL
    a, b, x = float(a), float(b), float(x)
    if not (a > 0 and b > 0):
        raise DomainError("kummer_m needs a > 0 and b > 0")
    if a == b:
        return math.exp(x)
    if x >= -1.0:
        value, err = _kummer_series(a, b, x, cfg.max_terms)
    else:
        inner, err = _kummer_series(b - a, b, -x, cfg.max_terms)
        value, err = math.exp(x) * inner, math.exp(x) * err
    if err <= cfg.rel_tol * abs(value):
        return value
    with mpmath.workdps(40):
        return float(mpmath.hyp1f1(a, b, x))


# ---------------------------------------------------------------------------
# Mittag-Leffler and Prabhakar functions
# ---------------------------------------------------------------------------


def _series(alpha, beta, gamma, z, max_terms):
    """Vectorised defining series of E^gamma_{alpha,beta}(z).

    Returns ``(value, error_estimate, converged)``. For ``gamma == 1`` the
    Pochhammer ratio ``(gamma)_k / k!`` is exactly one at every step.
    """
    z = np.asarray(z, dtype=float)
    total = np.zeros_like(z)
    comp = np.zeros_like(z)
    err = np.zeros_like(z)
    prev = np.full_like(z, np.inf)
    done = np.zeros(z.shape, dtype=bool)
    bad = np.zeros(z.shape, dtype=bool)
    with np.errstate(divide="ignore"):
        logabs = np.log(np.abs(z))
    neg = z < 0
    coef, logc, sign_c = 1.0, 0.0, 1.0
    for k in range(max_terms):
        arg = alpha * k + beta
        rg = float(sc.rgamma(arg))
        lin = abs(coef) < 1e250 and rg > 1e-280
        with np.errstate(over="ignore", invalid="ignore"):
            zk = z**k
        if lin and np.all(np.abs(zk) < 1e250):
            term = (coef * rg) * zk
            rel = 4.0 * _EPS + k * _EPS
        else:
            with np.errstate(over="ignore", invalid="ignore"):
                logt = logc - sc.gammaln(arg) + (k * logabs if k else 0.0)
                term = sign_c * np.where(neg & (k % 2 == 1), -1.0, 1.0) * np.exp(logt)
            rel = (4.0 + k + np.abs(logt)) * _EPS
        bad |= ~np.isfinite(term)
        term = np.where(done | bad, 0.0, term)
        new = total + term
        big = np.abs(total) >= np.abs(term)
        comp += np.where(big, (total - new) + term, (term - new) + total)
        total = new
        err += rel * np.abs(term)
        mag = np.abs(term)
        fresh = (k > 0) & ~done & (mag <= 0.5 * _EPS * np.abs(total)) & (mag <= prev)
        done |= fresh & ~bad
        prev = np.where(done, prev, mag)
        if np.all(done | bad):
            break
        # Pochhammer ratio (gamma)_k / k!, linear while small, log-space beyond
        step = (gamma + k) / (k + 1)
        if step == 0.0:
            coef, logc = 0.0, -np.inf
        else:
            logc += math.log(abs(step))
            sign_c *= math.copysign(1.0, step)
            coef = coef * step if abs(coef) < 1e250 else math.inf
    err[bad] = np.inf
    return total + comp, err, done & ~bad


def _asymptotic(alpha, beta, gamma, z, max_terms):
    """Algebraic asymptotic expansion for z < 0; returns (value, error) or None."""
    if not (0 < alpha < 2) or z >= 0:
        return None
    x = -z
    logx = math.log(x)
    total = comp = 0.0
    coef = 1.0
    prev = math.inf
    falling = False
    negligible = 0
    err = None
    for k in range(max_terms):
        if coef == 0.0:
            # negative integer gamma: the expansion terminates
            err = 4 * _EPS * abs(total)
            break
        arg = beta - alpha * (gamma + k)
        # 1/Gamma vanishes at poles; rounding leaves ~1e-16 there, which must
        # not pass for a converged tail
        at_pole = arg <= 0.5 and abs(arg - round(arg)) < _POLE_TOL
        rg = 0.0 if at_pole else float(sc.rgamma(arg))
        if rg != 0.0:
            term = (-1) ** k * coef * rg * math.exp(-(gamma + k) * logx)
            mag = abs(term)
            # early terms may grow; only growth after a decrease marks divergence
            if mag > prev and falling:
                err = prev
                break
            falling = falling or mag < prev
            new = total + term
            comp += ((total - new) + term) if abs(total) >= mag else ((term - new) + total)
            total = new
            prev = mag
            negligible = negligible + 1 if mag <= 0.5 * _EPS * abs(total) else 0
            if negligible == 2:
                err = mag + 4 * _EPS * abs(total)
                break
        elif k > 64 and total == 0.0:
            return None
        coef *= (gamma + k) / (k + 1)
    if err is None or total == 0.0:
        return None
    # (gamma)_k / k! already carries the 1 / Gamma(gamma) prefactor
    value = total + comp
    if alpha >= 1:
        # exponentially small contribution of the pole pair at arg = +-pi/alpha
        root = x ** (1.0 / alpha)
        expo = root * math.cos(math.pi / alpha)
        err += math.exp(expo) * (1.0 + root) ** (2.0 * (abs(gamma) + abs(beta)) + 2.0) / alpha
    return value, err


def _laplace(alpha, beta, gamma, z):
    """Talbot inversion of the Laplace pair at t = 1; returns (value, error) or None.

    In double precision the Talbot error is smallest near 20 nodes: rounding
    grows like ``eps * exp(2n/5)`` while truncation falls like ``10^(-0.6 n)``.
    The error estimate compares 20 and 24 nodes and adds the rounding bound.
    """
    if not (0 < alpha <= 1) or z >= 0:
        return None
    x = -z

    def transform(s):
        return s ** (alpha * gamma - beta) / (s**alpha + x) ** gamma

    value, scale = (float(v[0]) for v in talbot_with_scale(transform, 1.0, _TALBOT_DOUBLE[0]))
    check = float(talbot(transform, 1.0, _TALBOT_DOUBLE[1])[0])
    return value, abs(value - check) + 8 * _EPS * scale


def _laplace_mp(alpha, beta, gamma, z, dps=30, n=(40, 52)):
    """Fixed-Talbot inversion of the Laplace pair in extended precision.

    Returns ``(value, error)`` with the error taken from two node counts, or
    None outside ``alpha <= 1, z < 0``.
    """
    if not (0 < alpha <= 1) or z >= 0:
        return None
    out = []
    with mpmath.workdps(dps):
        a, b, g, x = (mpmath.mpf(q) for q in (alpha, beta, gamma, -z))

        def transform(s):
            return s ** (a * g - b) / (s**a + x) ** g

        for m in n:
            s0 = mpmath.mpf(2 * m) / 5
            total = mpmath.exp(s0) * transform(s0) / 2
            for k in range(1, m):
                theta = k * mpmath.pi / m
                cot = mpmath.cot(theta)
                sigma = s0 * theta * (cot + 1j)
                dsig = 1 + 1j * (theta + (theta * cot - 1) * cot)
                total += mpmath.re(mpmath.exp(sigma) * dsig * transform(sigma))
            out.append(total * s0 / m)
    return float(out[1]), float(abs(out[1] - out[0]))


def _mp_series(alpha, beta, gamma, z, max_terms):
    """Defining series in extended precision; the result is rounded to double."""
    if z == 0:
        return float(sc.rgamma(beta))
    k = np.arange(max_terms, dtype=float)
    if gamma > 0:
        logc = sc.gammaln(gamma + k) - sc.gammaln(gamma) - sc.gammaln(k + 1)
    else:
        logc = np.concatenate(([0.0], np.cumsum(np.log(np.abs((gamma + k[:-1]) / (k[:-1] + 1))))))
    logt = logc + k * math.log(abs(z)) - sc.gammaln(alpha * k + beta)
    finite = logt[np.isfinite(logt)]
    if finite.size == 0 or finite[-1] > np.max(finite) - 40 * math.log(10):
        raise ConvergenceError(
            f"series for E^{gamma}_{{{alpha},{beta}}}({z}) needs more than {max_terms} terms"
        )
    peak = max(0.0, float(np.max(finite)) / math.log(10))
    dps = int(peak) + 30
    for _ in range(4):
        with mpmath.workdps(dps):
            zz, a, b, g = (mpmath.mpf(q) for q in (z, alpha, beta, gamma))
            total = mpmath.mpf(0)
            coef = mpmath.mpf(1)
            zk = mpmath.mpf(1)
            biggest = mpmath.mpf(0)
            prev = mpmath.inf
            converged = False
            for j in range(max_terms):
                term = coef * zk * mpmath.rgamma(a * j + b)
                total += term
                mag = abs(term)
                biggest = max(biggest, mag)
                if j > 0 and mag <= prev and mag < mpmath.mpf(10) ** (-25) * abs(total):
                    converged = True
                    break
                prev = mag
                coef *= (g + j) / (j + 1)
                zk *= zz
            if not converged:
                raise ConvergenceError(
                    f"extended-precision series for E^{gamma}_{{{alpha},{beta}}}({z}) "
                    f"exhausted {max_terms} terms"
                )
            if total == 0:
                return 0.0
            lost = float(mpmath.log10(biggest / abs(total)))
            if lost + 25 <= dps:
                value = float(total)
                if math.isinf(value):
                    raise OverflowError("Mittag-Leffler value overflows double precision")
                return value
            dps = int(lost) + 40
    raise ConvergenceError(f"cancellation in E^{gamma}_{{{alpha},{beta}}}({z}) beyond working precision")


def _ml3(alpha, beta, gamma, z, cfg, method):
    if method not in _ML_METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {_ML_METHODS}")
    if not (alpha > 0 and beta > 0):
        raise DomainError("Mittag-Leffler functions need alpha > 0 and beta > 0")
    scalar = np.ndim(z) == 0
    zf = np.atleast_1d(np.asarray(z, dtype=float)).ravel()
    if np.any(np.isnan(zf)):
        raise DomainError("argument is NaN")
    if gamma == 0:
        return _wrap(np.full(np.shape(z), float(sc.rgamma(beta))), scalar)
    out = np.empty_like(zf)
    pending = np.ones(zf.shape, dtype=bool)

    if method in ("auto", "series"):
        mask = (np.abs(zf) <= cfg.series_radius) | (zf >= 0) if method == "auto" else pending
        if np.any(mask):
            val, err, done = _series(alpha, beta, gamma, zf[mask], cfg.max_terms)
            if method == "series":
                if not np.all(done):
                    raise ConvergenceError(f"series did not converge in {cfg.max_terms} terms")
                ok = np.ones(val.shape, dtype=bool)
            else:
                ok = done & (err <= cfg.rel_tol * np.abs(val))
            idx = np.flatnonzero(mask)[ok]
            out[idx] = val[ok]
            pending[idx] = False

    for i in np.flatnonzero(pending):
        out[i] = _ml3_scalar_fallback(alpha, beta, gamma, float(zf[i]), cfg, method)
    return _wrap(out.reshape(np.shape(z)), scalar)


def _ml3_scalar_fallback(alpha, beta, gamma, z, cfg, method):
    if method == "asymptotic":
        res = _asymptotic(alpha, beta, gamma, z, cfg.max_terms)
        if res is None:
            raise ConvergenceError(f"asymptotic expansion not applicable at z={z}")
        return res[0]
    if method == "laplace":
        res = _laplace(alpha, beta, gamma, z)
        if res is None:
            raise DomainError("Laplace route needs z < 0 and alpha <= 1")
        return res[0]
    if method == "mp":
        return _mp_series(alpha, beta, gamma, z, max(cfg.max_terms, 20000))
    # auto
    branches = (
        lambda: _asymptotic(alpha, beta, gamma, z, cfg.max_terms),
        lambda: _laplace(alpha, beta, gamma, z),
        lambda: _laplace_mp(alpha, beta, gamma, z),
    )
    for branch in branches:
        res = branch()
        if res is not None and res[1] <= cfg.rel_tol * abs(res[0]):
            return res[0]
    return _mp_series(alpha, beta, gamma, z, max(cfg.max_terms, 20000))


def mittag_leffler(alpha, beta, z, cfg: EvalConfig | None = None, method: str = "auto"):
    """Two-parameter Mittag-Leffler function ``E_{alpha,beta}(z)`` for real z.

    ``z`` may be an array. ``method`` forces a single branch ("series",
    "asymptotic", "laplace", "mp"); the default picks the first branch whose
    error estimate meets ``cfg.rel_tol``.
    """
    return _ml3(float(alpha), float(beta), 1.0, z, cfg or DEFAULT_EVAL, method)


def prabhakar(alpha, beta, gamma, z, cfg: EvalConfig | None = None, method: str = "auto"):
    """Three-parameter (Prabhakar) Mittag-Leffler function ``E^gamma_{alpha,beta}(z)``.

    ``gamma`` may be any real number; negative values occur for moment orders
    in (-1, 0). ``gamma == 1`` is the two-parameter function.
    """
    return _ml3(float(alpha), float(beta), float(gamma), z, cfg or DEFAULT_EVAL, method)
