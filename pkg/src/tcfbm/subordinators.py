"""Subordinator families described by their Laplace exponents.

A subordinator D satisfies ``E exp(-lam D(s)) = exp(-s phi(lam))``. Each family
below is an immutable value carrying its parameters and a ``phi`` method
written with plain arithmetic operators, so it evaluates on floats, numpy
arrays (real or complex, as needed on a Talbot contour) and ``mpmath.mpf``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, fields
from typing import Callable, Mapping, Union

import numpy as np

from .errors import DomainError, SpecValidationError

_SUM_TOL = 1e-12


@dataclass(frozen=True)
class Stable:
    """Standard alpha-stable subordinator, ``phi(lam) = lam^alpha``."""

    alpha: float

    family = "stable"

    def __post_init__(self):
        _raise_if(self, _stable_violations(self.alpha))

    def phi(self, lam):
        return lam**self.alpha

    @property
    def small_time_exponent(self) -> float:
        return self.alpha


@dataclass(frozen=True)
class TemperedStable:
    """Tempered stable subordinator, ``phi(lam) = (a + lam)^alpha - a^alpha``."""

    alpha: float
    a: float

    family = "tempered"

    def __post_init__(self):
        _raise_if(self, _tempered_violations(self.alpha, self.a))

    def phi(self, lam):
        return tempered_phi(self.alpha, self.a, lam)

    @property
    def small_time_exponent(self) -> float:
        return self.alpha


@dataclass(frozen=True)
class StableMixture:
    """Sum of two independent stable subordinators,
    ``phi(lam) = c1 lam^alpha1 + c2 lam^alpha2`` with ``c1 + c2 = 1``."""

    alpha1: float
    alpha2: float
    c1: float
    c2: float

    family = "mixture"

    def __post_init__(self):
        _raise_if(self, _mixture_violations(self.alpha1, self.alpha2, self.c1, self.c2))

    def phi(self, lam):
        return self.c1 * lam**self.alpha1 + self.c2 * lam**self.alpha2

    @property
    def small_time_exponent(self) -> float:
        return self.alpha2


@dataclass(frozen=True)
class DeterministicDrift:
    """Pure drift ``D(s) = mu s``, so that ``Y(t) = t / mu`` exactly."""

    mu: float

    family = "drift"

    def __post_init__(self):
        _raise_if(self, _drift_violations(self.mu))

    def phi(self, lam):
        return self.mu * lam

    @property
    def small_time_exponent(self) -> float:
        return 1.0


@dataclass(frozen=True)
class CustomBernstein:
    """User-supplied Laplace exponent.

    ``phi`` must accept complex arguments for the default Talbot inversion.
    Monotonicity and concavity are checked on a log-spaced grid at
    construction; a failed check warns rather than raises, since a grid check
    can neither prove nor fully refute the Bernstein property.
    ``small_time_exponent`` is the power ``p`` with ``U(t) ~ t^p`` near zero and
    only steers the quadrature substitution.
    """

    phi: Callable = field(compare=False)
    small_time_exponent: float = 1.0

    family = "custom"

    def __post_init__(self):
        problems = []
        if not callable(self.phi):
            problems.append("phi must be callable")
        if not (0 < self.small_time_exponent <= 1):
            problems.append("small_time_exponent must lie in (0, 1]")
        _raise_if(self, problems)
        self._grid_check()

    def _grid_check(self):
        lam = np.logspace(-6, 6, 121)
        try:
            vals = np.array([float(np.real(self.phi(x))) for x in lam])
            at_zero = float(np.real(self.phi(0.0)))
        except Exception as exc:  # opaque callable; report instead of crashing
            warnings.warn(f"custom phi could not be evaluated on the check grid: {exc}", stacklevel=3)
            return
        if abs(at_zero) > 1e-12:
            warnings.warn(f"custom phi(0) = {at_zero!r}, expected 0", stacklevel=3)
        if np.any(~np.isfinite(vals)) or np.any(vals <= 0):
            warnings.warn("custom phi is not finite and positive on (0, inf)", stacklevel=3)
            return
        if np.any(np.diff(vals) < -1e-12 * np.abs(vals[1:])):
            warnings.warn("custom phi is not nondecreasing on the check grid", stacklevel=3)
        # concavity on a log grid: secant slopes must not increase
        slopes = np.diff(vals) / np.diff(lam)
        if np.any(np.diff(slopes) > 1e-9 * np.abs(slopes[1:])):
            warnings.warn("custom phi is not concave on the check grid", stacklevel=3)


def tempered_phi(alpha, a, lam):
    """``(a + lam)^alpha - a^alpha`` evaluated as ``a^alpha expm1(alpha log1p(lam/a))``.

    The direct difference loses digits when ``|lam| << a``; numpy arrays
    (real or complex) and floats take the stable route, other numeric types
    (such as ``mpmath.mpf``) the direct one. ``a`` may be an array
    broadcasting against ``lam``.
    """
    if isinstance(lam, (int, float, complex, np.ndarray, np.number)) and not isinstance(lam, bool):
        return a**alpha * np.expm1(alpha * _log1p(lam / a))
    return (a + lam) ** alpha - a**alpha


def _log1p(z):
    """``log1p`` that stays accurate for small complex ``z``.

    numpy evaluates complex ``log1p`` as ``log(1 + z)``, losing about
    ``eps / |z|`` in relative terms.
    """
    if not np.iscomplexobj(z):
        return np.log1p(z)
    x, y = np.real(z), np.imag(z)
    small = np.abs(z) < 0.5
    # x (2 + x) + y^2 = |1 + z|^2 - 1, exact enough for small z and overflow-free there
    xs, ys = np.where(small, x, 0.0), np.where(small, y, 0.0)
    near = 0.5 * np.log1p(xs * (2.0 + xs) + ys * ys) + 1j * np.arctan2(ys, 1.0 + xs)
    return np.where(small, near, np.log1p(z))


SubordinatorSpec = Union[Stable, TemperedStable, StableMixture, DeterministicDrift, CustomBernstein]
_CLOSED = (Stable, TemperedStable, StableMixture, DeterministicDrift)


def _stable_violations(alpha):
    return [] if _in_open(alpha, 0, 1) else [f"alpha={alpha!r} outside (0,1)"]


def _tempered_violations(alpha, a):
    out = _stable_violations(alpha)
    if not (_finite(a) and a > 0):
        out.append(f"a={a!r} must be > 0")
    return out


def _mixture_violations(alpha1, alpha2, c1, c2):
    out = []
    if not _in_open(alpha1, 0, 1):
        out.append(f"alpha1={alpha1!r} outside (0,1)")
    if not _in_open(alpha2, 0, 1):
        out.append(f"alpha2={alpha2!r} outside (0,1)")
    if _finite(alpha1) and _finite(alpha2) and not alpha1 < alpha2:
        out.append(f"alpha1={alpha1!r} must be < alpha2={alpha2!r}")
    if not (_finite(c1) and c1 > 0):
        out.append(f"c1={c1!r} must be > 0")
    if not (_finite(c2) and c2 > 0):
        out.append(f"c2={c2!r} must be > 0")
    if _finite(c1) and _finite(c2) and abs(c1 + c2 - 1.0) > _SUM_TOL:
        out.append(f"c1 + c2 = {c1 + c2!r} != 1")
    return out


def _drift_violations(mu):
    return [] if (_finite(mu) and mu > 0) else [f"mu={mu!r} must be > 0"]


def _finite(x) -> bool:
    return isinstance(x, (int, float, np.floating, np.integer)) and math.isfinite(x)


def _in_open(x, lo, hi) -> bool:
    return _finite(x) and lo < x < hi


def _raise_if(spec, problems):
    if problems:
        raise SpecValidationError(spec.family, problems)


def laplace_exponent(spec: SubordinatorSpec, lam):
    """Evaluate ``phi(lam)`` for ``lam >= 0``; ``phi(0) == 0`` exactly."""
    arr = np.asarray(lam, dtype=float)
    if np.any(~(arr >= 0)):
        raise DomainError("laplace_exponent needs lambda >= 0")
    if arr.ndim == 0:
        return 0.0 if arr == 0 else float(spec.phi(float(arr)))
    out = np.asarray(spec.phi(arr), dtype=float)
    return np.where(arr == 0, 0.0, out)


_BUILDERS = {
    "stable": (Stable, _stable_violations, ("alpha",)),
    "tempered": (TemperedStable, _tempered_violations, ("alpha", "a")),
    "mixture": (StableMixture, _mixture_violations, ("alpha1", "alpha2", "c1", "c2")),
    "drift": (DeterministicDrift, _drift_violations, ("mu",)),
}


def validate_spec(spec: SubordinatorSpec | Mapping[str, object]) -> SubordinatorSpec:
    """Return a validated spec or raise :class:`SpecValidationError`.

    Accepts either a spec instance or a mapping such as
    ``{"family": "stable", "alpha": 0.7}``. Every violated constraint is listed
    in the error, not only the first.
    """
    if isinstance(spec, _CLOSED + (CustomBernstein,)):
        return spec
    if not isinstance(spec, Mapping):
        raise SpecValidationError("unknown", [f"not a subordinator spec: {spec!r}"])
    family = str(spec.get("family", ""))
    if family not in _BUILDERS:
        raise SpecValidationError(family or "unknown", [f"unknown family {family!r}; choose from {sorted(_BUILDERS)}"])
    cls, check, names = _BUILDERS[family]
    problems, values = [], {}
    for name in names:
        if name not in spec:
            problems.append(f"missing parameter {name}")
            continue
        try:
            values[name] = float(spec[name])
        except (TypeError, ValueError):
            problems.append(f"{name}={spec[name]!r} is not a number")
    extra = set(spec) - set(names) - {"family"}
    problems += [f"unexpected parameter {k}" for k in sorted(extra)]
    if not problems:
        problems = check(*(values[n] for n in names))
    if problems:
        raise SpecValidationError(family, problems)
    return cls(**values)


def spec_params(spec: SubordinatorSpec) -> dict:
    """Parameters of a closed-form spec as an ordered dict (no family tag)."""
    if isinstance(spec, CustomBernstein):
        raise DomainError("custom specs have no flat parameter form")
    return {f.name: getattr(spec, f.name) for f in fields(spec)}


def to_kv(spec: SubordinatorSpec) -> str:
    """Flat ``key=value`` form, e.g. ``family=stable alpha=0.7``."""
    parts = [f"family={spec.family}"] + [f"{k}={v!r}" for k, v in spec_params(spec).items()]
    return " ".join(parts)


def from_kv(text: str) -> SubordinatorSpec:
    """Parse the flat ``key=value`` form produced by :func:`to_kv`."""
    mapping = {}
    for token in text.split():
        key, sep, value = token.partition("=")
        if not sep:
            raise SpecValidationError("unknown", [f"token {token!r} is not key=value"])
        mapping[key] = value
    return validate_spec(mapping)
