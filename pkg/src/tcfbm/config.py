"""Numerical configuration objects.

All evaluation routines accept an optional config; the module-level defaults
are used when none is given.
"""

from __future__ import annotations

from dataclasses import dataclass, field

INVERSION_METHODS = ("talbot", "stehfest")


@dataclass(frozen=True)
class InversionConfig:
    """Settings for numerical Laplace inversion.

    ``node_count`` is the number of contour nodes for fixed Talbot and the
    (even) number of Stehfest terms for Gaver-Stehfest. ``tol`` is the target
    relative accuracy; a run is flagged unstable when a second, coarser node
    count disagrees by more than ``100 * tol``.
    """

    node_count: int = 32
    method: str = "talbot"
    tol: float = 1e-8

    def __post_init__(self):
        if self.method not in INVERSION_METHODS:
            raise ValueError(f"unknown inversion method {self.method!r}")
        if self.node_count < 8:
            raise ValueError("node_count must be >= 8")
        if self.method == "stehfest" and self.node_count % 2:
            raise ValueError("Gaver-Stehfest needs an even node_count")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass(frozen=True)
class EvalConfig:
    """Tolerances and switch points for special functions and quadrature."""

    rel_tol: float = 1e-12
    max_terms: int = 2000
    series_radius: float = 5.0
    quad_tol: float = 1e-12
    quad_max_level: int = 9
    # special-function accuracy demanded at quadrature nodes
    integrand_rel_tol: float = 1e-10
    # Stable covariances are evaluated both by quadrature and by the
    # incomplete-beta closed form; a mismatch above this raises.
    cross_check_tol: float | None = 1e-8
    inversion: InversionConfig = field(default_factory=InversionConfig)

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")
        if not self.series_radius > 0:
            raise ValueError("series_radius must be positive")
        if not self.quad_tol > 0:
            raise ValueError("quad_tol must be positive")
        if not self.integrand_rel_tol > 0:
            raise ValueError("integrand_rel_tol must be positive")
        if self.quad_max_level < 3:
            raise ValueError("quad_max_level must be >= 3")


DEFAULT_EVAL = EvalConfig()
DEFAULT_INVERSION = InversionConfig()
