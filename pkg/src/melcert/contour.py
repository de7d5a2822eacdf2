"""Closed-loop quadrature in the complex plane.

Integrals are taken over circles ``z = c + r exp(i t)`` with the periodic
trapezoidal rule.  For an integrand analytic on an annulus around the circle
the rule converges geometrically, so the sample count is doubled until two
successive estimates agree.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "ContourSpec",
    "ContourResult",
    "ContourError",
    "ForbiddenLineError",
    "integrate_loop",
    "residue_at",
    "default_contour",
    "respects_forbidden_lines",
]

FORBIDDEN_MARGIN = 1e-12
RADIUS_FLOOR = 1e-6


class ContourError(RuntimeError):
    """Quadrature failed: the integrand could not be evaluated or did not converge."""


class ForbiddenLineError(ValueError):
    """A loop (or its centre) meets i*R or T* + i*R."""


@dataclass(frozen=True)
class ContourSpec:
    center: complex
    radius: float
    initial_samples: int = 64
    tol: float = 1e-10
    max_samples: int = 65536

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ValueError("radius must be positive and finite")
        n = self.initial_samples
        if n < 8 or n & (n - 1):
            raise ValueError("initial_samples must be a power of two >= 8")
        if self.max_samples < n:
            raise ValueError("max_samples must be >= initial_samples")
        if not self.tol > 0:
            raise ValueError("tol must be positive")

    def mirrored(self) -> "ContourSpec":
        """Same loop reflected across the real axis."""
        return ContourSpec(self.center.conjugate(), self.radius, self.initial_samples,
                           self.tol, self.max_samples)

    def with_radius(self, radius: float) -> "ContourSpec":
        return ContourSpec(self.center, radius, self.initial_samples, self.tol, self.max_samples)

    def to_dict(self) -> dict:
        return {
            "center": self.center,
            "radius": self.radius,
            "initial_samples": self.initial_samples,
            "tol": self.tol,
            "max_samples": self.max_samples,
        }


@dataclass(frozen=True)
class ContourResult:
    value: complex | np.ndarray
    samples_used: int
    est_error: float


def respects_forbidden_lines(spec: ContourSpec, t_star: float) -> bool:
    """True when the circle stays strictly clear of i*R and T* + i*R."""
    x = spec.center.real
    r = spec.radius + FORBIDDEN_MARGIN
    return abs(x) > r and abs(x - t_star) > r


def _evaluate(f, z):
    try:
        with np.errstate(divide="raise", over="raise", invalid="raise", under="ignore"):
            vals = np.asarray(f(z), dtype=complex)
    except (ArithmeticError, FloatingPointError, ValueError) as exc:
        raise ContourError(f"integrand evaluation failed on the loop: {exc}") from exc
    if vals.shape[:1] != z.shape:
        raise ContourError("integrand must return one value (or row) per sample point")
    if not np.all(np.isfinite(vals)):
        raise ContourError("integrand returned non-finite values on the loop")
    return vals


def _weighted_sum(f, spec, angles, orientation):
    w = np.exp(1j * orientation * angles)
    z = spec.center + spec.radius * w
    vals = _evaluate(f, z)
    dz = (1j * orientation * spec.radius) * w
    return np.tensordot(dz, vals, axes=(0, 0))


def integrate_loop(
    f: Callable[[np.ndarray], np.ndarray],
    spec: ContourSpec,
    orientation: int = 1,
) -> ContourResult:
    """Integrate ``f`` once around the circle described by ``spec``.

    ``f`` is called with a 1-d complex array of sample points and must return
    an array whose leading axis matches it; trailing axes are integrated
    componentwise.  ``orientation=-1`` traverses the circle clockwise.

    Doubling stops when ``|I_2N - I_N| <= tol * max(1, |I_2N|)`` (max over
    components).  The result's ``est_error`` is the unscaled difference.
    """
    if orientation not in (1, -1):
        raise ValueError("orientation must be +1 or -1")
    n = spec.initial_samples
    angles = 2.0 * math.pi * np.arange(n) / n
    total = _weighted_sum(f, spec, angles, orientation)
    estimate = total * (2.0 * math.pi / n)
    err = math.inf
    while True:
        if 2 * n > spec.max_samples:
            raise ContourError(
                f"no convergence within {spec.max_samples} samples (last difference {err:.3g})"
            )
        mid = 2.0 * math.pi * (np.arange(n) + 0.5) / n
        total = total + _weighted_sum(f, spec, mid, orientation)
        n *= 2
        refined = total * (2.0 * math.pi / n)
        err = float(np.max(np.abs(refined - estimate)))
        scale = max(1.0, float(np.max(np.abs(refined))))
        estimate = refined
        if err <= spec.tol * scale:
            value = complex(estimate) if np.ndim(estimate) == 0 else estimate
            return ContourResult(value, n, err)


def residue_at(
    f: Callable[[np.ndarray], np.ndarray],
    pole: complex,
    radius: float,
    *,
    initial_samples: int = 64,
    tol: float = 1e-10,
    max_samples: int = 65536,
) -> complex:
    """Residue of ``f`` at an isolated ``pole``: the loop integral divided by 2*pi*i.

    No other singularity may lie within ``2 * radius`` of the pole.
    """
    spec = ContourSpec(pole, radius, initial_samples, tol, max_samples)
    res = integrate_loop(f, spec)
    return res.value / (2j * math.pi)


def default_contour(
    pole: complex,
    nearby_singularities: Sequence[complex] = (),
    t_star: float | None = None,
    **spec_kwargs,
) -> ContourSpec:
    """Circle centred on ``pole`` with a "sufficiently small" radius.

    The radius is half the distance to the nearest other singularity and to
    each forbidden line (i*R and, when ``t_star`` is given, T* + i*R).
    """
    pole = complex(pole)
    limits = []
    if t_star is not None:
        d0 = abs(pole.real)
        d1 = abs(pole.real - t_star)
        if d0 <= FORBIDDEN_MARGIN or d1 <= FORBIDDEN_MARGIN:
            raise ForbiddenLineError(
                f"pole {pole!r} lies on a forbidden line (Re = 0 or Re = T* = {t_star!r})"
            )
        limits += [0.5 * d0, 0.5 * d1]
    for s in nearby_singularities:
        d = abs(complex(s) - pole)
        if d > FORBIDDEN_MARGIN:
            limits.append(0.5 * d)
    if not limits:
        raise ValueError("no geometric constraint: give t_star or nearby singularities")
    radius = min(limits)
    if radius < RADIUS_FLOOR:
        raise ForbiddenLineError(
            f"admissible radius {radius:.3g} is below the floor {RADIUS_FLOOR:g}"
        )
    return ContourSpec(pole, radius, **spec_kwargs)
