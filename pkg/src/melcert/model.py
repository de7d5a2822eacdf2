"""System models, periodic-orbit families and the action-angle chart.

A :class:`SystemModel` is a perturbed integrable system in action-angle form,

    dI/dt = eps * h(I, theta; eps),   dtheta/dt = omega(I) + eps * g(I, theta; eps),

whose callables accept complexified angles, so that loop integrals along
complex time can be taken.  An :class:`OrbitFamily` is a closed-form family of
periodic orbits of a planar Hamiltonian system; :func:`frequency_chart` turns
one into action-angle coordinates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .elliptic import EllipticModulus, complete_elliptic_K, pole_lattice

__all__ = [
    "SystemModel",
    "OrbitFamily",
    "ActionAngleChart",
    "ChartError",
    "action_of_orbit",
    "frequency_chart",
    "transformed_h",
    "transformed_system",
]

J2 = np.array([[0.0, 1.0], [-1.0, 0.0]])


class ChartError(ValueError):
    """The action map could not be built or inverted."""


@dataclass(frozen=True)
class SystemModel:
    """Perturbed integrable system with ``dim_action`` actions and ``dim_angle`` angles.

    ``h(I, theta, eps)`` and ``g(I, theta, eps)`` take ``theta`` of shape
    ``(m,)`` or ``(m, N)`` (complex allowed) and return ``(l,)``/``(l, N)``
    resp. ``(m,)``/``(m, N)``.  ``d_omega(I)`` is the ``(m, l)`` Jacobian.

    ``singularities(I, theta)``, when present, lists complex times ``tau`` at
    which ``h(I, omega(I) tau + theta)`` is singular; the first entry is the
    pole the certificate loops around.
    """

    name: str
    dim_action: int
    dim_angle: int
    omega: Callable
    d_omega: Callable
    h: Callable
    g: Callable | None = None
    params: dict = field(default_factory=dict)
    singularities: Callable | None = None
    printed_integral: Callable | None = None

    def __post_init__(self):
        if self.dim_action < 1 or self.dim_angle < 1:
            raise ValueError("dimensions must be positive")

    def frequencies(self, I) -> np.ndarray:
        w = np.asarray(self.omega(np.asarray(I, dtype=float)), dtype=float).reshape(-1)
        if w.shape != (self.dim_angle,):
            raise ValueError(f"omega returned shape {w.shape}, expected ({self.dim_angle},)")
        return w

    def jacobian(self, I) -> np.ndarray:
        d = np.asarray(self.d_omega(np.asarray(I, dtype=float)), dtype=float)
        d = d.reshape(self.dim_angle, self.dim_action)
        return d

    def h_along(self, I, theta0, tau) -> np.ndarray:
        """h(I, omega(I) tau + theta0; 0) for a 1-d array of complex times; shape (N, l)."""
        I = np.asarray(I, dtype=float)
        w = self.frequencies(I)
        tau = np.asarray(tau, dtype=complex)
        theta = w[:, None] * tau[None, :] + np.asarray(theta0, dtype=float).reshape(-1, 1)
        out = np.asarray(self.h(I, theta, 0.0), dtype=complex)
        return out.reshape(self.dim_action, tau.size).T


class OrbitFamily:
    """One-parameter family of periodic orbits of dx/dt = J DH(x) given in closed form.

    Subclasses express ``x(t)`` through Jacobi functions of ``zeta = t / c(p)``;
    the poles of ``x`` in complex time are therefore ``c(p)`` times the
    ``sn/cn/dn`` pole lattice.
    """

    name: str = "family"
    a: int = 0
    param_name: str = "k"
    bounds: tuple = (0.0, 1.0)
    # subinterval used for resonance solving and chart inversion
    working: tuple = (0.0, 1.0)
    log_scale: bool = False

    # -- subclass hooks -------------------------------------------------
    def modulus(self, p: float) -> EllipticModulus:
        raise NotImplementedError

    def time_scale(self, p: float) -> float:
        raise NotImplementedError

    def orbit(self, p: float, t):
        raise NotImplementedError

    def period(self, p: float) -> float:
        raise NotImplementedError

    def d_period(self, p: float) -> float:
        raise NotImplementedError

    # -- shared ---------------------------------------------------------
    def check_param(self, p: float) -> float:
        p = float(p)
        lo, hi = self.bounds
        if not (math.isfinite(p) and lo < p < hi):
            raise ValueError(f"{self.param_name}={p!r} outside the admissible interval ({lo}, {hi})")
        return p

    def hamiltonian(self, x):
        x1, x2 = x[0], x[1]
        return 0.5 * self.a * x1 ** 2 + 0.25 * x1 ** 4 + 0.5 * x2 ** 2

    def energy_gradient(self, x):
        x1, x2 = x[0], x[1]
        return np.array([self.a * x1 + x1 ** 3, x2])

    def vector_field(self, x):
        x1, x2 = x[0], x[1]
        return np.array([x2, -self.a * x1 - x1 ** 3])

    def pole(self, p: float) -> complex:
        """The pure-imaginary pole i*c*K' of the orbit in complex time."""
        mod = self.modulus(p)
        return 1j * self.time_scale(p) * complete_elliptic_K(mod.complement())

    def singularities(self, p: float, window) -> list:
        """Poles of x(t) inside a complex-time window ``(lo, hi)``."""
        c = self.time_scale(p)
        lo, hi = (complex(w) / c for w in window)
        return [c * z for z in pole_lattice(self.modulus(p), (lo, hi))]

    def neighbours(self, p: float, center: complex) -> list:
        """Poles of x(t) near ``center`` (within two lattice cells), excluding ``center`` itself."""
        mod = self.modulus(p)
        c = self.time_scale(p)
        span = 2.5 * c * max(complete_elliptic_K(mod), complete_elliptic_K(mod.complement()))
        lo = center - span * (1 + 1j)
        hi = center + span * (1 + 1j)
        return [z for z in self.singularities(p, (lo, hi)) if abs(z - center) > 1e-9 * span]

    def initial_state(self, p: float) -> np.ndarray:
        return np.real(self.orbit(p, 0.0)).astype(float)

    def __repr__(self):
        return f"{type(self).__name__}()"


@dataclass
class ActionAngleChart:
    """Action-angle coordinates built from an :class:`OrbitFamily`.

    ``param_of_action`` inverts the (monotone) action map by bisection on
    ``[lo, hi]``.
    """

    family: OrbitFamily
    lo: float
    hi: float
    increasing: bool
    tol: float = 1e-10

    def action_of_param(self, p: float) -> float:
        return action_of_orbit(self.family, p, tol=self.tol)

    def param_of_action(self, I: float) -> float:
        I = float(I)
        a, b = self.lo, self.hi
        fa = self.action_of_param(a) - I
        fb = self.action_of_param(b) - I
        if fa * fb > 0:
            raise ChartError(f"action {I!r} outside the chart range")
        for _ in range(200):
            mid = 0.5 * (a + b)
            if b - a <= 1e-14 * max(1.0, abs(mid)):
                break
            fm = self.action_of_param(mid) - I
            if fm == 0.0:
                return mid
            if (fm < 0) == (fa < 0):
                a, fa = mid, fm
            else:
                b = mid
        return 0.5 * (a + b)

    def Omega(self, I: float) -> float:
        return 2.0 * math.pi / self.family.period(self.param_of_action(I))

    def Omega_of_param(self, p: float) -> float:
        return 2.0 * math.pi / self.family.period(p)

    def d_Omega(self, I: float) -> float:
        """dOmega/dI = (dOmega/dp) / (dI/dp) by central differences (step 1e-5 relative)."""
        p = self.param_of_action(I)
        return self.d_Omega_at_param(p)

    def d_Omega_at_param(self, p: float) -> float:
        h = 1e-5 * abs(p)
        dO = (self.Omega_of_param(p + h) - self.Omega_of_param(p - h)) / (2 * h)
        dI = (self.action_of_param(p + h) - self.action_of_param(p - h)) / (2 * h)
        return dO / dI


def _periodic_trapezoid(integrand, T, tol, n0=64, n_max=1 << 20):
    """Trapezoidal rule on [0, T) for a T-periodic integrand, doubling until converged."""
    n = n0
    t = T * np.arange(n) / n
    total = np.sum(integrand(t), axis=0)
    est = total * T / n
    while True:
        if 2 * n > n_max:
            raise RuntimeError("periodic quadrature did not converge")
        t = T * (np.arange(n) + 0.5) / n
        total = total + np.sum(integrand(t), axis=0)
        n *= 2
        new = total * T / n
        diff = np.max(np.abs(new - est))
        est = new
        if diff <= tol * max(1.0, float(np.max(np.abs(new)))):
            return est


def action_of_orbit(family: OrbitFamily, param: float, tol: float = 1e-10) -> float:
    """Action (1/2pi) * loop integral of x2 dx1 over one period of the orbit."""
    p = family.check_param(param)
    T = family.period(p)

    def integrand(t):
        x = np.real(family.orbit(p, t))
        x1dot = family.vector_field(x)[0]
        return x[1] * x1dot

    return float(_periodic_trapezoid(integrand, T, tol)) / (2.0 * math.pi)


def frequency_chart(family: OrbitFamily, interval: tuple | None = None,
                    grid: int = 64, tol: float = 1e-10) -> ActionAngleChart:
    """Build the action-angle chart of ``family`` on ``interval`` (default: its working interval).

    Raises :class:`ChartError` if the action map is not monotone on a
    ``grid``-point scan or the period derivative vanishes there.
    """
    lo, hi = interval if interval is not None else family.working
    if family.log_scale:
        ps = np.geomspace(lo, hi, grid)
    else:
        ps = np.linspace(lo, hi, grid)
    actions = np.array([action_of_orbit(family, p, tol) for p in ps])
    steps = np.diff(actions)
    if not (np.all(steps > 0) or np.all(steps < 0)):
        raise ChartError(f"action map of {family.name} is not monotone on [{lo}, {hi}]")
    dT = np.array([family.d_period(p) for p in ps])
    if np.any(dT == 0) or not (np.all(dT > 0) or np.all(dT < 0)):
        raise ChartError(f"dT/d{family.param_name} changes sign or vanishes on [{lo}, {hi}]")
    return ActionAngleChart(family, float(lo), float(hi), bool(steps[0] > 0), tol)


def transformed_h(chart: ActionAngleChart, u: Callable, I: float, theta1, theta2, *, param=None):
    """Action rate of the action-angle form: DH(x) . u(x, theta2) / Omega(I).

    ``x = x^{alpha(I)}(theta1 / Omega(I))``.  Angles may be complex arrays.
    Passing ``param`` skips the (costly) inversion of the action map.
    """
    fam = chart.family
    p = chart.param_of_action(I) if param is None else param
    Om = chart.Omega_of_param(p)
    theta1 = np.asarray(theta1, dtype=complex)
    x = fam.orbit(p, theta1 / Om)
    return np.sum(fam.energy_gradient(x) * u(x, theta2), axis=0) / Om


def transformed_system(chart: ActionAngleChart, u: Callable, nu: float, name: str | None = None,
                       *, param=None) -> SystemModel:
    """The planar forced system in action-angle form: l = 1 action, m = 2 angles.

    ``omega(I) = (Omega(I), nu)``.  When ``param`` is given the model is
    pinned to that orbit, so ``I`` is only used for the chart lookup at
    construction time (this is what the resonance certificates need).
    """
    fam = chart.family
    if param is not None:
        I_fixed = chart.action_of_param(param)
        dOm = chart.d_Omega_at_param(param)

        def resolve(I):
            return param if abs(float(np.ravel(I)[0]) - I_fixed) <= 1e-12 * max(1.0, abs(I_fixed)) \
                else chart.param_of_action(float(np.ravel(I)[0]))
    else:
        dOm = None

        def resolve(I):
            return chart.param_of_action(float(np.ravel(I)[0]))

    def omega(I):
        return np.array([chart.Omega_of_param(resolve(I)), nu])

    def d_omega(I):
        p = resolve(I)
        d = dOm if (param is not None and p == param) else chart.d_Omega_at_param(p)
        return np.array([[d], [0.0]])

    def h(I, theta, eps=0.0):
        theta = np.asarray(theta)
        return np.atleast_1d(transformed_h(chart, u, float(np.ravel(I)[0]), theta[0], theta[1],
                                           param=resolve(I)))[None, ...]

    def g(I, theta, eps=0.0):
        theta = np.asarray(theta)
        I0 = float(np.ravel(I)[0])
        dI = 1e-6 * max(1.0, abs(I0))
        th1 = np.asarray(theta[0], dtype=complex)
        xp = fam.orbit(chart.param_of_action(I0 + dI), th1 / chart.Omega(I0 + dI))
        xm = fam.orbit(chart.param_of_action(I0 - dI), th1 / chart.Omega(I0 - dI))
        dx = (xp - xm) / (2 * dI)
        x = fam.orbit(resolve(I), th1 / chart.Omega_of_param(resolve(I)))
        g1 = np.sum(np.tensordot(J2, dx, axes=(1, 0)) * u(x, theta[1]), axis=0)
        return np.stack([g1, np.zeros_like(g1)])

    return SystemModel(
        name=name or f"{fam.name}/action-angle",
        dim_action=1,
        dim_angle=2,
        omega=omega,
        d_omega=d_omega,
        h=h,
        g=g,
        params={"nu": nu},
    )
