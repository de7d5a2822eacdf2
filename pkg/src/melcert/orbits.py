"""Periodically forced Duffing flows: stroboscopic maps, subharmonic orbits
by Newton continuation, Floquet multipliers and integrator self-checks."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import solve_ivp

from .catalog import DuffingBundle
from .melnikov import (NoClosedFormError, ResonanceSpec, closed_form_J,
                       melnikov_quadrature)
from .model import OrbitFamily

__all__ = [
    "StroboscopicMap",
    "PeriodicOrbitResult",
    "IntegrationError",
    "NoSimpleZeroError",
    "NewtonError",
    "strobe",
    "trajectory",
    "find_subharmonic",
    "find_subharmonics",
    "floquet",
    "classify_multipliers",
    "return_time",
    "energy_drift",
    "reversibility_error",
    "pendulum_first_integrals",
]

ESCAPE_RADIUS = 1e6
FD_STEP = 1e-7
MONODROMY_STEP = 1e-5
STABILITY_BAND = 1e-6


class IntegrationError(RuntimeError):
    """The ODE solver failed or the solution escaped."""


class NoSimpleZeroError(ValueError):
    """The subharmonic Melnikov function has no simple zero."""


class NewtonError(RuntimeError):
    """Newton iteration did not converge; ``last`` holds the final iterate."""

    def __init__(self, msg, last=None, residual=None):
        super().__init__(msg)
        self.last = last
        self.residual = residual


@dataclass(frozen=True)
class StroboscopicMap:
    """Time-2 pi l/nu map of dx1/dt = x2, dx2/dt = -a x1 - x1^3 + eps (beta cos(nu t + phase) - delta x2)."""

    a: float
    nu: float
    l: int = 1
    delta: float = 0.0
    beta: float = 1.0
    eps: float = 0.0
    rtol: float = 1e-12
    atol: float = 1e-12
    max_step: float = math.inf

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("integrator tolerances must be positive")
        if not self.nu > 0 or self.l < 1:
            raise ValueError("need nu > 0 and l >= 1")

    @classmethod
    def for_family(cls, family, spec: ResonanceSpec, delta=0.0, beta=1.0, eps=0.0, **kw):
        fam = family.family if isinstance(family, DuffingBundle) else family
        return cls(a=fam.a, nu=spec.nu, l=spec.l, delta=delta, beta=beta, eps=eps, **kw)

    @property
    def period(self) -> float:
        return 2.0 * math.pi * self.l / self.nu

    def rhs(self, phase):
        a, nu, eps, beta, delta = self.a, self.nu, self.eps, self.beta, self.delta

        def f(t, x):
            x1, x2 = x
            return [x2, -a * x1 - x1 ** 3 + eps * (beta * math.cos(nu * t + phase) - delta * x2)]

        return f

    def energy(self, x):
        x = np.asarray(x)
        return 0.5 * self.a * x[0] ** 2 + 0.25 * x[0] ** 4 + 0.5 * x[1] ** 2

    def trace(self) -> float:
        """Trace of the Jacobian of the vector field (constant: -eps delta)."""
        return -self.eps * self.delta


def _escape(t, x):
    return math.hypot(x[0], x[1]) - ESCAPE_RADIUS


_escape.terminal = True


def _solve(smap: StroboscopicMap, x0, phase, t_end, *, dense=False, t0=0.0, events=None):
    evs = [_escape] + list(events or [])
    sol = solve_ivp(smap.rhs(phase), (t0, t_end), np.asarray(x0, dtype=float), method="DOP853",
                    rtol=smap.rtol, atol=smap.atol, max_step=smap.max_step,
                    dense_output=dense, events=evs)
    if sol.status == -1:
        raise IntegrationError(sol.message)
    if sol.t_events[0].size:
        raise IntegrationError(f"solution left the ball of radius {ESCAPE_RADIUS:g} at t={sol.t_events[0][0]:.6g}")
    return sol


def strobe(smap: StroboscopicMap, x0, phase: float = 0.0) -> np.ndarray:
    """State after one forcing period 2 pi l / nu, starting at t = 0 with forcing phase ``phase``."""
    sol = _solve(smap, x0, phase, smap.period)
    return sol.y[:, -1].copy()


def trajectory(smap: StroboscopicMap, x0, phase: float = 0.0, periods: int = 1, samples: int = 200):
    """Sampled trajectory (t, x1, x2) over ``periods`` strobe periods."""
    t_end = periods * smap.period
    sol = _solve(smap, x0, phase, t_end, dense=True)
    t = np.linspace(0.0, t_end, samples * periods + 1)
    x = sol.sol(t)
    return t, x[0], x[1]


@dataclass(frozen=True)
class PeriodicOrbitResult:
    initial_state: np.ndarray
    residual: float
    phase: float
    eps: float
    floquet_multipliers: tuple | None = None
    stability: str | None = None
    iterations: int = 0

    def to_dict(self) -> dict:
        return {
            "initial_state": np.asarray(self.initial_state).tolist(),
            "residual": self.residual,
            "phase": self.phase,
            "eps": self.eps,
            "floquet_multipliers": None if self.floquet_multipliers is None
            else [complex(m) for m in self.floquet_multipliers],
            "stability": self.stability,
            "iterations": self.iterations,
        }


def _fd_jacobian(F, x, h, central=False):
    J = np.empty((2, 2))
    f0 = None if central else F(x)
    for j in range(2):
        e = np.zeros(2)
        e[j] = h * max(1.0, abs(x[j]))
        if central:
            J[:, j] = (F(x + e) - F(x - e)) / (2 * e[j])
        else:
            J[:, j] = (F(x + e) - f0) / e[j]
    return J


def _newton(F, x, tol, max_iter=40):
    r = F(x)
    res = float(np.linalg.norm(r))
    it = 0
    while res >= tol:
        if it >= max_iter:
            raise NewtonError(f"Newton stalled at residual {res:.3g}", x, res)
        J = _fd_jacobian(F, x, FD_STEP)
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            raise NewtonError("singular Newton matrix", x, res) from None
        lam = 1.0
        while True:
            x_new = x + lam * step
            r_new = F(x_new)
            res_new = float(np.linalg.norm(r_new))
            if res_new < res or lam < 1e-3:
                break
            lam *= 0.5
        if not np.isfinite(res_new) or (lam < 1e-3 and res_new >= res):
            raise NewtonError(f"Newton diverged (residual {res:.3g})", x, res)
        x, r, res = x_new, r_new, res_new
        it += 1
    return x, res, it


def _nearest_zero(zeros, phi_seed):
    def dist(z):
        d = (z - phi_seed) % (2 * math.pi)
        return min(d, 2 * math.pi - d)

    return min(zeros, key=dist)


def _melnikov_zeros(family, spec, delta, beta, grid=256):
    """Simple zeros of M from the closed form when it exists, otherwise by sign changes on a grid."""
    try:
        cf = closed_form_J(family, spec)
        return cf.zeros(delta, beta)
    except NoClosedFormError:
        pass
    phis = 2 * math.pi * np.arange(grid) / grid
    M = melnikov_quadrature(family, spec, delta, beta, phis)
    out = []
    for i in range(grid):
        j = (i + 1) % grid
        if M[i] == 0.0 or M[i] * M[j] < 0:
            out.append(float(phis[i] + (phis[1] - phis[0]) * M[i] / (M[i] - M[j])))
    return out


def find_subharmonic(smap: StroboscopicMap, family, spec: ResonanceSpec, delta: float, beta: float,
                     eps: float, phi_seed: float = 0.0, *, tol: float = 1e-10,
                     steps: int = 4, with_floquet: bool = True) -> PeriodicOrbitResult:
    """Fixed point of the stroboscopic map near the resonant orbit, locked to a Melnikov zero.

    The zero of M nearest ``phi_seed`` fixes the forcing phase; Newton starts
    from the resonant orbit's point x(0) and follows eps geometrically
    (eps/2^(steps-1), ..., eps).
    """
    fam = family.family if isinstance(family, DuffingBundle) else family
    if abs(eps) > 0.05:
        raise ValueError("eps outside the continuation range |eps| <= 0.05")
    zeros = _melnikov_zeros(fam, spec, delta, beta)
    if not zeros:
        raise NoSimpleZeroError(
            f"M(phi) has no simple zero for delta={delta}, beta={beta} on {fam.name} (l={spec.l}, n={spec.n})"
        )
    phase = _nearest_zero(zeros, phi_seed)
    x = fam.initial_state(spec.param_star)
    iters = 0
    base = replace(smap, delta=delta, beta=beta)
    for s in range(steps - 1, -1, -1):
        m = replace(base, eps=eps / 2 ** s)
        x, res, it = _newton(lambda y: strobe(m, y, phase) - y, x, tol)
        iters += it
    result = PeriodicOrbitResult(x, res, phase, eps, iterations=iters)
    if with_floquet:
        result = floquet(replace(base, eps=eps), result)
    return result


def find_subharmonics(smap, family, spec, delta, beta, eps, seeds, workers: int = 1, **kw):
    """Independent :func:`find_subharmonic` runs, one per seed phase, in a thread pool."""
    def run(seed):
        return find_subharmonic(smap, family, spec, delta, beta, eps, seed, **kw)

    if workers <= 1:
        return [run(s) for s in seeds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, seeds))


def classify_multipliers(mults, band: float = STABILITY_BAND) -> str:
    """Stability type from the two multipliers.

    A double multiplier at 1 is judged through trace and determinant: at a
    Jordan block the individual eigenvalues carry the square root of any
    matrix error, the characteristic polynomial does not.
    """
    m1, m2 = (complex(m) for m in mults)
    tr, det = m1 + m2, m1 * m2
    if abs(tr - 2.0) <= band and abs(det - 1.0) <= band:
        return "degenerate"
    a1, a2 = sorted((abs(m1), abs(m2)))
    if abs(m1.imag) > band * max(1.0, abs(m1)):
        # complex pair: equal moduli sqrt(det)
        return "elliptic" if abs(math.sqrt(a1 * a2) - 1.0) <= band else "node"
    if a2 > 1.0 + band and a1 < 1.0 - band:
        return "hyperbolic_saddle"
    if abs(a1 - 1.0) <= band and abs(a2 - 1.0) <= band:
        return "degenerate"
    return "node"


def floquet(smap: StroboscopicMap, result: PeriodicOrbitResult) -> PeriodicOrbitResult:
    """Multipliers of the central-difference monodromy matrix at the orbit."""
    if result.residual >= 1e-8:
        raise ValueError(f"orbit residual {result.residual:.3g} too large for a monodromy estimate")
    x = np.asarray(result.initial_state, dtype=float)
    M = _fd_jacobian(lambda y: strobe(smap, y, result.phase), x, MONODROMY_STEP, central=True)
    mults = np.linalg.eigvals(M)
    return replace(result, floquet_multipliers=tuple(complex(v) for v in mults),
                   stability=classify_multipliers(mults))


def return_time(family, param: float, rtol: float = 1e-13, atol: float = 1e-13) -> float:
    """First return of the unperturbed orbit to its starting section x2 = 0.

    The section is crossed in the direction the orbit leaves it at t = 0.
    """
    fam = family.family if isinstance(family, DuffingBundle) else family
    T = fam.period(param)
    x0 = fam.initial_state(param)
    smap = StroboscopicMap(a=fam.a, nu=1.0, rtol=rtol, atol=atol)

    def section(t, x):
        return x[1]

    section.direction = float(np.sign(fam.vector_field(x0)[1])) or -1.0
    sol = _solve(smap, x0, 0.0, 1.5 * T, events=[section])
    hits = [t for t in sol.t_events[1] if t > 0.5 * T]
    if not hits:
        raise IntegrationError("no return to the section within 1.5 periods")
    return float(hits[0])


def energy_drift(family, param: float, periods: int = 100, samples: int = 50,
                 rtol: float = 1e-13, atol: float = 1e-14) -> float:
    """max |H(x(t)) - H(x(0))| over ``periods`` unperturbed periods."""
    fam = family.family if isinstance(family, DuffingBundle) else family
    T = fam.period(param)
    x0 = fam.initial_state(param)
    smap = StroboscopicMap(a=fam.a, nu=1.0, rtol=rtol, atol=atol)
    sol = _solve(smap, x0, 0.0, periods * T, dense=True)
    t = np.linspace(0.0, periods * T, periods * samples + 1)
    H = smap.energy(sol.sol(t))
    return float(np.max(np.abs(H - smap.energy(x0))))


def reversibility_error(smap: StroboscopicMap, x0, phase: float = 0.0) -> float:
    """Integrate one strobe period forward and back; distance to the start."""
    fwd = _solve(smap, x0, phase, smap.period).y[:, -1]
    back = _solve(smap, fwd, phase, 0.0, t0=smap.period).y[:, -1]
    return float(np.linalg.norm(back - np.asarray(x0, dtype=float)))


def pendulum_first_integrals(kappa: float = 0.5, eps: float = 0.05, I0: float = 1.0,
                             theta0: float = 0.0, revolutions: int = 100,
                             rtol: float = 1e-13, atol: float = 1e-13, samples: int = 40) -> dict:
    """Drift of two candidate first integrals along dI/dt = eps(sin th/(1 - kappa cos th) + 1), dth/dt = I.

    ``corrected``: I^2/2 - eps(log(1 - kappa cos th)/kappa + th), conserved exactly.
    ``printed``: the same without the 1/kappa factor on the logarithm.
    The run lasts until theta has advanced by ``revolutions`` full turns.
    """
    def rhs(t, y):
        I, th = y
        return [eps * (math.sin(th) / (1.0 - kappa * math.cos(th)) + 1.0), I]

    def done(t, y):
        return y[1] - theta0 - 2 * math.pi * revolutions

    done.terminal = True
    t_guess = 4 * math.pi * revolutions / max(abs(I0), 1e-3)
    sol = solve_ivp(rhs, (0.0, t_guess), [I0, theta0], method="DOP853", rtol=rtol, atol=atol,
                    dense_output=True, events=done)
    if sol.status != 1:
        raise IntegrationError("theta did not complete the requested revolutions")
    t_end = float(sol.t_events[0][0])
    t = np.linspace(0.0, t_end, revolutions * samples + 1)
    I, th = sol.sol(t)
    log_term = np.log(1.0 - kappa * np.cos(th))
    corrected = 0.5 * I ** 2 - eps * (log_term / kappa + th)
    printed = 0.5 * I ** 2 - eps * (log_term + th)
    return {
        "corrected_drift": float(np.max(np.abs(corrected - corrected[0]))),
        "printed_drift": float(np.max(np.abs(printed - printed[0]))),
        "t_end": t_end,
        "revolutions": revolutions,
    }
