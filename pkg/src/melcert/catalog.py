"""Concrete systems: the four Duffing orbit families, coupled oscillators,
the pendulum with torque, and user systems read from JSON term lists."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .elliptic import (EllipticModulus, complete_elliptic_K, dK_dk,
                       jacobi_sn_cn_dn)
from .model import OrbitFamily, SystemModel

__all__ = [
    "DuffingHardening",
    "DuffingCubic",
    "DuffingInner",
    "DuffingOuter",
    "DuffingBundle",
    "coupled_oscillators",
    "pendulum_torque",
    "system_from_dict",
    "catalog",
    "lookup",
]

SQRT2 = math.sqrt(2.0)
K_HALF = complete_elliptic_K(1.0 / SQRT2)


class DuffingHardening(OrbitFamily):
    """a = +1: x^k(t) = (sqrt2 k/c cn(t/c), -sqrt2 k/c^2 sn dn(t/c)), c = sqrt(1 - 2k^2)."""

    name = "duffing:a=1"
    a = 1
    param_name = "k"
    bounds = (0.0, 1.0 / SQRT2)
    working = (1e-6, 1.0 / SQRT2 - 1e-6)

    def modulus(self, p):
        return EllipticModulus.from_k(p)

    def time_scale(self, p):
        return math.sqrt(1.0 - 2.0 * p * p)

    def orbit(self, p, t):
        p = self.check_param(p)
        c = self.time_scale(p)
        sn, cn, dn = jacobi_sn_cn_dn(np.asarray(t, dtype=complex) / c, p)
        return np.array([SQRT2 * p / c * cn, -SQRT2 * p / c ** 2 * sn * dn])

    def period(self, p):
        p = self.check_param(p)
        return 4.0 * complete_elliptic_K(p) * self.time_scale(p)

    def d_period(self, p):
        p = self.check_param(p)
        c = self.time_scale(p)
        return 4.0 * (dK_dk(p) * c - 2.0 * p * complete_elliptic_K(p) / c)


class DuffingCubic(OrbitFamily):
    """a = 0: x^alpha(t) = (alpha cn(alpha t), -alpha^2 sn dn(alpha t)), k = 1/sqrt2.

    The argument is alpha*t as printed, so the pole nearest the origin in
    time is i K(1/sqrt2) / alpha.
    """

    name = "duffing:a=0"
    a = 0
    param_name = "alpha"
    bounds = (0.0, math.inf)
    working = (1e-6, 1e6)
    log_scale = True

    def modulus(self, p):
        return EllipticModulus.from_k(1.0 / SQRT2)

    def time_scale(self, p):
        return 1.0 / p

    def orbit(self, p, t):
        p = self.check_param(p)
        sn, cn, dn = jacobi_sn_cn_dn(p * np.asarray(t, dtype=complex), 1.0 / SQRT2)
        return np.array([p * cn, -p * p * sn * dn])

    def period(self, p):
        p = self.check_param(p)
        return 4.0 * K_HALF / p

    def d_period(self, p):
        p = self.check_param(p)
        return -4.0 * K_HALF / (p * p)


class DuffingInner(OrbitFamily):
    """a = -1, orbits inside the homoclinic loops:
    x^k_pm(t) = (pm sqrt2/c dn(t/c), mp sqrt2 k^2/c^2 sn cn(t/c)), c = sqrt(2 - k^2)."""

    a = -1
    param_name = "k"
    bounds = (0.0, 1.0)
    working = (1e-6, 1.0 - 1e-9)

    def __init__(self, branch: int = 1):
        if branch not in (1, -1):
            raise ValueError("branch must be +1 or -1")
        self.branch = branch
        self.name = "duffing:a=-1:inner" + ("+" if branch > 0 else "-")

    def modulus(self, p):
        return EllipticModulus.from_k(p)

    def time_scale(self, p):
        return math.sqrt(2.0 - p * p)

    def orbit(self, p, t):
        p = self.check_param(p)
        c = self.time_scale(p)
        sn, cn, dn = jacobi_sn_cn_dn(np.asarray(t, dtype=complex) / c, p)
        s = self.branch
        return np.array([s * SQRT2 / c * dn, -s * SQRT2 * p * p / c ** 2 * sn * cn])

    def period(self, p):
        p = self.check_param(p)
        return 2.0 * complete_elliptic_K(p) * self.time_scale(p)

    def d_period(self, p):
        p = self.check_param(p)
        c = self.time_scale(p)
        return 2.0 * (dK_dk(p) * c - p * complete_elliptic_K(p) / c)

    def __repr__(self):
        return f"DuffingInner(branch={self.branch})"


class DuffingOuter(OrbitFamily):
    """a = -1, orbits outside both homoclinic loops:
    x~^k(t) = (sqrt2 k/c cn(t/c), -sqrt2 k/c^2 sn dn(t/c)), c = sqrt(2k^2 - 1)."""

    name = "duffing:a=-1:outer"
    a = -1
    param_name = "k"
    bounds = (1.0 / SQRT2, 1.0)
    # the period collapses as k -> 1/sqrt2; keep resonance solving away from it
    working = (0.72, 0.995)

    def modulus(self, p):
        return EllipticModulus.from_k(p)

    def time_scale(self, p):
        return math.sqrt(2.0 * p * p - 1.0)

    def orbit(self, p, t):
        p = self.check_param(p)
        c = self.time_scale(p)
        sn, cn, dn = jacobi_sn_cn_dn(np.asarray(t, dtype=complex) / c, p)
        return np.array([SQRT2 * p / c * cn, -SQRT2 * p / c ** 2 * sn * dn])

    def period(self, p):
        p = self.check_param(p)
        return 4.0 * complete_elliptic_K(p) * self.time_scale(p)

    def d_period(self, p):
        p = self.check_param(p)
        c = self.time_scale(p)
        return 4.0 * (dK_dk(p) * c + 2.0 * p * complete_elliptic_K(p) / c)


@dataclass(frozen=True)
class DuffingBundle:
    """A Duffing orbit family together with its forcing/damping perturbation."""

    family: OrbitFamily
    name: str = ""

    def __post_init__(self):
        if not self.name:
            object.__setattr__(self, "name", self.family.name)

    @property
    def a(self) -> int:
        return self.family.a

    @staticmethod
    def perturbation(delta: float, beta: float):
        """u(x, psi) = (0, beta cos(psi) - delta x2)."""

        def u(x, psi):
            x2 = x[1]
            return np.array([np.zeros_like(x2), beta * np.cos(psi) - delta * x2])

        return u

    def energy_gradient(self, x):
        return self.family.energy_gradient(x)


def _check_kappa(kappa):
    kappa = float(kappa)
    if not 0.0 < kappa < 1.0:
        raise ValueError(f"kappa must lie in (0, 1), got {kappa!r}")
    return kappa


def _frac_poles(rate, offset, kappa, reps=2):
    """Complex times where rate * tau + offset = +-i arccosh(1/kappa) + 2 pi m."""
    if rate == 0:
        return []
    a = math.acosh(1.0 / kappa)
    out = []
    for sign in (1, -1):
        for m in range(-reps, reps + 1):
            out.append((2 * math.pi * m - offset + sign * 1j * a) / rate)
    return out


def pendulum_torque(kappa: float = 0.5) -> SystemModel:
    """dI/dt = eps (sin theta / (1 - kappa cos theta) + 1), dtheta/dt = I."""
    kappa = _check_kappa(kappa)

    def h(I, theta, eps=0.0):
        th = np.asarray(theta)[0]
        return (np.sin(th) / (1.0 - kappa * np.cos(th)) + 1.0)[None, ...]

    def singular(I, theta):
        I0 = float(np.ravel(I)[0])
        th = float(np.ravel(theta)[0])
        poles = _frac_poles(I0, th, kappa)
        # primary: the upper pole tau* = (-theta + i arccosh(1/kappa)) / I
        primary = (-th + 1j * math.acosh(1.0 / kappa)) / I0
        if I0 < 0:
            primary = primary.conjugate()
        rest = [p for p in poles if abs(p - primary) > 1e-12]
        return [primary] + rest

    def printed(I, theta):
        return np.array([2j * math.pi * kappa * abs(float(np.ravel(I)[0]))])

    return SystemModel(
        name="pendulum_torque",
        dim_action=1,
        dim_angle=1,
        omega=lambda I: np.array([float(np.ravel(I)[0])]),
        d_omega=lambda I: np.array([[1.0]]),
        h=h,
        g=lambda I, theta, eps=0.0: np.zeros_like(np.asarray(theta, dtype=complex)),
        params={"kappa": kappa},
        singularities=singular,
        printed_integral=printed,
    )


def coupled_oscillators(ell: int = 3, delta: float = 0.1, beta: float = 1.0,
                        kappa: float = 0.5, Omega=None) -> SystemModel:
    """dI_j/dt = eps(-delta I_j + Omega_j + beta sum_k sin(th_k - th_j)/(1 - kappa cos(th_k - th_j))),
    dth_j/dt = I_j."""
    kappa = _check_kappa(kappa)
    if ell < 2:
        raise ValueError("need at least two oscillators")
    if delta <= 0 or beta <= 0:
        raise ValueError("delta and beta must be positive")
    Om = np.full(ell, 0.1) if Omega is None else np.asarray(Omega, dtype=float)
    if Om.shape != (ell,) or np.any(Om <= 0):
        raise ValueError("Omega must hold ell positive constants")

    def h(I, theta, eps=0.0):
        I = np.asarray(I, dtype=float)
        th = np.asarray(theta)
        diff = th[None, ...] - th[:, None, ...]  # diff[j, k] = th_k - th_j
        coup = np.sin(diff) / (1.0 - kappa * np.cos(diff))
        tail = (1,) * (th.ndim - 1)
        return -delta * I.reshape((ell,) + tail) + Om.reshape((ell,) + tail) + beta * coup.sum(axis=1)

    def singular(I, theta):
        I = np.asarray(I, dtype=float)
        th = np.asarray(theta, dtype=float)
        primary = None
        if I[1] != I[0]:
            w = I[1] - I[0]
            primary = (th[0] - th[1] + 1j * math.acosh(1.0 / kappa)) / w
            if w < 0:
                primary = primary.conjugate()
        out = []
        for j in range(ell):
            for k in range(j + 1, ell):
                out += _frac_poles(I[k] - I[j], th[k] - th[j], kappa)
        out = [p for p in out if primary is None or abs(p - primary) > 1e-12]
        return ([primary] if primary is not None else []) + out

    def printed(I, theta):
        w = abs(float(I[0]))
        v = np.zeros(ell, dtype=complex)
        v[0] = 2j * math.pi * kappa * w
        v[1] = -2j * math.pi * kappa * w
        return v

    return SystemModel(
        name="coupled_oscillators",
        dim_action=ell,
        dim_angle=ell,
        omega=lambda I: np.asarray(I, dtype=float).copy(),
        d_omega=lambda I: np.eye(ell),
        h=h,
        g=lambda I, theta, eps=0.0: np.zeros_like(np.asarray(theta, dtype=complex)),
        # theta_j = j - 2 for j >= 3 keeps the other pair poles off the (1, 2) pole
        params={"ell": ell, "delta": delta, "beta": beta, "kappa": kappa, "Omega": Om.tolist(),
                "default_theta": [0.0, 0.0] + [float(j) for j in range(1, ell - 1)]},
        singularities=singular,
        printed_integral=printed,
    )


# -- user systems --------------------------------------------------------

_KINDS = ("const", "cos", "sin", "sin_frac")


def _parse_terms(rows, n_out, n_act, n_ang, label):
    if len(rows) != n_out:
        raise ValueError(f"{label}: expected {n_out} component lists, got {len(rows)}")
    parsed = []
    for comp in rows:
        terms = []
        for t in comp:
            kind = t.get("kind", "const")
            if kind not in _KINDS:
                raise ValueError(f"{label}: unknown term kind {kind!r}")
            powers = np.asarray(t.get("powers", [0] * n_act), dtype=int)
            harm = np.asarray(t.get("harmonics", [0] * n_ang), dtype=int)
            if powers.shape != (n_act,) or harm.shape != (n_ang,):
                raise ValueError(f"{label}: powers/harmonics have the wrong length")
            kappa = _check_kappa(t["kappa"]) if kind == "sin_frac" else None
            terms.append((float(t["coefficient"]), powers, harm, kind, kappa))
        parsed.append(terms)
    return parsed


def _eval_terms(terms, I, theta):
    theta = np.asarray(theta)
    out = []
    for comp in terms:
        acc = np.zeros(theta.shape[1:], dtype=complex)
        for coef, powers, harm, kind, kappa in comp:
            mono = coef * float(np.prod(I ** powers))
            arg = np.tensordot(harm, theta, axes=(0, 0))
            if kind == "const":
                acc = acc + mono
            elif kind == "cos":
                acc = acc + mono * np.cos(arg)
            elif kind == "sin":
                acc = acc + mono * np.sin(arg)
            else:
                acc = acc + mono * np.sin(arg) / (1.0 - kappa * np.cos(arg))
        out.append(acc)
    return np.array(out)


def system_from_dict(spec: dict) -> SystemModel:
    """Build a :class:`SystemModel` from the JSON term-list schema.

    ``omega`` is one polynomial (list of ``{coefficient, powers}``) per angle;
    ``h`` (and optional ``g``) hold one term list per action (angle) component,
    each term ``{coefficient, powers, harmonics, kind[, kappa]}`` standing for
    ``coefficient * I**powers * f(harmonics . theta)`` with ``f`` one of
    ``const, cos, sin, sin_frac`` (``sin_frac(z) = sin z / (1 - kappa cos z)``).
    """
    try:
        ell = int(spec["dim_action"])
        m = int(spec["dim_angle"])
        omega_terms = spec["omega"]
        h_rows = spec["h"]
    except KeyError as exc:
        raise ValueError(f"system definition lacks field {exc.args[0]!r}") from None
    if len(omega_terms) != m:
        raise ValueError("omega needs one polynomial per angle")
    om = [[(float(t["coefficient"]), np.asarray(t.get("powers", [0] * ell), dtype=int))
           for t in comp] for comp in omega_terms]
    for comp in om:
        for _, pw in comp:
            if pw.shape != (ell,) or np.any(pw < 0):
                raise ValueError("omega powers must be non-negative with one entry per action")
    h_terms = _parse_terms(h_rows, ell, ell, m, "h")
    g_terms = _parse_terms(spec["g"], m, ell, m, "g") if spec.get("g") else None

    def omega(I):
        I = np.asarray(I, dtype=float)
        return np.array([sum(c * float(np.prod(I ** pw)) for c, pw in comp) for comp in om])

    def d_omega(I):
        I = np.asarray(I, dtype=float)
        D = np.zeros((m, ell))
        for i, comp in enumerate(om):
            for c, pw in comp:
                for j in range(ell):
                    if pw[j] == 0:
                        continue
                    lowered = pw.copy()
                    lowered[j] -= 1
                    D[i, j] += c * pw[j] * float(np.prod(I ** lowered))
        return D

    def h(I, theta, eps=0.0):
        return _eval_terms(h_terms, np.asarray(I, dtype=float), theta)

    def g(I, theta, eps=0.0):
        if g_terms is None:
            return np.zeros_like(np.asarray(theta, dtype=complex))
        return _eval_terms(g_terms, np.asarray(I, dtype=float), theta)

    def singular(I, theta):
        w = omega(I)
        th = np.asarray(theta, dtype=float)
        out = []
        for comp in h_terms:
            for _, _, harm, kind, kappa in comp:
                if kind == "sin_frac":
                    out += _frac_poles(float(harm @ w), float(harm @ th), kappa)
        # primary: the pole with smallest positive imaginary part, then smallest |Re|
        out.sort(key=lambda z: (z.imag <= 0, abs(z.imag), abs(z.real)))
        return out

    return SystemModel(
        name=str(spec.get("name", "user_system")),
        dim_action=ell,
        dim_angle=m,
        omega=omega,
        d_omega=d_omega,
        h=h,
        g=g,
        params={"definition": spec},
        singularities=singular,
    )


def catalog() -> list:
    """Every catalog system with default parameters."""
    return [
        DuffingBundle(DuffingHardening()),
        DuffingBundle(DuffingCubic()),
        DuffingBundle(DuffingInner(+1)),
        DuffingBundle(DuffingInner(-1)),
        DuffingBundle(DuffingOuter()),
        coupled_oscillators(),
        pendulum_torque(),
    ]


_FAMILIES = {
    "duffing:a=1": lambda: DuffingHardening(),
    "duffing:a=0": lambda: DuffingCubic(),
    "duffing:a=-1:inner": lambda: DuffingInner(+1),
    "duffing:a=-1:inner+": lambda: DuffingInner(+1),
    "duffing:a=-1:inner-": lambda: DuffingInner(-1),
    "duffing:a=-1:outer": lambda: DuffingOuter(),
}


def lookup(name: str, **params):
    """Catalog entry by selector name (``duffing:a=1``, ``pendulum``, ...)."""
    key = name.strip().lower().replace(" ", "")
    if key in _FAMILIES:
        return DuffingBundle(_FAMILIES[key]())
    if key in ("pendulum", "pendulum_torque"):
        return pendulum_torque(**params)
    if key in ("coupled", "coupled_oscillators"):
        return coupled_oscillators(**params)
    raise KeyError(f"unknown system {name!r}; known: {sorted(_FAMILIES) + ['pendulum', 'coupled']}")
