"""Jacobi elliptic functions of complex argument and complete elliptic integrals.

Everything here reduces to real-argument kernels: the complete integrals use
the arithmetic-geometric mean, and ``sn, cn, dn`` at a complex point combine
two real evaluations (modulus ``k`` for the real part, ``k'`` for the
imaginary part) through Jacobi's imaginary transformation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "EllipticModulus",
    "EllipticPoint",
    "PoleError",
    "as_modulus",
    "complete_elliptic_K",
    "complete_elliptic_E",
    "dK_dk",
    "jacobi_sn_cn_dn",
    "pole_lattice",
    "nearest_pole",
]

_AGM_MAX_ITER = 64
DEFAULT_POLE_GUARD = 1e-8


class PoleError(ValueError):
    """Raised when an argument falls within the pole guard of a lattice pole."""

    def __init__(self, u, pole, distance):
        self.u = complex(u)
        self.pole = complex(pole)
        self.distance = float(distance)
        super().__init__(
            f"argument {self.u!r} lies {self.distance:.3g} from the pole {self.pole!r}"
        )


@dataclass(frozen=True)
class EllipticModulus:
    k: float
    k_prime: float

    def __post_init__(self):
        if not (math.isfinite(self.k) and math.isfinite(self.k_prime)):
            raise ValueError("elliptic modulus must be finite")
        if not 0.0 < self.k < 1.0:
            raise ValueError(f"elliptic modulus must lie in (0, 1), got {self.k!r}")
        if abs(self.k * self.k + self.k_prime * self.k_prime - 1.0) > 1e-14:
            raise ValueError("k**2 + k_prime**2 must equal 1")

    @classmethod
    def from_k(cls, k: float) -> "EllipticModulus":
        k = float(k)
        if not math.isfinite(k):
            raise ValueError("elliptic modulus must be finite")
        if not 0.0 < k < 1.0:
            raise ValueError(f"elliptic modulus must lie in (0, 1), got {k!r}")
        # (1-k)(1+k) keeps k' accurate as k -> 1
        return cls(k, math.sqrt((1.0 - k) * (1.0 + k)))

    @property
    def m(self) -> float:
        return self.k * self.k

    def complement(self) -> "EllipticModulus":
        return EllipticModulus(self.k_prime, self.k)


def as_modulus(k) -> EllipticModulus:
    if isinstance(k, EllipticModulus):
        return k
    return EllipticModulus.from_k(k)


def _agm(a: float, b: float):
    """Run the AGM from (a, b); return the limit and the list of c_n = (a_{n-1} - b_{n-1})/2."""
    cs = []
    for _ in range(_AGM_MAX_ITER):
        if abs(a - b) <= 1e-15 * a:
            break
        a, b, c = 0.5 * (a + b), math.sqrt(a * b), 0.5 * (a - b)
        cs.append(c)
    return a, cs


def complete_elliptic_K(k) -> float:
    """Complete elliptic integral of the first kind, K(k) = pi / (2 agm(1, k'))."""
    mod = as_modulus(k)
    a, _ = _agm(1.0, mod.k_prime)
    return math.pi / (2.0 * a)


def complete_elliptic_E(k) -> float:
    """Complete elliptic integral of the second kind.

    Uses the Gauss-Legendre relation E = K (1 - sum_n 2^(n-1) c_n^2) with
    c_0 = k along the same AGM sequence that gives K.
    """
    mod = as_modulus(k)
    a, cs = _agm(1.0, mod.k_prime)
    K = math.pi / (2.0 * a)
    s = 0.5 * mod.k * mod.k
    w = 0.5
    for c in cs:
        w *= 2.0
        s += w * c * c
    return K * (1.0 - s)


def dK_dk(k) -> float:
    """dK/dk = (E - k'^2 K) / (k k'^2)."""
    mod = as_modulus(k)
    K = complete_elliptic_K(mod)
    E = complete_elliptic_E(mod)
    kp2 = mod.k_prime * mod.k_prime
    return (E - kp2 * K) / (mod.k * kp2)


def _landen_table(mod: EllipticModulus):
    a = [1.0]
    c = [mod.k]
    b = mod.k_prime
    for _ in range(_AGM_MAX_ITER):
        if abs(c[-1]) <= 1e-15 * a[-1]:
            break
        an, bn = a[-1], b
        a.append(0.5 * (an + bn))
        c.append(0.5 * (an - bn))
        b = math.sqrt(an * bn)
    return a, c


def _sncndn_real(u: np.ndarray, mod: EllipticModulus, K: float):
    """Real-argument sn, cn, dn by descending Landen (AGM) recursion."""
    u = np.asarray(u, dtype=float)
    # reduce modulo the real period 4K to keep the phase small
    u = u - 4.0 * K * np.round(u / (4.0 * K))
    a, c = _landen_table(mod)
    n = len(a) - 1
    phi = (2.0 ** n) * a[n] * u
    for i in range(n, 0, -1):
        phi = 0.5 * (phi + np.arcsin(c[i] / a[i] * np.sin(phi)))
    sn = np.sin(phi)
    cn = np.cos(phi)
    # cn/cos(phi1 - phi0) is 0/0 at u = K; this form has no cancellation
    dn = np.sqrt(cn * cn + (mod.k_prime * sn) ** 2)
    return sn, cn, dn


@dataclass(frozen=True)
class EllipticPoint:
    u: complex
    k: EllipticModulus
    sn: complex
    cn: complex
    dn: complex


def nearest_pole(u, k):
    """Nearest point of the pole lattice {2mK + (2j+1) iK'} to ``u`` (elementwise)."""
    mod = as_modulus(k)
    K = complete_elliptic_K(mod)
    Kp = complete_elliptic_K(mod.complement())
    u = np.asarray(u, dtype=complex)
    m = np.round(u.real / (2.0 * K))
    j = np.round((u.imag / Kp - 1.0) / 2.0)
    return 2.0 * m * K + 1j * (2.0 * j + 1.0) * Kp


def jacobi_sn_cn_dn(u, k, pole_guard: float = DEFAULT_POLE_GUARD, *, as_point: bool = False):
    """Evaluate sn, cn and dn at (possibly complex, possibly array) ``u``.

    Returns a tuple ``(sn, cn, dn)`` of complex arrays shaped like ``u``;
    with ``as_point=True`` and scalar ``u`` an :class:`EllipticPoint` instead.

    Raises :class:`PoleError` if any argument is within ``pole_guard`` of a pole.
    """
    mod = as_modulus(k)
    uu = np.asarray(u, dtype=complex)
    if not np.all(np.isfinite(uu)):
        raise ValueError("argument must be finite")
    K = complete_elliptic_K(mod)
    Kp = complete_elliptic_K(mod.complement())

    poles = nearest_pole(uu, mod)
    dist = np.abs(uu - poles)
    bad = dist <= pole_guard
    if np.any(bad):
        idx = np.flatnonzero(bad.ravel())[0]
        raise PoleError(uu.ravel()[idx], poles.ravel()[idx], dist.ravel()[idx])

    x = uu.real
    y = uu.imag
    s, c, d = _sncndn_real(x, mod, K)
    if np.all(y == 0.0):
        sn, cn, dn = s + 0j, c + 0j, d + 0j
    else:
        s1, c1, d1 = _sncndn_real(y, mod.complement(), Kp)
        den = c1 * c1 + mod.m * (s * s1) ** 2
        sn = (s * d1 + 1j * c * d * s1 * c1) / den
        cn = (c * c1 - 1j * s * d * s1 * d1) / den
        dn = (d * c1 * d1 - 1j * mod.m * s * c * s1) / den

    if as_point:
        if uu.ndim:
            raise ValueError("as_point requires a scalar argument")
        return EllipticPoint(complex(uu), mod, complex(sn), complex(cn), complex(dn))
    return sn, cn, dn


def pole_lattice(k, window) -> list:
    """All poles of sn/cn/dn in the half-open rectangle ``[lo.re, hi.re) x [lo.im, hi.im)``.

    ``window`` is a pair ``(lo, hi)`` of complex corners.  Poles are returned
    sorted by real part, then imaginary part.
    """
    lo, hi = (complex(w) for w in window)
    if not all(math.isfinite(v) for v in (lo.real, lo.imag, hi.real, hi.imag)):
        raise ValueError("window must be finite")
    if hi.real <= lo.real or hi.imag <= lo.imag:
        raise ValueError("empty window")
    mod = as_modulus(k)
    K = complete_elliptic_K(mod)
    Kp = complete_elliptic_K(mod.complement())
    m_lo = math.ceil(lo.real / (2.0 * K)) - 1
    m_hi = math.floor(hi.real / (2.0 * K)) + 1
    j_lo = math.ceil((lo.imag / Kp - 1.0) / 2.0) - 1
    j_hi = math.floor((hi.imag / Kp - 1.0) / 2.0) + 1
    out = []
    for m in range(m_lo, m_hi + 1):
        for j in range(j_lo, j_hi + 1):
            p = complex(2.0 * m * K, (2.0 * j + 1.0) * Kp)
            if lo.real <= p.real < hi.real and lo.imag <= p.imag < hi.imag:
                out.append(p)
    out.sort(key=lambda p: (p.real, p.imag))
    return out
