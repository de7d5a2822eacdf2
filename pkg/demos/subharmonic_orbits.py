"""From a simple zero of the Melnikov function to an actual periodic orbit.

For x'' = -x^3 + eps(beta cos(t + phi) - delta x') the Melnikov function at the
1:1 resonance is delta J1 + beta J2 sin(phi). Each simple zero seeds a Newton
solve for a fixed point of the stroboscopic map.
"""
import math

import numpy as np

from melcert.catalog import DuffingCubic
from melcert.melnikov import closed_form_J, melnikov_quadrature, solve_resonance
from melcert.orbits import StroboscopicMap, find_subharmonics

fam = DuffingCubic()
spec = solve_resonance(fam, 1, 1, 1.0)
print(f"resonant amplitude alpha* = {spec.param_star:.10f}, T* = {spec.T_star:.6f}")

delta, beta, eps = 0.1, 1.0, 0.01
cf = closed_form_J(fam, spec)
phis = np.linspace(0, 2 * math.pi, 9)
quad = melnikov_quadrature(fam, spec, delta, beta, phis)
print(f"J1 = {cf.J1:.6f}, J2 = {cf.J2:.6f}")
print(f"max |quadrature - closed form| on 9 phases: {np.max(np.abs(quad - cf(delta, beta, phis))):.1e}")

zeros = cf.zeros(delta, beta)
print("simple zeros of M:", [f"{z:.6f}" for z in zeros])

smap = StroboscopicMap.for_family(fam, spec)
for r in find_subharmonics(smap, fam, spec, delta, beta, eps, zeros):
    mult = ", ".join(f"{m:.6f}" for m in r.floquet_multipliers)
    print(f"phase {r.phase:.6f}: x0 = {r.initial_state}, residual {r.residual:.1e}, "
          f"multipliers [{mult}] -> {r.stability}")

# Abel: the multiplier product equals the phase-volume contraction over one period
print(f"expected product exp(-2 pi eps delta) = {math.exp(-2 * math.pi * eps * delta):.9f}")
