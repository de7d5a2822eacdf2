"""Which pole does the trigonometric closed form of the a = 1 loop integral belong to?

The integrand is real on the real axis, so loops around a pole and its mirror
image are related by conjugation. Sampling both loops numerically and comparing
with the sinh/cosh expression shows it matches the loop around the lower pole.
"""
import numpy as np

from melcert.catalog import DuffingHardening
from melcert.contour import ContourSpec, integrate_loop
from melcert.melnikov import closed_form_I_hat, melnikov_integrand, resonance_at

fam = DuffingHardening()
p = 0.5
spec = resonance_at(fam, p, 1, 1)
pole = fam.pole(p)
r = 0.4 * min(pole.imag, spec.T_star / 2)
print(f"k = {p}, nu = {spec.nu:.6f}, pole at {pole:.6f} (shifted by T* = {spec.T_star:.6f})")

print(f"{'phi':>5s} {'upper loop':>26s} {'lower loop':>26s} {'closed form':>26s}")
for phi in np.linspace(0, 2 * np.pi, 7)[:-1]:
    f = lambda t: melnikov_integrand(fam, p, spec.nu, 0.0, 1.0, t, phi)
    up = integrate_loop(f, ContourSpec(spec.T_star + pole, r)).value
    down = integrate_loop(f, ContourSpec(spec.T_star - pole, r)).value
    cf = closed_form_I_hat(fam, spec, 1.0, phi)
    print(f"{phi:5.2f} {up:26.12f} {down:26.12f} {cf:26.12f}")
