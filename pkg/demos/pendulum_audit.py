"""Two small checks on the forced pendulum in action-angle form.

dI/dt = eps(sin th/(1 - kappa cos th) + 1), dth/dt = I.

The loop integral around the nearest complex singularity of the forcing is
computed numerically and compared with the residue value 2 pi i/(kappa I).
The first integral with and without the 1/kappa factor on its logarithm is
tracked along a long trajectory.
"""
import math

from melcert.catalog import pendulum_torque
from melcert.certificate import certify_system
from melcert.orbits import pendulum_first_integrals

kappa = 0.5
for I in (0.5, 1.0, 3.0):
    cert = certify_system(pendulum_torque(kappa), [I])
    z = complex(cert.I_hat_values[0][0])
    print(f"I = {I}: loop = {z.real:+.1e} {z.imag:+.12f}i, residue value = {2 * math.pi / (kappa * I):.12f}i,"
          f" verdict {cert.verdict}")

out = pendulum_first_integrals(kappa=kappa, eps=0.05)
print(f"\nafter {out['revolutions']} revolutions:")
print(f"  drift with 1/kappa:    {out['corrected_drift']:.2e}")
print(f"  drift without 1/kappa: {out['printed_drift']:.2e}")
