"""The entangled-meter argument: the meter reading probability a_lambda equals lambda.

Run: python3 demos/fig2_a_lambda.py
"""

from povmlab.analysis import check_a_lambda
from povmlab.devices import random_quantum_device
from povmlab.experiments import Fig2Setup, meter_a_lambda, run_fig2
from povmlab.qstate import SpaceShape, random_pure
from povmlab.report import binomial_sigma

shape = SpaceShape.of(("A", 2), ("B", 2))
psi0, psi1 = random_pure(shape, 10), random_pure(shape, 11)
device = random_quantum_device(2, 3, seed=12)

for lam in (0.0, 0.25, 0.3, 0.5, 1.0):
    rep = run_fig2(Fig2Setup(device, psi0, psi1, lam, measure_beta_first=True))
    print(f"lambda={lam:<5} a_lambda={rep.data['a_lambda']:.15f}  flash={rep.data['p_flash'].round(6)}  "
          f"{'PASS' if rep.passed else 'FAIL'}")

print(check_a_lambda(meter_a_lambda(device, psi0, psi1)).summary())

# same pipeline on simulated counts, tolerance five binomial standard errors per point
shots = 1_000_000
sampled = meter_a_lambda(device, psi0, psi1, shots=shots, seed=1)
print(check_a_lambda(sampled, depth=4, tol=lambda lam: 5 * float(binomial_sigma(lam, shots)), irrationals=5).summary())

# a function that is multiplicative but not affine does not survive
print(check_a_lambda(lambda x: x * x).summary())
