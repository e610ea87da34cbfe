"""Two sources, one reduced state: a quantum device cannot tell them apart.

Run: python3 demos/fig1_purifications.py
"""

import numpy as np

from povmlab.devices import adversarial_device, measure_prob, random_quantum_device
from povmlab.experiments import Fig1Setup, purification_pair, random_spectrum_density, run_fig1
from povmlab.qstate import SpaceShape, reduced_density

rho = random_spectrum_density(3, seed=1)
psi, psi_prime = purification_pair(rho, SpaceShape.of(("B", 3)), seed=2)
print("rho_A from both sources agree to",
      np.max(np.abs(reduced_density(psi, "A").matrix - reduced_density(psi_prime, "A").matrix)))

device = random_quantum_device(3, 4, seed=3, kind="indirect")
print("indirect device, source Psi :", np.round(measure_prob(device, psi, "A"), 6))
print("indirect device, source Psi':", np.round(measure_prob(device, psi_prime, "A"), 6))

report = run_fig1(Fig1Setup(device, psi, psi_prime))
print(report.summary())

sampled = run_fig1(Fig1Setup(device, psi, psi_prime), shots=1_000_000, seed=7)
print(sampled.summary())

# the adversary peeks at the first amplitude of the joint state, which the
# environment can change without touching rho_A
cheat = adversarial_device(3)
print("adversary, Psi vs Psi':", measure_prob(cheat, psi, "A"), measure_prob(cheat, psi_prime, "A"))
print(run_fig1(Fig1Setup(cheat, psi, psi_prime)).summary())
