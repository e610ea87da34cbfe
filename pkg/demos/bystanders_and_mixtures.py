"""Environment independence and the law of total probability for mixtures.

Run: python3 demos/bystanders_and_mixtures.py
"""

import numpy as np

from povmlab.devices import EnsembleSource, ensemble_prob, measure_prob, random_quantum_device
from povmlab.experiments import random_ensemble, random_fig3_setup, run_ensemble, run_fig3, singlet
from povmlab.qstate import PureState, SpaceShape

device = random_quantum_device(2, 3, seed=4, kind="noisy")

setup = random_fig3_setup(device, seed=5, dims=(2, 3, 2))
print("A+B+C vs A+B+C' environments:", setup.psi.shape.labels, setup.psi_prime.shape.labels)
print(run_fig3(setup).summary())

shape = SpaceShape.of(("A", 2), ("B", 2))
up = PureState(shape, np.eye(4, dtype=complex)[0])
down = PureState(shape, np.eye(4, dtype=complex)[2])
mix = ensemble_prob(device, EnsembleSource.of([(0.5, up), (0.5, down)]), "A")
print("50/50 up/down mixture:", mix.round(12))
print("one half of a singlet: ", measure_prob(device, singlet(), "A").round(12))

src = random_ensemble(SpaceShape.of(("A", 2), ("B", 3)), 4, seed=6)
print(run_ensemble(device, src).summary())
print(run_ensemble(device, src, shots=1_000_000, seed=1).summary())
