"""Reconstruct a detector's POVM from probe statistics, then read off the Born rule.

Run: python3 demos/tomography_and_born.py
"""

import numpy as np

from povmlab.analysis import certainty_candidates, extract_born
from povmlab.devices import adversarial_device, kraus_povm, noisy_device, projective_device, random_indirect
from povmlab.qstate import random_unitary
from povmlab.tomography import consistency_check, device_samples, linear_form_fit, reconstruct

np.set_printoptions(precision=4, suppress=True)

dev = random_indirect(3, 4, seed=5)
povm = reconstruct(dev)
print("indirect device: |reconstructed - Kraus| =", np.max(np.abs(povm.operators - kraus_povm(dev).operators)))
print("held-out consistency residual:", consistency_check(dev, povm, trials=100).max_residual)
for shots in (10**4, 10**5, 10**6):
    err = np.max(np.abs(reconstruct(dev, shots, seed=1).operators - povm.operators))
    print(f"  {shots:>8} shots per probe: max entry error {err:.2e}")

fit = linear_form_fit(device_samples(dev, 0, 40, seed=2))
print("affine fit of outcome 0 on random inputs, residual", fit.residual)
print("c_mn / 2 vs Re A_mn:", fit.c[0, 1] / 2, povm[0][0, 1].real)

r = random_unitary(3, seed=8)
rotated = reconstruct(projective_device(r))
vecs, tops = certainty_candidates(rotated)
born = extract_born(rotated, vecs)
print("rotated projective device: projective =", born.is_projective, " Born residual =", born.born_residual)
print("recovered basis vs true basis overlaps:", np.abs(born.vectors.conj().T @ r).diagonal())

noisy = reconstruct(noisy_device([[0.95, 0.05], [0.05, 0.95]], dim=2))
print("noisy device top eigenvalues:", certainty_candidates(noisy)[1], "(no outcome is ever certain)")

cheat = adversarial_device(2)
print("adversary: fit residual", linear_form_fit(device_samples(cheat, 0, 40, seed=3)).residual,
      " consistency residual", consistency_check(cheat, reconstruct(cheat)).max_residual)
