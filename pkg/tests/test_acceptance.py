"""One test per acceptance criterion, each at its stated tolerance.

Every test prints a ``[PASS]/[FAIL] criterion N`` line (also collected in the
terminal summary) before asserting.
"""

import json

import numpy as np

from povmlab.analysis import check_a_lambda, extract_born
from povmlab.cli import main
from povmlab.devices import adversarial_device, kraus_povm, projective_device, random_quantum_device
from povmlab.experiments import (
    Fig1Setup,
    Fig2Setup,
    fig2_meter,
    meter_a_lambda,
    purification_pair,
    random_ensemble,
    random_fig3_setup,
    random_spectrum_density,
    run_ensemble,
    run_fig1,
    run_fig2,
    run_fig3,
)
from povmlab.qstate import PureState, SpaceShape, apply_local, environment_unitary, fidelity, purify, random_pure, random_unitary
from povmlab.tomography import consistency_check, device_samples, linear_form_fit, reconstruct

KINDS = ("projective", "indirect", "noisy")


def test_criterion_1_povm_theorem(criterion):
    rng = np.random.default_rng(1)
    worst_match = worst_cons = 0.0
    for i in range(50):
        kind = KINDS[i % 3]
        n = int(rng.integers(2, 5))
        k = n if kind == "projective" else int(rng.integers(1, 6))
        dev = random_quantum_device(n, k, rng, kind=kind)
        povm = reconstruct(dev)
        worst_match = max(worst_match, np.max(np.abs(povm.operators - kraus_povm(dev).operators)))
        worst_cons = max(worst_cons, consistency_check(dev, povm, trials=100, seed=i).max_residual)
    ok = worst_match <= 1e-9 and worst_cons <= 1e-8
    criterion(1, "tomography = Kraus oracle (1e-9), consistency (1e-8), 50 devices", ok,
              f"match {worst_match:.1e}, consistency {worst_cons:.1e}")
    assert ok


def test_criterion_2_density_matrix_sufficiency(criterion):
    rng = np.random.default_rng(2)
    worst_exact, worst_z, all_sampled = 0.0, 0.0, True
    for kind in KINDS:
        for i in range(100):
            n = int(rng.integers(2, 5))
            dev = random_quantum_device(n, n if kind == "projective" else int(rng.integers(2, 5)), rng, kind=kind)
            rho = random_spectrum_density(n, rng, ("generic", "degenerate", "deficient")[i % 3])
            a, b = purification_pair(rho, SpaceShape.of(("B", int(rng.integers(n, 5)))), rng)
            setup = Fig1Setup(dev, a, b)
            exact = run_fig1(setup)
            worst_exact = max(worst_exact, *(exact[f"fig1.P_{x}"].value for x in ("a_vs_P_b", "b_vs_P_c", "a_vs_P_c")))
            sampled = run_fig1(setup, shots=1_000_000, seed=i)
            all_sampled &= sampled.passed
            worst_z = max(worst_z, sampled["fig1.P_a_vs_P_c"].value)
    shape = SpaceShape.of(("A", 2), ("B", 2))
    adv = run_fig1(Fig1Setup(adversarial_device(2), PureState(shape, np.eye(4)[0]), PureState(shape, np.eye(4)[1])))
    adv_res = adv["fig1.P_a_vs_P_c"].value
    ok = worst_exact <= 1e-10 and all_sampled and not adv.passed and adv_res >= 0.1
    criterion(2, "equal-rho purifications agree (1e-10 exact, 5 sigma at 1e6 shots); adversarial FAILS >= 0.1", ok,
              f"exact {worst_exact:.1e}, max z {worst_z:.2f}, adversarial {adv_res:.2f}")
    assert ok


def test_criterion_3_linearity_and_mixture(criterion):
    rng = np.random.default_rng(3)
    worst_mix = worst_lin = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 5))
        dev = random_quantum_device(n, int(rng.integers(2, 5)), rng)
        shape = SpaceShape.of(("A", n), ("B", int(rng.integers(1, 4))))
        rep = run_fig2(Fig2Setup(dev, random_pure(shape, rng), random_pure(shape, rng), float(rng.random())))
        worst_mix = max(worst_mix, rep["fig2.mixture_rule"].value)
        worst_lin = max(worst_lin, rep["fig2a.linearity"].value)
    ok = worst_mix <= 1e-10 and worst_lin <= 1e-9
    criterion(3, "mixture rule (1e-10) and F-linearity (1e-9), 100 triples", ok,
              f"mixture {worst_mix:.1e}, linearity {worst_lin:.1e}")
    assert ok


def test_criterion_4_a_lambda_identity(criterion):
    shape = SpaceShape.of(("A", 2), ("B", 2))
    dev = random_quantum_device(2, 3, 4)
    psi0, psi1 = random_pure(shape, 40), random_pure(shape, 41)
    grid = [p / 16 for p in range(17)]
    dev_grid = max(abs(fig2_meter(Fig2Setup(dev, psi0, psi1, lam, measure_beta_first=True))[0][1] - lam)
                   for lam in grid)
    passes = check_a_lambda(meter_a_lambda(dev, psi0, psi1)).passed
    counter = check_a_lambda(lambda x: x * x).passed
    ok = dev_grid <= 1e-12 and passes and not counter
    criterion(4, "p(mu:1) = lambda on 17 dyadics (1e-12); checker PASS on quantum, FAIL on lambda^2", ok,
              f"grid {dev_grid:.1e}, quantum {'PASS' if passes else 'FAIL'}, square {'PASS' if counter else 'FAIL'}")
    assert ok


def test_criterion_5_environment_unitary(criterion):
    rng = np.random.default_rng(5)
    kinds = ("generic", "degenerate", "deficient", "pure", "maximally_mixed")
    worst = 0.0
    for i in range(200):
        n = int(rng.integers(2, 5))
        rho = random_spectrum_density(n, rng, kinds[i % len(kinds)])
        env = SpaceShape.of(("B", int(rng.integers(n, 6))))
        a = purify(rho, env, seed=int(rng.integers(2**63)))
        b = purify(rho, env, seed=int(rng.integers(2**63)))
        u = environment_unitary(a, b, "A")
        worst = max(worst, 1 - fidelity(apply_local(b, u, "B"), a))
    ok = worst <= 1e-9
    criterion(5, "environment unitary fidelity >= 1 - 1e-9, 200 pairs incl. deficient/degenerate", ok,
              f"max loss {worst:.1e}")
    assert ok


def test_criterion_6_bystanders(criterion):
    rng = np.random.default_rng(6)
    worst, names = 0.0, ("fig3.P_a_vs_P_c", "fig3.P_b_vs_P_d", "fig3.P_a_vs_P_b")
    for i in range(50):
        n = int(rng.integers(2, 4))
        dev = random_quantum_device(n, int(rng.integers(2, 5)), rng)
        # B alone can purify rho_A; C and C' add environments of different sizes
        dims = (n, *(int(x) for x in rng.integers(1, 4, size=2)))
        rep = run_fig3(random_fig3_setup(dev, rng, dims=dims, rho_kind=("generic", "deficient")[i % 2]))
        worst = max(worst, *(rep[name].value for name in names))
    ok = worst <= 1e-10
    criterion(6, "P_a = P_c, P_b = P_d, P_a = P_b (1e-10), 50 configurations", ok, f"max {worst:.1e}")
    assert ok


def test_criterion_7_affine_fit_and_scaling(criterion):
    rng = np.random.default_rng(7)
    worst_map = 0.0
    for i in range(10):
        n = int(rng.integers(2, 5))
        dev = random_quantum_device(n, 3, rng)
        povm = reconstruct(dev)
        for k in range(dev.outcome_count):
            fit = linear_form_fit(device_samples(dev, k, 2 * n * n, seed=int(rng.integers(2**32))))
            a = povm[k]
            iu = np.triu_indices(n, 1)
            worst_map = max(worst_map,
                            abs(fit.a - a[-1, -1].real),
                            np.max(np.abs(fit.b - (np.diag(a).real[:-1] - a[-1, -1].real)), initial=0),
                            np.max(np.abs(fit.c[iu] - 2 * a[iu].real), initial=0),
                            np.max(np.abs(fit.d[iu] - 2 * a[iu].imag), initial=0))
    dev = random_quantum_device(3, 3, 70, kind="indirect")
    exact = kraus_povm(dev).operators
    shots = np.array([1e4, 1e5, 1e6])
    err = [np.mean([np.sqrt(np.mean(np.abs(reconstruct(dev, int(s), seed).operators - exact) ** 2))
                    for seed in range(10)]) for s in shots]
    slope = float(np.polyfit(np.log(shots), np.log(err), 1)[0])
    ok = worst_map <= 1e-9 and abs(slope + 0.5) <= 0.1
    criterion(7, "fit coefficients map to operator (1e-9); error exponent -0.5 +- 0.1", ok,
              f"map {worst_map:.1e}, exponent {slope:.3f}")
    assert ok


def test_criterion_8_born_rule(criterion):
    rng = np.random.default_rng(8)
    worst_gram = worst_proj = worst_born = 0.0
    projective = True
    for i in range(20):
        n = int(rng.integers(2, 5))
        r = random_unitary(n, rng)
        povm = reconstruct(projective_device(r))
        born = extract_born(povm, [r[:, k] for k in range(n)], test_states=100, seed=i)
        projective &= born.is_projective
        worst_gram = max(worst_gram, born.gram_deviation)
        worst_proj = max(worst_proj, float(born.projector_deviation.max()))
        worst_born = max(worst_born, born.born_residual)
    ok = projective and worst_gram <= 1e-8 and worst_proj <= 1e-8 and worst_born <= 1e-9
    criterion(8, "Born extraction: Gram (1e-8), projectors, |<phi|psi>|^2 (1e-9), 20 devices", ok,
              f"gram {worst_gram:.1e}, projector {worst_proj:.1e}, born {worst_born:.1e}")
    assert ok


def test_criterion_9_ensembles(criterion):
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 5))
        dev = random_quantum_device(n, int(rng.integers(1, 5)), rng)
        src = random_ensemble(SpaceShape.of(("A", n), ("B", int(rng.integers(1, 4)))), int(rng.integers(1, 6)), rng)
        worst = max(worst, run_ensemble(dev, src)["ensemble.total_vs_trace"].value)
    ok = worst <= 1e-9
    criterion(9, "ensemble probabilities = Tr(A rho_mixture) (1e-9), 50 ensembles", ok, f"max {worst:.1e}")
    assert ok


def test_criterion_10_cli_determinism(criterion, tmp_path):
    dev = tmp_path / "dev.json"
    dev.write_text(json.dumps({"kind": "indirect", "dim": 2, "ancilla_dim": 2, "seed": 3}))
    commands = [["experiment", w] for w in ("fig1", "fig2", "fig3", "ensemble")] + [["tomography"], ["certify"]]
    mismatched = []
    for cmd in commands:
        for mode in (["--exact"], ["--shots", "100000"]):
            blobs = []
            for run in range(2):
                out = tmp_path / f"r{run}.json"
                main([*cmd, "--device", str(dev), "--seed", "12345", *mode, "-o", str(out)])
                blobs.append(out.read_bytes())
            if blobs[0] != blobs[1]:
                mismatched.append(" ".join(cmd + mode))
    ok = not mismatched
    criterion(10, "every CLI command byte-identical across two runs (exact and sampled)", ok,
              "mismatch: " + ", ".join(mismatched) if mismatched else f"{2 * len(commands)} invocations")
    assert ok
