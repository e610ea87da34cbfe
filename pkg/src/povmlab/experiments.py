"""Executable thought experiments on black-box devices.

* :func:`run_fig1` - two sources with the same reduced state of particle A,
  with and without the environment unitary applied to B.
* :func:`run_fig2` - source ``|Psi_0>``, entangled pair ``|Phi_lambda>``,
  controlled gate G, optional meter on the partner qubit beta.
* :func:`run_fig3` - two different environments plus bystander particles.
* :func:`run_ensemble` - probabilistic mixtures of pure sources.

Every run accepts ``shots=None`` (exact probabilities, the default for
verdicts) or a shot count, in which case outcomes are sampled from the device
mechanism and compared at five standard errors. All runs rest on the premise
that the joint state vector determines every statistic (no hidden variables);
the reports record it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .devices import (
    BlackBoxDevice,
    EnsembleSource,
    ensemble_prob,
    ensemble_sample_frequencies,
    measure_prob,
    measure_sample,
    projective_device,
    sample_frequencies,
    trial_rng,
)
from .errors import DimensionError, PreconditionError
from .qstate import (
    PureState,
    SpaceShape,
    _rng,
    apply_local,
    complete_basis,
    environment_unitary,
    fidelity,
    is_unitary,
    permute,
    project_local,
    purify,
    random_pure,
    random_unitary,
    reduced_density,
    same_reduced,
    tensor,
)
from .report import SIGMAS, ExperimentReport, binomial_sigma, z_scores

EXACT_TOL = 1e-9
GATE_TOL = 1e-10
PREMISE = "premise: the joint state vector fully determines all outcome statistics (no hidden variables)"


def _mode(shots):
    if shots is not None and int(shots) < 1:
        raise ValueError("shots must be >= 1")
    return "exact" if shots is None else f"sampled({int(shots)})"


def _compare(report: ExperimentReport, name: str, p, q, shots, pooled: bool, exact_tol: float = EXACT_TOL, **data):
    """Exact: max |p - q| <= exact_tol. Sampled: max z-score <= 5.

    ``pooled`` means both vectors are frequencies from independent runs; else
    ``q`` is an exact reference probability.
    """
    p, q = np.asarray(p, float), np.asarray(q, float)
    data = dict(data, left=p, right=q)
    if shots is None:
        return report.at_most(name, np.max(np.abs(p - q)), exact_tol, statistic="max_abs_diff", **data)
    if pooled:
        sigma = np.sqrt(2.0) * binomial_sigma(0.5 * (p + q), shots)
    else:
        sigma = binomial_sigma(q, shots)
    return report.at_most(name, np.max(z_scores(p - q, sigma)), SIGMAS, statistic="max_z", **data)


# --------------------------------------------------------------------------
# state and gate builders


def make_phi_lambda(lam: float, labels=("alpha", "beta")) -> PureState:
    """``sqrt(1-lam)|00> + sqrt(lam)|11>`` on two qubits."""
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    amps = np.zeros(4, dtype=complex)
    amps[0] = np.sqrt(1.0 - lam)
    amps[3] = np.sqrt(lam)
    return PureState(SpaceShape.of((labels[0], 2), (labels[1], 2)), amps)


def singlet(labels=("A", "B")) -> PureState:
    amps = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)
    return PureState(SpaceShape.of((labels[0], 2), (labels[1], 2)), amps)


def mapping_unitary(psi0: PureState, psi1: PureState) -> np.ndarray:
    """Unitary W with ``W|psi0> = |psi1>``, completed by Gram-Schmidt over the canonical basis."""
    if psi0.shape != psi1.shape:
        raise DimensionError(f"shapes differ: {psi0.shape} vs {psi1.shape}")
    q0 = complete_basis(psi0.amplitudes)
    q1 = complete_basis(psi1.amplitudes)
    return q1 @ q0.conj().T


def make_gate_g(psi0: PureState, psi1: PureState) -> np.ndarray:
    """Controlled gate on (psi0's subsystems) x alpha: ``|0><0| x I + |1><1| x W``.

    The control qubit alpha is the last tensor factor.
    """
    w = mapping_unitary(psi0, psi1)
    p0 = np.diag([1.0, 0.0])
    p1 = np.diag([0.0, 1.0])
    g = np.kron(np.eye(psi0.dim), p0) + np.kron(w, p1)
    if not is_unitary(g, GATE_TOL):
        raise PreconditionError("constructed gate is not unitary")
    return g


def gate_branch_errors(g: np.ndarray, psi0: PureState, psi1: PureState) -> tuple[float, float]:
    """Distances ``|G(psi0 x |0>) - psi0 x |0>|`` and ``|G(psi0 x |1>) - psi1 x |1>|``."""
    e0, e1 = np.array([1, 0]), np.array([0, 1])
    r0 = np.linalg.norm(g @ np.kron(psi0.amplitudes, e0) - np.kron(psi0.amplitudes, e0))
    r1 = np.linalg.norm(g @ np.kron(psi0.amplitudes, e1) - np.kron(psi1.amplitudes, e1))
    return float(r0), float(r1)


def purification_pair(rho: np.ndarray, env: SpaceShape, seed=None, system: SpaceShape | None = None):
    """Two pure states on ``system x env`` with the same reduced state ``rho`` on ``system``."""
    rng = _rng(seed)
    s1, s2 = rng.integers(2**63, size=2)
    return purify(rho, env, system, seed=int(s1)), purify(rho, env, system, seed=int(s2))


def random_spectrum_density(dim: int, seed=None, kind: str = "generic") -> np.ndarray:
    """Random density matrix with a chosen spectral structure.

    ``kind``: ``generic`` (distinct eigenvalues), ``degenerate`` (one
    repeated eigenvalue), ``deficient`` (rank ``dim - 1``, at least 1),
    ``pure`` (rank one), ``maximally_mixed``.
    """
    rng = _rng(seed)
    if kind == "generic":
        w = rng.random(dim) + 0.01
    elif kind == "degenerate":
        w = rng.random(dim) + 0.01
        w[: max(2, dim // 2 + 1)] = w[0]
    elif kind == "deficient":
        w = rng.random(dim) + 0.01
        if dim > 1:
            w[-1] = 0.0
    elif kind == "pure":
        w = np.zeros(dim)
        w[0] = 1.0
    elif kind == "maximally_mixed":
        w = np.ones(dim)
    else:
        raise ValueError(f"unknown spectrum kind {kind!r}")
    w = w / w.sum()
    u = random_unitary(dim, rng)
    return (u * w) @ u.conj().T


# --------------------------------------------------------------------------
# Fig. 1: same reduced state, different purifications


@dataclass(frozen=True, eq=False)
class Fig1Setup:
    device: BlackBoxDevice
    psi: PureState
    psi_prime: PureState
    apply_u: bool = True
    target: str = "A"

    def __post_init__(self):
        if self.psi.shape != self.psi_prime.shape:
            raise DimensionError("both sources must emit the same particles")
        same_reduced(self.psi, self.psi_prime, self.target)


def run_fig1(setup: Fig1Setup, shots: int | None = None, seed: int = 0) -> ExperimentReport:
    """Outcome statistics for (a) Psi, (b) Psi' with U on the environment, (c) Psi' alone."""
    dev, t = setup.device, setup.target
    report = ExperimentReport("fig1", seed=seed, mode=_mode(shots), notes=[PREMISE])
    env = tuple(l for l in setup.psi.shape.labels if l != t)
    rho_gap = same_reduced(setup.psi, setup.psi_prime, t)
    report.at_most("fig1.rho_A_distance", rho_gap, 1e-8)

    states = {"a": setup.psi, "c": setup.psi_prime}
    if setup.apply_u:
        u = environment_unitary(setup.psi, setup.psi_prime, t)
        states["b"] = apply_local(setup.psi_prime, u, env) if env else setup.psi_prime
        report.at_most("fig1.u_unitarity", np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))), 1e-10)
        report.at_most("fig1.u_fidelity_loss", 1.0 - fidelity(states["b"], setup.psi), 1e-9)

    if shots is None:
        p = {k: measure_prob(dev, s, t) for k, s in states.items()}
    else:
        p = {k: sample_frequencies(dev, s, t, shots, trial_rng(seed, i))
             for i, (k, s) in enumerate(sorted(states.items()))}
    report.data["probabilities"] = {k: p[k] for k in sorted(p)}
    if "b" in p:
        _compare(report, "fig1.P_a_vs_P_b", p["a"], p["b"], shots, pooled=True)
        _compare(report, "fig1.P_b_vs_P_c", p["b"], p["c"], shots, pooled=True)
    _compare(report, "fig1.P_a_vs_P_c", p["a"], p["c"], shots, pooled=True)
    return report


# --------------------------------------------------------------------------
# Fig. 2: gate G, entangled pair, meter


@dataclass(frozen=True, eq=False)
class Fig2Setup:
    device: BlackBoxDevice
    psi0: PureState
    psi1: PureState
    lam: float
    measure_beta_first: bool = False
    target: str = "A"
    gate: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.psi0.shape != self.psi1.shape:
            raise DimensionError("psi0 and psi1 must live on the same particles")
        if self.target not in self.psi0.shape:
            raise DimensionError(f"target {self.target!r} missing from {self.psi0.shape.labels}")
        if {"alpha", "beta"} & set(self.psi0.shape.labels):
            raise DimensionError("labels 'alpha' and 'beta' are reserved for the entangled pair")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must lie in [0, 1], got {self.lam}")
        g = make_gate_g(self.psi0, self.psi1) if self.gate is None else np.asarray(self.gate, dtype=complex)
        object.__setattr__(self, "gate", g)
        if not is_unitary(g, GATE_TOL):
            raise PreconditionError("gate G is not unitary")
        r0, r1 = gate_branch_errors(g, self.psi0, self.psi1)
        if max(r0, r1) > GATE_TOL:
            raise PreconditionError(f"gate G violates its branch rules (errors {r0:.2e}, {r1:.2e})")

    @property
    def gate_labels(self) -> tuple[str, ...]:
        return self.psi0.shape.labels + ("alpha",)

    def initial_state(self) -> PureState:
        return tensor(self.psi0, make_phi_lambda(self.lam))

    def after_gate(self, state: PureState) -> PureState:
        return apply_local(state, self.gate, self.gate_labels)


def fig2_flash(setup: Fig2Setup) -> np.ndarray:
    """Exact device probabilities for Fig. 2a (no meter)."""
    return measure_prob(setup.device, setup.after_gate(setup.initial_state()), setup.target)


def fig2_meter(setup: Fig2Setup) -> tuple[np.ndarray, list]:
    """Meter on beta before the gate: branch weights ``p(mu:x)`` and post-gate branch states."""
    initial = setup.initial_state()
    weights, branches = np.zeros(2), []
    for x in (0, 1):
        w, collapsed = project_local(initial, np.eye(2)[x], "beta")
        weights[x] = w
        branches.append(None if collapsed is None else setup.after_gate(collapsed))
    return weights, branches


def run_fig2(setup: Fig2Setup, shots: int | None = None, seed: int = 0) -> ExperimentReport:
    """Fig. 2a always; Fig. 2b (meter on beta first) when ``setup.measure_beta_first``."""
    dev, t, lam = setup.device, setup.target, setup.lam
    report = ExperimentReport("fig2", seed=seed, mode=_mode(shots), notes=[PREMISE])
    report.data["lambda"] = lam
    g = setup.gate
    report.at_most("fig2.gate_unitarity", np.max(np.abs(g.conj().T @ g - np.eye(g.shape[0]))), GATE_TOL)
    r0, r1 = gate_branch_errors(g, setup.psi0, setup.psi1)
    report.at_most("fig2.gate_branch_0", r0, GATE_TOL)
    report.at_most("fig2.gate_branch_1", r1, GATE_TOL)

    rho0 = reduced_density(setup.psi0, t).matrix
    rho1 = reduced_density(setup.psi1, t).matrix
    mixture = (1 - lam) * rho0 + lam * rho1
    state_a = setup.after_gate(setup.initial_state())
    report.at_most("fig2.mixture_rule", np.max(np.abs(reduced_density(state_a, t).matrix - mixture)), 1e-10)

    f0 = measure_prob(dev, setup.psi0, t)
    f1 = measure_prob(dev, setup.psi1, t)
    f_mix = measure_prob(dev, purify(mixture, system=setup.psi0.shape.sub(t), env=SpaceShape.of(("R", mixture.shape[0]))), t)
    p_a = measure_prob(dev, state_a, t)
    report.data.update(F_rho0=f0, F_rho1=f1, F_mixture=f_mix, p_flash=p_a)
    spread = np.abs(f1 - f0)
    k = int(np.argmax(spread))
    if spread[k] > 1e-6:
        report.data["a_lambda_from_device"] = float((p_a[k] - f0[k]) / (f1[k] - f0[k]))

    if shots is None:
        _compare(report, "fig2a.flash_vs_F_mixture", p_a, f_mix, None, pooled=False)
        report.at_most("fig2a.linearity", np.max(np.abs(f_mix - (1 - lam) * f0 - lam * f1)), EXACT_TOL)
    else:
        freq_a = sample_frequencies(dev, state_a, t, shots, trial_rng(seed, 0))
        report.data["freq_flash"] = freq_a
        _compare(report, "fig2a.flash_vs_F_mixture", freq_a, f_mix, shots, pooled=False)

    if not setup.measure_beta_first:
        return report

    weights, branches = fig2_meter(setup)
    if shots is None:
        a_hat = weights[1]
        cond = [measure_prob(dev, b, t) if b is not None else None for b in branches]
        report.at_most("fig2b.a_lambda", abs(a_hat - lam), 1e-12, a_lambda=a_hat)
        for x, fx in ((0, f0), (1, f1)):
            if cond[x] is not None:
                _compare(report, f"fig2b.conditional_mu{x}", cond[x], fx, None, pooled=False, exact_tol=1e-10)
        total = sum(w * c for w, c in zip(weights, cond) if c is not None)
        report.at_most("fig2b.total_probability", np.max(np.abs(total - p_a)), EXACT_TOL, recombined=total)
    else:
        meter = projective_device(dim=2, name="meter-mu")
        mu = measure_sample(meter, setup.initial_state(), "beta", trial_rng(seed, 1), size=shots)
        n = np.bincount(mu, minlength=2)
        a_hat = n[1] / shots
        sigma = binomial_sigma(lam, shots)
        report.at_most("fig2b.a_lambda", float(z_scores(a_hat - lam, sigma)), SIGMAS,
                       statistic="z", a_lambda=a_hat, sigma=sigma)
        counts = np.zeros(dev.outcome_count)
        for x, fx in ((0, f0), (1, f1)):
            if n[x] == 0:
                continue
            out = measure_sample(dev, branches[x], t, trial_rng(seed, 2 + x), size=int(n[x]))
            cx = np.bincount(out, minlength=dev.outcome_count)
            counts += cx
            _compare(report, f"fig2b.conditional_mu{x}", cx / n[x], fx, int(n[x]), pooled=False)
        _compare(report, "fig2b.total_probability", counts / shots, p_a, shots, pooled=False)
    report.data["a_lambda"] = float(a_hat)
    return report


def meter_a_lambda(device: BlackBoxDevice, psi0: PureState, psi1: PureState,
                   shots: int | None = None, seed: int = 0):
    """``lam -> p(mu:1)`` from Fig. 2b runs; sampled runs use one stream per call order."""
    calls = iter(range(1 << 62))

    def oracle(lam: float) -> float:
        setup = Fig2Setup(device, psi0, psi1, lam, measure_beta_first=True)
        if shots is None:
            return float(fig2_meter(setup)[0][1])
        meter = projective_device(dim=2)
        rng = trial_rng(seed, next(calls))
        return float(np.mean(measure_sample(meter, setup.initial_state(), "beta", rng, size=shots)))

    return oracle


def device_a_lambda(device: BlackBoxDevice, psi0: PureState, psi1: PureState, outcome: int):
    """``lam -> a_lam`` read off the device alone: ``(F(rho_lam) - F(rho_0)) / (F(rho_1) - F(rho_0))``.

    ``F(rho_lam)`` is the Fig. 2a flash probability. Needs ``F(rho_0) != F(rho_1)``
    for the chosen outcome.
    """
    def flash(lam):
        return float(fig2_flash(Fig2Setup(device, psi0, psi1, lam))[outcome])

    f0, f1 = flash(0.0), flash(1.0)
    if abs(f1 - f0) <= 1e-12:
        raise PreconditionError("device responds identically to both states; a_lambda is undetermined")
    return lambda lam: (flash(lam) - f0) / (f1 - f0)


# --------------------------------------------------------------------------
# Fig. 3: different environments


@dataclass(frozen=True, eq=False)
class Fig3Setup:
    """``psi`` on A+B+C, ``psi_prime`` on A+B+C'; bystanders are C' (for a/c) and C (for b/d)."""

    device: BlackBoxDevice
    psi: PureState
    psi_prime: PureState
    bystander_c: PureState
    bystander_cp: PureState
    target: str = "A"
    require_equal_rho: bool = True

    def __post_init__(self):
        own = set(self.psi.shape.labels) - set(self.psi_prime.shape.labels)
        other = set(self.psi_prime.shape.labels) - set(self.psi.shape.labels)
        if set(self.bystander_c.shape.labels) != own or set(self.bystander_cp.shape.labels) != other:
            raise DimensionError("bystanders must carry exactly the labels the other system lacks")
        if self.require_equal_rho:
            same_reduced(self.psi, self.psi_prime, self.target)


def run_fig3(setup: Fig3Setup, shots: int | None = None, seed: int = 0) -> ExperimentReport:
    """Variants a-d; in d the bystander C and C' are swapped into c's particle order."""
    dev, t = setup.device, setup.target
    report = ExperimentReport("fig3", seed=seed, mode=_mode(shots), notes=[PREMISE])
    state_c = tensor(setup.psi, setup.bystander_cp)
    state_d = permute(tensor(setup.psi_prime, setup.bystander_c), state_c.shape.labels)
    states = {"a": setup.psi, "b": setup.psi_prime, "c": state_c, "d": state_d}

    rho = {k: reduced_density(s, t).matrix for k, s in states.items()}
    report.at_most("fig3.rho_a_eq_rho_c", np.max(np.abs(rho["a"] - rho["c"])), 1e-10)
    report.at_most("fig3.rho_b_eq_rho_d", np.max(np.abs(rho["b"] - rho["d"])), 1e-10)
    equal_rho = np.max(np.abs(rho["a"] - rho["b"])) <= 1e-8
    report.data["rho_a_equals_rho_b"] = bool(equal_rho)

    if shots is None:
        p = {k: measure_prob(dev, s, t) for k, s in states.items()}
    else:
        p = {k: sample_frequencies(dev, s, t, shots, trial_rng(seed, i)) for i, (k, s) in enumerate(states.items())}
    report.data["probabilities"] = p
    _compare(report, "fig3.P_a_vs_P_c", p["a"], p["c"], shots, pooled=True, exact_tol=1e-10)
    _compare(report, "fig3.P_b_vs_P_d", p["b"], p["d"], shots, pooled=True, exact_tol=1e-10)
    if equal_rho:
        _compare(report, "fig3.P_c_vs_P_d", p["c"], p["d"], shots, pooled=True, exact_tol=1e-10)
        _compare(report, "fig3.P_a_vs_P_b", p["a"], p["b"], shots, pooled=True, exact_tol=1e-10)
    else:
        report.notes.append("reduced states of A differ; cross-environment comparison skipped")
    return report


def random_fig3_setup(device: BlackBoxDevice, seed=None, dims=(2, 2, 3), rho_kind: str = "generic") -> Fig3Setup:
    """Random A+B+C and A+B+C' states sharing rho_A; dims are (B, C, C')."""
    rng = _rng(seed)
    n = device.system_dim
    db, dc, dcp = dims
    rho = random_spectrum_density(n, rng, rho_kind)
    env = SpaceShape.of(("B", db), ("C", dc))
    env_p = SpaceShape.of(("B", db), ("C'", dcp))
    sys = SpaceShape.of(("A", n))
    psi = purify(rho, env, sys, seed=int(rng.integers(2**63)))
    psi_p = purify(rho, env_p, sys, seed=int(rng.integers(2**63)))
    return Fig3Setup(device, psi, psi_p,
                     random_pure(SpaceShape.of(("C", dc)), rng),
                     random_pure(SpaceShape.of(("C'", dcp)), rng))


# --------------------------------------------------------------------------
# mixtures


def run_ensemble(dev: BlackBoxDevice, src: EnsembleSource, shots: int | None = None, seed: int = 0,
                 target: str = "A", povm=None) -> ExperimentReport:
    """Law of total probability over the ensemble vs ``Tr(A^(k) rho_mixture)``.

    ``povm`` defaults to the exact tomographic reconstruction of ``dev``.
    """
    from .tomography import reconstruct

    report = ExperimentReport("ensemble", seed=seed, mode=_mode(shots), notes=[PREMISE])
    povm = reconstruct(dev) if povm is None else povm
    rho_mix = src.reduced(target)
    predicted = povm.probabilities(rho_mix)
    if shots is None:
        observed = ensemble_prob(dev, src, target)
    else:
        observed = ensemble_sample_frequencies(dev, src, target, shots, trial_rng(seed, 0))
    report.data.update(members=len(src.states), weights=list(src.weights))
    _compare(report, "ensemble.total_vs_trace", observed, predicted, shots, pooled=False)
    return report


def random_ensemble(shape: SpaceShape, members: int, seed=None) -> EnsembleSource:
    rng = _rng(seed)
    w = rng.random(members) + 0.05
    w = w / w.sum()
    w[-1] = 1.0 - w[:-1].sum()
    return EnsembleSource(tuple(w), tuple(random_pure(shape, rng) for _ in range(members)))
