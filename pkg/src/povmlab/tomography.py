"""Detector tomography from outcome probabilities alone.

The device is only ever queried through :func:`measure_prob` or
:func:`sample_frequencies` on prepared probe states. Since the outcome
probability is an affine function of the density matrix, each matrix element
of ``A^(k)`` follows from a handful of probe evaluations:

* ``A_nn = F(|n><n|)``
* ``Re A_mn = F(|+_mn><+_mn|) - (A_mm + A_nn) / 2`` with ``|+_mn> = (|m> + |n>)/sqrt2``
* ``Im A_mn = (A_mm + A_nn) / 2 - F(|i_mn><i_mn|)`` with ``|i_mn> = (|m> + i|n>)/sqrt2``

The two-point evaluations equal the partial derivatives of ``F`` along
``Re rho_mn`` and ``Im rho_mn`` exactly, because ``F`` is affine;
:func:`linear_form_fit` recovers those derivatives independently by least
squares.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .devices import BlackBoxDevice, measure_prob, sample_frequencies, trial_rng
from .errors import DimensionError, RankDeficientError
from .qstate import (
    HERMITIAN_TOL,
    PureState,
    SpaceShape,
    _frozen,
    _rng,
    purify,
    random_density,
    random_pure,
    reduced_density,
)

COMPLETENESS_TOL = 1e-9
EIGEN_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Povm:
    """Outcome-indexed operators, stacked as an array of shape ``(K, N, N)``."""

    operators: np.ndarray

    def __post_init__(self):
        ops = _frozen(self.operators)
        if ops.ndim != 3 or ops.shape[1] != ops.shape[2]:
            raise DimensionError(f"operators must have shape (K, N, N), got {ops.shape}")
        object.__setattr__(self, "operators", ops)

    @property
    def dim(self) -> int:
        return self.operators.shape[1]

    @property
    def outcome_count(self) -> int:
        return self.operators.shape[0]

    def __len__(self) -> int:
        return self.outcome_count

    def __getitem__(self, k) -> np.ndarray:
        return self.operators[k]

    def probabilities(self, rho: np.ndarray) -> np.ndarray:
        """``Tr(A^(k) rho)`` for every outcome."""
        return np.real(np.einsum("kij,ji->k", self.operators, rho))

    def residuals(self) -> dict:
        ops = self.operators
        herm = float(np.max(np.abs(ops - np.conj(np.transpose(ops, (0, 2, 1))))))
        eig = np.linalg.eigvalsh(0.5 * (ops + np.conj(np.transpose(ops, (0, 2, 1)))))
        completeness = float(np.max(np.abs(ops.sum(axis=0) - np.eye(self.dim))))
        return {
            "hermiticity": herm,
            "min_eigenvalue": float(eig.min()),
            "max_eigenvalue": float(eig.max()),
            "completeness": completeness,
        }

    def is_valid(self, herm_tol=HERMITIAN_TOL, eig_tol=EIGEN_TOL, completeness_tol=COMPLETENESS_TOL) -> bool:
        r = self.residuals()
        return (
            r["hermiticity"] <= herm_tol
            and r["min_eigenvalue"] >= -eig_tol
            and r["max_eigenvalue"] <= 1 + eig_tol
            and r["completeness"] <= completeness_tol
        )


@dataclass(frozen=True)
class ProbeFamily:
    """Rank-one probes: ``vectors[j]`` is the pure state behind ``labels[j]``."""

    dim: int
    vectors: tuple
    labels: tuple

    def __len__(self) -> int:
        return len(self.vectors)

    def density(self, j: int) -> np.ndarray:
        v = self.vectors[j]
        return np.outer(v, v.conj())

    def states(self, label: str = "A") -> list[PureState]:
        shape = SpaceShape.of((label, self.dim))
        return [PureState(shape, v) for v in self.vectors]


def standard_probes(n: int) -> ProbeFamily:
    """``|k><k|`` for each k, then ``(|m>+|n>)/sqrt2`` and ``(|m>+i|n>)/sqrt2`` for m < n."""
    eye = np.eye(n, dtype=complex)
    vectors, labels = [], []
    for k in range(n):
        vectors.append(eye[k])
        labels.append(("diag", k, k))
    for m in range(n):
        for k in range(m + 1, n):
            vectors.append((eye[m] + eye[k]) / np.sqrt(2))
            labels.append(("re", m, k))
            vectors.append((eye[m] + 1j * eye[k]) / np.sqrt(2))
            labels.append(("im", m, k))
    return ProbeFamily(n, tuple(vectors), tuple(labels))


def evaluate_probes(dev: BlackBoxDevice, probes: ProbeFamily, shots: int | None = None,
                    seed: int = 0) -> np.ndarray:
    """Outcome probabilities (or frequencies) for each probe, shape ``(len(probes), K)``.

    Sampled evaluation uses an independent stream per probe, keyed by its index.
    """
    out = np.empty((len(probes), dev.outcome_count))
    for j, state in enumerate(probes.states()):
        if shots is None:
            out[j] = measure_prob(dev, state, "A")
        else:
            out[j] = sample_frequencies(dev, state, "A", shots, trial_rng(seed, j))
    return out


def assemble(values: np.ndarray, probes: ProbeFamily) -> np.ndarray:
    """Operators ``(K, N, N)`` from probe values ``(len(probes), K)``."""
    n = probes.dim
    ops = np.zeros((values.shape[1], n, n), dtype=complex)
    diag = {}
    for j, (kind, m, k) in enumerate(probes.labels):
        if kind == "diag":
            ops[:, m, m] = values[j]
            diag[m] = values[j]
    for j, (kind, m, k) in enumerate(probes.labels):
        if kind == "re":
            ops[:, m, k] += values[j] - 0.5 * (diag[m] + diag[k])
        elif kind == "im":
            ops[:, m, k] += 1j * (0.5 * (diag[m] + diag[k]) - values[j])
    for m in range(n):
        for k in range(m + 1, n):
            ops[:, k, m] = ops[:, m, k].conj()
    return ops


def reconstruct(dev: BlackBoxDevice, shots: int | None = None, seed: int = 0) -> Povm:
    """POVM of ``dev`` from probe evaluations; exact when ``shots`` is None."""
    probes = standard_probes(dev.system_dim)
    return Povm(assemble(evaluate_probes(dev, probes, shots, seed), probes))


def sampled_entry_bound(dim: int, shots: int, sigmas: float = 5.0) -> float:
    """Worst-case operator-norm error of a sampled reconstruction at ``sigmas`` standard errors.

    Each probe frequency has standard error at most ``1/(2 sqrt(shots))``; an
    off-diagonal element combines three of them, so every entry is off by at
    most ``2 * sigmas * sigma``; the operator norm is bounded by ``dim`` times that.
    """
    return dim * 2.0 * sigmas * 0.5 / np.sqrt(shots)


@dataclass
class ConsistencyReport:
    trials: int
    max_residual: float
    tolerance: float
    residuals: np.ndarray = field(repr=False)

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tolerance


def consistency_check(dev: BlackBoxDevice, povm: Povm, trials: int = 100, seed: int = 0,
                      tol: float = 1e-8) -> ConsistencyReport:
    """Compare the device against ``Tr(A^(k) rho_A)`` on held-out joint states.

    Each trial draws a random pure state of the particle and a random
    environment of dimension 1-4 (environment dimension 1 gives a pure input).
    """
    if povm.dim != dev.system_dim:
        raise DimensionError(f"POVM dimension {povm.dim} != device dimension {dev.system_dim}")
    rng = _rng(seed)
    res = np.empty(trials)
    for t in range(trials):
        env = int(rng.integers(1, 5))
        joint = random_pure(SpaceShape.of(("A", dev.system_dim), ("E", env)), rng)
        rho = reduced_density(joint, "A").matrix
        res[t] = np.max(np.abs(measure_prob(dev, joint, "A") - povm.probabilities(rho)))
    return ConsistencyReport(trials, float(res.max(initial=0.0)), tol, res)


# --------------------------------------------------------------------------
# affine-form fit


@dataclass(frozen=True, eq=False)
class LinearFunctionalCoefficients:
    """``F(rho) = a + sum_n b_n rho_nn + sum_{m<n} c_mn Re rho_mn + d_mn Im rho_mn``.

    ``b`` covers the first ``N-1`` diagonal entries; ``c`` and ``d`` are
    ``N x N`` arrays filled only above the diagonal.
    """

    a: float
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    residual: float

    @property
    def dim(self) -> int:
        return self.c.shape[0]

    def to_operator(self) -> np.ndarray:
        """Hermitian ``A`` with ``F(rho) = Tr(A rho)``: ``A_NN = a``, ``A_nn = b_n + a``,
        ``A_mn = (c_mn + i d_mn) / 2``."""
        n = self.dim
        op = np.zeros((n, n), dtype=complex)
        op[n - 1, n - 1] = self.a
        for k in range(n - 1):
            op[k, k] = self.b[k] + self.a
        iu = np.triu_indices(n, 1)
        op[iu] = 0.5 * (self.c[iu] + 1j * self.d[iu])
        op[(iu[1], iu[0])] = op[iu].conj()
        return op

    def __call__(self, rho: np.ndarray) -> float:
        return float(_features(np.asarray(rho)[None])[0] @ self._vector())

    def _vector(self) -> np.ndarray:
        iu = np.triu_indices(self.dim, 1)
        return np.concatenate([[self.a], self.b, self.c[iu], self.d[iu]])


def _features(rhos: np.ndarray) -> np.ndarray:
    n = rhos.shape[1]
    iu = np.triu_indices(n, 1)
    diag = np.real(np.diagonal(rhos, axis1=1, axis2=2))[:, : n - 1]
    off = rhos[:, iu[0], iu[1]]
    return np.hstack([np.ones((rhos.shape[0], 1)), diag, off.real, off.imag])


def linear_form_fit(samples, fit_tol: float = 1e-10) -> LinearFunctionalCoefficients:
    """Least-squares affine fit of ``(density matrix, value)`` pairs.

    Needs at least ``N^2`` affinely independent density matrices.
    ``residual`` is the largest absolute misfit; well above ``fit_tol`` means
    the data are not an affine function of the density matrix.
    """
    rhos = np.array([getattr(r, "matrix", r) for r, _ in samples], dtype=complex)
    vals = np.array([v for _, v in samples], dtype=float)
    n = rhos.shape[1]
    x = _features(rhos)
    if x.shape[0] < n * n or np.linalg.matrix_rank(x, tol=1e-9) < n * n:
        raise RankDeficientError(f"samples span fewer than the {n * n} affine directions needed")
    coef, *_ = np.linalg.lstsq(x, vals, rcond=None)
    residual = float(np.max(np.abs(x @ coef - vals)))
    iu = np.triu_indices(n, 1)
    npair = iu[0].size
    c = np.zeros((n, n))
    d = np.zeros((n, n))
    c[iu] = coef[n : n + npair]
    d[iu] = coef[n + npair :]
    return LinearFunctionalCoefficients(float(coef[0]), coef[1:n].copy(), c, d, residual)


def device_samples(dev: BlackBoxDevice, outcome: int, count: int, seed=None, env_dim: int = 2):
    """``(rho_A, P_k)`` pairs from random entangled joint states fed to ``dev``."""
    rng = _rng(seed)
    out = []
    for _ in range(count):
        joint = random_pure(SpaceShape.of(("A", dev.system_dim), ("E", env_dim)), rng)
        out.append((reduced_density(joint, "A").matrix, float(measure_prob(dev, joint, "A")[outcome])))
    return out


def random_density_samples(dev: BlackBoxDevice, outcome: int, count: int, seed=None):
    """Like :func:`device_samples` but with full-rank states purified canonically."""
    rng = _rng(seed)
    out = []
    for _ in range(count):
        rho = random_density(dev.system_dim, seed=rng)
        joint = purify(rho)
        out.append((rho, float(measure_prob(dev, joint, "A")[outcome])))
    return out
