"""Black-box measurement apparatuses and state sources.

A :class:`BlackBoxDevice` only ever sees the *full* joint state and the label
of the particle that enters it. Whether its statistics depend on the joint
state only through the reduced density matrix of that particle is a property
of the hidden mechanism, which the experiments check rather than assume.

Mechanisms:

* :class:`ProjectiveSpec` - measures the particle in an orthonormal basis.
* :class:`IndirectSpec` - couples the particle to an ancilla with a unitary,
  then reads the ancilla out in a basis.
* :class:`NoisySpec` - a projective measurement whose reported outcome is
  scrambled by a confusion matrix.
* :class:`AdversarialSpec` - negative control; outcome 0 fires with
  probability ``|<0...0|Psi>|^2`` of the global state, so two purifications of
  the same reduced state can disagree.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError, PreconditionError, UnsupportedDeviceError
from .qstate import (
    PureState,
    _frozen,
    _rng,
    _split,
    is_unitary,
    random_pure,
    random_unitary,
    reduced_density,
)

PROB_TOL = 1e-10


def trial_rng(seed: int, *keys: int) -> np.random.Generator:
    """Counter-based (Philox) generator for the stream keyed by ``(seed, *keys)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, keys)])))


def _clean(p: np.ndarray) -> np.ndarray:
    p = np.clip(np.real(p), 0.0, None)
    return p / p.sum()


def _draw(p: np.ndarray, rng: np.random.Generator, size: int | None) -> int | np.ndarray:
    cdf = np.cumsum(_clean(p))
    cdf[-1] = 1.0
    u = rng.random(size)
    out = np.searchsorted(cdf, u, side="right")
    return int(out) if size is None else out


# --------------------------------------------------------------------------
# mechanisms


@dataclass(frozen=True, eq=False)
class ProjectiveSpec:
    """Columns of ``basis`` are the measurement vectors ``|phi_k>``."""

    basis: np.ndarray

    def __post_init__(self):
        b = _frozen(self.basis)
        if b.ndim != 2 or b.shape[0] != b.shape[1] or not is_unitary(b):
            raise PreconditionError("projective basis must be a square matrix with orthonormal columns")
        object.__setattr__(self, "basis", b)

    @property
    def system_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def outcome_count(self) -> int:
        return self.basis.shape[1]

    def probabilities(self, joint: PureState, target: str) -> np.ndarray:
        rho = reduced_density(joint, target).matrix
        return np.real(np.einsum("ik,ij,jk->k", self.basis.conj(), rho, self.basis))

    def branch_weights(self, joint: PureState, target: str) -> np.ndarray:
        # project the whole joint state; used by the sampler
        amps = self.basis.conj().T @ _split(joint, (target,))
        return np.sum(np.abs(amps) ** 2, axis=1)


@dataclass(frozen=True, eq=False)
class IndirectSpec:
    """Ancilla in ``ancilla_state``, interaction ``coupling`` on system x ancilla,
    readout in the columns of ``readout``."""

    system_dim: int
    ancilla_state: np.ndarray
    coupling: np.ndarray
    readout: np.ndarray

    def __post_init__(self):
        n = int(self.system_dim)
        e, v, r = _frozen(self.ancilla_state).reshape(-1), _frozen(self.coupling), _frozen(self.readout)
        d = e.size
        if abs(np.linalg.norm(e) - 1.0) > 1e-12:
            raise PreconditionError("ancilla state must be normalized")
        if v.shape != (n * d, n * d) or not is_unitary(v):
            raise PreconditionError(f"coupling must be a {n * d}x{n * d} unitary")
        if r.shape != (d, d) or not is_unitary(r):
            raise PreconditionError(f"readout basis must be a {d}x{d} unitary")
        object.__setattr__(self, "system_dim", n)
        object.__setattr__(self, "ancilla_state", _frozen(e))
        object.__setattr__(self, "coupling", v)
        object.__setattr__(self, "readout", r)

    @property
    def ancilla_dim(self) -> int:
        return self.ancilla_state.size

    @property
    def outcome_count(self) -> int:
        return self.ancilla_dim

    def kraus(self) -> np.ndarray:
        """``M_k = (I x <r_k|) V (I x |e>)`` stacked along axis 0."""
        n, d = self.system_dim, self.ancilla_dim
        v = self.coupling.reshape(n, d, n, d)
        return np.einsum("ak,iajb,b->kij", self.readout.conj(), v, self.ancilla_state)

    def probabilities(self, joint: PureState, target: str) -> np.ndarray:
        rho = reduced_density(joint, target).matrix
        m = self.kraus()
        return np.real(np.einsum("kij,jl,kil->k", m, rho, m.conj()))

    def branch_weights(self, joint: PureState, target: str) -> np.ndarray:
        # evolve the global state (system rows, everything else columns) with the ancilla attached
        n, d = self.system_dim, self.ancilla_dim
        sys_rest = _split(joint, (target,))
        glob = np.einsum("a,ir->iar", self.ancilla_state, sys_rest).reshape(n * d, -1)
        glob = (self.coupling @ glob).reshape(n, d, -1)
        amps = np.einsum("ak,iar->kir", self.readout.conj(), glob)
        return np.sum(np.abs(amps) ** 2, axis=(1, 2))


@dataclass(frozen=True, eq=False)
class NoisySpec:
    """``confusion[j, k]`` = probability of reporting ``j`` when the true outcome is ``k``."""

    inner: ProjectiveSpec
    confusion: np.ndarray

    def __post_init__(self):
        c = np.array(self.confusion, dtype=float)
        if c.ndim != 2 or c.shape[1] != self.inner.outcome_count:
            raise PreconditionError(f"confusion matrix must have {self.inner.outcome_count} columns")
        if np.any(c < 0) or np.max(np.abs(c.sum(axis=0) - 1.0)) > 1e-12:
            raise PreconditionError("each confusion column must be a probability vector")
        c.flags.writeable = False
        object.__setattr__(self, "confusion", c)

    @property
    def system_dim(self) -> int:
        return self.inner.system_dim

    @property
    def outcome_count(self) -> int:
        return self.confusion.shape[0]

    def probabilities(self, joint: PureState, target: str) -> np.ndarray:
        return self.confusion @ self.inner.probabilities(joint, target)


@dataclass(frozen=True, eq=False)
class AdversarialSpec:
    """Reads the global state: outcome 0 with probability ``|Psi[0]|^2``, the rest on the last outcome."""

    system_dim: int
    outcome_count: int = 2

    def __post_init__(self):
        if self.outcome_count < 2:
            raise PreconditionError("adversarial device needs at least two outcomes")

    def probabilities(self, joint: PureState, target: str) -> np.ndarray:
        p = np.zeros(self.outcome_count)
        p[0] = abs(joint.amplitudes[0]) ** 2
        p[-1] = 1.0 - p[0]
        return p


# --------------------------------------------------------------------------
# black box


@dataclass(frozen=True, eq=False)
class BlackBoxDevice:
    """Opaque apparatus: K outcomes, accepts a particle of dimension N."""

    mechanism: ProjectiveSpec | IndirectSpec | NoisySpec | AdversarialSpec
    name: str = ""

    @property
    def kind(self) -> str:
        return {
            ProjectiveSpec: "projective",
            IndirectSpec: "indirect",
            NoisySpec: "noisy",
            AdversarialSpec: "adversarial",
        }[type(self.mechanism)]

    @property
    def outcome_count(self) -> int:
        return self.mechanism.outcome_count

    @property
    def system_dim(self) -> int:
        return self.mechanism.system_dim

    @property
    def is_quantum(self) -> bool:
        return not isinstance(self.mechanism, AdversarialSpec)

    def __repr__(self) -> str:
        return f"BlackBoxDevice({self.name or self.kind}, N={self.system_dim}, K={self.outcome_count})"


def _check_target(dev: BlackBoxDevice, joint: PureState, target: str) -> None:
    d = joint.shape.dim(target)
    if d != dev.system_dim:
        raise DimensionError(f"subsystem {target!r} has dimension {d}; device accepts {dev.system_dim}")


def measure_prob(dev: BlackBoxDevice, joint: PureState, target: str = "A") -> np.ndarray:
    """Exact outcome probabilities for particle ``target`` of ``joint``."""
    _check_target(dev, joint, target)
    return _clean(dev.mechanism.probabilities(joint, target))


def measure_sample(dev: BlackBoxDevice, joint: PureState, target: str = "A",
                   rng=None, size: int | None = None):
    """Draw outcome(s) by running the device's internal mechanism on ``joint``.

    Projective and indirect devices draw from the branch norms of the global
    state after projection (never from the reduced state); the noisy device
    draws a true outcome, then a reported one from its confusion column.
    """
    _check_target(dev, joint, target)
    rng = _rng(rng)
    mech = dev.mechanism
    if isinstance(mech, NoisySpec):
        true = _draw(mech.inner.branch_weights(joint, target), rng, size)
        cdf = np.cumsum(mech.confusion, axis=0)
        cdf[-1] = 1.0
        u = rng.random(size)
        if size is None:
            return int(np.searchsorted(cdf[:, true], u, side="right"))
        return np.sum(u[:, None] >= cdf[:, true].T, axis=1)
    if isinstance(mech, (ProjectiveSpec, IndirectSpec)):
        return _draw(mech.branch_weights(joint, target), rng, size)
    return _draw(mech.probabilities(joint, target), rng, size)


def sample_frequencies(dev: BlackBoxDevice, joint: PureState, target: str, shots: int, rng) -> np.ndarray:
    """Outcome frequencies over ``shots`` runs.

    Counts are drawn as one multinomial over the mechanism's branch weights
    (two stages for the noisy device), which has the same distribution as
    tallying ``shots`` calls of :func:`measure_sample` at O(K) cost.
    """
    _check_target(dev, joint, target)
    rng = _rng(rng)
    mech = dev.mechanism
    if isinstance(mech, NoisySpec):
        true = rng.multinomial(shots, _clean(mech.inner.branch_weights(joint, target)))
        counts = sum(rng.multinomial(int(n), _clean(mech.confusion[:, k])) for k, n in enumerate(true) if n)
    elif isinstance(mech, (ProjectiveSpec, IndirectSpec)):
        counts = rng.multinomial(shots, _clean(mech.branch_weights(joint, target)))
    else:
        counts = rng.multinomial(shots, _clean(mech.probabilities(joint, target)))
    return np.asarray(counts, dtype=float) / shots


def kraus_povm(dev: BlackBoxDevice):
    """POVM elements built from the device internals (independent of tomography)."""
    from .tomography import Povm

    mech = dev.mechanism
    if isinstance(mech, ProjectiveSpec):
        ops = np.einsum("ik,jk->kij", mech.basis, mech.basis.conj())
    elif isinstance(mech, IndirectSpec):
        m = mech.kraus()
        ops = np.einsum("kji,kjl->kil", m.conj(), m)
    elif isinstance(mech, NoisySpec):
        b = mech.inner.basis
        proj = np.einsum("ik,jk->kij", b, b.conj())
        ops = np.einsum("jk,kab->jab", mech.confusion, proj)
    else:
        raise UnsupportedDeviceError(f"{dev.kind} device has no Kraus representation")
    return Povm(ops)


# --------------------------------------------------------------------------
# factories


def projective_device(basis=None, dim: int | None = None, name: str = "") -> BlackBoxDevice:
    if basis is None:
        basis = np.eye(dim)
    return BlackBoxDevice(ProjectiveSpec(basis), name)


def indirect_device(system_dim: int, ancilla_state, coupling, readout=None, name: str = "") -> BlackBoxDevice:
    ancilla_state = np.asarray(ancilla_state, dtype=complex).reshape(-1)
    if readout is None:
        readout = np.eye(ancilla_state.size)
    return BlackBoxDevice(IndirectSpec(system_dim, ancilla_state, coupling, readout), name)


def noisy_device(confusion, basis=None, dim: int | None = None, name: str = "") -> BlackBoxDevice:
    confusion = np.asarray(confusion, dtype=float)
    if basis is None:
        basis = np.eye(confusion.shape[1] if dim is None else dim)
    return BlackBoxDevice(NoisySpec(ProjectiveSpec(basis), confusion), name)


def adversarial_device(dim: int, outcomes: int = 2, name: str = "") -> BlackBoxDevice:
    return BlackBoxDevice(AdversarialSpec(dim, outcomes), name)


def random_projective(dim: int, seed=None) -> BlackBoxDevice:
    return projective_device(random_unitary(dim, seed), name="random-projective")


def random_indirect(dim: int, ancilla_dim: int, seed=None) -> BlackBoxDevice:
    from .qstate import SpaceShape

    rng = _rng(seed)
    e = random_pure(SpaceShape.of(("e", ancilla_dim)), rng).amplitudes
    v = random_unitary(dim * ancilla_dim, rng)
    r = random_unitary(ancilla_dim, rng)
    return indirect_device(dim, e, v, r, name="random-indirect")


def random_noisy(dim: int, outcomes: int, seed=None) -> BlackBoxDevice:
    rng = _rng(seed)
    c = rng.random((outcomes, dim)) + 0.05
    c /= c.sum(axis=0)
    return noisy_device(c, random_unitary(dim, rng), name="random-noisy")


def random_quantum_device(dim: int, outcomes: int, seed=None, kind: str | None = None) -> BlackBoxDevice:
    """A projective (only when ``outcomes == dim``), indirect or noisy device."""
    rng = _rng(seed)
    kinds = ["indirect", "noisy"] + (["projective"] if outcomes == dim else [])
    kind = kinds[rng.integers(len(kinds))] if kind is None else kind
    if kind == "projective":
        return random_projective(dim, rng)
    if kind == "indirect":
        return random_indirect(dim, outcomes, rng)
    if kind == "noisy":
        return random_noisy(dim, outcomes, rng)
    raise ValueError(f"unknown device kind {kind!r}")


# --------------------------------------------------------------------------
# ensembles


@dataclass(frozen=True, eq=False)
class EnsembleSource:
    """Mixed source: emits ``states[l]`` with probability ``weights[l]``."""

    weights: tuple[float, ...]
    states: tuple[PureState, ...]

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        s = tuple(self.states)
        if len(w) != len(s) or not s:
            raise PreconditionError("ensemble needs one weight per state and at least one member")
        if min(w) <= 0 or abs(sum(w) - 1.0) > 1e-12:
            raise PreconditionError("ensemble weights must be positive and sum to 1")
        if any(st.shape != s[0].shape for st in s):
            raise DimensionError("ensemble members must share one SpaceShape")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "states", s)

    @classmethod
    def of(cls, members: Sequence[tuple[float, PureState]]) -> "EnsembleSource":
        return cls(tuple(m[0] for m in members), tuple(m[1] for m in members))

    @property
    def shape(self):
        return self.states[0].shape

    def reduced(self, keep) -> np.ndarray:
        return sum(w * reduced_density(s, keep).matrix for w, s in zip(self.weights, self.states))


def ensemble_prob(dev: BlackBoxDevice, src: EnsembleSource, target: str = "A") -> np.ndarray:
    """Law of total probability over the members of the ensemble."""
    return sum(w * measure_prob(dev, s, target) for w, s in zip(src.weights, src.states))


def ensemble_sample_frequencies(dev: BlackBoxDevice, src: EnsembleSource, target: str,
                                shots: int, rng) -> np.ndarray:
    members = _draw(np.array(src.weights), rng, shots)
    counts = np.zeros(dev.outcome_count)
    for l, n in enumerate(np.bincount(members, minlength=len(src.states))):
        if n:
            counts += np.bincount(measure_sample(dev, src.states[l], target, rng, size=int(n)),
                                  minlength=dev.outcome_count)
    return counts / shots
