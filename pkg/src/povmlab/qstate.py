"""Finite-dimensional state core: composite spaces, partial traces, Schmidt forms.

States carry a :class:`SpaceShape` naming every subsystem, so operations can
address particles by label (``"A"``, ``"B"``, ``"alpha"`` ...) instead of by
axis position. Everything here is immutable once constructed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, PreconditionError

HERMITIAN_TOL = 1e-10
UNITARY_TOL = 1e-10
NORM_TOL = 1e-12
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-9
SCHMIDT_ZERO = 1e-12
SAME_RHO_TOL = 1e-8


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.flags.writeable = False
    return a


def _as_labels(labels: str | Iterable[str]) -> tuple[str, ...]:
    if isinstance(labels, str):
        return (labels,)
    return tuple(labels)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


# --------------------------------------------------------------------------
# matrix predicates


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.max(np.abs(m - m.conj().T), initial=0.0) <= tol


def is_unitary(m: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0])), initial=0.0) <= tol


def phase_normalize(v: np.ndarray, tol: float = SCHMIDT_ZERO) -> tuple[np.ndarray, complex]:
    """Rotate ``v`` so its first component with magnitude > tol is real positive.

    Returns the rotated vector and the unit phase it was multiplied by.
    """
    v = np.asarray(v, dtype=complex)
    idx = np.flatnonzero(np.abs(v) > tol)
    if idx.size == 0:
        return v.copy(), 1.0 + 0j
    first = v[idx[0]]
    phase = np.conj(first) / abs(first)
    return v * phase, phase


def complete_basis(vectors: np.ndarray, dim: int | None = None, tol: float = 1e-8) -> np.ndarray:
    """Extend the columns of ``vectors`` to an orthonormal basis.

    The given columns are orthonormalized first (modified Gram-Schmidt, in
    order, dropping near-dependent ones); canonical basis vectors are then
    appended in index order. The result is deterministic.
    """
    vectors = np.asarray(vectors, dtype=complex)
    if vectors.ndim == 1:
        vectors = vectors[:, None]
    dim = vectors.shape[0] if dim is None else dim
    basis: list[np.ndarray] = []

    def push(v):
        w = v.astype(complex)
        for _ in range(2):  # second pass restores orthogonality lost to rounding
            for b in basis:
                w = w - (b.conj() @ w) * b
        n = np.linalg.norm(w)
        if n > tol:
            basis.append(w / n)

    for j in range(vectors.shape[1]):
        push(vectors[:, j])
    for j in range(dim):
        if len(basis) == dim:
            break
        e = np.zeros(dim, dtype=complex)
        e[j] = 1.0
        push(e)
    return np.stack(basis, axis=1)


# --------------------------------------------------------------------------
# types


@dataclass(frozen=True)
class SpaceShape:
    """Ordered subsystem labels with their dimensions."""

    labels: tuple[str, ...]
    dims: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if len(self.labels) != len(self.dims):
            raise DimensionError("labels and dims differ in length")
        if len(set(self.labels)) != len(self.labels):
            raise DimensionError(f"duplicate subsystem labels in {self.labels}")
        if any(d < 1 for d in self.dims):
            raise DimensionError(f"subsystem dimensions must be >= 1, got {self.dims}")

    @classmethod
    def of(cls, *pairs: tuple[str, int]) -> "SpaceShape":
        """``SpaceShape.of(("A", 2), ("B", 3))``."""
        return cls(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))

    @property
    def total(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64))

    def __contains__(self, label) -> bool:
        return label in self.labels

    def __len__(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise DimensionError(f"unknown subsystem label {label!r}; have {self.labels}") from None

    def dim(self, labels: str | Iterable[str]) -> int:
        return int(np.prod([self.dims[self.index(l)] for l in _as_labels(labels)], dtype=np.int64))

    def concat(self, other: "SpaceShape") -> "SpaceShape":
        clash = set(self.labels) & set(other.labels)
        if clash:
            raise DimensionError(f"label collision: {sorted(clash)}")
        return SpaceShape(self.labels + other.labels, self.dims + other.dims)

    def sub(self, labels: str | Iterable[str]) -> "SpaceShape":
        labels = _as_labels(labels)
        return SpaceShape(labels, tuple(self.dims[self.index(l)] for l in labels))

    def without(self, labels: str | Iterable[str]) -> "SpaceShape":
        drop = set(_as_labels(labels))
        for l in drop:
            self.index(l)
        return self.sub([l for l in self.labels if l not in drop])


@dataclass(frozen=True, eq=False)
class PureState:
    shape: SpaceShape
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != self.shape.total:
            raise DimensionError(f"{amps.size} amplitudes for a space of dimension {self.shape.total}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise PreconditionError(f"state norm is {norm!r}, expected 1")
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @classmethod
    def normalized(cls, shape: SpaceShape, amplitudes) -> "PureState":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        n = np.linalg.norm(amps)
        if n == 0:
            raise PreconditionError("cannot normalize the zero vector")
        return cls(shape, amps / n)

    @property
    def dim(self) -> int:
        return self.shape.total

    def tensor(self) -> np.ndarray:
        """Amplitudes as an array with one axis per subsystem."""
        return self.amplitudes.reshape(self.shape.dims)

    def density(self) -> "DensityMatrix":
        return DensityMatrix(self.shape, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    shape: SpaceShape
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        n = self.shape.total
        if m.shape != (n, n):
            raise DimensionError(f"matrix of shape {m.shape} for a space of dimension {n}")
        if not is_hermitian(m):
            raise PreconditionError("density matrix is not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise PreconditionError(f"density matrix trace is {tr!r}")
        if np.linalg.eigvalsh(m)[0] < -POSITIVITY_TOL:
            raise PreconditionError("density matrix has a negative eigenvalue")
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def dim(self) -> int:
        return self.shape.total

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))


@dataclass(frozen=True, eq=False)
class SchmidtForm:
    """``sum_n c_n |left_n>|right_n>``; vectors are stored as matrix columns."""

    coefficients: np.ndarray
    left: np.ndarray
    right: np.ndarray
    left_shape: SpaceShape
    right_shape: SpaceShape

    @property
    def rank(self) -> int:
        return int(np.sum(self.coefficients > SCHMIDT_ZERO))

    def state(self) -> PureState:
        m = (self.left * self.coefficients) @ self.right.T
        return PureState.normalized(self.left_shape.concat(self.right_shape), m.reshape(-1))


# --------------------------------------------------------------------------
# constructors


def basis_state(shape: SpaceShape, index: int | Sequence[int] = 0) -> PureState:
    """Computational basis vector; ``index`` is flat or one entry per subsystem."""
    amps = np.zeros(shape.total, dtype=complex)
    flat = index if np.isscalar(index) else np.ravel_multi_index(tuple(index), shape.dims)
    amps[int(flat)] = 1.0
    return PureState(shape, amps)


def qubit(label: str, bit: int) -> PureState:
    return basis_state(SpaceShape.of((label, 2)), bit)


def random_pure(shape: SpaceShape, seed=None) -> PureState:
    """Haar-random pure state (normalized complex Gaussian), deterministic per seed."""
    rng = _rng(seed)
    v = rng.standard_normal(shape.total) + 1j * rng.standard_normal(shape.total)
    return PureState.normalized(shape, v)


def random_unitary(dim: int, seed=None) -> np.ndarray:
    """Haar-random unitary via QR of a Ginibre matrix with the R-diagonal phases fixed."""
    if dim < 1:
        raise DimensionError("dim must be >= 1")
    rng = _rng(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_density(dim: int, rank: int | None = None, seed=None) -> np.ndarray:
    """Random density matrix (partial trace of a random pure state) as a plain array."""
    rng = _rng(seed)
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


# --------------------------------------------------------------------------
# structural operations


def _split(state: PureState, keep: tuple[str, ...]) -> np.ndarray:
    """Amplitude matrix with rows indexed by ``keep`` and columns by the rest."""
    axes = [state.shape.index(l) for l in keep]
    rest = [i for i in range(len(state.shape)) if i not in axes]
    t = np.transpose(state.tensor(), axes + rest)
    return t.reshape(state.shape.dim(keep), -1)


def _unsplit(m: np.ndarray, shape: SpaceShape, keep: tuple[str, ...]) -> np.ndarray:
    axes = [shape.index(l) for l in keep]
    rest = [i for i in range(len(shape)) if i not in axes]
    order = axes + rest
    t = m.reshape([shape.dims[i] for i in order])
    return np.transpose(t, np.argsort(order)).reshape(-1)


def tensor(a, b):
    """Kronecker product of two states of the same kind; labels must be disjoint."""
    shape = a.shape.concat(b.shape)
    if isinstance(a, PureState) and isinstance(b, PureState):
        return PureState.normalized(shape, np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        return DensityMatrix(shape, np.kron(a.matrix, b.matrix))
    raise TypeError("tensor() needs two PureStates or two DensityMatrices")


def permute(state: PureState, labels: Sequence[str]) -> PureState:
    """Reorder subsystems; ``labels`` must be a permutation of the state's labels."""
    labels = tuple(labels)
    if sorted(labels) != sorted(state.shape.labels):
        raise DimensionError(f"{labels} is not a permutation of {state.shape.labels}")
    axes = [state.shape.index(l) for l in labels]
    amps = np.transpose(state.tensor(), axes).reshape(-1)
    return PureState(state.shape.sub(labels), amps)


def apply_local(state: PureState, op: np.ndarray, labels: str | Sequence[str]) -> PureState:
    """Apply ``op`` to the listed subsystems (in the listed order), identity elsewhere."""
    labels = _as_labels(labels)
    d = state.shape.dim(labels)
    op = np.asarray(op, dtype=complex)
    if op.shape != (d, d):
        raise DimensionError(f"operator of shape {op.shape} on subsystems of dimension {d}")
    m = op @ _split(state, labels)
    return PureState.normalized(state.shape, _unsplit(m, state.shape, labels))


def project_local(state: PureState, vector: np.ndarray, label: str) -> tuple[float, PureState | None]:
    """Project subsystem ``label`` onto ``vector``; return branch weight and renormalized state.

    The projected subsystem keeps its label and is left in ``vector``.
    """
    m = _split(state, (label,))
    v = np.asarray(vector, dtype=complex)
    row = v.conj() @ m
    weight = float(np.real(row @ row.conj()))
    if weight <= 0.0:
        return 0.0, None
    m_new = np.outer(v, row) / np.sqrt(weight)
    return weight, PureState.normalized(state.shape, _unsplit(m_new, state.shape, (label,)))


def reduced_density(state: PureState | DensityMatrix, keep: str | Iterable[str]) -> DensityMatrix:
    """Partial trace over every subsystem not in ``keep``; result ordered as ``keep``."""
    keep = _as_labels(keep)
    shape = state.shape
    for l in keep:
        shape.index(l)
    if isinstance(state, PureState):
        m = _split(state, keep)
        rho = m @ m.conj().T
    else:
        n = len(shape)
        t = state.matrix.reshape(shape.dims + shape.dims)
        keep_ax = [shape.index(l) for l in keep]
        row = list(range(n))
        col = [i + n if i in keep_ax else i for i in range(n)]
        out = keep_ax + [i + n for i in keep_ax]
        rho = np.einsum(t, row + col, out).reshape(shape.dim(keep), shape.dim(keep))
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(shape.sub(keep), rho)


def schmidt_decompose(state: PureState, cut: str | Iterable[str]) -> SchmidtForm:
    """Schmidt form across ``cut | rest`` via SVD of the amplitude matrix.

    Coefficients come out descending, ``min(d_cut, d_rest)`` of them. Each left
    vector has its first significant component made real positive; the right
    vector absorbs the compensating phase.
    """
    cut = _as_labels(cut)
    rest = tuple(l for l in state.shape.labels if l not in cut)
    m = _split(state, cut)
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    left = np.empty_like(u)
    right = vh.T.copy()
    for n in range(s.size):
        left[:, n], phase = phase_normalize(u[:, n])
        right[:, n] = right[:, n] / phase
    return SchmidtForm(s, left, right, state.shape.sub(cut), state.shape.sub(rest))


def fidelity(a: PureState, b: PureState) -> float:
    """Phase-insensitive overlap ``|<a|b>|`` (states compared as rays)."""
    if a.shape != b.shape:
        raise DimensionError(f"shapes differ: {a.shape} vs {b.shape}")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)))


def same_reduced(a: PureState, b: PureState, keep, tol: float = SAME_RHO_TOL) -> float:
    """Max-entry distance between the reduced states; raises if above ``tol``."""
    ra, rb = reduced_density(a, keep).matrix, reduced_density(b, keep).matrix
    if ra.shape != rb.shape:
        raise DimensionError("reduced states have different dimensions")
    dist = float(np.max(np.abs(ra - rb)))
    if dist > tol:
        raise PreconditionError(f"reduced density matrices on {keep} differ by {dist:.3e} > {tol:g}")
    return dist


def environment_unitary(psi: PureState, psi_prime: PureState, cut: str | Iterable[str]) -> np.ndarray:
    """Unitary ``U`` on the complement of ``cut`` with ``(I x U)|psi'> = |psi>``.

    Both states must share the reduced state on ``cut``. Take the Schmidt form
    ``sum c_n |phi_n>|chi_n>`` of ``psi`` and any Schmidt form
    ``sum c_n |phi~_n>|chi~_n>`` of ``psi'``; then
    ``|chi'_m> = sum_n <phi_m|phi~_n> |chi~_n>`` satisfies
    ``psi' = sum_m c_m |phi_m>|chi'_m>`` for any choice of eigenbasis inside
    degenerate blocks. ``U`` sends each ``chi'_m`` to ``chi_m`` on the support
    (``c_m > 1e-12``); off the support it is the map between the Gram-Schmidt
    completions of both sets over the canonical basis, in index order.

    Unequal subsystem dimensions are handled by keeping only the
    ``min(d_cut, d_env)`` Schmidt terms the SVD produces.
    """
    cut = _as_labels(cut)
    if psi.shape != psi_prime.shape:
        raise DimensionError(f"shapes differ: {psi.shape} vs {psi_prime.shape}")
    same_reduced(psi, psi_prime, cut)
    sf = schmidt_decompose(psi, cut)
    sf_p = schmidt_decompose(psi_prime, cut)

    support = sf.coefficients > SCHMIDT_ZERO
    support_p = sf_p.coefficients > SCHMIDT_ZERO
    overlaps = sf.left[:, support].conj().T @ sf_p.left[:, support_p]
    chi_prime = sf_p.right[:, support_p] @ overlaps.T
    chi = sf.right[:, support]

    d_env = sf.right_shape.total
    q_prime = complete_basis(chi_prime, d_env)
    q = complete_basis(chi, d_env)
    return q @ q_prime.conj().T


def purify(rho: np.ndarray | DensityMatrix, env: SpaceShape | None = None,
           system: SpaceShape | None = None, seed=None) -> PureState:
    """Pure state on ``system x env`` whose reduced state on ``system`` is ``rho``.

    Without a seed the environment vectors are the canonical basis; with one
    they are a random orthonormal set, giving a different purification of the
    same ``rho`` per seed.
    """
    if isinstance(rho, DensityMatrix):
        system = rho.shape if system is None else system
        rho = rho.matrix
    rho = np.asarray(rho, dtype=complex)
    n = rho.shape[0]
    system = SpaceShape.of(("A", n)) if system is None else system
    env = SpaceShape.of(("E", n)) if env is None else env
    w, v = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    w = np.clip(w, 0.0, None)
    keep = w > SCHMIDT_ZERO**2
    w, v = w[keep], v[:, keep]
    if w.size > env.total:
        raise DimensionError(f"rank {w.size} state cannot be purified by a {env.total}-dim environment")
    if seed is None:
        chi = np.eye(env.total, w.size, dtype=complex)
    else:
        chi = random_unitary(env.total, seed)[:, : w.size]
    m = (v * np.sqrt(w)) @ chi.T
    return PureState.normalized(system.concat(env), m.reshape(-1))
