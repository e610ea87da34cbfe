"""Checks that turn the two closing arguments into executable verdicts.

:func:`check_a_lambda` takes any function ``lam -> a_lam`` on [0, 1] and runs
the functional-equation argument step by step: symmetry, midpoint identity,
multiplicativity, monotonicity, dyadic reconstruction from the midpoint rule,
and a squeeze bound at non-dyadic points. For a genuine quantum source every
step passes and ``a_lam = lam``.

:func:`extract_born` takes a POVM of a maximal measurement together with its
certainty states and recovers the measurement basis, verifying that every
element is a rank-one projector and that probabilities follow
``|<phi_k|psi>|^2``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import CertaintyViolatedError, NotMaximalError
from .qstate import PureState, _rng, phase_normalize
from .report import ExperimentReport
from .tomography import Povm

CERTAINTY_TOL = 1e-8


def dyadic_grid(depth: int) -> list[Fraction]:
    return [Fraction(p, 2**depth) for p in range(2**depth + 1)]


def irrational_grid(count: int = 20) -> list[float]:
    """Fractional parts of ``k * sqrt(2)``: deterministic, never dyadic at any useful depth."""
    return [float((k * np.sqrt(2)) % 1.0) for k in range(1, count + 1)]


def dyadic_recursion(depth: int) -> dict[Fraction, float]:
    """``a`` on dyadics built only from ``a_0 = 0``, ``a_1 = 1`` and the midpoint rule."""
    a = {Fraction(0): 0.0, Fraction(1): 1.0}
    for q in range(1, depth + 1):
        step = Fraction(1, 2**q)
        for p in range(1, 2**q, 2):
            x = p * step
            a[x] = 0.5 * (a[x - step] + a[x + step])
    return a


def check_a_lambda(oracle: Callable[[float], float], depth: int = 8, tol: float | Callable[[float], float] = 1e-10,
                   irrationals: int = 20) -> ExperimentReport:
    """Run the functional-equation argument on ``oracle``.

    ``tol`` is either a number or a function giving the tolerance at each
    evaluation point (e.g. five binomial standard errors for sampled oracles);
    identities that combine several points add up their tolerances. Grid
    checks only use points on the dyadic grid of the given depth, so a
    sampled oracle is evaluated at ``2**depth + 1`` points at most, plus the
    non-dyadic points and their mirrors.
    """
    tol_at = tol if callable(tol) else (lambda lam, t=float(tol): t)
    cache: dict[float, float] = {}

    def a(lam) -> float:
        lam = float(lam)
        if lam not in cache:
            cache[lam] = float(oracle(lam))
        return cache[lam]

    report = ExperimentReport("a_lambda")
    grid = dyadic_grid(depth)
    on_grid = set(grid)
    vals = {x: a(x) for x in grid}

    def excess(dev, *pts):
        return dev - sum(tol_at(float(p)) for p in pts)

    report.at_most("bounds", max(max(-v, v - 1.0) - tol_at(float(x)) for x, v in vals.items()), 0.0,
                   statistic="max excess of a outside [0, 1]")
    report.at_most("endpoints", max(excess(abs(vals[Fraction(0)]), 0), excess(abs(vals[Fraction(1)] - 1), 1)), 0.0)

    sym = max(excess(abs(vals[x] + vals[1 - x] - 1.0), x, 1 - x) for x in grid)
    report.at_most("symmetry", sym, 0.0, half=vals[Fraction(1, 2)])

    mid = max(
        excess(abs(vals[(x + y) / 2] - 0.5 * (vals[x] + vals[y])), x, y, (x + y) / 2)
        for x, y in itertools.combinations(grid, 2)
        if (x + y) / 2 in on_grid
    )
    report.at_most("midpoint", mid, 0.0)

    mult = max(
        excess(abs(vals[x * y] - vals[x] * vals[y]), x, y, x * y)
        for x, y in itertools.combinations_with_replacement(grid, 2)
        if x * y in on_grid
    )
    report.at_most("multiplicativity", mult, 0.0)

    ordered = [vals[x] for x in grid]
    mono = max((ordered[i] - ordered[i + 1]) - tol_at(float(grid[i])) - tol_at(float(grid[i + 1]))
               for i in range(len(grid) - 1))
    report.at_most("monotonicity", mono, 0.0)

    rec = dyadic_recursion(depth)
    report.at_most("dyadic_recursion", max(excess(abs(vals[x] - rec[x]), x) for x in grid), 0.0,
                   a_3_8=rec.get(Fraction(3, 8)))
    dyadic_dev = max(abs(vals[x] - float(x)) for x in grid)
    report.at_most("dyadic_identity", max(excess(abs(vals[x] - float(x)), x) for x in grid), 0.0,
                   max_deviation=dyadic_dev)

    # squeeze: a_lam >= floor(2^q lam)/2^q and a_{1-lam} >= floor(2^q (1-lam))/2^q, plus symmetry
    width = 2.0 ** -depth
    squeeze, direct = [], []
    for lam in irrational_grid(irrationals):
        lower = np.floor(lam * 2**depth) / 2**depth
        upper = 1.0 - np.floor((1.0 - lam) * 2**depth) / 2**depth
        v = a(lam)
        slack = tol_at(lam) + tol_at(1.0 - lam)
        squeeze.append(max(lower - v, v - upper) - slack)
        direct.append(abs(v - lam))
        sym_pt = abs(v + a(1.0 - lam) - 1.0)
        squeeze.append(sym_pt - slack - tol_at(1.0 - lam))
    report.at_most("irrational_squeeze", max(squeeze), 0.0, bracket_width=width)
    report.data.update(max_dyadic_deviation=dyadic_dev, max_irrational_deviation=max(direct),
                       evaluations=len(cache), depth=depth)
    return report


# --------------------------------------------------------------------------
# Born rule from a maximal POVM


@dataclass
class BornExtract:
    vectors: np.ndarray
    is_projective: bool
    projector_deviation: np.ndarray
    gram_deviation: float
    certainty_purity: np.ndarray
    born_residual: float | None = None
    notes: list = field(default_factory=list)

    def probabilities(self, psi: np.ndarray) -> np.ndarray:
        return np.abs(self.vectors.conj().T @ np.asarray(psi)) ** 2


def _as_density(state) -> np.ndarray:
    if isinstance(state, PureState):
        return state.density().matrix
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        return np.outer(state, state.conj())
    return state


def extract_born(povm: Povm, certainty_states, test_states: int = 100, seed=0) -> BornExtract:
    """Recover the basis of a maximal measurement from its POVM.

    ``certainty_states[k]`` (vector, PureState or density matrix) must give
    outcome ``k`` with probability at least ``1 - 1e-8``. Each ``A^(k)`` then
    has a unit eigenvalue; its eigenvector is ``|phi_k>``. A repeated unit
    eigenvalue is reported as non-projective rather than resolved.
    """
    n, k_count = povm.dim, povm.outcome_count
    if k_count != n:
        raise NotMaximalError(f"{k_count} outcomes on a {n}-dimensional space; need K = N")
    if len(certainty_states) != n:
        raise CertaintyViolatedError(f"need {n} certainty states, got {len(certainty_states)}")
    rhos = [_as_density(s) for s in certainty_states]
    purity = np.array([np.real(np.trace(r @ r)) for r in rhos])
    vectors = np.zeros((n, n), dtype=complex)
    notes = []
    projective = True
    for k, rho in enumerate(rhos):
        p = float(np.real(np.trace(povm[k] @ rho)))
        if p < 1.0 - CERTAINTY_TOL:
            raise CertaintyViolatedError(f"state {k} yields outcome {k} with probability {p:.12f} < 1")
        w, v = np.linalg.eigh(0.5 * (povm[k] + povm[k].conj().T))
        unit = np.flatnonzero(np.abs(w - 1.0) <= CERTAINTY_TOL)
        if unit.size == 0:
            raise CertaintyViolatedError(f"A^({k}) has no eigenvalue 1 (largest is {w[-1]:.12f})")
        if unit.size > 1:
            projective = False
            notes.append(f"A^({k}) has eigenvalue 1 with multiplicity {unit.size}; input inconsistent with K = N")
        vectors[:, k] = phase_normalize(v[:, unit[-1]])[0]

    gram = float(np.max(np.abs(vectors.conj().T @ vectors - np.eye(n))))
    proj_dev = np.array([np.max(np.abs(povm[k] - np.outer(vectors[:, k], vectors[:, k].conj()))) for k in range(n)])
    extract = BornExtract(vectors, projective and gram <= CERTAINTY_TOL, proj_dev, gram, purity, notes=notes)

    if test_states:
        rng = _rng(seed)
        worst = 0.0
        for _ in range(test_states):
            psi = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            psi /= np.linalg.norm(psi)
            p_povm = povm.probabilities(np.outer(psi, psi.conj()))
            worst = max(worst, float(np.max(np.abs(p_povm - extract.probabilities(psi)))))
        extract.born_residual = worst
    return extract


def certainty_candidates(povm: Povm) -> tuple[list[np.ndarray], np.ndarray]:
    """Top eigenvector of each ``A^(k)`` and the corresponding eigenvalue."""
    vecs, tops = [], []
    for k in range(povm.outcome_count):
        w, v = np.linalg.eigh(0.5 * (povm[k] + povm[k].conj().T))
        vecs.append(v[:, -1])
        tops.append(w[-1])
    return vecs, np.array(tops)
