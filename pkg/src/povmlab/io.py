"""JSON interchange: device specs, POVM files, experiment configs.

Complex numbers are ``[re, im]`` pairs and matrices are lists of rows. Floats
go through ``repr``, which round-trips every double exactly.

Device spec::

    {"kind": "projective", "dim": N, "basis": [[..N entries..] x N]}       # columns = |phi_k>
    {"kind": "indirect", "dim": N, "ancilla_state": [..d entries..],
     "coupling": [[..Nd..] x Nd], "readout": [[..d..] x d]}                # readout optional
    {"kind": "noisy", "dim": N, "basis": ..., "confusion": [[..N reals..] x K]}
    {"kind": "adversarial", "dim": N, "outcomes": K}

``basis``, ``readout`` default to the identity. A spec may replace the
matrices with ``"seed": s`` (plus ``"ancilla_dim"`` / ``"outcomes"``) to get a
reproducible random device of that kind.

POVM file::

    {"dim": N, "operators": [[[..N entries..] x N] x K]}
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .devices import (
    AdversarialSpec,
    BlackBoxDevice,
    IndirectSpec,
    NoisySpec,
    ProjectiveSpec,
    adversarial_device,
    indirect_device,
    noisy_device,
    projective_device,
    random_indirect,
    random_noisy,
    random_projective,
)
from .errors import PovmLabError, SpecError
from .qstate import PureState, SpaceShape
from .tomography import Povm


def complex_to_json(a) -> Any:
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def complex_from_json(x, ndim: int, where: str = "value") -> np.ndarray:
    """Parse an array of rank ``ndim``; entries are reals or ``[re, im]`` pairs."""
    try:
        arr = np.asarray(x, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SpecError(f"{where}: not a numeric array ({exc})") from None
    if arr.ndim == ndim + 1 and arr.shape[-1] == 2:
        return arr[..., 0] + 1j * arr[..., 1]
    if arr.ndim == ndim:
        return arr.astype(complex)
    raise SpecError(f"{where}: expected a rank-{ndim} array of reals or [re, im] pairs, got shape {arr.shape}")


def _field(obj: dict, key: str, where: str, default=...):
    if key in obj:
        return obj[key]
    if default is ...:
        raise SpecError(f"{where}: missing field {key!r}")
    return default


# --------------------------------------------------------------------------
# devices


def device_from_dict(spec: dict, where: str = "device spec") -> BlackBoxDevice:
    if not isinstance(spec, dict):
        raise SpecError(f"{where}: expected a JSON object")
    kind = _field(spec, "kind", where)
    n = _field(spec, "dim", where)
    if not isinstance(n, int) or n < 1:
        raise SpecError(f"{where}: field 'dim' must be a positive integer")
    name = spec.get("name", "")
    seed = spec.get("seed")
    try:
        if kind == "projective":
            if seed is not None and "basis" not in spec:
                return random_projective(n, seed)
            basis = _matrix(spec, "basis", where, n, n, default=np.eye(n))
            return projective_device(basis, name=name)
        if kind == "indirect":
            if seed is not None and "coupling" not in spec:
                return random_indirect(n, int(_field(spec, "ancilla_dim", where)), seed)
            e = complex_from_json(_field(spec, "ancilla_state", where), 1, f"{where}: field 'ancilla_state'")
            d = e.size
            v = _matrix(spec, "coupling", where, n * d, n * d)
            r = _matrix(spec, "readout", where, d, d, default=np.eye(d))
            return indirect_device(n, e, v, r, name=name)
        if kind == "noisy":
            if seed is not None and "confusion" not in spec:
                return random_noisy(n, int(_field(spec, "outcomes", where)), seed)
            c = np.asarray(_field(spec, "confusion", where), dtype=float)
            basis = _matrix(spec, "basis", where, n, n, default=np.eye(n))
            return noisy_device(c, basis, name=name)
        if kind == "adversarial":
            return adversarial_device(n, int(spec.get("outcomes", 2)), name=name)
    except SpecError:
        raise
    except (PovmLabError, ValueError, TypeError) as exc:
        raise SpecError(f"{where}: {exc}") from None
    raise SpecError(f"{where}: field 'kind' must be projective|indirect|noisy|adversarial, got {kind!r}")


def _matrix(spec, key, where, rows, cols, default=...):
    if key not in spec and default is not ...:
        return default
    m = complex_from_json(_field(spec, key, where), 2, f"{where}: field {key!r}")
    if m.shape != (rows, cols):
        raise SpecError(f"{where}: field {key!r} has shape {m.shape}, expected ({rows}, {cols})")
    return m


def device_to_dict(dev: BlackBoxDevice) -> dict:
    mech = dev.mechanism
    out: dict = {"kind": dev.kind, "dim": dev.system_dim}
    if dev.name:
        out["name"] = dev.name
    if isinstance(mech, ProjectiveSpec):
        out["basis"] = complex_to_json(mech.basis)
    elif isinstance(mech, IndirectSpec):
        out["ancilla_state"] = complex_to_json(mech.ancilla_state)
        out["coupling"] = complex_to_json(mech.coupling)
        out["readout"] = complex_to_json(mech.readout)
    elif isinstance(mech, NoisySpec):
        out["basis"] = complex_to_json(mech.inner.basis)
        out["confusion"] = mech.confusion.tolist()
    elif isinstance(mech, AdversarialSpec):
        out["outcomes"] = mech.outcome_count
    return out


def load_json(path: str | Path) -> Any:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except FileNotFoundError:
        raise SpecError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: invalid JSON ({exc})") from None


def load_device(path: str | Path) -> BlackBoxDevice:
    return device_from_dict(load_json(path), where=str(path))


def save_device(dev: BlackBoxDevice, path: str | Path) -> None:
    Path(path).write_text(json.dumps(device_to_dict(dev), indent=2) + "\n")


# --------------------------------------------------------------------------
# POVM files


def povm_to_dict(povm: Povm) -> dict:
    return {"dim": povm.dim, "operators": complex_to_json(povm.operators)}


def povm_from_dict(d: dict, where: str = "POVM file") -> Povm:
    n = _field(d, "dim", where)
    ops = complex_from_json(_field(d, "operators", where), 3, f"{where}: field 'operators'")
    if ops.ndim != 3 or ops.shape[1:] != (n, n):
        raise SpecError(f"{where}: operators have shape {ops.shape}, expected (K, {n}, {n})")
    return Povm(ops)


def save_povm(povm: Povm, path: str | Path) -> None:
    Path(path).write_text(json.dumps(povm_to_dict(povm), indent=2) + "\n")


def load_povm(path: str | Path) -> Povm:
    return povm_from_dict(load_json(path), str(path))


# --------------------------------------------------------------------------
# states in configs


def state_from_json(obj, where: str = "state", presets: dict | None = None) -> PureState:
    """Preset name (looked up in ``presets``) or ``{"dims": [[label, d], ...], "amplitudes": [...]}``."""
    if isinstance(obj, str):
        if presets is None or obj not in presets:
            raise SpecError(f"{where}: unknown preset {obj!r}; known: {sorted(presets or {})}")
        return presets[obj]()
    if not isinstance(obj, dict):
        raise SpecError(f"{where}: expected a preset name or an object")
    dims = _field(obj, "dims", where)
    try:
        shape = SpaceShape.of(*[(str(l), int(d)) for l, d in dims])
    except (TypeError, ValueError, PovmLabError) as exc:
        raise SpecError(f"{where}: field 'dims': {exc}") from None
    amps = complex_from_json(_field(obj, "amplitudes", where), 1, f"{where}: field 'amplitudes'")
    try:
        return PureState.normalized(shape, amps)
    except PovmLabError as exc:
        raise SpecError(f"{where}: {exc}") from None


def state_to_json(state: PureState) -> dict:
    return {
        "dims": [[l, d] for l, d in zip(state.shape.labels, state.shape.dims)],
        "amplitudes": complex_to_json(state.amplitudes),
    }
