"""Pass/fail records shared by experiments, analysis and the command line."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

SIGMAS = 5.0


def binomial_sigma(p, shots) -> np.ndarray:
    p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
    return np.sqrt(p * (1.0 - p) / np.asarray(shots, dtype=float))


def z_scores(diff, sigma) -> np.ndarray:
    """``|diff| / sigma`` with 0/0 -> 0 and x/0 -> inf."""
    diff = np.abs(np.asarray(diff, dtype=float))
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), diff.shape)
    out = np.zeros_like(diff)
    nz = sigma > 0
    out[nz] = diff[nz] / sigma[nz]
    out[~nz & (diff > 1e-15)] = np.inf
    return out


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        if np.iscomplexobj(x):
            return _plain(np.stack([x.real, x.imag], axis=-1).tolist())
        return _plain(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if np.isfinite(x) else str(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


@dataclass
class Check:
    """One named comparison: ``value`` against ``tolerance`` with comparator ``op``."""

    name: str
    value: float
    tolerance: float | None
    passed: bool
    op: str = "<="
    data: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return _plain({
            "name": self.name,
            "value": self.value,
            "tolerance": self.tolerance,
            "comparator": self.op,
            "verdict": "PASS" if self.passed else "FAIL",
            "data": self.data,
        })


@dataclass
class ExperimentReport:
    """Ordered checks plus run metadata. Overall PASS iff every check passes."""

    command: str
    checks: list = field(default_factory=list)
    seed: int | None = None
    mode: str = "exact"
    notes: list = field(default_factory=list)
    data: dict = field(default_factory=dict)

    def at_most(self, name: str, value, tolerance: float, **data) -> Check:
        value = float(value)
        c = Check(name, value, tolerance, bool(value <= tolerance), "<=", data)
        self.checks.append(c)
        return c

    def at_least(self, name: str, value, tolerance: float, **data) -> Check:
        value = float(value)
        c = Check(name, value, tolerance, bool(value >= tolerance), ">=", data)
        self.checks.append(c)
        return c

    def flag(self, name: str, passed: bool, **data) -> Check:
        c = Check(name, float(bool(passed)), None, bool(passed), "is", data)
        self.checks.append(c)
        return c

    def extend(self, other: "ExperimentReport", prefix: str = "") -> None:
        for c in other.checks:
            self.checks.append(Check(prefix + c.name, c.value, c.tolerance, c.passed, c.op, c.data))
        self.notes.extend(n for n in other.notes if n not in self.notes)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return any(c.name == name for c in self.checks)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    def to_dict(self, version: str | None = None) -> dict:
        if version is None:
            from . import __version__ as version
        return _plain({
            "command": self.command,
            "mode": self.mode,
            "seed": self.seed,
            "tool_version": version,
            "verdict": "PASS" if self.passed else "FAIL",
            "checks": [c.to_dict() for c in self.checks],
            "notes": list(self.notes),
            "data": self.data,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    def summary(self) -> str:
        lines = [f"{self.command}: {'PASS' if self.passed else 'FAIL'}"]
        for c in self.checks:
            tol = "" if c.tolerance is None else f" {c.op} {c.tolerance:.3g}"
            lines.append(f"  [{'PASS' if c.passed else 'FAIL'}] {c.name} = {c.value:.3e}{tol}")
        return "\n".join(lines)
