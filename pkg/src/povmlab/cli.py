"""Command line front end.

::

    povmlab experiment fig1|fig2|fig3|ensemble [--device D] [--config C] [--exact | --shots N] ...
    povmlab tomography [--device D] [--exact | --shots N] [--povm OUT.json] ...
    povmlab certify [--device D] ...

Reports are JSON on stdout (or ``--output``); logs go to stderr.
Exit status: 0 overall PASS, 1 FAIL, 2 usage or spec error.

Experiment config (all fields optional)::

    {"device": "dev.json" | {...inline spec...},
     "seed": 0, "shots": 1000000, "mode": "exact" | "sampled",
     "lambdas": [0.25, 0.5],
     "env_dim": 2,
     "psi": STATE, "psi_prime": STATE | "same",          # fig1, fig3
     "psi0": STATE, "psi1": STATE,                       # fig2
     "bystander_c": STATE, "bystander_cp": STATE,        # fig3
     "dims": [dB, dC, dC'],                              # fig3 random setup
     "members": 3 | [{"weight": w, "state": STATE}, ...]} # ensemble

``STATE`` is ``"singlet"``, ``"phi_lambda"`` (on particles A, B, using the
first lambda) or ``{"dims": [["A", 2], ["B", 2]], "amplitudes": [...]}``.
The device path in a config is resolved relative to the config file.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import certainty_candidates, check_a_lambda, extract_born
from .devices import BlackBoxDevice, EnsembleSource, kraus_povm, projective_device
from .errors import PovmLabError, PreconditionError, SpecError
from .experiments import (
    Fig1Setup,
    Fig2Setup,
    Fig3Setup,
    device_a_lambda,
    make_phi_lambda,
    purification_pair,
    random_ensemble,
    random_fig3_setup,
    random_spectrum_density,
    run_ensemble,
    run_fig1,
    run_fig2,
    run_fig3,
    singlet,
)
from .io import device_from_dict, load_device, load_json, povm_to_dict, save_povm, state_from_json
from .qstate import PureState, SpaceShape, basis_state, purify, random_pure, reduced_density
from .report import ExperimentReport
from .tomography import consistency_check, reconstruct, sampled_entry_bound

log = logging.getLogger("povmlab")


@dataclass
class RunConfig:
    command: str
    device: BlackBoxDevice
    device_source: str
    lambdas: list = field(default_factory=lambda: [0.5])
    shots: int | None = None
    seed: int = 0
    output: str | None = None
    povm_output: str | None = None
    extra: dict = field(default_factory=dict)
    where: str = "config"

    def __post_init__(self):
        if self.shots is not None and self.shots < 1:
            raise SpecError(f"{self.where}: shots must be >= 1 in sampled mode")
        if not 0 <= self.seed < 2**64:
            raise SpecError(f"{self.where}: seed must be an unsigned 64-bit integer")
        for lam in self.lambdas:
            if not 0.0 <= lam <= 1.0:
                raise SpecError(f"{self.where}: lambda {lam} outside [0, 1]")

    @property
    def mode(self) -> str:
        return "exact" if self.shots is None else "sampled"

    def echo(self) -> dict:
        out = {"device": self.device_source, "mode": self.mode, "shots": self.shots, "seed": self.seed}
        if self.command.endswith("fig2") or self.command == "certify":
            out["lambdas"] = list(self.lambdas)
        return out

    def rng(self, *keys) -> np.random.Generator:
        return np.random.default_rng([self.seed, *keys])

    def state(self, key: str, default=None) -> PureState | None:
        if key not in self.extra:
            return default
        presets = {
            "singlet": singlet,
            "phi_lambda": lambda: make_phi_lambda(self.lambdas[0], labels=("A", "B")),
        }
        return state_from_json(self.extra[key], f"{self.where}: field {key!r}", presets)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--device", help="device spec JSON")
    common.add_argument("--config", help="experiment config JSON")
    mode = common.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true", help="exact probabilities (default)")
    mode.add_argument("--shots", type=int, help="sample this many shots per run")
    common.add_argument("--seed", type=int, help="RNG seed (default 0)")
    common.add_argument("--dim", type=int, help="system dimension for the default device")
    common.add_argument("--lambda", dest="lambdas", type=float, action="append", help="repeatable")
    common.add_argument("--output", "-o", help="write the report here instead of stdout")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="povmlab", description="Black-box measurement laboratory.")
    parser.add_argument("--version", action="version", version=f"povmlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    exp = sub.add_parser("experiment", parents=[common], help="run a thought experiment")
    exp.add_argument("which", choices=["fig1", "fig2", "fig3", "ensemble"])
    tomo = sub.add_parser("tomography", parents=[common], help="reconstruct the device POVM")
    tomo.add_argument("--povm", dest="povm_output", help="write the POVM JSON here")
    sub.add_parser("certify", parents=[common], help="full certification pipeline")
    return parser


def make_config(args) -> RunConfig:
    extra: dict = {}
    where = "command line"
    base = Path(".")
    if args.config:
        extra = load_json(args.config)
        if not isinstance(extra, dict):
            raise SpecError(f"{args.config}: expected a JSON object")
        where = args.config
        base = Path(args.config).parent

    if args.device:
        device, source = load_device(args.device), args.device
    elif "device" in extra:
        spec = extra["device"]
        if isinstance(spec, str):
            device, source = load_device(base / spec), spec
        else:
            device, source = device_from_dict(spec, f"{where}: field 'device'"), "inline"
    else:
        n = args.dim or 2
        device, source = projective_device(dim=n, name="computational"), f"default projective (dim {n})"
    if args.dim and args.dim != device.system_dim:
        raise SpecError(f"--dim {args.dim} does not match device dimension {device.system_dim}")

    shots = extra.get("shots") if extra.get("mode", "sampled" if "shots" in extra else "exact") == "sampled" else None
    if args.exact:
        shots = None
    elif args.shots is not None:
        shots = args.shots
    seed = args.seed if args.seed is not None else int(extra.get("seed", 0))
    lambdas = args.lambdas or [float(x) for x in extra.get("lambdas", [extra.get("lambda", 0.5)])]
    command = "experiment " + args.which if args.command == "experiment" else args.command
    return RunConfig(command, device, source, lambdas, shots, seed, args.output,
                     getattr(args, "povm_output", None), extra, where)


# --------------------------------------------------------------------------
# commands


def _env_shape(cfg: RunConfig) -> SpaceShape:
    return SpaceShape.of(("B", int(cfg.extra.get("env_dim", cfg.device.system_dim))))


def cmd_fig1(cfg: RunConfig) -> ExperimentReport:
    n = cfg.device.system_dim
    sys_shape = SpaceShape.of(("A", n))
    psi = cfg.state("psi")
    if psi is None:
        psi, psi_prime = purification_pair(random_spectrum_density(n, cfg.rng(1)), _env_shape(cfg), cfg.rng(2), sys_shape)
    else:
        psi_prime = None
    if cfg.extra.get("psi_prime") == "same":
        psi_prime = psi
    elif "psi_prime" in cfg.extra:
        psi_prime = cfg.state("psi_prime")
    elif psi_prime is None:
        env = psi.shape.without("A")
        psi_prime = purify(reduced_density(psi, "A"), env, psi.shape.sub("A"), seed=int(cfg.rng(3).integers(2**63)))
    return run_fig1(Fig1Setup(cfg.device, psi, psi_prime), cfg.shots, cfg.seed)


def cmd_fig2(cfg: RunConfig) -> ExperimentReport:
    n = cfg.device.system_dim
    shape = SpaceShape.of(("A", n), ("B", int(cfg.extra.get("env_dim", 2))))
    psi0 = cfg.state("psi0", basis_state(shape, 0))
    psi1 = cfg.state("psi1")
    if psi1 is None:
        psi1 = random_pure(psi0.shape, cfg.rng(1))
    report = ExperimentReport(cfg.command, seed=cfg.seed, mode=cfg.mode)
    a_values = {}
    for i, lam in enumerate(cfg.lambdas):
        setup = Fig2Setup(cfg.device, psi0, psi1, lam, measure_beta_first=True)
        sub = run_fig2(setup, cfg.shots, cfg.seed + i if cfg.shots else cfg.seed)
        report.extend(sub, prefix=f"lambda={lam!r}:")
        a_values[repr(lam)] = sub.data["a_lambda"]
    report.data["a_lambda"] = a_values
    return report


def cmd_fig3(cfg: RunConfig) -> ExperimentReport:
    if "psi" in cfg.extra:
        setup = Fig3Setup(cfg.device, cfg.state("psi"), cfg.state("psi_prime"),
                          cfg.state("bystander_c"), cfg.state("bystander_cp"))
    else:
        dims = tuple(int(d) for d in cfg.extra.get("dims", (2, 2, 3)))
        setup = random_fig3_setup(cfg.device, cfg.rng(1), dims)
    return run_fig3(setup, cfg.shots, cfg.seed)


def cmd_ensemble(cfg: RunConfig) -> ExperimentReport:
    members = cfg.extra.get("members", 3)
    if isinstance(members, int):
        shape = SpaceShape.of(("A", cfg.device.system_dim), ("B", int(cfg.extra.get("env_dim", 2))))
        src = random_ensemble(shape, members, cfg.rng(1))
    else:
        try:
            weights = [float(m["weight"]) for m in members]
            states = [state_from_json(m["state"], f"{cfg.where}: members[{i}]") for i, m in enumerate(members)]
            src = EnsembleSource(tuple(weights), tuple(states))
        except (KeyError, TypeError) as exc:
            raise SpecError(f"{cfg.where}: field 'members': {exc}") from None
    return run_ensemble(cfg.device, src, cfg.shots, cfg.seed)


def _tomography_report(cfg: RunConfig, report: ExperimentReport, prefix: str = ""):
    dev = cfg.device
    povm = reconstruct(dev, cfg.shots, cfg.seed)
    r = povm.residuals()
    bound = 0.0 if cfg.shots is None else sampled_entry_bound(dev.system_dim, cfg.shots)
    report.at_most(prefix + "povm.hermiticity", r["hermiticity"], 1e-10)
    report.at_least(prefix + "povm.min_eigenvalue", r["min_eigenvalue"], -1e-9 - bound)
    report.at_most(prefix + "povm.max_eigenvalue", r["max_eigenvalue"], 1 + 1e-9 + bound)
    report.at_most(prefix + "povm.completeness", r["completeness"], 1e-9)
    if dev.is_quantum:
        kraus = kraus_povm(dev)
        report.at_most(prefix + "povm.kraus_match", np.max(np.abs(povm.operators - kraus.operators)), 1e-9 + bound)
    else:
        report.notes.append("device has no Kraus model; oracle comparison skipped")
    cc = consistency_check(dev, povm, trials=100, seed=cfg.seed, tol=1e-8 + bound)
    report.at_most(prefix + "consistency", cc.max_residual, cc.tolerance, trials=cc.trials)
    return povm


def cmd_tomography(cfg: RunConfig) -> ExperimentReport:
    report = ExperimentReport(cfg.command, seed=cfg.seed, mode=cfg.mode)
    povm = _tomography_report(cfg, report)
    report.data["povm"] = povm_to_dict(povm)
    target = cfg.povm_output or (str(Path(cfg.output).with_suffix(".povm.json")) if cfg.output else None)
    if target:
        save_povm(povm, target)
        log.info("POVM written to %s", target)
    return report


def cmd_certify(cfg: RunConfig) -> ExperimentReport:
    dev = cfg.device
    report = ExperimentReport(cfg.command, seed=cfg.seed, mode=cfg.mode)
    povm = _tomography_report(cfg, report, "tomography.")
    n, k = dev.system_dim, dev.outcome_count

    if k == n:
        vecs, tops = certainty_candidates(povm)
        if np.all(tops >= 1 - 1e-8):
            born = extract_born(povm, vecs, test_states=100, seed=cfg.seed)
            report.flag("born.projective", born.is_projective, notes=born.notes)
            report.at_most("born.gram_deviation", born.gram_deviation, 1e-8)
            report.at_most("born.projector_deviation", float(born.projector_deviation.max()), 1e-8)
            report.at_most("born.rule_residual", born.born_residual, 1e-9)
            report.data["born_basis"] = born.vectors
        else:
            report.notes.append(f"born: not maximal-certainty (largest eigenvalues {np.round(tops, 12).tolist()})")
    else:
        report.notes.append(f"born: not maximal ({k} outcomes, dimension {n})")

    # a_lambda from the device's own flash probabilities in Fig. 2a
    spread = [(w[-1] - w[0], j) for j, w in enumerate(np.linalg.eigvalsh(povm.operators))]
    gap, j = max(spread)
    if gap <= 1e-6:
        report.notes.append("a_lambda: device response is constant; functional-equation check vacuous")
        return report
    w, v = np.linalg.eigh(povm[j])
    shape = SpaceShape.of(("A", n), ("B", 2))
    psi0 = PureState(shape, np.kron(v[:, 0], [1, 0]))
    psi1 = PureState(shape, np.kron(v[:, -1], [1, 0]))
    try:
        oracle = device_a_lambda(dev, psi0, psi1, j)
    except PreconditionError as exc:
        # the reconstructed POVM promised a response gap the device does not show
        report.flag("a_lambda.response_matches_povm", False, reason=str(exc), povm_gap=float(gap))
        return report
    depth = int(cfg.extra.get("depth", 8))
    a_rep = check_a_lambda(oracle, depth=depth, tol=1e-9)
    report.extend(a_rep, prefix="a_lambda.")
    report.data["a_lambda"] = {"outcome": j, "response_gap": float(gap), **a_rep.data}
    return report


COMMANDS = {
    "experiment fig1": cmd_fig1,
    "experiment fig2": cmd_fig2,
    "experiment fig3": cmd_fig3,
    "experiment ensemble": cmd_ensemble,
    "tomography": cmd_tomography,
    "certify": cmd_certify,
}


def run(cfg: RunConfig) -> ExperimentReport:
    report = COMMANDS[cfg.command](cfg)
    report.command = cfg.command
    report.seed = cfg.seed
    report.mode = cfg.mode
    report.data = {"config": cfg.echo(), **report.data}
    return report


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(stream=sys.stderr, level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = make_config(args)
        report = run(cfg)
    except PovmLabError as exc:
        log.error("%s", exc)
        return 2
    text = report.to_json()
    if cfg.output:
        Path(cfg.output).write_text(text)
        log.info("report written to %s", cfg.output)
    else:
        sys.stdout.write(text)
    for c in report.failures:
        log.warning("FAIL %s = %.3e (tolerance %s)", c.name, c.value, c.tolerance)
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
