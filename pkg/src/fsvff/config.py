"""Experiment configuration: INI-style `key = value` sections, with JSON
accepted interchangeably. One top-level seed feeds every named sub-stream."""

import configparser
import json
from dataclasses import dataclass, field

from .exceptions import ConfigError
from .hamiltonian import TrotterSpec
from .noise import MAX_DENSITY_QUBITS
from .optimizer import OptimizerConfig, StructureSearchConfig

_DEFAULTS = {
    "hamiltonian": {
        "builtin": "xy",
        "n": "2",
        "sites": "",
        "j": "1.0",
        "u": "2.0",
        "file": "",
    },
    "state": {"bits": "10"},
    "evolution": {
        "dt": "0.5",
        "order": "first",
        "substeps": "1",
        "exact": "false",
    },
    "cost": {"variant": "global", "n_eig": "auto", "t_max": "1.0", "batch": "2",
             "bias": "0.75"},
    "optimizer": {
        "learning_rate": "0.1",
        "momentum": "0.9",
        "max_iters": "500",
        "plateau_window": "20",
        "plateau_tol": "1e-3",
        "minibatch": "",
        "lr_halving": "true",
        "target_cost": "",
    },
    "structure": {
        "enabled": "false",
        "beta1": "10",
        "beta2": "10",
        "insert_count": "3",
        "lambda": "1e3",
        "dictionary": "rz,rzz,givens",
        "nearest_neighbor_only": "false",
        "max_rounds": "20",
    },
    "noise": {"model": ""},
    "run": {"seed": "0", "shots": "", "output_dir": "out"},
}


@dataclass
class ExperimentConfig:
    raw: dict = field(default_factory=dict)

    def get(self, section, key):
        return self.raw.get(section, {}).get(key, _DEFAULTS[section][key])

    def getf(self, section, key):
        v = self.get(section, key)
        return float(v) if v != "" else None

    def geti(self, section, key):
        v = self.get(section, key)
        return int(v) if v != "" else None

    def getb(self, section, key):
        return str(self.get(section, key)).strip().lower() in ("1", "true", "yes")

    @property
    def seed(self) -> int:
        return self.geti("run", "seed") or 0

    @property
    def shots(self):
        return self.geti("run", "shots")

    @property
    def output_dir(self) -> str:
        return self.get("run", "output_dir")

    @property
    def delta_t(self) -> float:
        return self.getf("evolution", "dt")

    def trotter_spec(self) -> TrotterSpec:
        return TrotterSpec(
            self.get("evolution", "order"),
            self.delta_t,
            self.geti("evolution", "substeps") or 1,
        )

    def optimizer_config(self, seed=None) -> OptimizerConfig:
        return OptimizerConfig(
            learning_rate=self.getf("optimizer", "learning_rate"),
            momentum=self.getf("optimizer", "momentum"),
            max_iters=self.geti("optimizer", "max_iters"),
            plateau_window=self.geti("optimizer", "plateau_window"),
            plateau_tol=self.getf("optimizer", "plateau_tol"),
            minibatch=self.geti("optimizer", "minibatch"),
            seed=self.seed if seed is None else seed,
            lr_halving=self.getb("optimizer", "lr_halving"),
            target_cost=self.getf("optimizer", "target_cost"),
        )

    def structure_config(self) -> StructureSearchConfig | None:
        if not self.getb("structure", "enabled"):
            return None
        return StructureSearchConfig(
            beta1=self.getf("structure", "beta1"),
            beta2=self.getf("structure", "beta2"),
            insert_count=self.geti("structure", "insert_count"),
            lam=self.getf("structure", "lambda"),
            gate_dictionary=tuple(
                s.strip() for s in self.get("structure", "dictionary").split(",")
            ),
            nearest_neighbor_only=self.getb("structure", "nearest_neighbor_only"),
            max_rounds=self.geti("structure", "max_rounds"),
            seed=self.seed,
        )

    def echo(self) -> dict:
        """Fully resolved key/value map (defaults filled in)."""
        out = {}
        for section, keys in _DEFAULTS.items():
            out[section] = {k: self.get(section, k) for k in keys}
            for k, v in self.raw.get(section, {}).items():
                out[section][k] = v
        return out


def parse_config(text: str) -> ExperimentConfig:
    """JSON when the first non-blank character is '{', INI otherwise."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        data = json.loads(text)
        raw = {
            str(sec): {str(k): str(v) for k, v in entries.items()}
            for sec, entries in data.items()
        }
        return ExperimentConfig(raw)
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"bad config: {exc}") from exc
    raw = {sec: dict(parser.items(sec)) for sec in parser.sections()}
    return ExperimentConfig(raw)


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def validate(cfg: ExperimentConfig) -> list:
    """Diagnostics as (field_path, reason); empty iff runnable."""
    diags = []
    builtin = cfg.get("hamiltonian", "builtin")
    ham_file = cfg.get("hamiltonian", "file")
    if not ham_file and builtin not in ("xy", "fermi_hubbard"):
        diags.append(("hamiltonian.builtin", f"unknown builtin {builtin!r}"))
    if builtin == "xy" and not ham_file:
        n = cfg.geti("hamiltonian", "n")
        if n is None or n < 2:
            diags.append(("hamiltonian.n", "XY chain needs n >= 2"))
    bits = cfg.get("state", "bits")
    if set(bits) - {"0", "1"}:
        diags.append(("state.bits", f"bitstring {bits!r} has characters outside 0/1"))
    try:
        dt = cfg.delta_t
        if dt is None or dt == 0 or dt != dt:
            diags.append(("evolution.dt", "delta_t must be finite nonzero"))
    except ValueError:
        diags.append(("evolution.dt", "delta_t must be a number"))
    if cfg.get("evolution", "order") not in ("first", "second"):
        diags.append(("evolution.order", "order must be first or second"))
    variant = cfg.get("cost", "variant")
    if variant not in ("global", "local", "randomized"):
        diags.append(("cost.variant", f"unknown cost variant {variant!r}"))
    if cfg.get("noise", "model"):
        n_qubits = _qubit_count(cfg)
        if n_qubits is not None and n_qubits > MAX_DENSITY_QUBITS:
            diags.append(
                (
                    "noise.model",
                    f"density-matrix path limited to {MAX_DENSITY_QUBITS} qubits, "
                    f"config uses {n_qubits}",
                )
            )
    lr = cfg.getf("optimizer", "learning_rate")
    if lr is not None and lr <= 0:
        diags.append(("optimizer.learning_rate", "learning rate must be > 0"))
    shots = cfg.geti("run", "shots")
    if shots is not None and shots < 1:
        diags.append(("run.shots", "shots must be >= 1"))
    return diags


def _qubit_count(cfg):
    if cfg.get("hamiltonian", "file"):
        return None
    if cfg.get("hamiltonian", "builtin") == "xy":
        return cfg.geti("hamiltonian", "n")
    sites = cfg.geti("hamiltonian", "sites")
    return 2 * sites if sites else None
