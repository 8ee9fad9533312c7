"""Experiment configuration files.

Configs are INI files read with :mod:`configparser`.  Sections:

``[experiment]``
    ``model`` (``morris_lecar`` or ``telegraph``), ``seed``, ``horizon``,
    ``rate_bound``, ``h_star``, ``epsilons`` and ``epsilons_full`` (comma
    separated; the second list is appended with ``--full``),
    ``replications``, ``estimators``, ``theta0``, ``nu0``, ``threads``.
``[morris_lecar]`` / ``[telegraph]``
    Model parameters by field name.
``[structural]``, ``[structural_case2]``, ``[structural_case3]``
    ``alpha, beta, c1, V1, var_x`` used for planning.  The per-coupling
    sections fall back to ``[structural]`` key by key.
``[ground_truth]``
    ``mean`` (and optionally ``variance``, ``standard_error``).
``[simulate]``, ``[variance_decay]``, ``[structural_estimation]``
    Settings of the corresponding subcommands.
``[output]``
    ``wall_time = false`` writes 0 in the timing column, which makes
    result tables byte-for-byte reproducible.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field

from .errors import ConfigError, InvalidArgument
from .estimators import StructuralParams

MODELS = ("morris_lecar", "telegraph")
ESTIMATORS = ("mc", "mlmc-plain", "mlmc-case1", "mlmc-case2", "mlmc-case3")
COUPLINGS = ("plain", "case1", "case2", "case3")


def _floats(text):
    try:
        return [float(eval_power(x)) for x in text.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}") from exc


def eval_power(token: str) -> float:
    """Parse ``0.25`` or ``2^-2``."""
    token = token.strip()
    if "^" in token:
        base, exp = token.split("^", 1)
        return float(base) ** float(exp)
    return float(token)


@dataclass
class ExperimentConfig:
    model: str = "morris_lecar"
    seed: int = 0
    horizon: float = 30.0
    rate_bound: float = 10.0
    h_star: float = 0.1
    epsilons: list = field(default_factory=lambda: [2.0**-k for k in range(1, 5)])
    epsilons_full: list = field(default_factory=lambda: [2.0**-5])
    replications: int = 20
    estimators: list = field(default_factory=lambda: ["mc", "mlmc-plain", "mlmc-case3"])
    theta0: int | None = None
    nu0: float | None = None
    threads: int | None = None
    model_params: dict = field(default_factory=dict)
    structural: dict = field(default_factory=dict)
    ground_truth: dict = field(default_factory=dict)
    simulate: dict = field(default_factory=dict)
    variance_decay: dict = field(default_factory=dict)
    structural_estimation: dict = field(default_factory=dict)
    wall_time: bool = True

    def validate(self):
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}; expected one of {MODELS}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        for name in ("horizon", "rate_bound", "h_star"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)) and not (name == "horizon" and v == 0):
                raise ConfigError(f"{name} must be positive, got {v!r}")
        eps = self.epsilons + self.epsilons_full
        if any(not e > 0 for e in eps):
            raise ConfigError("epsilon values must be positive")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ConfigError("epsilon values must be strictly decreasing")
        if self.replications < 1:
            raise ConfigError("replications must be at least 1")
        bad = [e for e in self.estimators if e not in ESTIMATORS]
        if bad:
            raise ConfigError(f"unknown estimators {bad}; expected a subset of {ESTIMATORS}")
        if self.threads is not None and self.threads < 1:
            raise ConfigError("threads must be at least 1")
        return self

    def epsilon_list(self, full: bool = False):
        return list(self.epsilons) + (list(self.epsilons_full) if full else [])

    def structural_params(self, coupling: str = "plain") -> StructuralParams:
        """Planning constants for ``coupling``; per-coupling sections override ``[structural]``."""
        base = dict(self.structural.get("plain", {}))
        base.update(self.structural.get(coupling, {}))
        needed = ("alpha", "beta", "c1", "V1", "var_x")
        missing = [k for k in needed if k not in base]
        if missing:
            raise ConfigError(f"structural parameters for {coupling} lack {missing}")
        try:
            return StructuralParams(*(float(base[k]) for k in needed))
        except InvalidArgument as exc:
            raise ConfigError(str(exc)) from exc

    def true_value(self) -> float:
        if "mean" not in self.ground_truth:
            raise ConfigError("[ground_truth] mean is required for RMSE tables")
        return float(self.ground_truth["mean"])


def _section(cp, name):
    return dict(cp[name]) if cp.has_section(name) else {}


def load_config(path) -> ExperimentConfig:
    """Read and validate an INI experiment file.

    Raises
    ------
    ConfigError
        On a missing file, a parse error or an invalid value.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    ex = _section(cp, "experiment")
    cfg = ExperimentConfig()
    try:
        cfg.model = ex.get("model", cfg.model)
        cfg.seed = int(ex.get("seed", cfg.seed))
        cfg.horizon = float(ex.get("horizon", cfg.horizon))
        cfg.rate_bound = float(ex.get("rate_bound", cfg.rate_bound))
        cfg.h_star = float(ex.get("h_star", cfg.h_star))
        if "epsilons" in ex:
            cfg.epsilons = _floats(ex["epsilons"])
        if "epsilons_full" in ex:
            cfg.epsilons_full = _floats(ex["epsilons_full"])
        cfg.replications = int(ex.get("replications", cfg.replications))
        if "estimators" in ex:
            cfg.estimators = [e.strip() for e in ex["estimators"].split(",") if e.strip()]
        if "theta0" in ex:
            cfg.theta0 = int(ex["theta0"])
        if "nu0" in ex:
            cfg.nu0 = float(ex["nu0"])
        if "threads" in ex:
            cfg.threads = int(ex["threads"])
        cfg.wall_time = cp.getboolean("output", "wall_time", fallback=True)
    except ValueError as exc:
        raise ConfigError(f"bad value in [experiment]: {exc}") from exc
    cfg.model_params = _section(cp, cfg.model)
    cfg.structural = {
        "plain": _section(cp, "structural"),
        "case1": _section(cp, "structural_case1"),
        "case2": _section(cp, "structural_case2"),
        "case3": _section(cp, "structural_case3"),
    }
    cfg.ground_truth = _section(cp, "ground_truth")
    cfg.simulate = _section(cp, "simulate")
    cfg.variance_decay = _section(cp, "variance_decay")
    cfg.structural_estimation = _section(cp, "structural_estimation")
    return cfg.validate()
