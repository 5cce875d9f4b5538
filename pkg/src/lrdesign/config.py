"""Run configuration: an INI file with [model], [design], [grid], [solver], [output].

Command-line flags override file values; unknown sections or keys are errors.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, fields, replace

from .corrkernels import EXPONENTIAL, FAMILIES, CorrelationModel
from .design_core import BASES, CRITERIA, Grid
from .errors import DomainError


class ConfigError(ValueError):
    pass


# section -> {key: (field name, type)}
SCHEMA = {
    "model": {"family": ("family", str), "alpha": ("alpha", float), "beta": ("beta", float),
              "nu": ("nu", float), "lambda": ("lam", float), "gamma": ("gamma", float)},
    "design": {"T": ("T", float), "basis": ("basis", str), "criterion": ("criterion", str)},
    "grid": {"n": ("grid_n", int)},
    "solver": {"tol": ("tol", float), "max_iter": ("max_iter", int), "seed": ("seed", int)},
    "output": {"directory": ("out", str), "format": ("format", str)},
}


@dataclass(frozen=True)
class RunConfig:
    family: str = "cauchy"
    alpha: float = 0.5
    beta: float = 1.0
    nu: float = 1.0
    lam: float = 0.5
    gamma: float = 1.0
    T: float = 1.0
    basis: str = "through_origin"
    criterion: str = ""
    grid_n: int = 2001
    tol: float = 1e-8
    max_iter: int = 200
    seed: int = 0
    out: str = "."
    format: str = "csv"

    def model(self) -> CorrelationModel:
        if self.family == EXPONENTIAL:
            return CorrelationModel.exponential(self.lam)
        return CorrelationModel(self.family, alpha=self.alpha, beta=self.beta, nu=self.nu)

    def grid(self) -> Grid:
        return Grid(self.T, self.grid_n)

    def validate(self, gamma_zero_ok=False) -> "RunConfig":
        """Check every field against its owning module; raise ConfigError."""
        try:
            if self.family not in FAMILIES:
                raise DomainError(f"family must be one of {FAMILIES}")
            self.model()
            self.grid()
            if self.basis not in BASES:
                raise DomainError(f"basis must be one of {sorted(BASES)}")
            if self.criterion and self.criterion not in CRITERIA:
                raise DomainError(f"criterion must be one of {CRITERIA}")
            lo_ok = self.gamma >= 0 if gamma_zero_ok else self.gamma > 0
            if not (lo_ok and self.gamma <= 1):
                raise DomainError(f"gamma must lie in {'[0' if gamma_zero_ok else '(0'}, 1], got {self.gamma}")
            if not self.tol > 0:
                raise DomainError("tol must be positive")
            if self.max_iter < 1:
                raise DomainError("max_iter must be at least 1")
            if self.format != "csv":
                raise DomainError("the only output format is csv")
        except DomainError as exc:
            raise ConfigError(str(exc)) from None
        return self


def read_config(path) -> dict:
    """Parse an INI file into ``{field: value}``; raise ConfigError with the offending entry."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    values = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"{path}: [{section}] unknown key {key!r}")
            name, typ = SCHEMA[section][key]
            try:
                values[name] = typ(raw.strip())
            except ValueError:
                raise ConfigError(f"{path}: [{section}] {key} = {raw!r} is not a valid {typ.__name__}") from None
    return values


def merge(base: RunConfig, *layers: dict) -> RunConfig:
    """Apply override layers in order, skipping ``None`` values."""
    known = {f.name for f in fields(RunConfig)}
    upd = {}
    for layer in layers:
        upd.update({k: v for k, v in layer.items() if v is not None and k in known})
    return replace(base, **upd)
