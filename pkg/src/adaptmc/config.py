"""Experiment configuration: an INI file with one section per concern.

Example::

    [experiment]
    kind = complete-sweep
    trials = 50
    base_seed = 7
    output = complete.csv

    [instance]
    d = 500
    n = 500
    square = true
    r = 10
    mu0 = 1

    [grid]
    n = 200, 500, 1000
    m = 30, 40, 50, 60, 80

    [algorithm]
    tau_rel = 1e-8

Keys under ``[grid]`` are comma-separated lists and take precedence over
the scalar of the same name under ``[instance]`` / ``[algorithm]``.
"""

import configparser
import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path

from .instances import NORM_MODES, ROW_MODES
from .sampling import InvalidArgument

KINDS = ("complete-sweep", "approx-sweep", "bounds-validate", "lowerbound-demo", "single-run")


@dataclass
class ExperimentConfig:
    kind: str = "single-run"
    trials: int = 1
    base_seed: int = 0
    output: str = "results.csv"
    workers: int = 1
    # instance
    d: int = 500
    n: int = 500
    square: bool = True
    r: int = 10
    mu0: float = 1.0
    row_mode: str = "incoherent-gaussian"
    column_norm_mode: str = "constant"
    noise_sigma: float = 0.0
    # algorithm
    m: int = 50
    p: float = 0.0
    m1: int = 0
    m1_frac: float = 0.1
    tau_rel: float = 1e-8
    delta: float = 0.05
    block: int = 0
    # grids
    n_grid: list = field(default_factory=list)
    r_grid: list = field(default_factory=list)
    mu0_grid: list = field(default_factory=list)
    m_grid: list = field(default_factory=list)
    p_grid: list = field(default_factory=list)
    delta_grid: list = field(default_factory=list)
    norm_modes: list = field(default_factory=list)
    methods: list = field(default_factory=list)
    budget_fracs: list = field(default_factory=list)

    def validate(self):
        if self.kind not in KINDS:
            raise InvalidArgument(f"kind must be one of {KINDS}")
        if self.trials < 1:
            raise InvalidArgument("trials must be >= 1")
        if self.row_mode not in ROW_MODES:
            raise InvalidArgument(f"row_mode must be one of {ROW_MODES}")
        for mode in self.norm_modes or [self.column_norm_mode]:
            if mode not in NORM_MODES:
                raise InvalidArgument(f"column norm mode {mode!r} not in {NORM_MODES}")
        for p in self.p_grid:
            if not 0.0 < p <= 1.0:
                raise InvalidArgument(f"p grid values must lie in (0, 1], got {p}")
        for name in ("n_grid", "r_grid", "mu0_grid", "m_grid", "delta_grid", "budget_fracs"):
            vals = getattr(self, name)
            if any(v <= 0 for v in vals):
                raise InvalidArgument(f"{name} entries must be positive")
        if self.kind == "approx-sweep" and (0 in (self.r_grid or [self.r])):
            raise InvalidArgument("approximation rank must be >= 1")
        if self.kind in ("complete-sweep", "bounds-validate") and not (self.m_grid or self.p_grid):
            raise InvalidArgument(f"{self.kind} needs a nonempty m or p grid")
        if self.kind == "approx-sweep" and not self.p_grid:
            raise InvalidArgument("approx-sweep needs a nonempty p grid")
        return self

    def replace(self, **kw):
        return dataclasses.replace(self, **kw)


_GRID_KEYS = {
    "n": ("n_grid", int),
    "r": ("r_grid", int),
    "mu0": ("mu0_grid", float),
    "m": ("m_grid", int),
    "p": ("p_grid", float),
    "delta": ("delta_grid", float),
    "column_norm_mode": ("norm_modes", str),
    "norm_modes": ("norm_modes", str),
    "methods": ("methods", str),
    "budget_frac": ("budget_fracs", float),
    "budget_fracs": ("budget_fracs", float),
}


def _coerce(name, raw):
    ftype = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}[name]
    if ftype in (bool, "bool"):
        return raw.strip().lower() in ("1", "true", "yes", "on")
    if ftype in (int, "int"):
        return int(float(raw))
    if ftype in (float, "float"):
        return float(raw)
    return raw.strip()


def _parse_list(raw, cast):
    return [cast(v.strip()) if cast is not int else int(float(v)) for v in raw.split(",") if v.strip()]


def load_config(path=None, overrides=None):
    """Read an INI file (optional) then apply ``overrides`` (CLI flags)."""
    cfg = ExperimentConfig()
    scalars = {f.name for f in dataclasses.fields(ExperimentConfig)}
    if path is not None:
        cp = configparser.ConfigParser()
        if not cp.read(path):
            raise InvalidArgument(f"cannot read config {path}")
        for section in cp.sections():
            for key, raw in cp.items(section):
                key = key.replace("-", "_")
                if section == "grid":
                    if key not in _GRID_KEYS:
                        raise InvalidArgument(f"unknown grid key {key!r}")
                    attr, cast = _GRID_KEYS[key]
                    setattr(cfg, attr, _parse_list(raw, cast))
                elif key in scalars:
                    setattr(cfg, key, _coerce(key, raw))
                else:
                    raise InvalidArgument(f"unknown key {key!r} in [{section}]")
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        setattr(cfg, key, val)
    if os.environ.get("ADAPTMC_THREADS") and not (overrides or {}).get("workers"):
        cfg.workers = max(1, int(os.environ["ADAPTMC_THREADS"]))
    return cfg.validate()


def resolve_output(path):
    """Relative output paths land in ``$ADAPTMC_OUTPUT_DIR`` when it is set."""
    p = Path(path)
    base = os.environ.get("ADAPTMC_OUTPUT_DIR")
    if base and not p.is_absolute():
        p = Path(base) / p
    return p
