# coding: utf-8
#
# Run configuration: one YAML file, every section checked against a typed
# registry of keys. Unknown keys and wrongly typed values are rejected.

import hashlib
import math
import pprint
from dataclasses import dataclass
from typing import Any, Optional, Tuple

import yaml

from supercool.core import DensitySpec, TimeGrid
from supercool.exceptions import ConfigParseError
from supercool.experiments import LimitConfig
from supercool.fixedpoint import PicardConfig
from supercool.montecarlo import EnsembleConfig

MODES = ("solve_regularized", "solve_limit", "sweep", "fk_validate")
FK_BOUNDARIES = ("zero", "solved")

_NUMBER = (float, int)
_OPT_INT = (int, type(None))
_OPT_BOOL = (bool, type(None))
_OPT_NUMBER = (float, int, type(None))


def _as_number(val: Any) -> Any:
    """
    YAML 1.1 reads exponents without a dot (1e-4) as strings; turn those
    back into numbers, leave anything else alone.
    """
    if not isinstance(val, str):
        return val
    try:
        return int(val)
    except ValueError:
        pass
    try:
        num = float(val)
    except ValueError:
        return val
    return num if math.isfinite(num) else val


class Section(object):
    """
    Typed key registry. Defaults fix the accepted type unless `props`
    overrides it; a default of Ellipsis marks a required key.
    """

    def __init__(self, name: str, defaults: dict, props: dict = None):
        self._name = name
        self._defaults = dict(defaults)
        self._props = dict(props or {})
        self._values = {}
        for k, v in self._defaults.items():
            if k not in self._props:
                self._props[k] = _NUMBER if type(v) in (float, int) else type(v)

    def _key(self, key: str) -> str:
        return "%s.%s" % (self._name, key) if self._name else key

    def get(self, key: str) -> Any:
        if key in self._values:
            return self._values[key]
        val = self._defaults[key]
        if val is Ellipsis:
            raise ConfigParseError("missing key", self._key(key))
        return val

    def set(self, key: str, val: Any):
        if key not in self._props:
            raise ConfigParseError("unknown key", self._key(key))
        accepted = self._props[key]
        if isinstance(accepted, tuple) and float in accepted:
            val = _as_number(val)
        if isinstance(val, bool) and bool not in (accepted if isinstance(accepted, tuple)
                                                  else (accepted, )):
            raise ConfigParseError("invalid type for %s, only accept: %r" % (self._key(key),
                                                                           accepted))
        if not isinstance(val, accepted):
            raise ConfigParseError("invalid type for %s, only accept: %r" % (self._key(key),
                                                                           accepted))
        self._values[key] = val

    def update(self, data: Any):
        if data is None:
            return self
        if not isinstance(data, dict):
            raise ConfigParseError("section must be a mapping", self._name)
        for k, v in data.items():
            self.set(k, v)
        return self

    def __getitem__(self, key: str) -> Any:
        if key not in self._props:
            raise ConfigParseError("unknown key", self._key(key))
        return self.get(key)

    def as_dict(self) -> dict:
        return {k: self.get(k) for k in self._props}

    def __repr__(self):
        return pprint.pformat(self.as_dict())


def _sections():
    return dict(
        model=Section("model", {"density": Ellipsis, "alpha": Ellipsis},
                      {"density": dict, "alpha": _NUMBER}),
        tgrid=Section("tgrid", {"t_max": 1.0, "n_steps": 4096}, {"n_steps": int}),
        xgrid=Section("xgrid", {"dx": 2.0**-10, "x_max": None}, {"x_max": _OPT_NUMBER}),
        picard=Section("picard", {
            "evaluator": "pde",
            "tol": 1e-4,
            "max_iter": 50,
            "window_steps": None,
            "min_window_steps": 1,
            "error_estimate": False,
        }, {"window_steps": _OPT_INT, "max_iter": int, "min_window_steps": int}),
        ensemble=Section("ensemble", {
            "n_particles": 200000,
            "bridge_refinement": None,
            "antithetic": False,
        }, {"n_particles": int, "bridge_refinement": _OPT_BOOL}),
        limit=Section("limit", {"n_particles": 500000, "tol": 5e-4, "max_sweeps": 200},
                      {"n_particles": int, "max_sweeps": int}),
        fk=Section("fk", {"boundary": "zero"}),
    )


_DENSITY_KEYS = {
    "uniform": ("a", "b"),
    "piecewise_constant": ("breakpoints", "heights"),
    "tabulated": ("x", "f"),
}


def density_from_dict(d: dict) -> DensitySpec:
    kind = d.get("kind")
    if kind not in _DENSITY_KEYS:
        raise ConfigParseError("unknown density kind %r, expect one of %s"
                               % (kind, sorted(_DENSITY_KEYS)))
    keys = _DENSITY_KEYS[kind]
    extra = set(d) - set(keys) - {"kind"}
    if extra:
        raise ConfigParseError("unknown key", ["model.density." + k for k in sorted(extra)])
    missing = [k for k in keys if k not in d]
    if missing:
        raise ConfigParseError("missing key", ["model.density." + k for k in missing])
    try:
        if kind == "uniform":
            return DensitySpec.uniform(float(d["a"]), float(d["b"]))
        if kind == "piecewise_constant":
            return DensitySpec.piecewise_constant(d["breakpoints"], d["heights"])
        return DensitySpec.tabulated(d["x"], d["f"])
    except (TypeError, ValueError) as e:
        raise ConfigParseError("bad density", str(e))


@dataclass(frozen=True, eq=False)
class RunConfig:
    density: DensitySpec
    alpha: float
    mode: str
    epsilons: Tuple[float, ...]
    tgrid: TimeGrid
    dx: float
    x_max: Optional[float]
    picard: PicardConfig
    ensemble: EnsembleConfig
    limit: LimitConfig
    fk_boundary: str
    output_dir: str
    seed: int
    digest: str  # sha256 of the config text


_TOP_LEVEL = ("model", "mode", "epsilons", "tgrid", "xgrid", "picard", "ensemble", "limit", "fk",
              "output_dir", "seed")


def parse_config(text: str, output: str = None, seed: int = None) -> RunConfig:
    """
    Args:
        output, seed: command line overrides

    Raises:
        ConfigParseError
    """
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigParseError("invalid yaml", str(e))
    if not isinstance(data, dict):
        raise ConfigParseError("config must be a mapping")
    unknown = sorted(set(data) - set(_TOP_LEVEL))
    if unknown:
        raise ConfigParseError("unknown key", unknown)

    sec = _sections()
    for name, section in sec.items():
        section.update(data.get(name))

    mode = data.get("mode", "solve_regularized")
    if mode not in MODES:
        raise ConfigParseError("mode must be one of %s" % (MODES, ), mode)
    epsilons = data.get("epsilons", [])
    if isinstance(epsilons, list):
        epsilons = [_as_number(e) for e in epsilons]
    if not isinstance(epsilons, list) or any(
            isinstance(e, bool) or not isinstance(e, (int, float)) for e in epsilons):
        raise ConfigParseError("epsilons must be a list of numbers", epsilons)
    if mode != "solve_limit" and not epsilons:
        raise ConfigParseError("mode %s needs epsilons" % mode)
    if sec["fk"]["boundary"] not in FK_BOUNDARIES:
        raise ConfigParseError("fk.boundary must be one of %s" % (FK_BOUNDARIES, ))

    if seed is None:
        seed = data.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigParseError("seed must be a 64-bit unsigned integer", seed)
    if output is None:
        output = data.get("output_dir", "output")
    if not isinstance(output, str):
        raise ConfigParseError("output_dir must be a string", output)

    model = sec["model"]
    try:
        tgrid = TimeGrid(sec["tgrid"]["t_max"], sec["tgrid"]["n_steps"])
        picard = PicardConfig(**sec["picard"].as_dict())
        ens = sec["ensemble"]
        ensemble = EnsembleConfig(ens["n_particles"], seed, ens["bridge_refinement"],
                                  ens["antithetic"])
        lim = sec["limit"]
        limit = LimitConfig(lim["n_particles"], lim["tol"], lim["max_sweeps"])
        dx = float(sec["xgrid"]["dx"])
        if not dx > 0:
            raise ValueError("xgrid.dx must be > 0", dx)
    except ValueError as e:
        raise ConfigParseError(*e.args)

    return RunConfig(density_from_dict(model["density"]), float(model["alpha"]), mode,
                     tuple(float(e) for e in epsilons), tgrid, dx, sec["xgrid"]["x_max"],
                     picard, ensemble, limit, sec["fk"]["boundary"], output, seed,
                     hashlib.sha256(text.encode("utf-8")).hexdigest())


def load_config(path: str, output: str = None, seed: int = None) -> RunConfig:
    """
    Raises:
        ConfigParseError
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigParseError("cannot read config", path, str(e))
    return parse_config(text, output=output, seed=seed)
