"""Run configuration: a JSON document naming one plant, one controller and an analysis.

Frequencies are given in Hz and converted to rad/s on use. Example::

    {
      "plant": {"preset": "precision_stage"},
      "controller": {"preset": "C04"},
      "analysis": {"grid": {"start_hz": 1, "stop_hz": 1000, "points_per_decade": 10},
                   "nmax": 11, "channels": ["reference", "disturbance"]},
      "output": "out"
    }
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .closedloop import CHANNELS
from .elements import (
    Factor,
    LinearPartSpec,
    ResetController,
    compose,
    make_cglp,
    make_gci,
    make_gfore,
    make_gsore,
    make_pci,
    tune_gain_for_crossover,
)
from .errors import ConfigError
from .hosidf import DEFAULT_NMAX
from .lti import RationalTf, load_frf_csv
from .presets import CONTROLLER_PRESETS, controller_preset, precision_stage

__all__ = [
    "GridSpec",
    "PlantSpec",
    "ControllerSpec",
    "InputSpec",
    "AnalysisSpec",
    "RunConfig",
    "load_config",
    "parse_config",
    "config_hash",
]

TWO_PI = 2.0 * math.pi


def _num(d: dict, key: str, where: str, default=None, positive=False, required=False):
    if key not in d or d[key] is None:
        if required:
            raise ConfigError(f"{where}.{key}: required field is missing")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{where}.{key}: expected a finite number, got {v!r}")
    if positive and v <= 0:
        raise ConfigError(f"{where}.{key}: must be positive, got {v!r}")
    return float(v)


def _check_keys(d, allowed, where):
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected an object, got {type(d).__name__}")
    extra = sorted(set(d) - set(allowed))
    if extra:
        raise ConfigError(f"{where}: unknown field(s) {', '.join(extra)}")


@dataclass(frozen=True)
class GridSpec:
    """Log-spaced frequency grid in Hz, or an explicit list."""

    start_hz: float | None = None
    stop_hz: float | None = None
    points_per_decade: int = 10
    freqs_hz: tuple = ()

    def hz(self) -> np.ndarray:
        if self.freqs_hz:
            return np.array(self.freqs_hz, float)
        decades = math.log10(self.stop_hz / self.start_hz)
        n = max(2, int(round(decades * self.points_per_decade)) + 1)
        return np.logspace(math.log10(self.start_hz), math.log10(self.stop_hz), n)

    def omega(self) -> np.ndarray:
        return TWO_PI * self.hz()

    @staticmethod
    def parse(d, where="analysis.grid") -> "GridSpec":
        if isinstance(d, list):
            vals = tuple(_num({"f": v}, "f", where, positive=True) for v in d)
            if not vals or any(b <= a for a, b in zip(vals, vals[1:])):
                raise ConfigError(f"{where}: frequencies must be positive and increasing")
            return GridSpec(freqs_hz=vals)
        _check_keys(d, {"start_hz", "stop_hz", "points_per_decade"}, where)
        a = _num(d, "start_hz", where, positive=True, required=True)
        b = _num(d, "stop_hz", where, positive=True, required=True)
        if b <= a:
            raise ConfigError(f"{where}: stop_hz must exceed start_hz")
        ppd = d.get("points_per_decade", 10)
        if isinstance(ppd, bool) or not isinstance(ppd, int) or ppd < 1:
            raise ConfigError(f"{where}.points_per_decade: expected a positive integer")
        return GridSpec(a, b, ppd)


@dataclass(frozen=True)
class PlantSpec:
    preset: str | None = None
    num: tuple = ()
    den: tuple = ()
    frf: str | None = None
    strict: bool = True

    def build(self, base_dir: Path | None = None, strict: bool | None = None):
        if self.preset is not None:
            return precision_stage()
        if self.frf is not None:
            path = Path(self.frf)
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            try:
                return load_frf_csv(path, self.strict if strict is None else strict)
            except (OSError, ValueError) as exc:
                raise ConfigError(f"plant.frf: {exc}") from exc
        try:
            return RationalTf(self.num, self.den)
        except ValueError as exc:
            raise ConfigError(f"plant: {exc}") from exc

    @staticmethod
    def parse(d) -> "PlantSpec":
        _check_keys(d, {"preset", "num", "den", "frf", "strict"}, "plant")
        kinds = [k for k in ("preset", "frf", "num") if k in d]
        if len(kinds) != 1:
            raise ConfigError("plant: give exactly one of preset, frf, or num/den")
        if "preset" in d:
            if d["preset"] != "precision_stage":
                raise ConfigError(f"plant.preset: unknown plant {d['preset']!r}")
            return PlantSpec(preset="precision_stage")
        if "frf" in d:
            if not isinstance(d["frf"], str):
                raise ConfigError("plant.frf: expected a file path")
            strict = d.get("strict", True)
            if not isinstance(strict, bool):
                raise ConfigError("plant.strict: expected true or false")
            return PlantSpec(frf=d["frf"], strict=strict)
        if "den" not in d:
            raise ConfigError("plant.den: required with plant.num")
        num = tuple(_num({"c": c}, "c", "plant.num") for c in _as_list(d["num"], "plant.num"))
        den = tuple(_num({"c": c}, "c", "plant.den") for c in _as_list(d["den"], "plant.den"))
        return PlantSpec(num=num, den=den)


def _as_list(v, where):
    if not isinstance(v, list) or not v:
        raise ConfigError(f"{where}: expected a non-empty list")
    return v


_FACTOR_FIELDS = {
    "integrator": ("omega_i_hz",),
    "tamed_integrator": ("omega_i_hz", "omega_f_hz"),
    "lead": ("omega_d_hz", "omega_t_hz"),
    "lowpass": ("omega_lpf_hz",),
    "lead_zero": ("omega_r_hz", "omega_f_hz"),
    "gain": ("K",),
}

_ELEMENTS = ("gci", "pci", "gfore", "gsore", "cglp", "linear")


@dataclass(frozen=True)
class ControllerSpec:
    preset: str | None = None
    element: str | None = None
    gamma: float | None = None
    alpha: float | None = None
    omega_r_hz: float | None = None
    omega_f_hz: float | None = None
    omega_i_hz: float | None = None
    beta_r: float = 1.0
    kappa: float = 1.0
    linear: tuple = ()
    K: float = 1.0
    crossover_hz: float | None = None

    def build(self, plant) -> ResetController:
        try:
            return self._build(plant)
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"controller: {exc}") from exc

    def _build(self, plant) -> ResetController:
        wc = TWO_PI * self.crossover_hz if self.crossover_hz else TWO_PI * 150.0
        if self.preset is not None:
            params = {}
            for key in ("omega_r", "omega_f"):
                v = getattr(self, key + "_hz")
                if v is not None:
                    params[key] = TWO_PI * v
            params.update(beta_r=self.beta_r, kappa=self.kappa)
            if self.alpha is not None:
                params["alpha"] = self.alpha
            ctrl = controller_preset(self.preset, self.gamma, plant=plant, omega_c=wc, **params)
            if self.preset.upper() in ("CLEGG", "GFORE", "GSORE", "CGLP"):
                ctrl = self._finish(ctrl, plant)
            return ctrl
        g = 0.0 if self.gamma is None else self.gamma
        el = self.element
        if el == "gci":
            reset = make_gci(g, self.alpha)
        elif el == "pci":
            reset = make_pci(TWO_PI * self.omega_i_hz, g, self.alpha)
        elif el == "gfore":
            reset = make_gfore(TWO_PI * self.omega_r_hz, g, self.alpha)
        elif el == "gsore":
            reset = make_gsore(TWO_PI * self.omega_r_hz, self.beta_r, g, self.kappa, self.alpha)
        elif el == "cglp":
            reset = make_cglp(TWO_PI * self.omega_r_hz, TWO_PI * self.omega_f_hz, g, self.alpha)
        else:
            lin = self.linear_part()
            ctrl = ResetController(lin.to_statespace(), 0, [], name="linear")
            return self._finish(ctrl, plant)
        ctrl = compose(reset, self.linear_part()) if self.linear else reset
        return self._finish(ctrl, plant)

    def _finish(self, ctrl, plant):
        if self.crossover_hz:
            return ctrl.scaled(tune_gain_for_crossover(ctrl, plant, TWO_PI * self.crossover_hz))
        return ctrl.scaled(self.K) if self.K != 1.0 else ctrl

    def linear_part(self) -> LinearPartSpec:
        out = []
        for kind, vals in self.linear:
            hz_vals = tuple(v if kind == "gain" else TWO_PI * v for v in vals)
            out.append(Factor(kind, hz_vals))
        return LinearPartSpec(tuple(out))

    @staticmethod
    def parse(d) -> "ControllerSpec":
        where = "controller"
        _check_keys(d, {"preset", "element", "gamma", "alpha", "omega_r_hz", "omega_f_hz",
                        "omega_i_hz", "beta_r", "kappa", "linear", "K", "crossover_hz"}, where)
        if ("preset" in d) == ("element" in d):
            raise ConfigError(f"{where}: give exactly one of preset or element")
        gamma = _num(d, "gamma", where)
        if gamma is not None and not -1 <= gamma <= 1:
            raise ConfigError(f"{where}.gamma: must lie in [-1, 1], got {gamma}")
        kw = dict(
            gamma=gamma,
            alpha=_num(d, "alpha", where, positive=True),
            omega_r_hz=_num(d, "omega_r_hz", where, positive=True),
            omega_f_hz=_num(d, "omega_f_hz", where, positive=True),
            omega_i_hz=_num(d, "omega_i_hz", where, positive=True),
            beta_r=_num(d, "beta_r", where, 1.0, positive=True),
            kappa=_num(d, "kappa", where, 1.0, positive=True),
            K=_num(d, "K", where, 1.0),
            crossover_hz=_num(d, "crossover_hz", where, positive=True),
        )
        linear = []
        for i, f in enumerate(d.get("linear", []) or []):
            fw = f"{where}.linear[{i}]"
            if not isinstance(f, dict) or f.get("type") not in _FACTOR_FIELDS:
                raise ConfigError(f"{fw}.type: expected one of {sorted(_FACTOR_FIELDS)}")
            names = _FACTOR_FIELDS[f["type"]]
            _check_keys(f, {"type", *names}, fw)
            linear.append((f["type"], tuple(
                _num(f, n, fw, required=True, positive=(n != "K")) for n in names)))
        kw["linear"] = tuple(linear)
        if "preset" in d:
            name = d["preset"]
            if not isinstance(name, str) or name.upper() not in {p.upper() for p in CONTROLLER_PRESETS}:
                raise ConfigError(f"{where}.preset: unknown preset {name!r}; "
                                  f"choose from {', '.join(CONTROLLER_PRESETS)}")
            if linear:
                raise ConfigError(f"{where}.linear: not allowed with a preset")
            return ControllerSpec(preset=name, **kw)
        el = d["element"]
        if el not in _ELEMENTS:
            raise ConfigError(f"{where}.element: expected one of {_ELEMENTS}, got {el!r}")
        needs = {"pci": ("omega_i_hz",), "gfore": ("omega_r_hz",), "gsore": ("omega_r_hz",),
                 "cglp": ("omega_r_hz", "omega_f_hz")}.get(el, ())
        for n in needs:
            if kw[n] is None:
                raise ConfigError(f"{where}.{n}: required for element {el!r}")
        if el == "linear" and not linear:
            raise ConfigError(f"{where}.linear: a linear controller needs at least one factor")
        return ControllerSpec(element=el, **kw)


@dataclass(frozen=True)
class InputSpec:
    channel: str
    freq_hz: float
    amplitude: float = 1.0
    phase_deg: float = 0.0

    @property
    def omega(self) -> float:
        return TWO_PI * self.freq_hz

    @property
    def phase(self) -> float:
        return math.radians(self.phase_deg)

    @staticmethod
    def parse(d, where) -> "InputSpec":
        _check_keys(d, {"channel", "freq_hz", "amplitude", "phase_deg"}, where)
        ch = {"r": "reference", "d": "disturbance", "n": "noise"}.get(d.get("channel"), d.get("channel"))
        if ch not in CHANNELS:
            raise ConfigError(f"{where}.channel: expected one of {CHANNELS}, got {d.get('channel')!r}")
        return InputSpec(ch, _num(d, "freq_hz", where, positive=True, required=True),
                         _num(d, "amplitude", where, 1.0, positive=True),
                         _num(d, "phase_deg", where, 0.0))


@dataclass(frozen=True)
class AnalysisSpec:
    grid: GridSpec | None = None
    nmax: int = DEFAULT_NMAX
    auto_nmax: bool = False
    channels: tuple = ("reference",)
    samples_per_period: int = 10_000
    dt: float | None = None
    periods: int | None = None
    inputs: tuple = ()
    dominance_threshold: float = 0.5

    @staticmethod
    def parse(d) -> "AnalysisSpec":
        where = "analysis"
        _check_keys(d, {"grid", "freqs_hz", "nmax", "auto_nmax", "channels", "samples_per_period",
                        "dt", "periods", "input", "inputs", "dominance_threshold"}, where)
        grid = None
        if "grid" in d and "freqs_hz" in d:
            raise ConfigError(f"{where}: give grid or freqs_hz, not both")
        if "grid" in d:
            grid = GridSpec.parse(d["grid"])
        elif "freqs_hz" in d:
            grid = GridSpec.parse(d["freqs_hz"], f"{where}.freqs_hz")
        nmax = d.get("nmax", DEFAULT_NMAX)
        if isinstance(nmax, bool) or not isinstance(nmax, int) or nmax < 1 or nmax % 2 == 0:
            raise ConfigError(f"{where}.nmax: expected a positive odd integer, got {nmax!r}")
        auto = d.get("auto_nmax", False)
        if not isinstance(auto, bool):
            raise ConfigError(f"{where}.auto_nmax: expected true or false")
        chans = d.get("channels", ["reference"])
        if not isinstance(chans, list) or not chans:
            raise ConfigError(f"{where}.channels: expected a non-empty list")
        norm = []
        for c in chans:
            c2 = {"r": "reference", "d": "disturbance", "n": "noise"}.get(c, c)
            if c2 not in CHANNELS:
                raise ConfigError(f"{where}.channels: unknown channel {c!r}")
            norm.append(c2)
        spp = d.get("samples_per_period", 10_000)
        if isinstance(spp, bool) or not isinstance(spp, int) or spp < 4:
            raise ConfigError(f"{where}.samples_per_period: expected an integer >= 4")
        periods = d.get("periods")
        if periods is not None and (isinstance(periods, bool) or not isinstance(periods, int)
                                    or periods < 10):
            raise ConfigError(f"{where}.periods: expected an integer >= 10")
        raw_inputs = list(d.get("inputs", []) or [])
        if "input" in d:
            raw_inputs.insert(0, d["input"])
        inputs = tuple(InputSpec.parse(x, f"{where}.inputs[{i}]") for i, x in enumerate(raw_inputs))
        thr = _num(d, "dominance_threshold", where, 0.5, positive=True)
        if thr >= 1:
            raise ConfigError(f"{where}.dominance_threshold: must be below 1")
        return AnalysisSpec(grid, nmax, auto, tuple(norm), spp,
                            _num(d, "dt", where, positive=True), periods, inputs, thr)


@dataclass(frozen=True)
class RunConfig:
    plant: PlantSpec
    controller: ControllerSpec
    analysis: AnalysisSpec = field(default_factory=AnalysisSpec)
    output: str | None = None
    raw: dict = field(default_factory=dict, compare=False, repr=False)
    base_dir: Path | None = field(default=None, compare=False, repr=False)

    @property
    def hash(self) -> str:
        return config_hash(self.raw)


def config_hash(raw: dict) -> str:
    """Short SHA-256 of the canonical JSON form of a config."""
    blob = json.dumps(raw, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def parse_config(raw: dict, base_dir: Path | None = None) -> RunConfig:
    _check_keys(raw, {"plant", "controller", "analysis", "output"}, "config")
    for key in ("plant", "controller"):
        if key not in raw:
            raise ConfigError(f"config.{key}: required section is missing")
    out = raw.get("output")
    if out is not None and not isinstance(out, str):
        raise ConfigError("config.output: expected a directory path")
    return RunConfig(PlantSpec.parse(raw["plant"]), ControllerSpec.parse(raw["controller"]),
                     AnalysisSpec.parse(raw.get("analysis", {})), out, copy.deepcopy(raw), base_dir)


def load_config(path: str | Path) -> RunConfig:
    """Read and validate a JSON run configuration.

    Raises
    ------
    ConfigError
        With the line/column of a syntax error or the dotted path of the
        offending field.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return parse_config(raw, path.parent)
