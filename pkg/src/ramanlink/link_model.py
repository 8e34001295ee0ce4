"""Domain types, unit normalization and link-description ingestion.

All quantities held by the types in this module are strict SI (Hz, W, m, s);
the human-facing document schema (THz, GBd, dBm, km, ps^n/km) is converted at
the parse boundary and nowhere else.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterable, Mapping, Sequence

import numpy as np
import yaml
from scipy.interpolate import PchipInterpolator

from .errors import ConfigError
from . import units


@dataclass(frozen=True)
class Curve:
    """Sampled table with monotone piecewise-cubic interpolation.

    Evaluation outside the tabulated abscissa range is an error: silent
    extrapolation of gain/area curves is a classic wrong-answer source.
    """

    x: tuple[float, ...]
    y: tuple[float, ...]

    def __post_init__(self):
        if len(self.x) != len(self.y):
            raise ConfigError("curve table: abscissa/ordinate length mismatch")
        if len(self.x) < 2:
            raise ConfigError("curve table needs at least 2 points")
        xs = np.asarray(self.x, dtype=float)
        if np.any(np.diff(xs) <= 0):
            raise ConfigError("curve table abscissae must be strictly increasing")

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[float]], scale_x: float = 1.0,
                   scale_y: float = 1.0) -> "Curve":
        pts = sorted((float(a) * scale_x, float(b) * scale_y) for a, b in pairs)
        return cls(tuple(p[0] for p in pts), tuple(p[1] for p in pts))

    @cached_property
    def _interp(self) -> PchipInterpolator:
        return PchipInterpolator(np.asarray(self.x), np.asarray(self.y), extrapolate=False)

    @property
    def xmin(self) -> float:
        return self.x[0]

    @property
    def xmax(self) -> float:
        return self.x[-1]

    def covers(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.xmin) and np.all(x <= self.xmax))

    def __call__(self, x):
        xa = np.asarray(x, dtype=float)
        if not self.covers(xa):
            raise ConfigError(
                f"curve evaluation at {np.min(xa):g}..{np.max(xa):g} outside "
                f"tabulated domain [{self.xmin:g}, {self.xmax:g}]")
        out = self._interp(xa)
        return float(out) if np.isscalar(x) or xa.ndim == 0 else out


@dataclass(frozen=True)
class ChannelSpec:
    """One WDM channel of the comb."""

    index: int                # 1-based, ascending with frequency
    frequency: float          # Hz
    symbol_rate: float        # baud
    roll_off: float
    format: str               # e.g. "PM-32QAM", "gaussian"
    launch_power: float       # W, into span 1

    @property
    def occupied_bandwidth(self) -> float:
        return self.symbol_rate * (1.0 + self.roll_off)


@dataclass(frozen=True)
class PumpSpec:
    frequency: float          # Hz
    power: float              # W
    direction: str            # "forward" | "backward"


@dataclass(frozen=True)
class SpanSpec:
    """Fiber and pump description for one span."""

    length: float             # m
    attenuation: Curve        # f (Hz) -> field loss (1/m)
    beta2: float              # s^2/m at f0
    beta3: float              # s^3/m at f0
    beta4: float              # s^4/m at f0
    f0: float                 # Hz
    n2: float                 # m^2/W
    aeff: Curve               # f (Hz) -> m^2
    raman_gain: Curve         # delta_f (Hz) -> 1/(W m), measured at pump_ref
    pump_ref: float           # Hz
    pumps: tuple[PumpSpec, ...]
    launch_override: Curve | None = None   # f (Hz) -> W, optional


@dataclass(frozen=True)
class AseSpec:
    """Receiver-side ASE, either as OSNR(f) in dB or as power(f) in W.

    Both refer to the stated reference bandwidth; per-channel ASE power is
    rescaled to the channel symbol-rate bandwidth downstream.
    """

    ref_bandwidth: float      # Hz
    mode: str                 # "osnr_db" | "power"
    curve: Curve              # f (Hz) -> dB or W


@dataclass(frozen=True)
class Options:
    """Solver / fitter / engine tunables (SI units)."""

    grid_step_m: float = 100.0
    solver_rel_tol: float = 1e-6
    solver_max_iter: int = 100
    fit_window_m: float | None = None       # None = full span
    sigma_min: float = 1e-5                 # 1/m
    sigma_max: float = 1e-2                 # 1/m
    sigma_grid_points: int = 64
    sigma_refine_rel_width: float = 1e-7
    alpha0_min: float = 1e-6                # 1/m
    q_cap: int = 60
    beta2_eps: float = 1e-31                # s^2/m


@dataclass(frozen=True)
class LinkDescription:
    spans: tuple[SpanSpec, ...]
    channels: tuple[ChannelSpec, ...]
    ase: AseSpec
    options: Options = field(default_factory=Options)


@dataclass(frozen=True)
class ValidatedLink:
    """Immutable validated view of a LinkDescription.

    Safe to share across concurrent evaluators; construction is the only
    mutation point.
    """

    link: LinkDescription

    @property
    def spans(self) -> tuple[SpanSpec, ...]:
        return self.link.spans

    @property
    def channels(self) -> tuple[ChannelSpec, ...]:
        return self.link.channels

    @property
    def options(self) -> Options:
        return self.link.options

    @cached_property
    def frequencies(self) -> np.ndarray:
        a = np.array([c.frequency for c in self.channels])
        a.setflags(write=False)
        return a

    @cached_property
    def symbol_rates(self) -> np.ndarray:
        a = np.array([c.symbol_rate for c in self.channels])
        a.setflags(write=False)
        return a

    @cached_property
    def launch_powers(self) -> np.ndarray:
        a = np.array([c.launch_power for c in self.channels])
        a.setflags(write=False)
        return a

    def ase_power(self, channel: ChannelSpec) -> float:
        """ASE power (W) at the channel, in the channel symbol-rate bandwidth."""
        ase = self.link.ase
        scale = channel.symbol_rate / ase.ref_bandwidth
        if ase.mode == "osnr_db":
            osnr = units.db_to_lin(ase.curve(channel.frequency))
            return channel.launch_power / osnr * scale
        return ase.curve(channel.frequency) * scale


# --------------------------------------------------------------------------
# document schema
# --------------------------------------------------------------------------

_SPAN_REQUIRED = {
    "length_km", "attenuation_db_per_km", "beta2_ps2_per_km", "beta3_ps3_per_km",
    "beta4_ps4_per_km", "f0_THz", "n2_m2_per_W", "aeff_um2", "raman_gain", "pumps",
}
_SPAN_OPTIONAL = {"launch_override_dBm"}
_CHANNEL_REQUIRED = {"f_THz", "rate_GBd", "roll_off", "format", "power_dBm"}
_PUMP_REQUIRED = {"f_THz", "power_mW", "direction"}
_ASE_REQUIRED = {"ref_bandwidth_GHz"}
_ASE_OPTIONAL = {"osnr_db", "power_dBm"}
_OPTION_KEYS = {
    "grid_step_m": ("grid_step_m", 1.0),
    "solver_rel_tol": ("solver_rel_tol", 1.0),
    "solver_max_iter": ("solver_max_iter", None),
    "fit_window_km": ("fit_window_m", 1e3),
    "sigma_min_per_km": ("sigma_min", 1e-3),
    "sigma_max_per_km": ("sigma_max", 1e-3),
    "sigma_grid_points": ("sigma_grid_points", None),
    "sigma_refine_rel_width": ("sigma_refine_rel_width", 1.0),
    "alpha0_min_per_km": ("alpha0_min", 1e-3),
    "q_cap": ("q_cap", None),
    "beta2_eps": ("beta2_eps", 1.0),
}


def _require_mapping(obj: Any, where: str) -> Mapping:
    if not isinstance(obj, Mapping):
        raise ConfigError(f"{where}: expected a mapping, got {type(obj).__name__}")
    return obj


def _check_fields(obj: Mapping, required: set[str], optional: set[str], where: str):
    missing = required - set(obj)
    if missing:
        raise ConfigError(f"{where}: missing required field(s) {sorted(missing)}")
    unknown = set(obj) - required - optional
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {sorted(unknown)}")


def _number(obj: Mapping, key: str, where: str) -> float:
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}.{key}: expected a number, got {v!r}")
    return float(v)


def _pairs(obj: Mapping, key: str, where: str) -> list:
    v = obj[key]
    if not isinstance(v, list) or not v or not all(
            isinstance(p, (list, tuple)) and len(p) == 2 for p in v):
        raise ConfigError(f"{where}.{key}: expected a non-empty list of [x, y] pairs")
    return v


def _parse_span(doc: Mapping, k: int) -> SpanSpec:
    where = f"spans[{k}]"
    _check_fields(doc, _SPAN_REQUIRED, _SPAN_OPTIONAL, where)
    rg = _require_mapping(doc["raman_gain"], f"{where}.raman_gain")
    _check_fields(rg, {"pump_ref_THz", "table"}, set(), f"{where}.raman_gain")

    pumps = []
    if not isinstance(doc["pumps"], list):
        raise ConfigError(f"{where}.pumps: expected a list")
    for j, p in enumerate(doc["pumps"]):
        pwhere = f"{where}.pumps[{j}]"
        p = _require_mapping(p, pwhere)
        _check_fields(p, _PUMP_REQUIRED, set(), pwhere)
        direction = p["direction"]
        if direction not in ("forward", "backward"):
            raise ConfigError(f"{pwhere}.direction: must be 'forward' or 'backward'")
        pumps.append(PumpSpec(
            frequency=_number(p, "f_THz", pwhere) * 1e12,
            power=_number(p, "power_mW", pwhere) * 1e-3,
            direction=direction,
        ))

    override = None
    if "launch_override_dBm" in doc:
        override = Curve.from_pairs(
            [(f * 1e12, units.dbm_to_w(v)) for f, v in
             _pairs(doc, "launch_override_dBm", where)])

    return SpanSpec(
        length=_number(doc, "length_km", where) * 1e3,
        attenuation=Curve.from_pairs(
            [(f * 1e12, units.db_per_km_to_field_per_m(v)) for f, v in
             _pairs(doc, "attenuation_db_per_km", where)]),
        beta2=_number(doc, "beta2_ps2_per_km", where) * 1e-27,
        beta3=_number(doc, "beta3_ps3_per_km", where) * 1e-39,
        beta4=_number(doc, "beta4_ps4_per_km", where) * 1e-51,
        f0=_number(doc, "f0_THz", where) * 1e12,
        n2=_number(doc, "n2_m2_per_W", where),
        aeff=Curve.from_pairs(_pairs(doc, "aeff_um2", where), 1e12, 1e-12),
        raman_gain=Curve.from_pairs(_pairs(rg, "table", f"{where}.raman_gain"),
                                    1e12, 1e-3),
        pump_ref=_number(rg, "pump_ref_THz", f"{where}.raman_gain") * 1e12,
        pumps=tuple(pumps),
        launch_override=override,
    )


def _parse_channels(docs: list) -> tuple[ChannelSpec, ...]:
    raw = []
    for j, c in enumerate(docs):
        where = f"channels[{j}]"
        c = _require_mapping(c, where)
        _check_fields(c, _CHANNEL_REQUIRED, set(), where)
        if not isinstance(c["format"], str):
            raise ConfigError(f"{where}.format: expected a string")
        raw.append((
            _number(c, "f_THz", where) * 1e12,
            _number(c, "rate_GBd", where) * 1e9,
            _number(c, "roll_off", where),
            c["format"],
            units.dbm_to_w(_number(c, "power_dBm", where)),
        ))
    raw.sort(key=lambda t: t[0])
    return tuple(
        ChannelSpec(index=j + 1, frequency=f, symbol_rate=r, roll_off=ro,
                    format=fmt, launch_power=p)
        for j, (f, r, ro, fmt, p) in enumerate(raw))


def _parse_ase(doc: Mapping) -> AseSpec:
    _check_fields(doc, _ASE_REQUIRED, _ASE_OPTIONAL, "ase")
    modes = [k for k in ("osnr_db", "power_dBm") if k in doc]
    if len(modes) != 1:
        raise ConfigError("ase: exactly one of 'osnr_db' or 'power_dBm' is required")
    bw = _number(doc, "ref_bandwidth_GHz", "ase") * 1e9
    if modes[0] == "osnr_db":
        curve = Curve.from_pairs([(f * 1e12, v) for f, v in _pairs(doc, "osnr_db", "ase")])
        return AseSpec(ref_bandwidth=bw, mode="osnr_db", curve=curve)
    curve = Curve.from_pairs(
        [(f * 1e12, units.dbm_to_w(v)) for f, v in _pairs(doc, "power_dBm", "ase")])
    return AseSpec(ref_bandwidth=bw, mode="power", curve=curve)


def _parse_options(doc: Mapping) -> Options:
    kwargs = {}
    for key, value in doc.items():
        if key not in _OPTION_KEYS:
            raise ConfigError(f"options: unknown field '{key}'")
        attr, scale = _OPTION_KEYS[key]
        if scale is None:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"options.{key}: expected an integer")
            kwargs[attr] = value
        else:
            kwargs[attr] = _number(doc, key, "options") * scale
    return Options(**kwargs)


def parse_link_config(text: str) -> LinkDescription:
    """Parse a link description document (human schema or SI round-trip form)."""
    try:
        # the SI round-trip form is JSON; YAML 1.1 would mangle its floats
        doc = json.loads(text)
    except json.JSONDecodeError:
        try:
            doc = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"syntax error in link document: {exc}") from exc
    doc = _require_mapping(doc, "document")
    if doc.get("units") == "si":
        return _link_from_si_dict(doc)

    _check_fields(doc, {"spans", "channels", "ase"}, {"options"}, "document")
    if not isinstance(doc["spans"], list) or not doc["spans"]:
        raise ConfigError("spans: expected a non-empty list")
    if not isinstance(doc["channels"], list) or not doc["channels"]:
        raise ConfigError("channels: expected a non-empty list")

    spans = tuple(_parse_span(_require_mapping(s, f"spans[{k}]"), k)
                  for k, s in enumerate(doc["spans"]))
    channels = _parse_channels(doc["channels"])
    ase = _parse_ase(_require_mapping(doc["ase"], "ase"))
    options = _parse_options(_require_mapping(doc.get("options", {}), "options"))
    return LinkDescription(spans=spans, channels=channels, ase=ase, options=options)


# --------------------------------------------------------------------------
# SI round-trip serialization (bit-exact: no unit conversion on reload)
# --------------------------------------------------------------------------

def _curve_to_si(c: Curve | None):
    return None if c is None else [list(p) for p in zip(c.x, c.y)]


def serialize_link_config(link: LinkDescription) -> str:
    """Serialize to the SI round-trip form; parse_link_config reads it back
    bit-exactly."""
    doc = {
        "units": "si",
        "spans": [{
            "length": s.length,
            "attenuation": _curve_to_si(s.attenuation),
            "beta2": s.beta2, "beta3": s.beta3, "beta4": s.beta4, "f0": s.f0,
            "n2": s.n2,
            "aeff": _curve_to_si(s.aeff),
            "raman_gain": _curve_to_si(s.raman_gain),
            "pump_ref": s.pump_ref,
            "pumps": [{"frequency": p.frequency, "power": p.power,
                       "direction": p.direction} for p in s.pumps],
            "launch_override": _curve_to_si(s.launch_override),
        } for s in link.spans],
        "channels": [{
            "index": c.index, "frequency": c.frequency, "symbol_rate": c.symbol_rate,
            "roll_off": c.roll_off, "format": c.format,
            "launch_power": c.launch_power,
        } for c in link.channels],
        "ase": {"ref_bandwidth": link.ase.ref_bandwidth, "mode": link.ase.mode,
                "curve": _curve_to_si(link.ase.curve)},
        "options": {
            "grid_step_m": link.options.grid_step_m,
            "solver_rel_tol": link.options.solver_rel_tol,
            "solver_max_iter": link.options.solver_max_iter,
            "fit_window_m": link.options.fit_window_m,
            "sigma_min": link.options.sigma_min,
            "sigma_max": link.options.sigma_max,
            "sigma_grid_points": link.options.sigma_grid_points,
            "sigma_refine_rel_width": link.options.sigma_refine_rel_width,
            "alpha0_min": link.options.alpha0_min,
            "q_cap": link.options.q_cap,
            "beta2_eps": link.options.beta2_eps,
        },
    }
    return json.dumps(doc, sort_keys=True)


def _si_curve(obj, where: str) -> Curve:
    if not isinstance(obj, list):
        raise ConfigError(f"{where}: expected a list of pairs")
    return Curve.from_pairs(obj)


def _link_from_si_dict(doc: Mapping) -> LinkDescription:
    try:
        spans = tuple(SpanSpec(
            length=s["length"],
            attenuation=_si_curve(s["attenuation"], "attenuation"),
            beta2=s["beta2"], beta3=s["beta3"], beta4=s["beta4"], f0=s["f0"],
            n2=s["n2"],
            aeff=_si_curve(s["aeff"], "aeff"),
            raman_gain=_si_curve(s["raman_gain"], "raman_gain"),
            pump_ref=s["pump_ref"],
            pumps=tuple(PumpSpec(**p) for p in s["pumps"]),
            launch_override=(None if s.get("launch_override") is None
                             else _si_curve(s["launch_override"], "launch_override")),
        ) for s in doc["spans"])
        channels = tuple(ChannelSpec(**c) for c in doc["channels"])
        ase = AseSpec(ref_bandwidth=doc["ase"]["ref_bandwidth"],
                      mode=doc["ase"]["mode"],
                      curve=_si_curve(doc["ase"]["curve"], "ase.curve"))
        options = Options(**doc["options"])
    except KeyError as exc:
        raise ConfigError(f"SI document: missing field {exc}") from exc
    return LinkDescription(spans=spans, channels=channels, ase=ase, options=options)


# --------------------------------------------------------------------------
# validation
# --------------------------------------------------------------------------

def validate_link(link: LinkDescription) -> ValidatedLink:
    """Check all type invariants and curve coverage; return an immutable view."""
    if not link.spans:
        raise ConfigError("link has no spans")
    if not link.channels:
        raise ConfigError("link has no channels")

    chans = link.channels
    freqs = [c.frequency for c in chans]
    if sorted(freqs) != freqs:
        raise ConfigError("channels must be sorted by ascending frequency")
    if len(set(freqs)) != len(freqs):
        dup = sorted({f for f in freqs if freqs.count(f) > 1})
        raise ConfigError(f"duplicate frequency: channels share f = {dup[0] / 1e12:g} THz")
    if sorted(c.index for c in chans) != list(range(1, len(chans) + 1)):
        raise ConfigError("channel indices must be 1..N_c, unique")
    for c in chans:
        if c.frequency <= 0 or c.symbol_rate <= 0:
            raise ConfigError(f"channel {c.index}: non-positive frequency or symbol rate")
        if not 0.0 <= c.roll_off <= 1.0:
            raise ConfigError(f"channel {c.index}: roll_off outside [0, 1]")
        if c.launch_power < 0:
            raise ConfigError(f"channel {c.index}: negative launch power")
    for a, b in zip(chans, chans[1:]):
        gap = b.frequency - a.frequency
        if gap < (a.occupied_bandwidth + b.occupied_bandwidth) / 2.0:
            raise ConfigError(
                f"channels {a.index} and {b.index} have overlapping occupied bands")

    ase = link.ase
    if ase.ref_bandwidth <= 0:
        raise ConfigError("ase.ref_bandwidth must be positive")
    for c in chans:
        if not ase.curve.covers(c.frequency):
            raise ConfigError(
                f"ase table does not cover channel {c.index} at {c.frequency / 1e12:g} THz")

    for k, s in enumerate(link.spans):
        where = f"span {k + 1}"
        if s.length <= 0:
            raise ConfigError(f"{where}: non-positive length")
        if s.n2 <= 0:
            raise ConfigError(f"{where}: non-positive n2")
        wave_freqs = freqs + [p.frequency for p in s.pumps]
        for curve, name in ((s.attenuation, "attenuation"), (s.aeff, "aeff")):
            for f in wave_freqs:
                if not curve.covers(f):
                    raise ConfigError(
                        f"{where}: {name} table [{curve.xmin / 1e12:g}, "
                        f"{curve.xmax / 1e12:g}] THz does not cover {f / 1e12:g} THz")
        if np.any(s.attenuation(np.array(wave_freqs)) <= 0):
            raise ConfigError(f"{where}: attenuation must be positive over the band")
        if np.any(s.aeff(np.array(wave_freqs)) <= 0):
            raise ConfigError(f"{where}: effective area must be positive over the band")
        max_df = max(wave_freqs) - min(wave_freqs)
        if not (s.raman_gain.covers(0.0) and s.raman_gain.covers(max_df)):
            raise ConfigError(
                f"{where}: raman_gain table does not cover delta_f range "
                f"[0, {max_df / 1e12:g}] THz")
        if s.raman_gain(0.0) != 0.0:
            raise ConfigError(f"{where}: raman_gain table must have g(0) = 0")
        if any(v < 0 for v in s.raman_gain.y):
            raise ConfigError(f"{where}: raman_gain table has negative entries")
        for p in s.pumps:
            if p.power < 0:
                raise ConfigError(f"{where}: negative pump power")
        if s.launch_override is not None:
            for c in chans:
                if not s.launch_override.covers(c.frequency):
                    raise ConfigError(
                        f"{where}: launch_override does not cover channel {c.index}")

    opt = link.options
    if opt.grid_step_m <= 0 or opt.solver_rel_tol <= 0 or opt.solver_max_iter < 1:
        raise ConfigError("options: solver settings must be positive")
    if not (0 < opt.sigma_min < opt.sigma_max):
        raise ConfigError("options: need 0 < sigma_min < sigma_max")
    if opt.alpha0_min <= 0:
        raise ConfigError("options: alpha0_min must be positive")

    return ValidatedLink(link=link)
