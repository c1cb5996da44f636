"""Run configuration: flat ``section.key = value`` files and JSON records.

A config file is a list of assignments, one per line::

    run.scheme = twoway
    geometry.theta = 1.5707963267948966
    power.min_db = 0
    power.max_db = 20
    scheme.p_t = 0.5

Values are Python literals with ``inf``, ``true``, ``false`` and
``none`` also accepted; anything else is read as a bare string.  ``#``
starts a comment.  Unknown keys are errors.  The resolved mapping (every
key with its default filled in) is what output records echo back, and a
JSON output record can be passed to ``--config`` to rerun it.
"""

from __future__ import annotations

import ast
import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

from .classifier import (
    NO_ERASURE,
    BlindClassifier,
    MlClassifier,
    PerfectClassifier,
    Window,
    load_ml_table,
)
from .model import (
    COHERENT,
    INCOHERENT,
    ChannelConfig,
    ConfigurationError,
    GeometryConfig,
    PowerDistribution,
    db_to_lin,
)
from .optimizer import (
    DEFAULT_WINDOW_OFFSETS_DB,
    TX_FAR,
    TX_NEAR,
    SearchGrid,
    default_ratios,
    theta_grid,
    uniform_laws,
)
from .rates import FEC_HARD, FEC_IDEAL

SCHEMES = ("tdm", "twoway")

DEFAULT_SWEEP_R_E = 0.55

# affect where and how fast a run executes, never what it computes
EXECUTION_KEYS = ("run.threads", "run.out")


def _float(v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise TypeError("expected a number")
    return float(v)


def _int(v):
    if isinstance(v, bool) or not isinstance(v, int):
        if isinstance(v, float) and v.is_integer():
            return int(v)
        raise TypeError("expected an integer")
    return v


def _bool(v):
    if not isinstance(v, bool):
        raise TypeError("expected true or false")
    return v


def _str(v):
    if not isinstance(v, str):
        raise TypeError("expected a string")
    return v


def _opt(conv):
    return lambda v: None if v is None else conv(v)


def _list(conv):
    def f(v):
        if not isinstance(v, (list, tuple)):
            raise TypeError("expected a list")
        return [conv(x) for x in v]
    return f


def _choice(*options):
    def f(v):
        v = _str(v)
        if v not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return v
    return f


# key -> (converter, default)
SCHEMA: dict[str, tuple[Callable[[Any], Any], Any]] = {
    "run.scheme": (_choice(*SCHEMES), "twoway"),
    "run.seed": (_int, 0),
    "run.threads": (_int, 1),
    "run.frames": (_int, 1_000_000),
    "run.format": (_choice("csv", "json"), "csv"),
    "run.out": (_opt(_str), None),
    "geometry.d_ab": (_float, 1.0),
    "geometry.r_e": (_float, 5.0),
    "geometry.theta": (_float, math.pi / 2),
    "geometry.alpha": (_float, 2.0),
    "power.kind": (_choice("uniform", "levels"), "uniform"),
    "power.min_db": (_float, 0.0),
    "power.max_db": (_float, 20.0),
    "power.levels_db": (_opt(_list(_float)), None),
    "power.probs": (_opt(_list(_float)), None),
    "feedback.kind": (_choice("same", "uniform", "levels"), "same"),
    "feedback.min_db": (_float, 0.0),
    "feedback.max_db": (_float, 20.0),
    "feedback.levels_db": (_opt(_list(_float)), None),
    "feedback.probs": (_opt(_list(_float)), None),
    "channel.superposition": (_choice(INCOHERENT, COHERENT), INCOHERENT),
    "channel.wave_number": (_float, 0.0),
    "channel.eve_noiseless": (_bool, True),
    "channel.legit_noise_variance": (_float, 1.0),
    "channel.eve_noise_variance": (_float, 1.0),
    "channel.silence_floor_db": (_float, -100.0),
    "classifier.kind": (_choice("threshold", "ml", "blind", "perfect"), "threshold"),
    "classifier.t1_db": (_float, -math.inf),
    "classifier.t2_db": (_float, math.inf),
    "classifier.relative": (_bool, True),
    "classifier.ml_sigma_db": (_float, 2.0),
    "classifier.ml_table": (_opt(_str), None),
    "scheme.beta": (_opt(_float), None),
    "scheme.p_t": (_opt(_float), None),
    "fec.mode": (_choice(FEC_IDEAL, FEC_HARD), FEC_IDEAL),
    "fec.threshold": (_float, 0.0),
    "grid.points": (_int, 21),
    "grid.params": (_opt(_list(_float)), None),
    "grid.power_min_db": (_float, 0.0),
    "grid.power_max_db": (_float, 20.0),
    "grid.laws": (_choice("grid", "config"), "grid"),
    "grid.theta_points": (_int, 19),
    "grid.thetas": (_opt(_list(_float)), None),
    "grid.adversaries": (_opt(_list(_str)), None),
    "sweep.ratio_min": (_float, 0.1),
    "sweep.ratio_max": (_float, 1.0),
    "sweep.steps": (_int, 10),
    "sweep.schemes": (_list(_choice(*SCHEMES)), list(SCHEMES)),
    "sweep.placement": (_choice(TX_NEAR, TX_FAR), TX_NEAR),
    "sweep.r_e": (_float, DEFAULT_SWEEP_R_E),
    "simulate.trace": (_opt(_str), None),
    "simulate.trace_limit": (_opt(_int), None),
}

_WORDS = {"inf": "1e999", "true": "True", "false": "False", "none": "None"}
_WORD_RE = re.compile(r"(?<![\w.])(inf|true|false|none)(?![\w.])", re.IGNORECASE)
_QUOTED_RE = re.compile(r"""('[^']*'|"[^"]*")""")


def _literal_words(text: str) -> str:
    parts = _QUOTED_RE.split(text)
    for i in range(0, len(parts), 2):
        parts[i] = _WORD_RE.sub(lambda m: _WORDS[m.group(1).lower()], parts[i])
    return "".join(parts)


def _strip_comment(line: str) -> str:
    quote = None
    for i, ch in enumerate(line):
        if quote:
            if ch == quote:
                quote = None
        elif ch in "'\"":
            quote = ch
        elif ch == "#":
            return line[:i]
    return line


def parse_value(text: str) -> Any:
    text = text.strip()
    low = text.lower()
    if low == "nan":
        return math.nan
    if low in ("-inf", "+inf"):
        return math.inf if low[0] == "+" else -math.inf
    try:
        value = ast.literal_eval(_literal_words(text))
    except (ValueError, SyntaxError):
        return text
    return list(value) if isinstance(value, tuple) else value


def parse_text(text: str, source: str = "<config>") -> dict[str, Any]:
    raw: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = _strip_comment(line).strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in raw:
            raise ConfigurationError(f"{source}:{lineno}: duplicate key '{key}'")
        raw[key] = parse_value(value)
    return raw


def resolve(raw: dict[str, Any]) -> dict[str, Any]:
    """Validate keys and types, fill defaults; returns the full mapping."""
    unknown = sorted(set(raw) - set(SCHEMA))
    if unknown:
        raise ConfigurationError(f"unknown key(s): {', '.join(unknown)}")
    out = {}
    for key, (conv, default) in SCHEMA.items():
        if key not in raw:
            out[key] = list(default) if isinstance(default, list) else default
            continue
        value = raw[key]
        try:
            out[key] = conv(_decode_special(value))
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"{key}: {exc} (got {value!r})") from None
    return out


def _decode_special(v):
    # JSON records store non-finite floats as strings
    if isinstance(v, str) and v in ("inf", "-inf", "nan"):
        return float(v)
    if isinstance(v, list):
        return [_decode_special(x) for x in v]
    return v


def _law(cfg: dict, prefix: str) -> PowerDistribution:
    kind = cfg[f"{prefix}.kind"]
    if kind == "uniform":
        lo, hi = cfg[f"{prefix}.min_db"], cfg[f"{prefix}.max_db"]
        if not lo <= hi:
            raise ConfigurationError(f"{prefix}.min_db must not exceed {prefix}.max_db")
        return PowerDistribution.uniform_db(lo, hi)
    levels = cfg[f"{prefix}.levels_db"]
    if not levels:
        raise ConfigurationError(f"{prefix}.levels_db is required for kind=levels")
    probs = cfg[f"{prefix}.probs"]
    if probs is not None and len(probs) != len(levels):
        raise ConfigurationError(f"{prefix}.probs must match {prefix}.levels_db")
    return PowerDistribution.discrete([db_to_lin(x) for x in levels], probs)


_WINDOW_RE = re.compile(r"^window-(rel|abs)\[([^,\]]+),([^,\]]+)\]$")


def parse_adversary(text: str):
    """Inverse of the ``describe()`` strings used in outputs."""
    if text == "no-erasure":
        return NO_ERASURE
    if text == "blind":
        return BlindClassifier()
    if text == "perfect":
        return PerfectClassifier()
    m = _WINDOW_RE.match(text)
    if m:
        try:
            return Window(float(m.group(2)), float(m.group(3)), m.group(1) == "rel")
        except ValueError:
            pass
    raise ConfigurationError(f"grid.adversaries: cannot parse {text!r}")


@dataclass(frozen=True)
class RunConfig:
    """Validated run parameters; ``values`` is the resolved flat mapping."""

    values: dict

    def __post_init__(self):
        v = self.values
        if v["scheme.beta"] is not None and v["scheme.p_t"] is not None:
            raise ConfigurationError(
                "scheme conflict: set scheme.beta (tdm) or scheme.p_t (twoway), not both")
        for key in ("scheme.beta", "scheme.p_t"):
            x = v[key]
            if x is not None and not 0.0 <= x <= 1.0:
                raise ConfigurationError(f"{key}: must lie in [0, 1] (got {x!r})")
        if v["run.scheme"] == "tdm" and v["scheme.p_t"] is not None:
            raise ConfigurationError("scheme conflict: scheme.p_t given for run.scheme = tdm")
        if v["run.scheme"] == "twoway" and v["scheme.beta"] is not None:
            raise ConfigurationError("scheme conflict: scheme.beta given for run.scheme = twoway")
        if v["run.threads"] < 1:
            raise ConfigurationError("run.threads: must be >= 1")
        if v["run.frames"] < 1:
            raise ConfigurationError("run.frames: must be >= 1")
        if v["sweep.steps"] < 1:
            raise ConfigurationError("sweep.steps: must be >= 1")
        if not 0.0 < v["sweep.ratio_min"] <= v["sweep.ratio_max"] <= 1.0:
            raise ConfigurationError("sweep ratios must satisfy 0 < ratio_min <= ratio_max <= 1")
        if v["grid.points"] < 1 or v["grid.theta_points"] < 1:
            raise ConfigurationError("grid.points and grid.theta_points must be >= 1")
        for key in ("grid.params", "grid.thetas", "grid.adversaries"):
            if v[key] is not None and not v[key]:
                raise ConfigurationError(f"{key}: grid is empty")
        if v["grid.params"] is not None and any(not 0 <= x <= 1 for x in v["grid.params"]):
            raise ConfigurationError("grid.params: values must lie in [0, 1]")
        # construct once so that invalid combinations fail at load time
        self.geometry()
        self.channel()
        self.power()
        self.feedback_power()
        if v["grid.adversaries"] is not None:
            [parse_adversary(s) for s in v["grid.adversaries"]]

    def __getitem__(self, key):
        return self.values[key]

    def replace(self, **overrides) -> "RunConfig":
        v = dict(self.values)
        for k, x in overrides.items():
            key = k.replace("__", ".")
            if key not in v:
                raise ConfigurationError(f"unknown key {key!r}")
            v[key] = x
        return RunConfig(resolve(v))

    @property
    def scheme(self) -> str:
        return self.values["run.scheme"]

    @property
    def param(self) -> float:
        key = "scheme.beta" if self.scheme == "tdm" else "scheme.p_t"
        x = self.values[key]
        if x is None:
            raise ConfigurationError(f"{key} is required for run.scheme = {self.scheme}")
        return x

    def geometry(self, theta: float | None = None) -> GeometryConfig:
        v = self.values
        return GeometryConfig(v["geometry.d_ab"], v["geometry.r_e"],
                              v["geometry.theta"] if theta is None else theta,
                              v["geometry.alpha"])

    def channel(self) -> ChannelConfig:
        v = self.values
        return ChannelConfig(v["channel.superposition"], v["channel.wave_number"],
                             v["channel.eve_noiseless"], v["channel.legit_noise_variance"],
                             v["channel.eve_noise_variance"], v["channel.silence_floor_db"])

    def power(self) -> PowerDistribution:
        return _law(self.values, "power")

    def feedback_power(self) -> PowerDistribution:
        if self.values["feedback.kind"] == "same":
            return self.power()
        return _law(self.values, "feedback")

    def classifier(self, geom: GeometryConfig | None = None):
        """Eve's configured classifier (a window for threshold rules)."""
        v = self.values
        kind = v["classifier.kind"]
        if kind == "perfect":
            return PerfectClassifier()
        if kind == "blind":
            return BlindClassifier()
        if kind == "ml":
            if v["classifier.ml_table"]:
                return load_ml_table(v["classifier.ml_table"])
            return MlClassifier.from_levels(geom or self.geometry(), self.power(),
                                            v["classifier.ml_sigma_db"])
        if not v["classifier.relative"] and not v["classifier.t1_db"] <= v["classifier.t2_db"]:
            raise ConfigurationError("classifier.t1_db must not exceed classifier.t2_db")
        return Window(v["classifier.t1_db"], v["classifier.t2_db"], v["classifier.relative"])

    def search_grid(self, scheme: str | None = None, r_e: float | None = None) -> SearchGrid:
        v = self.values
        scheme = scheme or self.scheme
        n = v["grid.points"]
        if v["grid.params"] is not None:
            params = tuple(v["grid.params"])
        else:
            params = tuple(i / (n - 1) for i in range(n)) if n > 1 else (0.5,)
        if v["grid.laws"] == "config":
            laws = (self.power(),)
            feedback = (self.feedback_power(),)
        else:
            lo, hi = v["grid.power_min_db"], v["grid.power_max_db"]
            if not lo <= hi:
                raise ConfigurationError("grid.power_min_db must not exceed grid.power_max_db")
            ends = [lo + (hi - lo) * i / (n - 1) for i in range(n)] if n > 1 else [lo]
            laws = feedback = uniform_laws(ends)
        thetas = tuple(v["grid.thetas"]) if v["grid.thetas"] is not None \
            else theta_grid(v["grid.theta_points"])
        if v["grid.adversaries"] is not None:
            adversaries = tuple(parse_adversary(s) for s in v["grid.adversaries"])
        else:
            adversaries = (NO_ERASURE,) + tuple(Window(-math.inf, off)
                                                for off in DEFAULT_WINDOW_OFFSETS_DB)
        return SearchGrid(scheme, params, laws, thetas, adversaries,
                          feedback if scheme == "tdm" else (),
                          v["geometry.d_ab"], v["geometry.r_e"] if r_e is None else r_e,
                          v["geometry.alpha"], v["fec.mode"], v["fec.threshold"])

    def ratios(self) -> list[float]:
        v = self.values
        return default_ratios(v["sweep.ratio_min"], v["sweep.ratio_max"], v["sweep.steps"])

    def echo(self) -> dict:
        """JSON-safe copy of the resolved mapping minus execution-only keys."""
        return {k: encode_special(x) for k, x in self.values.items() if k not in EXECUTION_KEYS}


def encode_special(v):
    if isinstance(v, float) and not math.isfinite(v):
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if isinstance(v, list):
        return [encode_special(x) for x in v]
    if isinstance(v, dict):
        return {k: encode_special(x) for k, x in v.items()}
    return v


def load_config(path: str | Path | None) -> RunConfig:
    """Load a flat config file or a JSON output record (its ``input``)."""
    if path is None:
        return RunConfig(resolve({}))
    p = Path(path)
    try:
        text = p.read_text()
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {p}") from None
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {p}: {exc}") from None
    if text.lstrip().startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{p}: invalid JSON: {exc}") from None
        raw = doc.get("input", doc) if isinstance(doc, dict) else None
        if not isinstance(raw, dict):
            raise ConfigurationError(f"{p}: JSON config must be an object")
    else:
        raw = parse_text(text, str(p))
    return RunConfig(resolve(raw))


def load_config_text(text: str) -> RunConfig:
    return RunConfig(resolve(parse_text(text)))
