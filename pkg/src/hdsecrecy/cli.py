"""Command-line entry point: ``hdsecrecy {rates,sweep,simulate,optimize}``.

Exit status is 0 on success, 2 for configuration or usage errors and 3 when
a runtime contract check fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .classifier import (
    PERFECT_TDM,
    PerfectClassifier,
    ThresholdClassifier,
    Window,
    misclass_profile,
    tdm_detection_profile,
    tdm_window,
)
from .config import RunConfig, encode_special, load_config
from .model import ConfigurationError, ContractViolation, lin_to_db
from .montecarlo import SimConfig, UsageError, compare_profiles, simulate, write_trace
from .optimizer import optimize, sweep_ratio
from .rates import DomainError, tdm_bounds, twoway_bounds

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONTRACT = 3

SWEEP_COLUMNS = ("ratio", "scheme", "r_sec", "argmax_param", "argmin_theta", "classifier_desc")
SWEEP_ERROR = "ERROR:unrealizable ratio"


def _plain(v):
    """Recursively convert numpy scalars/arrays and tuples to JSON-able values."""
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return _plain(v.tolist())
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    return v


def fmt_number(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    return str(x)


def _flatten(prefix: str, v, out: list):
    if isinstance(v, dict):
        for k, x in v.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), x, out)
    elif isinstance(v, list):
        if not v:
            out.append((prefix, ""))
        for i, x in enumerate(v):
            _flatten(f"{prefix}.{i}", x, out)
    else:
        out.append((prefix, fmt_number(v)))


@dataclass
class OutputRecord:
    """Input echo, result payload and provenance of one command."""

    command: str
    input: dict
    result: dict
    provenance: dict
    rows: list | None = None

    def as_dict(self) -> dict:
        return encode_special(_plain({"command": self.command, "input": self.input,
                                      "result": self.result, "provenance": self.provenance}))

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if self.rows is not None:
            w.writerow(SWEEP_COLUMNS)
            for row in self.rows:
                w.writerow([fmt_number(x) for x in row])
        else:
            w.writerow(("key", "value"))
            flat: list = []
            _flatten("", _plain({"input": self.input, "result": self.result,
                                 "provenance": self.provenance}), flat)
            w.writerows(flat)
        return buf.getvalue()

    def render(self, fmt: str) -> str:
        return self.to_json() if fmt == "json" else self.to_csv()


def _provenance(cfg: RunConfig, **extra) -> dict:
    out = {"tool": "hdsecrecy", "version": __version__, "seed": cfg["run.seed"],
           "power_family": "uniform-linear laws" if cfg["power.kind"] == "uniform"
           else "discrete levels"}
    out.update(extra)
    return out


def _twoway_classifier(cfg: RunConfig, geom):
    cls = cfg.classifier(geom)
    if isinstance(cls, Window):
        cls = ThresholdClassifier.from_geometry(geom, cfg.power(), cls)
    return cls


def _analytic_method(cfg: RunConfig) -> str:
    ch = cfg.channel()
    return "analytic" if ch.eve_noiseless and ch.superposition_mode == "incoherent" \
        else "montecarlo"


def _profile(cfg: RunConfig):
    geom = cfg.geometry()
    if cfg.scheme == "twoway":
        return misclass_profile(geom, cfg.power(), _twoway_classifier(cfg, geom), cfg.channel(),
                                "analytic", cfg["run.frames"], cfg["run.seed"])
    cls = cfg.classifier(geom)
    if isinstance(cls, PerfectClassifier):
        return PERFECT_TDM
    if not isinstance(cls, Window):
        raise ConfigurationError("classifier.kind: tdm needs threshold or perfect")
    t1, t2 = tdm_window(geom, cfg.power(), cls)
    return tdm_detection_profile(geom, cfg.power(), cfg.feedback_power(),
                                 lin_to_db(t1), lin_to_db(t2), cfg.channel(), "analytic",
                                 cfg["run.frames"], cfg["run.seed"])


def _bounds(cfg: RunConfig, prof):
    geom = cfg.geometry()
    law = cfg.power()
    fn = twoway_bounds if cfg.scheme == "twoway" else tdm_bounds
    return fn(cfg.param, prof, geom, law.support[0], cfg["fec.mode"], cfg["fec.threshold"],
              dist=law)


def cmd_rates(cfg: RunConfig) -> OutputRecord:
    prof = _profile(cfg)
    br = _bounds(cfg, prof)
    return OutputRecord("rates", cfg.echo(),
                        {"scheme": cfg.scheme, "profile": prof.entries(),
                         "profile_method": _analytic_method(cfg), "breakdown": br.as_dict(),
                         "r_s": br.r_s},
                        _provenance(cfg))


def cmd_optimize(cfg: RunConfig) -> OutputRecord:
    grid = cfg.search_grid()
    res = optimize(grid)
    return OutputRecord("optimize", cfg.echo(), res.as_dict(),
                        _provenance(cfg, grid=grid.describe()))


def cmd_sweep(cfg: RunConfig) -> OutputRecord:
    grids = [cfg.search_grid(s, r_e=cfg["sweep.r_e"]) for s in cfg["sweep.schemes"]]
    points = sweep_ratio(cfg.ratios(), grids, cfg["sweep.placement"], cfg["run.threads"])
    rows = []
    for p in points:
        if p.error:
            rows.append((p.ratio, p.scheme, None, None, None, SWEEP_ERROR))
        else:
            rows.append((p.ratio, p.scheme, p.r_sec, p.argmax_param, p.argmin_theta,
                         p.classifier_desc))
    result = {"rows": [dict(zip(SWEEP_COLUMNS, r), error=p.error)
                       for r, p in zip(rows, points)]}
    prov = _provenance(cfg, d_ab=cfg["geometry.d_ab"], r_e=cfg["sweep.r_e"],
                       placement=cfg["sweep.placement"],
                       grids={g.scheme: g.describe() for g in grids})
    return OutputRecord("sweep", cfg.echo(), result, prov, rows=rows)


def _sim_config(cfg: RunConfig) -> SimConfig:
    geom = cfg.geometry()
    cls = cfg.classifier(geom)
    return SimConfig(cfg.scheme, geom, cfg.power(), cfg["run.frames"], cfg["run.seed"],
                     p_t=cfg.param if cfg.scheme == "twoway" else None,
                     beta=cfg.param if cfg.scheme == "tdm" else None,
                     feedback_power=cfg.feedback_power() if cfg.scheme == "tdm" else None,
                     channel=cfg.channel(), classifier=cls, fec_mode=cfg["fec.mode"],
                     fec_threshold=cfg["fec.threshold"], threads=cfg["run.threads"])


def cmd_simulate(cfg: RunConfig) -> OutputRecord:
    sim = _sim_config(cfg)
    emp, rates = simulate(sim)
    ref = _profile(cfg)
    ref_rates = _bounds(cfg, ref)
    report = compare_profiles(ref, emp)
    result = {"empirical": emp.as_dict(), "empirical_rates": rates.as_dict(),
              "analytic_profile": ref.entries(), "analytic_method": _analytic_method(cfg),
              "analytic_rates": ref_rates.as_dict(), "comparison": report.as_dict(),
              "r_s_difference": rates.r_s - ref_rates.r_s,
              "low_confidence": emp.low_confidence}
    if cfg["simulate.trace"]:
        result["trace_rows"] = write_trace(sim, cfg["simulate.trace"], cfg["simulate.trace_limit"])
    return OutputRecord("simulate", cfg.echo(), result, _provenance(cfg, frames=sim.frames))


COMMANDS = {"rates": cmd_rates, "sweep": cmd_sweep, "simulate": cmd_simulate,
            "optimize": cmd_optimize}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hdsecrecy",
                                description="Secrecy rates for half-duplex jamming schemes.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", metavar="PATH")
        s.add_argument("--out", metavar="PATH")
        s.add_argument("--format", choices=("csv", "json"))
        s.add_argument("--seed", type=int, metavar="N")
        s.add_argument("--threads", type=int, metavar="N")
        s.add_argument("--frames", type=int, metavar="T")
        s.add_argument("--ratio-min", type=float)
        s.add_argument("--ratio-max", type=float)
        s.add_argument("--steps", type=int)
    return p


_FLAG_KEYS = {"out": "run.out", "format": "run.format", "seed": "run.seed",
              "threads": "run.threads", "frames": "run.frames",
              "ratio_min": "sweep.ratio_min", "ratio_max": "sweep.ratio_max",
              "steps": "sweep.steps"}


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        overrides = {key.replace(".", "__"): getattr(args, attr)
                     for attr, key in _FLAG_KEYS.items() if getattr(args, attr) is not None}
        if overrides:
            cfg = cfg.replace(**overrides)
        record = COMMANDS[args.command](cfg)
        text = record.render(cfg["run.format"])
        if cfg["run.out"]:
            Path(cfg["run.out"]).write_text(text)
        else:
            sys.stdout.write(text)
    except (ConfigurationError, UsageError, DomainError) as exc:
        print(f"hdsecrecy: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ContractViolation, AssertionError) as exc:
        print(f"hdsecrecy: contract violation: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
