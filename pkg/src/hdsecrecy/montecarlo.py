"""Symbol-level frame simulator used as the empirical oracle.

Random streams: every shard of ``SHARD_SIZE`` intervals owns independent
substreams for scheduling, power draws, data symbols, tie-breaks and the
two noise sources, derived from ``(seed, shard, stream)``.  Results do not
depend on the number of worker threads, and swapping the classifier leaves
the generated traffic untouched.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from ._kernels_py import classify_frame
from .classifier import (
    Classifier,
    DecisionTable,
    MisclassProfile,
    PerfectClassifier,
    TdmDetectionProfile,
    ThresholdClassifier,
    Window,
    classifier_table,
    profile_from_counts,
    tdm_profile_from_counts,
    tdm_window,
    tdm_window_table,
)
from .model import (
    COHERENT,
    ChannelConfig,
    ConfigurationError,
    GeometryConfig,
    PowerDistribution,
    distances,
    lin_to_db,
)
from .rates import FEC_IDEAL, RateBreakdownTdm, RateBreakdownTwoWay, tdm_bounds, twoway_bounds

SHARD_SIZE = 1 << 16

STREAM_SCHEDULE, STREAM_POWER, STREAM_SYMBOLS, STREAM_TIES, STREAM_LEGIT, STREAM_EVE = range(6)


class UsageError(ValueError):
    pass


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


@dataclass(frozen=True)
class SimConfig:
    scheme: str
    geometry: GeometryConfig
    power: PowerDistribution
    frames: int = 1_000_000
    seed: int = 0
    p_t: float | None = None
    beta: float | None = None
    feedback_power: PowerDistribution | None = None
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    classifier: Classifier | Window = field(default_factory=Window)
    fec_mode: str = FEC_IDEAL
    fec_threshold: float = 0.0
    threads: int = 1

    def __post_init__(self):
        if self.scheme not in ("tdm", "twoway"):
            raise ConfigurationError(f"scheme must be tdm or twoway, got {self.scheme!r}")
        if self.frames < 1:
            raise ConfigurationError("frames must be >= 1")
        prob = self.p_t if self.scheme == "twoway" else self.beta
        if prob is None or not 0.0 <= prob <= 1.0:
            raise ConfigurationError(
                f"{'p_t' if self.scheme == 'twoway' else 'beta'} must be in [0, 1]")
        if self.scheme == "tdm" and not isinstance(self.classifier, (Window, PerfectClassifier)):
            raise ConfigurationError("tdm detector must be a window or the perfect detector")

    @property
    def law_b(self) -> PowerDistribution:
        if self.scheme == "tdm" and self.feedback_power is not None:
            return self.feedback_power
        return self.power

    def table(self) -> DecisionTable | None:
        """Eve's decision table, or ``None`` for the event-aware adversary."""
        cls = self.classifier
        if isinstance(cls, PerfectClassifier):
            return None
        if self.scheme == "tdm":
            return tdm_window_table(*tdm_window(self.geometry, self.power, cls))
        if isinstance(cls, Window):
            cls = ThresholdClassifier.from_geometry(self.geometry, self.power, cls)
        d_ae, d_be = distances(self.geometry)
        lo = min(self.power.support[0] / d_ae ** self.geometry.alpha,
                 self.power.support[0] / d_be ** self.geometry.alpha)
        hi = self.power.support[1] * (d_ae ** -self.geometry.alpha + d_be ** -self.geometry.alpha)
        return classifier_table(cls, lo, hi)


@dataclass
class EmpiricalProfile:
    """Tallies from a simulated frame plus derived frequency estimates.

    ``counts[event, outcome]`` uses events (idle, A only, B only, both) and
    outcomes (silence, A, B, erased); ambiguous attributions are resolved by
    a fair coin before tallying and also counted in ``ambiguous``.
    """

    scheme: str
    frames: int
    seed: int
    counts: np.ndarray
    ambiguous: np.ndarray
    decode_errors: np.ndarray
    legit_decodable: int
    legit_errors: int
    profile: MisclassProfile | TdmDetectionProfile
    flags: list[str]

    def __post_init__(self):
        if int(self.counts.sum()) != self.frames:
            raise AssertionError("tallies do not account for every interval")

    @property
    def event_counts(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def low_confidence(self) -> bool:
        return bool(self.flags)

    def event_frequencies(self) -> dict:
        n = self.frames
        out = {}
        for name, c in zip(("idle", "a_only", "b_only", "both"), self.event_counts):
            p = c / n
            out[name] = {"p": float(p), "se": math.sqrt(p * (1 - p) / n)}
        return out

    def as_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "frames": self.frames,
            "seed": self.seed,
            "counts": self.counts.tolist(),
            "ambiguous": self.ambiguous.tolist(),
            "decode_errors": self.decode_errors.tolist(),
            "legit_decodable": self.legit_decodable,
            "legit_errors": self.legit_errors,
            "event_frequencies": self.event_frequencies(),
            "estimates": self.profile.entries(),
            "stderr": dict(self.profile.stderr or {}),
            "conditioning_counts": dict(self.profile.counts or {}),
            "flags": list(self.flags),
        }


def _shard_sizes(frames: int) -> list[int]:
    full, rest = divmod(frames, SHARD_SIZE)
    return [SHARD_SIZE] * full + ([rest] if rest else [])


def _draw_shard(cfg: SimConfig, shard: int, n: int) -> dict:
    geom = cfg.geometry
    d_ae, d_be = distances(geom)
    rs = _rng(cfg.seed, shard, STREAM_SCHEDULE)
    prob = cfg.p_t if cfg.scheme == "twoway" else cfg.beta
    if cfg.scheme == "twoway":
        act_a = (rs.random(n) < prob).astype(np.uint8)
    else:
        act_a = np.ones(n, dtype=np.uint8)
    act_b = (rs.random(n) < prob).astype(np.uint8)
    rp = _rng(cfg.seed, shard, STREAM_POWER)
    rho_a = cfg.power.sample_array(rp, n)
    rho_b = cfg.law_b.sample_array(rp, n)
    sym = _rng(cfg.seed, shard, STREAM_SYMBOLS)
    s_a = (2 * sym.integers(0, 2, n) - 1).astype(np.int8)
    s_b = (2 * sym.integers(0, 2, n) - 1).astype(np.int8)
    rt = _rng(cfg.seed, shard, STREAM_TIES)
    coin_amb = rt.integers(0, 2, n, dtype=np.uint8)
    coin_tie = rt.integers(0, 2, n, dtype=np.uint8)
    if cfg.channel.eve_noiseless:
        nr = ni = np.empty(0)
    else:
        re = _rng(cfg.seed, shard, STREAM_EVE)
        sd = math.sqrt(cfg.channel.eve_noise_variance / 2.0)
        nr = re.normal(0.0, sd, n)
        ni = re.normal(0.0, sd, n)
    return dict(act_a=act_a, act_b=act_b, rho_a=rho_a, rho_b=rho_b,
                pa=rho_a / d_ae ** geom.alpha, pb=rho_b / d_be ** geom.alpha,
                s_a=s_a, s_b=s_b, coin_amb=coin_amb, coin_tie=coin_tie, nr=nr, ni=ni)


def _legit_errors(cfg: SimConfig, shard: int, d: dict) -> tuple[int, int]:
    """Decodable intervals at the legitimate receivers and hard-decision errors."""
    if cfg.scheme == "twoway":
        mask = d["act_a"] != d["act_b"]
        rho = np.where(d["act_a"] == 1, d["rho_a"], d["rho_b"])
        sym = np.where(d["act_a"] == 1, d["s_a"], d["s_b"])
    else:
        mask = d["act_b"] == 0
        rho, sym = d["rho_a"], d["s_a"]
    n_dec = int(np.count_nonzero(mask))
    if cfg.fec_mode == FEC_IDEAL:
        snr = rho / cfg.geometry.d_ab ** cfg.geometry.alpha
        if np.all(snr[mask] >= cfg.fec_threshold):
            return n_dec, 0
    rl = _rng(cfg.seed, shard, STREAM_LEGIT)
    noise = rl.normal(0.0, math.sqrt(cfg.channel.legit_noise_variance), len(rho))
    y = np.sqrt(rho / cfg.geometry.d_ab ** cfg.geometry.alpha) * sym + noise
    wrong = (y > 0) != (sym > 0)
    if cfg.fec_mode == FEC_IDEAL:
        wrong &= (rho / cfg.geometry.d_ab ** cfg.geometry.alpha) < cfg.fec_threshold
    return n_dec, int(np.count_nonzero(wrong & mask))


def _kernel_args(cfg: SimConfig, d: dict, table: DecisionTable | None):
    if table is None:
        edges = np.empty(0)
        oc = np.zeros(1, dtype=np.int8)
        pc = np.empty(0, dtype=np.int8)
    else:
        edges, oc, pc = table.arrays()
    coherent = cfg.channel.superposition_mode == COHERENT
    cos_phase = math.cos(cfg.channel.phase_diff(cfg.geometry)) if coherent else 0.0
    return (d["act_a"], d["act_b"], d["pa"], d["pb"], d["s_a"], d["s_b"],
            d["coin_amb"], d["coin_tie"], d["nr"], d["ni"], coherent, cos_phase,
            cfg.channel.silence_floor, edges, oc, pc, table is None)


def _run_shard(cfg: SimConfig, table, shard: int, n: int):
    d = _draw_shard(cfg, shard, n)
    counts, amb, err = kernels.get().tally_frame(*_kernel_args(cfg, d, table))
    n_dec, n_err = _legit_errors(cfg, shard, d)
    return counts, amb, err, n_dec, n_err


def _tally(cfg: SimConfig):
    table = cfg.table()
    sizes = _shard_sizes(cfg.frames)
    jobs = list(enumerate(sizes))
    if cfg.threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            parts = list(pool.map(lambda job: _run_shard(cfg, table, *job), jobs))
    else:
        parts = [_run_shard(cfg, table, *job) for job in jobs]
    counts = np.zeros((4, 4), dtype=np.int64)
    amb = np.zeros(4, dtype=np.int64)
    err = np.zeros(2, dtype=np.int64)
    n_dec = n_err = 0
    for c, a, e, nd, ne in parts:  # shard order
        counts += c
        amb += a
        err += e
        n_dec += nd
        n_err += ne
    return counts, amb, err, n_dec, n_err


def _flags(prof) -> list[str]:
    out = []
    for key, v in prof.entries().items():
        n = (prof.counts or {}).get(key, 0)
        if math.isnan(v):
            out.append(f"{key}: undefined (no conditioning events)")
        elif n < 30:
            out.append(f"{key}: low confidence (n={n})")
    return out


def simulate_twoway(cfg: SimConfig) -> tuple[EmpiricalProfile, RateBreakdownTwoWay]:
    if cfg.scheme != "twoway":
        raise UsageError("simulate_twoway needs scheme='twoway'")
    counts, amb, err, n_dec, n_err = _tally(cfg)
    prof = profile_from_counts(counts, err)
    emp = EmpiricalProfile("twoway", cfg.frames, cfg.seed, counts, amb, err,
                           n_dec, n_err, prof, _flags(prof))
    rates = twoway_bounds(cfg.p_t, prof, cfg.geometry, cfg.power.support[0],
                          cfg.fec_mode, cfg.fec_threshold)
    return emp, rates


def simulate_tdm(cfg: SimConfig) -> tuple[EmpiricalProfile, RateBreakdownTdm]:
    if cfg.scheme != "tdm":
        raise UsageError("simulate_tdm needs scheme='tdm'")
    counts, amb, err, n_dec, n_err = _tally(cfg)
    prof = tdm_profile_from_counts(counts, err)
    emp = EmpiricalProfile("tdm", cfg.frames, cfg.seed, counts, amb, err,
                           n_dec, n_err, prof, _flags(prof))
    rates = tdm_bounds(cfg.beta, prof, cfg.geometry, cfg.power.support[0],
                       cfg.fec_mode, cfg.fec_threshold)
    return emp, rates


def simulate(cfg: SimConfig):
    return simulate_twoway(cfg) if cfg.scheme == "twoway" else simulate_tdm(cfg)


def conditional_event_tally(geom: GeometryConfig, dist_a: PowerDistribution,
                            dist_b: PowerDistribution, table: DecisionTable | None,
                            channel: ChannelConfig, n: int, seed: int,
                            events: tuple[int, ...] = (1, 2, 3)):
    """Tally ``n`` symbols per forced activity event (1: A, 2: B, 3: both)."""
    cfg = SimConfig("twoway", geom, dist_a, frames=n, seed=seed, p_t=0.5,
                    channel=channel, classifier=PerfectClassifier())
    counts = np.zeros((4, 4), dtype=np.int64)
    amb = np.zeros(4, dtype=np.int64)
    err = np.zeros(2, dtype=np.int64)
    for ev in events:
        for shard, size in enumerate(_shard_sizes(n)):
            d = _draw_shard(cfg, 1_000_000 * ev + shard, size)
            if dist_b is not dist_a:
                rp = _rng(seed, 1_000_000 * ev + shard, STREAM_POWER, 1)
                d["rho_b"] = dist_b.sample_array(rp, size)
                d["pb"] = d["rho_b"] / distances(geom)[1] ** geom.alpha
            d["act_a"] = np.full(size, ev & 1, dtype=np.uint8)
            d["act_b"] = np.full(size, ev >> 1, dtype=np.uint8)
            c, a, e = kernels.get().tally_frame(*_kernel_args(cfg, d, table))
            counts += c
            amb += a
            err += e
    return counts, amb, err


@dataclass(frozen=True)
class ComparisonReport:
    z: dict
    threshold: float
    skipped: tuple[str, ...]

    @property
    def max_abs_z(self) -> float:
        return max((abs(v) for v in self.z.values()), default=0.0)

    @property
    def fraction_within(self) -> float:
        if not self.z:
            return 1.0
        return sum(abs(v) <= self.threshold for v in self.z.values()) / len(self.z)

    @property
    def passed(self) -> bool:
        return all(abs(v) <= self.threshold for v in self.z.values())

    def as_dict(self) -> dict:
        return {"z": dict(self.z), "threshold": self.threshold, "passed": self.passed,
                "max_abs_z": self.max_abs_z, "fraction_within": self.fraction_within,
                "skipped": list(self.skipped)}


def compare_profiles(analytic, empirical, threshold: float = 3.0) -> ComparisonReport:
    """Per-entry z-scores of an empirical profile against an analytic one.

    The binomial standard error uses the larger of the analytic and the
    empirical variance, so exact 0/1 analytic entries do not blow up.
    """
    emp = empirical.profile if isinstance(empirical, EmpiricalProfile) else empirical
    if type(analytic) is not type(emp):
        raise UsageError(
            f"cannot compare {type(analytic).__name__} with {type(emp).__name__}")
    ref = analytic.entries()
    est = emp.entries()
    ns = emp.counts or {}
    z, skipped = {}, []
    for key, p in ref.items():
        q = est[key]
        n = ns.get(key, 0)
        if n == 0 or math.isnan(q) or math.isnan(p):
            skipped.append(key)
            continue
        var = max(p * (1 - p), q * (1 - q)) / n
        if var <= 0:
            z[key] = 0.0 if abs(p - q) <= 1e-12 else math.copysign(math.inf, q - p)
        else:
            z[key] = (q - p) / math.sqrt(var)
    return ComparisonReport(z, threshold, tuple(skipped))


_OUTCOME_NAMES = {0: "silence", 1: "A", 2: "B", 4: "erase"}


def write_trace(cfg: SimConfig, path: str | Path, limit: int | None = None) -> int:
    """Dump one CSV record per interval; returns the number of rows written."""
    table = cfg.table()
    frames = cfg.frames if limit is None else min(limit, cfg.frames)
    written = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "a_active", "b_active", "p_a_db", "p_b_db", "obs_db",
                    "outcome", "decode_correct"])
        for shard, size in enumerate(_shard_sizes(cfg.frames)):
            if written >= frames:
                break
            d = _draw_shard(cfg, shard, size)
            args = _kernel_args(cfg, d, table)
            ev, obs, code, _, err = classify_frame(*args)
            for i in range(min(size, frames - written)):
                e = int(ev[i])
                c = int(code[i])
                if c in (1, 2) and e in (1, 2):
                    ok = "1" if c == e else "0"
                elif c in (1, 2) and e == 3:
                    ok = "0" if err[i] else "1"
                else:
                    ok = ""
                w.writerow([written, int(d["act_a"][i]), int(d["act_b"][i]),
                            repr(lin_to_db(float(d["pa"][i]))) if d["act_a"][i] else "",
                            repr(lin_to_db(float(d["pb"][i]))) if d["act_b"][i] else "",
                            repr(lin_to_db(float(obs[i]))),
                            _OUTCOME_NAMES[c], ok])
                written += 1
    return written
