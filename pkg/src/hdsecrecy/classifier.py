"""Eve's memoryless power classifiers and misclassification profiles.

Every classifier is reduced to a :class:`DecisionTable`, a piecewise-constant
map from observed linear power to an outcome code.  The analytic profiles
integrate the received-power laws over the table's intervals with the
pair-mass kernel; the Monte Carlo path looks symbols up in the same table,
so both routes agree on boundary semantics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np
from scipy.optimize import brentq

from . import kernels
from .model import (
    COHERENT,
    ChannelConfig,
    ConfigurationError,
    ContractViolation,
    GeometryConfig,
    PowerDistribution,
    db_to_lin,
    distances,
    lin_to_db,
)


class ClassOutcome(IntEnum):
    SILENCE = 0
    A = 1
    B = 2
    AORB = 3
    ERASE = 4


_SWAP = {ClassOutcome.A: ClassOutcome.B, ClassOutcome.B: ClassOutcome.A}


@dataclass(frozen=True)
class DecisionTable:
    """Outcome per open interval between sorted ``edges`` and per edge point."""

    edges: tuple[float, ...]
    open_codes: tuple[int, ...]
    point_codes: tuple[int, ...]

    def __post_init__(self):
        if len(self.open_codes) != len(self.edges) + 1 or \
                len(self.point_codes) != len(self.edges):
            raise ConfigurationError("malformed decision table")

    @classmethod
    def from_rule(cls, rule, edges: Iterable[float]) -> "DecisionTable":
        e = sorted({float(x) for x in edges if 0.0 < x < math.inf})
        if not e:
            return cls((), (int(rule(1.0)),), ())
        reps = [e[0] / 2.0]
        reps += [0.5 * (lo + hi) for lo, hi in zip(e[:-1], e[1:])]
        reps.append(2.0 * e[-1])
        return cls(tuple(e), tuple(int(rule(r)) for r in reps),
                   tuple(int(rule(x)) for x in e))

    def lookup(self, p: float) -> ClassOutcome:
        if p <= 0.0:
            return ClassOutcome.SILENCE
        j = int(np.searchsorted(self.edges, p, side="left"))
        if j < len(self.edges) and self.edges[j] == p:
            return ClassOutcome(self.point_codes[j])
        return ClassOutcome(self.open_codes[j])

    def intervals(self) -> list[tuple[float, float, int]]:
        bounds = (0.0,) + self.edges + (math.inf,)
        return [(bounds[j], bounds[j + 1], self.open_codes[j])
                for j in range(len(self.open_codes))]

    def arrays(self):
        return (np.asarray(self.edges, dtype=np.float64),
                np.asarray(self.open_codes, dtype=np.int8),
                np.asarray(self.point_codes, dtype=np.int8))

    def swapped(self) -> "DecisionTable":
        sw = lambda c: int(_SWAP.get(ClassOutcome(c), ClassOutcome(c)))  # noqa: E731
        return DecisionTable(self.edges, tuple(sw(c) for c in self.open_codes),
                             tuple(sw(c) for c in self.point_codes))


def _threshold_rule(p, t1, t2, amin, amax, bmin, bmax):
    if p < t1 or p > t2:
        return ClassOutcome.ERASE
    # closed at the A-support ends: a power only Alice can produce is hers
    if amin <= p <= amax and p < bmin:
        return ClassOutcome.A
    if p > amax:
        return ClassOutcome.B
    return ClassOutcome.AORB


@dataclass(frozen=True)
class ThresholdClassifier:
    """Erasure window plus the support-based attribution rule.

    The rule is written for Bob being the nearer node.  ``mirrored`` marks
    the opposite orientation; roles are swapped before and after applying it.
    All fields are in dB; ``lin`` optionally carries the exact linear values
    ``(t1, t2, a_min, a_max, b_min, b_max)`` they were derived from.
    """

    t1_db: float
    t2_db: float
    a_min: float
    a_max: float
    b_min: float
    b_max: float
    mirrored: bool = False
    lin: tuple[float, ...] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.t1_db <= self.t2_db:
            raise ConfigurationError("t1_db must not exceed t2_db")
        if not (self.a_min <= self.a_max and self.b_min <= self.b_max):
            raise ConfigurationError("support endpoints out of order")
        if self.lin is None:
            object.__setattr__(self, "lin", tuple(
                db_to_lin(v) for v in (self.t1_db, self.t2_db, self.a_min,
                                       self.a_max, self.b_min, self.b_max)))

    @classmethod
    def from_geometry(cls, geom: GeometryConfig, dist: PowerDistribution,
                      window: "Window | None" = None,
                      dist_b: PowerDistribution | None = None) -> "ThresholdClassifier":
        dist_b = dist if dist_b is None else dist_b
        d_ae, d_be = distances(geom)
        pa, pb = d_ae ** geom.alpha, d_be ** geom.alpha
        a_lo, a_hi = dist.support[0] / pa, dist.support[1] / pa
        b_lo, b_hi = dist_b.support[0] / pb, dist_b.support[1] / pb
        window = NO_ERASURE if window is None else window
        t1, t2 = window.resolve(min(a_lo, b_lo), max(a_hi, b_hi))
        lin = (t1, t2, a_lo, a_hi, b_lo, b_hi)
        return cls(*(lin_to_db(v) if v < math.inf else math.inf for v in lin),
                   mirrored=d_ae < d_be, lin=lin)

    def rule_lin(self, p: float) -> ClassOutcome:
        t1, t2, amin, amax, bmin, bmax = self.lin
        if not self.mirrored:
            return _threshold_rule(p, t1, t2, amin, amax, bmin, bmax)
        out = _threshold_rule(p, t1, t2, bmin, bmax, amin, amax)
        return _SWAP.get(out, out)

    def table(self) -> DecisionTable:
        t1, t2, amin, amax, bmin, bmax = self.lin
        edges = [t1, t2, amin, amax, bmin, bmax, min(amax, bmin), min(bmax, amin)]
        return DecisionTable.from_rule(self.rule_lin, edges)

    def describe(self) -> str:
        return f"threshold[{self.t1_db:.6g},{self.t2_db:.6g}]"


def classify_threshold(r_db: float, c: ThresholdClassifier) -> ClassOutcome:
    if r_db == -math.inf:
        return ClassOutcome.SILENCE
    if not c.mirrored:
        return _threshold_rule(r_db, c.t1_db, c.t2_db, c.a_min, c.a_max, c.b_min, c.b_max)
    out = _threshold_rule(r_db, c.t1_db, c.t2_db, c.b_min, c.b_max, c.a_min, c.a_max)
    return _SWAP.get(out, out)


@dataclass(frozen=True)
class Window:
    """Erasure window; ``relative`` offsets are dB from the solo-support hull."""

    lo_db: float = -math.inf
    hi_db: float = math.inf
    relative: bool = True

    def __post_init__(self):
        if not self.lo_db <= self.hi_db and not self.relative:
            raise ConfigurationError("window lower bound exceeds upper bound")

    def resolve(self, hull_lo: float, hull_hi: float) -> tuple[float, float]:
        """Linear thresholds ``(t1, t2)``; ``t1 > t2`` is clamped to empty-ish."""
        if self.relative:
            t1 = 0.0 if self.lo_db == -math.inf else hull_lo * 10.0 ** (self.lo_db / 10.0)
            t2 = math.inf if self.hi_db == math.inf else hull_hi * 10.0 ** (self.hi_db / 10.0)
        else:
            t1, t2 = db_to_lin(self.lo_db), db_to_lin(self.hi_db)
        if t1 > t2:
            t1 = t2
        return t1, t2

    @property
    def is_open(self) -> bool:
        return self.lo_db == -math.inf and self.hi_db == math.inf

    def describe(self) -> str:
        if self.is_open:
            return "no-erasure"
        tag = "rel" if self.relative else "abs"
        return f"window-{tag}[{self.lo_db:g},{self.hi_db:g}]"


NO_ERASURE = Window()


@dataclass(frozen=True)
class MlClassifier:
    """Per-level Gaussian observation models (dB) for each source."""

    a_models: tuple[tuple[float, float], ...]
    b_models: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.a_models or not self.b_models:
            raise ConfigurationError("ML classifier needs at least one level per source")
        for mean, var in self.a_models + self.b_models:
            if not (var > 0 and math.isfinite(mean)):
                raise ConfigurationError("ML model variances must be positive")

    @classmethod
    def from_levels(cls, geom: GeometryConfig, dist: PowerDistribution,
                    sigma_db: float, dist_b: PowerDistribution | None = None) -> "MlClassifier":
        """Models centred on each level's received power at Eve."""
        dist_b = dist if dist_b is None else dist_b
        d_ae, d_be = distances(geom)
        lv_a = dist.levels if dist.levels else dist.support
        lv_b = dist_b.levels if dist_b.levels else dist_b.support
        var = sigma_db ** 2
        return cls(tuple((lin_to_db(v / d_ae ** geom.alpha), var) for v in lv_a),
                   tuple((lin_to_db(v / d_be ** geom.alpha), var) for v in lv_b))

    @staticmethod
    def _max_logpdf(y, models):
        return max(-0.5 * (y - m) ** 2 / v - 0.5 * math.log(2 * math.pi * v)
                   for m, v in models)

    def log_ratio(self, y_db: float) -> float:
        return self._max_logpdf(y_db, self.a_models) - self._max_logpdf(y_db, self.b_models)

    def table(self, lo_db: float | None = None, hi_db: float | None = None,
              points: int = 4001) -> DecisionTable:
        means = [m for m, _ in self.a_models + self.b_models]
        spread = 12.0 * math.sqrt(max(v for _, v in self.a_models + self.b_models))
        lo = min(means) - spread if lo_db is None else lo_db
        hi = max(means) + spread if hi_db is None else hi_db
        grid = np.linspace(lo, hi, points)
        vals = np.array([self.log_ratio(y) for y in grid])
        roots = []
        for j in range(points - 1):
            if vals[j] == 0.0:
                roots.append(grid[j])
            elif vals[j] * vals[j + 1] < 0.0:
                roots.append(brentq(self.log_ratio, grid[j], grid[j + 1], xtol=1e-13))
        if vals[-1] == 0.0:
            roots.append(grid[-1])

        def rule(p):
            lr = self.log_ratio(lin_to_db(p))
            if lr > 0:
                return ClassOutcome.A
            if lr < 0:
                return ClassOutcome.B
            return ClassOutcome.AORB

        table = DecisionTable.from_rule(rule, [db_to_lin(r) for r in roots])
        # root points are exact ties by construction
        return DecisionTable(table.edges, table.open_codes,
                             tuple(int(ClassOutcome.AORB) for _ in table.edges))

    def describe(self) -> str:
        return f"ml[{len(self.a_models)}x{len(self.b_models)}]"


def classify_ml(y_db: float, m: MlClassifier) -> ClassOutcome:
    lr = m.log_ratio(y_db)
    if lr > 0:
        return ClassOutcome.A
    if lr < 0:
        return ClassOutcome.B
    return ClassOutcome.AORB


def load_ml_table(path: str | Path) -> MlClassifier:
    """Read ``source level mean_db variance`` rows; ``#`` starts a comment."""
    rows: dict[str, list[tuple[int, float, float]]] = {"A": [], "B": []}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 4 or parts[0].upper() not in rows:
            raise ConfigurationError(f"{path}:{lineno}: expected 'A|B level mean_db var'")
        try:
            rows[parts[0].upper()].append((int(parts[1]), float(parts[2]), float(parts[3])))
        except ValueError as exc:
            raise ConfigurationError(f"{path}:{lineno}: {exc}") from None
    return MlClassifier(tuple((m, v) for _, m, v in sorted(rows["A"])),
                        tuple((m, v) for _, m, v in sorted(rows["B"])))


@dataclass(frozen=True)
class BlindClassifier:
    """Attributes every non-silent symbol to a fair coin."""

    def table(self) -> DecisionTable:
        return DecisionTable((), (int(ClassOutcome.AORB),), ())

    def describe(self) -> str:
        return "blind"


@dataclass(frozen=True)
class PerfectClassifier:
    """Reference adversary that knows the true event (erases concurrent symbols)."""

    def describe(self) -> str:
        return "perfect"


Classifier = Union[ThresholdClassifier, MlClassifier, BlindClassifier, PerfectClassifier]


def capture_decode(s_a: int, s_b: int, p_a_rx: float, p_b_rx: float,
                   rng: np.random.Generator | None = None) -> int:
    """Symbol recovered from a collision: the stronger arrival wins."""
    if p_a_rx > p_b_rx:
        return s_a
    if p_b_rx > p_a_rx:
        return s_b
    if rng is None:
        rng = np.random.default_rng()
    return s_b if rng.random() < 0.5 else s_a


ROW_NAMES = ("ab", "a", "b")
COL_NAMES = ("as_a", "as_b", "erased")


@dataclass(frozen=True)
class MisclassProfile:
    """Classification probabilities per true event.

    Rows ``ab``, ``a``, ``b`` are the events (A,B), (A,B^c), (A^c,B); each is
    ``(as A, as B, erased)``.  ``pe_ab_to_a`` is the decode-error probability
    of a concurrent symbol attributed to Alice, ``pe_ab_to_b`` likewise.
    Empirical profiles carry ``stderr`` and ``counts`` keyed like
    :meth:`entries`; undefined estimates are NaN.
    """

    ab: tuple[float, float, float]
    a: tuple[float, float, float]
    b: tuple[float, float, float]
    pe_ab_to_a: float
    pe_ab_to_b: float
    stderr: dict | None = field(default=None, compare=False)
    counts: dict | None = field(default=None, compare=False)

    def __post_init__(self):
        for name in ROW_NAMES:
            row = getattr(self, name)
            if any(math.isnan(x) for x in row):
                continue
            if any(x < -1e-12 or x > 1 + 1e-12 for x in row):
                raise ContractViolation(f"profile row {name} out of [0,1]: {row}")
            if abs(sum(row) - 1.0) > 1e-9:
                raise ContractViolation(f"profile row {name} sums to {sum(row)}")
        for pe in (self.pe_ab_to_a, self.pe_ab_to_b):
            if not math.isnan(pe) and not (-1e-12 <= pe <= 0.5 + 1e-9):
                raise ContractViolation(f"conditional error {pe} outside [0, 0.5]")

    def entries(self) -> dict[str, float]:
        out = {}
        for name in ROW_NAMES:
            for col, val in zip(COL_NAMES, getattr(self, name)):
                out[f"{name}_{col}"] = val
        out["pe_ab_to_a"] = self.pe_ab_to_a
        out["pe_ab_to_b"] = self.pe_ab_to_b
        return out

    def transposed(self) -> "MisclassProfile":
        """Profile with the roles of Alice and Bob exchanged."""
        sw = lambda r: (r[1], r[0], r[2])  # noqa: E731
        return MisclassProfile(sw(self.ab), sw(self.b), sw(self.a),
                               self.pe_ab_to_b, self.pe_ab_to_a)


IDENTITY_PROFILE = MisclassProfile((0.0, 0.0, 1.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0), 0.0, 0.0)


@dataclass(frozen=True)
class TdmDetectionProfile:
    p_m: float
    p_f: float
    p_e_given_m: float
    stderr: dict | None = field(default=None, compare=False)
    counts: dict | None = field(default=None, compare=False)

    def __post_init__(self):
        for v in (self.p_m, self.p_f, self.p_e_given_m):
            if not math.isnan(v) and not (-1e-12 <= v <= 1 + 1e-12):
                raise ContractViolation(f"detection probability {v} outside [0,1]")
        if not math.isnan(self.p_e_given_m) and self.p_e_given_m > 0.5 + 1e-9:
            raise ContractViolation("p_e_given_m exceeds 0.5")

    def entries(self) -> dict[str, float]:
        return {"p_m": self.p_m, "p_f": self.p_f, "p_e_given_m": self.p_e_given_m}


# --- analytic integration -------------------------------------------------

def _rx_components(dist: PowerDistribution, d: float, alpha: float):
    dpow = d ** alpha
    return [(w, lo / dpow, hi / dpow) for w, lo, hi in dist.components()]


def _code_weights(code: int) -> tuple[float, float, float]:
    if code == ClassOutcome.A:
        return 1.0, 0.0, 0.0
    if code == ClassOutcome.B:
        return 0.0, 1.0, 0.0
    if code == ClassOutcome.AORB:
        return 0.5, 0.5, 0.0
    return 0.0, 0.0, 1.0


def _solo_row(comps, table: DecisionTable) -> np.ndarray:
    row = np.zeros(3)
    ivs = table.intervals()
    for w, lo, hi in comps:
        if hi <= lo:
            row += w * np.array(_code_weights(table.lookup(lo)))
            continue
        for e0, e1, code in ivs:
            overlap = min(hi, e1) - max(lo, e0)
            if overlap > 0:
                row += w * (overlap / (hi - lo)) * np.array(_code_weights(code))
    return row


class _TaskBatch:
    """Collects pair-mass integrals and scatters their results."""

    def __init__(self):
        self.cols = [[] for _ in range(7)]
        self.target = []
        self.weight = []

    def add(self, x, y, lo, hi, order, target, weight):
        for col, v in zip(self.cols, (x[0], x[1], y[0], y[1], lo, hi, order)):
            col.append(v)
        self.target.append(target)
        self.weight.append(weight)

    def run(self, size: int) -> np.ndarray:
        out = np.zeros(size)
        if not self.target:
            return out
        arrs = [np.asarray(c, dtype=np.float64) for c in self.cols[:6]]
        order = np.asarray(self.cols[6], dtype=np.int8)
        mass = kernels.get().pair_mass(*arrs, order)
        np.add.at(out, np.asarray(self.target), mass * np.asarray(self.weight))
        return out


# concurrent accumulator slots: as_a, as_b, erased, err_a, err_b
_NSLOT = 5


def _concurrent_tasks(batch: _TaskBatch, base: int, comps_a, comps_b,
                      table: DecisionTable, direct: np.ndarray):
    ivs = table.intervals()
    for wa, alo, ahi in comps_a:
        for wb, blo, bhi in comps_b:
            w = wa * wb
            if ahi <= alo and bhi <= blo:
                s = alo + blo
                ca, cb, ce = _code_weights(table.lookup(s))
                b_wins = 1.0 if blo > alo else (0.5 if blo == alo else 0.0)
                direct[base:base + 5] += w * np.array(
                    [ca, cb, ce, 0.5 * ca * b_wins, 0.5 * cb * (1.0 - b_wins)])
                continue
            for e0, e1, code in ivs:
                if e1 <= alo + blo or e0 >= ahi + bhi:
                    continue
                ca, cb, ce = _code_weights(code)
                x, y = (alo, ahi), (blo, bhi)
                if ca:
                    batch.add(x, y, e0, e1, 0, base + 0, w * ca)
                    batch.add(x, y, e0, e1, 1, base + 3, 0.5 * w * ca)
                if cb:
                    batch.add(x, y, e0, e1, 0, base + 1, w * cb)
                    batch.add(x, y, e0, e1, -1, base + 4, 0.5 * w * cb)
                if ce:
                    batch.add(x, y, e0, e1, 0, base + 2, w * ce)


def _safe_div(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def _finish_profile(solo_a, solo_b, conc) -> MisclassProfile:
    ab = conc[:3]
    s = ab.sum()
    if s > 0:
        ab = ab / s
    pe_a = min(_safe_div(conc[3], conc[0]), 0.5)
    pe_b = min(_safe_div(conc[4], conc[1]), 0.5)
    norm = lambda r: tuple(float(x) for x in r / r.sum())  # noqa: E731
    return MisclassProfile(norm(ab), norm(solo_a), norm(solo_b), float(pe_a), float(pe_b))


def classifier_table(cls: Classifier, obs_lo: float = 0.0, obs_hi: float = math.inf) -> DecisionTable:
    if isinstance(cls, MlClassifier):
        lo = None if obs_lo <= 0 else lin_to_db(obs_lo) - 1.0
        hi = None if obs_hi == math.inf else lin_to_db(obs_hi) + 1.0
        return cls.table(lo, hi)
    return cls.table()


def analytic_profiles(problems: Sequence[tuple]) -> list[MisclassProfile]:
    """Batch analytic profiles for ``(geom, dist_a, dist_b, table)`` tuples.

    Superposition is incoherent and Eve noiseless.  A ``None`` table marks
    the perfect classifier.
    """
    batch = _TaskBatch()
    direct = np.zeros(_NSLOT * len(problems))
    solos = []
    for k, (geom, dist_a, dist_b, table) in enumerate(problems):
        if table is None:
            solos.append(None)
            continue
        d_ae, d_be = distances(geom)
        ca = _rx_components(dist_a, d_ae, geom.alpha)
        cb = _rx_components(dist_b, d_be, geom.alpha)
        solos.append((_solo_row(ca, table), _solo_row(cb, table)))
        _concurrent_tasks(batch, _NSLOT * k, ca, cb, table, direct)
    conc = batch.run(_NSLOT * len(problems)) + direct
    out = []
    for k, solo in enumerate(solos):
        if solo is None:
            out.append(IDENTITY_PROFILE)
        else:
            out.append(_finish_profile(solo[0], solo[1], conc[_NSLOT * k:_NSLOT * (k + 1)]))
    return out


def _observation_hull(geom, dist_a, dist_b) -> tuple[float, float]:
    d_ae, d_be = distances(geom)
    pa, pb = d_ae ** geom.alpha, d_be ** geom.alpha
    lo = min(dist_a.support[0] / pa, dist_b.support[0] / pb)
    hi = dist_a.support[1] / pa + dist_b.support[1] / pb
    return lo, hi


def misclass_profile(geom: GeometryConfig, dist: PowerDistribution, cls: Classifier,
                     channel: ChannelConfig | None = None, method: str = "analytic",
                     n: int = 1_000_000, seed: int = 0,
                     dist_b: PowerDistribution | None = None) -> MisclassProfile:
    """Misclassification profile of ``cls`` for the two-way scheme.

    ``method`` is ``"analytic"`` or ``"montecarlo"``.  The analytic route
    needs incoherent superposition and a noiseless Eve; otherwise it falls
    back to Monte Carlo with ``n`` draws per event.
    """
    channel = ChannelConfig() if channel is None else channel
    dist_b = dist if dist_b is None else dist_b
    if method not in ("analytic", "montecarlo"):
        raise ConfigurationError(f"unknown method {method!r}")
    if isinstance(cls, PerfectClassifier) and method == "analytic":
        return IDENTITY_PROFILE
    lo, hi = _observation_hull(geom, dist, dist_b)
    table = None if isinstance(cls, PerfectClassifier) else classifier_table(cls, lo, hi)
    analytic_ok = channel.superposition_mode != COHERENT and channel.eve_noiseless
    if method == "analytic" and analytic_ok:
        return analytic_profiles([(geom, dist, dist_b, table)])[0]
    from .montecarlo import conditional_event_tally
    counts, amb, err = conditional_event_tally(geom, dist, dist_b, table, channel, n, seed)
    return profile_from_counts(counts, err)


def _ratio(num, den):
    return float(num / den) if den > 0 else math.nan


def _se(p, n):
    return math.sqrt(p * (1 - p) / n) if n > 0 and not math.isnan(p) else math.nan


def profile_from_counts(counts: np.ndarray, err: np.ndarray) -> MisclassProfile:
    """Empirical profile from ``counts[event, (silence, A, B, erase)]``."""
    rows, se, ns = {}, {}, {}
    for name, ev in (("a", 1), ("b", 2), ("ab", 3)):
        c = counts[ev]
        n = int(c.sum())
        vals = (_ratio(c[1], n), _ratio(c[2], n), _ratio(c[0] + c[3], n))
        rows[name] = vals
        for col, v in zip(COL_NAMES, vals):
            se[f"{name}_{col}"] = _se(v, n)
            ns[f"{name}_{col}"] = n
    n_a, n_b = int(counts[3, 1]), int(counts[3, 2])
    pe_a, pe_b = _ratio(err[0], n_a), _ratio(err[1], n_b)
    se["pe_ab_to_a"], ns["pe_ab_to_a"] = _se(pe_a, n_a), n_a
    se["pe_ab_to_b"], ns["pe_ab_to_b"] = _se(pe_b, n_b), n_b
    # a conditional decode error above a coin flip is a sampling excursion
    pe_a = min(pe_a, 0.5) if not math.isnan(pe_a) else pe_a
    pe_b = min(pe_b, 0.5) if not math.isnan(pe_b) else pe_b
    return MisclassProfile(rows["ab"], rows["a"], rows["b"], pe_a, pe_b, stderr=se, counts=ns)


# --- TDM detection ----------------------------------------------------------

def tdm_window_table(t1: float, t2: float) -> DecisionTable:
    """Linear window: accepted as data (code A) inside ``[t1, t2]``."""
    def rule(p):
        return ClassOutcome.ERASE if (p < t1 or p > t2) else ClassOutcome.A
    return DecisionTable.from_rule(rule, [t1, t2])


def tdm_window(geom: GeometryConfig, f1: PowerDistribution, window: Window) -> tuple[float, float]:
    """Resolve a window against the data law's support at Eve (linear)."""
    d_ae, _ = distances(geom)
    pa = d_ae ** geom.alpha
    return window.resolve(f1.support[0] / pa, f1.support[1] / pa)


def tdm_analytic(geom: GeometryConfig, f1: PowerDistribution, f2: PowerDistribution,
                 t1: float, t2: float) -> TdmDetectionProfile:
    d_ae, d_be = distances(geom)
    cd = _rx_components(f1, d_ae, geom.alpha)
    cf = _rx_components(f2, d_be, geom.alpha)
    inside = lambda p: t1 <= p <= t2  # noqa: E731
    p_f = 0.0
    for w, lo, hi in cd:
        if hi <= lo:
            p_f += w * (0.0 if inside(lo) else 1.0)
        else:
            p_f += w * (1.0 - max(0.0, min(hi, t2) - max(lo, t1)) / (hi - lo))
    batch = _TaskBatch()
    direct = np.zeros(2)
    for wd, dlo, dhi in cd:
        for wf, flo, fhi in cf:
            w = wd * wf
            if dhi <= dlo and fhi <= flo:
                if inside(dlo + flo):
                    f_wins = 1.0 if flo > dlo else (0.5 if flo == dlo else 0.0)
                    direct += w * np.array([1.0, f_wins])
                continue
            batch.add((dlo, dhi), (flo, fhi), t1, t2, 0, 0, w)
            batch.add((dlo, dhi), (flo, fhi), t1, t2, 1, 1, w)
    mass = batch.run(2) + direct
    p_m = float(mass[0])
    p_e = min(0.5 * _safe_div(mass[1], mass[0]), 0.5)
    return TdmDetectionProfile(min(max(p_m, 0.0), 1.0), min(max(p_f, 0.0), 1.0), p_e)


def tdm_detection_profile(geom: GeometryConfig, f1: PowerDistribution, f2: PowerDistribution,
                          t1_db: float = -math.inf, t2_db: float = math.inf,
                          channel: ChannelConfig | None = None, method: str = "analytic",
                          n: int = 1_000_000, seed: int = 0) -> TdmDetectionProfile:
    """Jamming-detection probabilities for Alice's data under Bob's feedback.

    Eve erases any symbol whose power falls outside ``[t1_db, t2_db]``; the
    rest go to a capture decoder.
    """
    channel = ChannelConfig() if channel is None else channel
    if method not in ("analytic", "montecarlo"):
        raise ConfigurationError(f"unknown method {method!r}")
    t1, t2 = db_to_lin(t1_db), db_to_lin(t2_db)
    if not t1 <= t2:
        raise ConfigurationError("t1_db must not exceed t2_db")
    analytic_ok = channel.superposition_mode != COHERENT and channel.eve_noiseless
    if method == "analytic" and analytic_ok:
        return tdm_analytic(geom, f1, f2, t1, t2)
    from .montecarlo import conditional_event_tally
    counts, _, err = conditional_event_tally(geom, f1, f2, tdm_window_table(t1, t2),
                                             channel, n, seed, events=(1, 3))
    return tdm_profile_from_counts(counts, err)


PERFECT_TDM = TdmDetectionProfile(0.0, 0.0, 0.0)


def tdm_profile_from_counts(counts: np.ndarray, err: np.ndarray) -> TdmDetectionProfile:
    """Counts layout as in :func:`profile_from_counts`; event 1 clean, 3 jammed."""
    n_clean = int(counts[1].sum())
    n_jam = int(counts[3].sum())
    n_miss = int(counts[3, 1])
    p_f = _ratio(counts[1, 0] + counts[1, 3], n_clean)
    p_m = _ratio(n_miss, n_jam)
    p_e = _ratio(err[0], n_miss)
    se = {"p_f": _se(p_f, n_clean), "p_m": _se(p_m, n_jam), "p_e_given_m": _se(p_e, n_miss)}
    ns = {"p_f": n_clean, "p_m": n_jam, "p_e_given_m": n_miss}
    if not math.isnan(p_e):
        p_e = min(p_e, 0.5)
    return TdmDetectionProfile(p_m, p_f, p_e, stderr=se, counts=ns)
