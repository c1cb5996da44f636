"""Max-min search: Eve minimizes over position and classifier, the
legitimate pair maximizes over scheduling probability and power laws.

Both searches are exhaustive over finite grids.  Ties resolve to the
lexicographically smallest grid index, inner and outer, so results do not
depend on evaluation order or worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence, Union

import numpy as np

from . import kernels
from .classifier import (
    NO_ERASURE,
    BlindClassifier,
    MlClassifier,
    PerfectClassifier,
    ThresholdClassifier,
    Window,
    analytic_profiles,
    classifier_table,
    tdm_analytic,
    tdm_window,
)
from .model import (
    UNIFORM,
    ConfigurationError,
    GeometryConfig,
    PowerDistribution,
    distances,
    lin_to_db,
)
from .rates import FEC_IDEAL, binary_entropy, legit_error_prob, tdm_core, twoway_core

AdversarySpec = Union[Window, BlindClassifier, PerfectClassifier, MlClassifier]

DEFAULT_WINDOW_OFFSETS_DB = (-2.0, -1.0, 0.0, 1.0, 2.0, 3.0)


def default_adversaries() -> tuple[AdversarySpec, ...]:
    """No-erasure classifier plus upper erasure cuts around the support hull."""
    return (NO_ERASURE,) + tuple(Window(-math.inf, off) for off in DEFAULT_WINDOW_OFFSETS_DB)


def uniform_laws(endpoints_db: Sequence[float]) -> tuple[PowerDistribution, ...]:
    """Every uniform-linear law whose endpoints lie on ``endpoints_db``."""
    pts = sorted(endpoints_db)
    return tuple(PowerDistribution.uniform_db(lo, hi)
                 for i, lo in enumerate(pts) for hi in pts[i:])


def describe_law(law: PowerDistribution) -> str:
    if law.kind == UNIFORM:
        return f"uniform[{lin_to_db(law.rho_min):.6g},{lin_to_db(law.rho_max):.6g}]dB"
    return "levels[" + ",".join(f"{lin_to_db(v):.6g}" for v in law.levels) + "]dB"


def describe_adversary(spec: AdversarySpec) -> str:
    return spec.describe()


def theta_grid(points: int = 19) -> tuple[float, ...]:
    return tuple(float(x) for x in np.linspace(0.0, math.pi, points))


@dataclass(frozen=True)
class SearchGrid:
    """Finite search space for one scheme.

    ``params`` holds the beta (tdm) or p_t (two-way) values.  ``laws`` are
    the data/transmit power laws; ``feedback_laws`` the tdm jamming laws.
    """

    scheme: str
    params: tuple[float, ...]
    laws: tuple[PowerDistribution, ...]
    thetas: tuple[float, ...]
    adversaries: tuple[AdversarySpec, ...]
    feedback_laws: tuple[PowerDistribution, ...] = ()
    d_ab: float = 1.0
    r_e: float = 5.0
    alpha: float = 2.0
    fec_mode: str = FEC_IDEAL
    fec_threshold: float = 0.0

    def __post_init__(self):
        if self.scheme not in ("tdm", "twoway"):
            raise ConfigurationError(f"unknown scheme {self.scheme!r}")
        for name in ("params", "laws", "thetas", "adversaries"):
            if not getattr(self, name):
                raise ConfigurationError(f"grid '{name}' is empty")
        if self.scheme == "tdm" and not self.feedback_laws:
            raise ConfigurationError("grid 'feedback_laws' is empty")
        if any(not 0.0 <= p <= 1.0 for p in self.params):
            raise ConfigurationError("grid 'params' values must lie in [0, 1]")
        if self.scheme == "tdm" and any(
                not isinstance(a, (Window, PerfectClassifier)) for a in self.adversaries):
            raise ConfigurationError("tdm adversaries must be windows or the perfect detector")
        GeometryConfig(self.d_ab, self.r_e, 0.0, self.alpha)

    def geometry(self, theta: float) -> GeometryConfig:
        return GeometryConfig(self.d_ab, self.r_e, theta, self.alpha)

    def describe(self) -> dict:
        return {
            "scheme": self.scheme,
            "params": list(self.params),
            "laws": [describe_law(f) for f in self.laws],
            "feedback_laws": [describe_law(f) for f in self.feedback_laws],
            "thetas": list(self.thetas),
            "adversaries": [describe_adversary(a) for a in self.adversaries],
            "d_ab": self.d_ab, "r_e": self.r_e, "alpha": self.alpha,
            "fec_mode": self.fec_mode, "fec_threshold": self.fec_threshold,
            "power_family": "uniform-linear laws on the listed endpoint grid",
        }


def default_grid(scheme: str, points: int = 21, endpoints_db: Sequence[float] | None = None,
                 thetas: Sequence[float] | None = None, **kw) -> SearchGrid:
    if endpoints_db is None:
        endpoints_db = np.linspace(0.0, 20.0, points)
    laws = uniform_laws([float(x) for x in endpoints_db])
    kw.setdefault("adversaries", default_adversaries())
    return SearchGrid(
        scheme=scheme,
        params=tuple(i / (points - 1) for i in range(points)) if points > 1 else (0.5,),
        laws=laws,
        thetas=theta_grid() if thetas is None else tuple(thetas),
        feedback_laws=laws if scheme == "tdm" else (),
        **kw)


@dataclass
class MaxMinResult:
    scheme: str
    r_sec: float
    argmax: dict
    argmin: dict
    legit_index: tuple[int, ...]
    adversary_index: tuple[int, int]
    inner_min: np.ndarray | None = field(default=None, repr=False)
    scale: float = 1.0

    def __post_init__(self):
        if self.r_sec < 0:
            raise AssertionError("negative max-min rate")

    def as_dict(self) -> dict:
        return {"scheme": self.scheme, "r_sec": self.r_sec, "scale": self.scale,
                "argmax": dict(self.argmax), "argmin": dict(self.argmin),
                "legit_index": list(self.legit_index),
                "adversary_index": list(self.adversary_index)}


def _h_legit(law: PowerDistribution, grid: SearchGrid) -> float:
    return binary_entropy(legit_error_prob(law.support[0], grid.d_ab, grid.alpha,
                                           grid.fec_mode, grid.fec_threshold))


# --- two-way ---------------------------------------------------------------

def _twoway_table(spec, geom, law):
    if isinstance(spec, PerfectClassifier):
        return None
    if isinstance(spec, Window):
        spec = ThresholdClassifier.from_geometry(geom, law, spec)
    d_ae, d_be = distances(geom)
    lo = law.support[0] * min(d_ae ** -geom.alpha, d_be ** -geom.alpha)
    hi = law.support[1] * (d_ae ** -geom.alpha + d_be ** -geom.alpha)
    return classifier_table(spec, lo, hi)


def twoway_profile_cube(grid: SearchGrid) -> np.ndarray:
    """Profile entries, shape ``(law, theta, adversary, 8)``.

    The last axis is ``ab_a, ab_b, a_b, a_e, b_a, b_e, pe_a, pe_b`` in the
    argument order of :func:`twoway_core`.
    """
    problems = []
    for law in grid.laws:
        for th in grid.thetas:
            geom = grid.geometry(th)
            for spec in grid.adversaries:
                problems.append((geom, law, law, _twoway_table(spec, geom, law)))
    profs = analytic_profiles(problems)
    flat = np.array([[p.ab[0], p.ab[1], p.a[1], p.a[2], p.b[0], p.b[2],
                      p.pe_ab_to_a, p.pe_ab_to_b] for p in profs])
    return flat.reshape(len(grid.laws), len(grid.thetas), len(grid.adversaries), 8)


def _twoway_rs(grid: SearchGrid, cube: np.ndarray) -> np.ndarray:
    """Secrecy rates, shape ``(param, law, theta, adversary)``."""
    h = np.array([_h_legit(f, grid) for f in grid.laws])[None, :, None, None]
    pt = np.asarray(grid.params)[:, None, None, None]
    args = [cube[None, ..., k] for k in range(8)]
    return twoway_core(pt, *args, h)[-1]


# --- tdm -------------------------------------------------------------------

def _uniform_bounds(laws):
    lo = np.array([f.support[0] for f in laws])
    hi = np.array([f.support[1] for f in laws])
    return lo, hi


def _tdm_block(grid: SearchGrid, i1: Sequence[int], theta: float, spec) -> np.ndarray:
    """``(p_m, p_f, p_e|m)`` for data laws ``i1`` x all feedback laws."""
    n1, n2 = len(i1), len(grid.feedback_laws)
    if isinstance(spec, PerfectClassifier):
        return np.zeros((3, n1, n2))
    geom = grid.geometry(theta)
    laws1 = [grid.laws[i] for i in i1]
    if any(f.kind != UNIFORM for f in laws1 + list(grid.feedback_laws)):
        out = np.empty((3, n1, n2))
        for a, f1 in enumerate(laws1):
            t1, t2 = tdm_window(geom, f1, spec)
            for b, f2 in enumerate(grid.feedback_laws):
                p = tdm_analytic(geom, f1, f2, t1, t2)
                out[:, a, b] = p.p_m, p.p_f, p.p_e_given_m
        return out
    d_ae, d_be = distances(geom)
    pa, pb = d_ae ** geom.alpha, d_be ** geom.alpha
    lo1, hi1 = _uniform_bounds(laws1)
    lo2, hi2 = _uniform_bounds(grid.feedback_laws)
    dlo, dhi = lo1 / pa, hi1 / pa
    flo, fhi = lo2 / pb, hi2 / pb
    windows = [spec.resolve(a, b) for a, b in zip(dlo, dhi)]
    t1 = np.array([w[0] for w in windows])
    t2 = np.array([w[1] for w in windows])
    width = dhi - dlo
    with np.errstate(divide="ignore", invalid="ignore"):
        frac_in = np.where(width > 0,
                           np.maximum(0.0, np.minimum(dhi, t2) - np.maximum(dlo, t1))
                           / np.where(width > 0, width, 1.0),
                           ((dlo >= t1) & (dlo <= t2)).astype(float))
    p_f = 1.0 - frac_in
    shape = (n1, n2)
    X1, X2, T1, T2 = (np.repeat(v, n2) for v in (dlo, dhi, t1, t2))
    Y1, Y2 = np.tile(flo, n1), np.tile(fhi, n1)
    k = kernels.get()
    m = len(X1)
    p_m = k.pair_mass(X1, X2, Y1, Y2, T1, T2, np.zeros(m, dtype=np.int8))
    f_wins = k.pair_mass(X1, X2, Y1, Y2, T1, T2, np.ones(m, dtype=np.int8))
    point = (X2 <= X1) & (Y2 <= Y1)
    if point.any():
        s = X1[point] + Y1[point]
        inside = ((s >= T1[point]) & (s <= T2[point])).astype(float)
        wins = np.where(Y1[point] > X1[point], 1.0, np.where(Y1[point] == X1[point], 0.5, 0.0))
        p_m[point] = inside
        f_wins[point] = inside * wins
    with np.errstate(divide="ignore", invalid="ignore"):
        p_e = np.where(p_m > 0, 0.5 * f_wins / np.where(p_m > 0, p_m, 1.0), 0.0)
    p_e = np.minimum(p_e, 0.5)
    return np.stack([p_m.reshape(shape), np.broadcast_to(p_f[:, None], shape), p_e.reshape(shape)])


def _tdm_rs_block(grid: SearchGrid, i1: Sequence[int]) -> np.ndarray:
    """Secrecy rates (before the 0.5 factor), shape ``(param, f1, f2, theta, adversary)``."""
    prof = np.stack([np.stack([_tdm_block(grid, i1, th, spec) for spec in grid.adversaries],
                              axis=-1) for th in grid.thetas], axis=-2)
    h = np.array([_h_legit(grid.laws[i], grid) for i in i1])[None, :, None, None, None]
    beta = np.asarray(grid.params)[:, None, None, None, None]
    return tdm_core(beta, prof[0][None], prof[1][None], prof[2][None], h)[-1]


# --- search ------------------------------------------------------------------

def _reduce(rs: np.ndarray, n_legit_axes: int):
    """Inner min over the trailing adversary axes, outer max over the rest."""
    legit_shape = rs.shape[:n_legit_axes]
    adv_shape = rs.shape[n_legit_axes:]
    flat = rs.reshape(int(np.prod(legit_shape)), int(np.prod(adv_shape)))
    arg_in = np.argmin(flat, axis=1)
    inner = flat[np.arange(flat.shape[0]), arg_in]
    best = int(np.argmax(inner))
    return (float(inner[best]), np.unravel_index(best, legit_shape),
            np.unravel_index(int(arg_in[best]), adv_shape), inner.reshape(legit_shape))


def optimize_twoway(grid: SearchGrid, keep_table: bool = False) -> MaxMinResult:
    if grid.scheme != "twoway":
        raise ConfigurationError("optimize_twoway needs a two-way grid")
    rs = _twoway_rs(grid, twoway_profile_cube(grid))
    r, (ip, il), (it, ia), inner = _reduce(rs, 2)
    return MaxMinResult(
        "twoway", r,
        {"p_t": grid.params[ip], "power": describe_law(grid.laws[il])},
        {"theta": grid.thetas[it], "classifier": describe_adversary(grid.adversaries[ia])},
        (int(ip), int(il)), (int(it), int(ia)), inner if keep_table else None)


def optimize_tdm(grid: SearchGrid, keep_table: bool = False, chunk: int = 16) -> MaxMinResult:
    if grid.scheme != "tdm":
        raise ConfigurationError("optimize_tdm needs a tdm grid")
    best = None
    tables = []
    for start in range(0, len(grid.laws), chunk):
        i1 = list(range(start, min(start + chunk, len(grid.laws))))
        rs = _tdm_rs_block(grid, i1)
        r, (ip, a, ib), adv, inner = _reduce(rs, 3)
        if keep_table:
            tables.append(inner)
        key = (ip, i1[a], ib)
        if best is None or r > best[0] or (r == best[0] and key < best[1]):
            best = (r, key, adv)
    r, (ip, i1, i2), (it, ia) = best
    inner = np.concatenate(tables, axis=1) * 0.5 if keep_table else None
    return MaxMinResult(
        "tdm", 0.5 * r,
        {"beta": grid.params[ip], "data_power": describe_law(grid.laws[i1]),
         "feedback_power": describe_law(grid.feedback_laws[i2])},
        {"theta": grid.thetas[it], "classifier": describe_adversary(grid.adversaries[ia])},
        (int(ip), int(i1), int(i2)), (int(it), int(ia)), inner, scale=0.5)


def optimize(grid: SearchGrid, keep_table: bool = False) -> MaxMinResult:
    return optimize_tdm(grid, keep_table) if grid.scheme == "tdm" else \
        optimize_twoway(grid, keep_table)


def worst_case_eve(legit: dict, grid: SearchGrid) -> tuple[float, float, str]:
    """Minimum secrecy rate over the grid's positions and classifiers.

    ``legit`` holds ``p_t`` and ``power`` (two-way) or ``beta``,
    ``data_power`` and ``feedback_power`` (tdm).  Returns the unscaled r_s
    with the minimizing angle and classifier description.
    """
    if grid.scheme == "twoway":
        sub = replace(grid, params=(legit["p_t"],), laws=(legit["power"],))
        rs = _twoway_rs(sub, twoway_profile_cube(sub))[0, 0]
    else:
        sub = replace(grid, params=(legit["beta"],), laws=(legit["data_power"],),
                      feedback_laws=(legit["feedback_power"],))
        rs = _tdm_rs_block(sub, [0])[0, 0, 0]
    it, ia = np.unravel_index(int(np.argmin(rs)), rs.shape)
    return float(rs[it, ia]), grid.thetas[it], describe_adversary(grid.adversaries[ia])


# --- distance-ratio sweep -----------------------------------------------------

TX_NEAR = "tx-near"
TX_FAR = "tx-far"


class UnrealizableRatio(ConfigurationError):
    pass


def theta_for_ratio(ratio: float, d_ab: float, r_e: float, nearer: str = "B") -> float:
    """Angle on the circle where ``min(d_AE, d_BE) / max(d_AE, d_BE) == ratio``."""
    if not 0.0 < ratio <= 1.0:
        raise UnrealizableRatio(f"ratio {ratio} outside (0, 1]")
    c = r_e ** 2 + d_ab ** 2 / 4.0
    q2 = ratio * ratio
    u = c * (1.0 - q2) / (r_e * d_ab * (1.0 + q2))
    if u > 1.0 + 1e-12:
        raise UnrealizableRatio(
            f"ratio {ratio} not realizable with d_ab={d_ab}, r_e={r_e}")
    theta = math.acos(min(u, 1.0))
    return theta if nearer == "B" else math.pi - theta


@dataclass
class SweepPoint:
    ratio: float
    scheme: str
    r_sec: float | None
    argmax_param: float | None
    argmin_theta: float | None
    classifier_desc: str
    error: str = ""
    result: MaxMinResult | None = field(default=None, repr=False)


def _sweep_one(ratio: float, scheme: str, grid: SearchGrid, placement: str) -> SweepPoint:
    # tdm: Alice transmits, so tx-near puts Alice at d_min
    nearer = "A" if (scheme == "tdm" and placement == TX_NEAR) else "B"
    try:
        theta = theta_for_ratio(ratio, grid.d_ab, grid.r_e, nearer)
    except UnrealizableRatio as exc:
        return SweepPoint(ratio, scheme, None, None, None, "", str(exc))
    res = optimize(replace(grid, thetas=(theta,)))
    param = res.argmax["beta"] if scheme == "tdm" else res.argmax["p_t"]
    return SweepPoint(ratio, scheme, res.r_sec, param, res.argmin["theta"],
                      res.argmin["classifier"], "", res)


def sweep_ratio(ratios: Sequence[float], grids: Sequence[SearchGrid],
                placement: str = TX_NEAR, threads: int = 1) -> list[SweepPoint]:
    """Max-min rate per ratio and scheme; rows ordered by ratio, then grid."""
    if placement not in (TX_NEAR, TX_FAR):
        raise ConfigurationError(f"placement must be {TX_NEAR} or {TX_FAR}")
    jobs = [(float(r), g.scheme, g, placement) for r in ratios for g in grids]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda j: _sweep_one(*j), jobs))
    return [_sweep_one(*j) for j in jobs]


def default_ratios(lo: float = 0.1, hi: float = 1.0, steps: int = 10) -> list[float]:
    if steps == 1:
        return [hi]
    # rounded so that CSV rows read 0.3 rather than 0.30000000000000004
    return [round(lo + (hi - lo) * i / (steps - 1), 12) for i in range(steps)]

