"""Secrecy-rate lower bounds for the TDM-feedback and two-way schemes.

The ``*_core`` functions evaluate the rate formulas on floats or numpy
arrays alike; the optimizer calls them on whole grids and the scalar
wrappers build the breakdown records from the very same arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate

from .classifier import MisclassProfile, TdmDetectionProfile
from .model import ConfigurationError, ContractViolation, GeometryConfig, PowerDistribution

ENTROPY_CLAMP = 1e-9

FEC_IDEAL = "ideal"
FEC_HARD = "hard"


class DomainError(ValueError):
    pass


def binary_entropy(p: float) -> float:
    """Binary entropy in bits, with arguments within 1e-9 of [0, 1] clamped."""
    if math.isnan(p):
        return math.nan
    if p < -ENTROPY_CLAMP or p > 1 + ENTROPY_CLAMP:
        raise DomainError(f"entropy argument {p} outside [0, 1]")
    p = min(max(p, 0.0), 1.0)
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def entropy_array(p):
    p = np.clip(np.asarray(p, dtype=np.float64), 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -p * np.log2(p) - (1 - p) * np.log2(1 - p)
    return np.where((p == 0.0) | (p == 1.0), 0.0, h)


def phi(x: float) -> float:
    """Standard normal CDF."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def legit_error_prob(rho: float, d_ab: float, alpha: float = 2.0,
                     fec_mode: str = FEC_HARD, fec_threshold: float = 0.0) -> float:
    """Hard-decision symbol error at the legitimate receiver.

    With ``fec_mode="ideal"`` the error vanishes once the received SNR
    reaches ``fec_threshold``.
    """
    if rho < 0:
        raise DomainError("rho must be nonnegative")
    if d_ab <= 0:
        raise DomainError("d_ab must be positive")
    snr = rho / d_ab ** alpha
    if fec_mode == FEC_IDEAL and snr >= fec_threshold:
        return 0.0
    if fec_mode not in (FEC_IDEAL, FEC_HARD):
        raise ConfigurationError(f"unknown fec_mode {fec_mode!r}")
    return 1.0 - phi(math.sqrt(snr))


def average_legit_error_prob(dist: PowerDistribution, d_ab: float, alpha: float = 2.0,
                             fec_mode: str = FEC_HARD, fec_threshold: float = 0.0) -> float:
    """Legitimate error probability averaged over the transmit-power law."""
    f = lambda r: legit_error_prob(r, d_ab, alpha, fec_mode, fec_threshold)  # noqa: E731
    if dist.kind == "uniform-linear":
        lo, hi = dist.support
        if hi == lo:
            return f(lo)
        val, _ = integrate.quad(f, lo, hi, limit=200)
        return val / (hi - lo)
    return float(sum(p * f(lv) for lv, p in zip(dist.levels, dist.probs)))


def erasure_channel_rate(alpha_erase: float, p_e: float) -> float:
    """Rate of a binary channel with erasures and symmetric errors."""
    return (1.0 - alpha_erase) * (1.0 - binary_entropy(p_e))


def _check_prob(name, v):
    if not math.isnan(v) and not (-1e-12 <= v <= 1 + 1e-12):
        raise DomainError(f"{name}={v} outside [0, 1]")


# --- TDM feedback scheme ---------------------------------------------------

def tdm_core(beta, p_m, p_f, p_e_given_m, h_legit):
    """Return ``(alpha_e, p_e_eve, r_m, r_e, r_s)``; broadcasts over arrays."""
    r_m = (1 - beta) * (1 - h_legit)
    alpha_e = beta * (1 - p_m) + (1 - beta) * p_f
    mass = beta * p_m * p_e_given_m
    kept = 1 - alpha_e
    with np.errstate(divide="ignore", invalid="ignore"):
        p_e_eve = np.where(kept > 0, mass / np.where(kept > 0, kept, 1.0), 0.0)
    r_e = kept * (1 - entropy_array(p_e_eve))
    r_s = np.maximum(r_m - r_e, 0.0)
    return alpha_e, p_e_eve, r_m, r_e, r_s


@dataclass(frozen=True)
class RateBreakdownTdm:
    alpha_m: float
    alpha_e: float
    p_e_m: float
    p_e_e: float
    r_m: float
    r_e: float
    r_s: float
    r_m_average: float | None = None

    def __post_init__(self):
        for name in ("alpha_m", "alpha_e", "p_e_m", "p_e_e"):
            _check_prob(name, getattr(self, name))
        if not math.isnan(self.r_s) and self.r_s < 0:
            raise ContractViolation("negative secrecy rate")

    def as_dict(self) -> dict:
        return asdict(self)


def tdm_bounds(beta: float, prof: TdmDetectionProfile, geom: GeometryConfig,
               rho_min: float, fec_mode: str = FEC_IDEAL, fec_threshold: float = 0.0,
               dist: PowerDistribution | None = None) -> RateBreakdownTdm:
    """Single-point TDM bound; ``dist`` adds the averaged-error variant of r_M."""
    if not 0.0 <= beta <= 1.0:
        raise DomainError(f"beta={beta} outside [0, 1]")
    p_m, p_f, p_e = prof.p_m, prof.p_f, prof.p_e_given_m
    if beta == 0.0 and math.isnan(p_m):
        p_m = 0.0
    if math.isnan(p_e) and (beta == 0.0 or p_m == 0.0):
        p_e = 0.0
    if beta == 1.0 and math.isnan(p_f):
        p_f = 0.0
    pe_legit = legit_error_prob(rho_min, geom.d_ab, geom.alpha, fec_mode, fec_threshold)
    h = binary_entropy(pe_legit)
    alpha_e = beta * (1 - p_m) + (1 - beta) * p_f
    if alpha_e >= 1 and beta * p_m * p_e > 0:
        raise ContractViolation("all symbols erased at Eve but error mass nonzero")
    alpha_e, p_e_eve, r_m, r_e, r_s = (float(x) for x in tdm_core(beta, p_m, p_f, p_e, h))
    r_avg = None
    if dist is not None:
        pe_avg = average_legit_error_prob(dist, geom.d_ab, geom.alpha, fec_mode, fec_threshold)
        r_avg = (1 - beta) * (1 - binary_entropy(pe_avg))
    return RateBreakdownTdm(beta, alpha_e, pe_legit, p_e_eve, r_m, r_e, r_s, r_avg)


# --- two-way randomized scheduling -----------------------------------------

def twoway_core(p_t, ab_a, ab_b, a_b, a_e, b_a, b_e, pe_a, pe_b, h_legit):
    """Return ``(d_a, d_b, pe_ea, pe_eb, r_ea, r_eb, r_m, r_s)``.

    Profile arguments follow the event->class notation: ``ab_a`` is
    P[(A,B) -> (A,B^c)], ``a_b`` is P[(A,B^c) -> (A^c,B)], ``a_e`` is
    P[(A,B^c) -> (A,B)] (erased), and so on.
    """
    both = p_t * p_t
    one = p_t * (1 - p_t)
    d_a = both * ab_a + one * b_a + one * (1 - a_b - a_e)
    d_b = both * ab_b + one * a_b + one * (1 - b_a - b_e)
    pe_ea = both * ab_a * pe_a + 0.5 * one * b_a
    pe_eb = both * ab_b * pe_b + 0.5 * one * a_b
    with np.errstate(divide="ignore", invalid="ignore"):
        q_a = np.where(d_a > 0, pe_ea / np.where(d_a > 0, d_a, 1.0), 0.0)
        q_b = np.where(d_b > 0, pe_eb / np.where(d_b > 0, d_b, 1.0), 0.0)
    r_ea = np.where(d_a > 0, d_a * (1 - entropy_array(q_a)), 0.0)
    r_eb = np.where(d_b > 0, d_b * (1 - entropy_array(q_b)), 0.0)
    r_m = one * (1 - h_legit)
    r_s = np.maximum(r_m - np.maximum(r_ea, r_eb), 0.0)
    return d_a, d_b, pe_ea, pe_eb, r_ea, r_eb, r_m, r_s


@dataclass(frozen=True)
class RateBreakdownTwoWay:
    alpha_m: float
    p_e_m: float
    r_m: float
    d_a: float
    d_b: float
    p_e_ea: float
    p_e_eb: float
    r_ea: float
    r_eb: float
    r_s: float
    r_m_average: float | None = None

    def __post_init__(self):
        for name in ("alpha_m", "p_e_m", "d_a", "d_b"):
            _check_prob(name, getattr(self, name))
        if self.p_e_ea > self.d_a + 1e-12 or self.p_e_eb > self.d_b + 1e-12:
            raise ContractViolation("eavesdropper error mass exceeds attributed fraction")
        if not math.isnan(self.r_s) and self.r_s < 0:
            raise ContractViolation("negative secrecy rate")

    def as_dict(self) -> dict:
        return asdict(self)


def _zero_if_unweighted(value: float, weight: float) -> float:
    return 0.0 if (weight == 0 and math.isnan(value)) else value


def twoway_bounds(p_t: float, prof: MisclassProfile, geom: GeometryConfig,
                  rho_min: float, fec_mode: str = FEC_IDEAL, fec_threshold: float = 0.0,
                  dist: PowerDistribution | None = None) -> RateBreakdownTwoWay:
    if not 0.0 <= p_t <= 1.0:
        raise DomainError(f"p_t={p_t} outside [0, 1]")
    both, one = p_t * p_t, p_t * (1 - p_t)
    ab_a, ab_b, _ = (_zero_if_unweighted(v, both) for v in prof.ab)
    a_a, a_b, a_e = (_zero_if_unweighted(v, one) for v in prof.a)
    b_a, b_b, b_e = (_zero_if_unweighted(v, one) for v in prof.b)
    pe_a = _zero_if_unweighted(prof.pe_ab_to_a, both * ab_a)
    pe_b = _zero_if_unweighted(prof.pe_ab_to_b, both * ab_b)
    pe_legit = legit_error_prob(rho_min, geom.d_ab, geom.alpha, fec_mode, fec_threshold)
    h = binary_entropy(pe_legit)
    d_a, d_b, pe_ea, pe_eb, r_ea, r_eb, r_m, r_s = (float(x) for x in twoway_core(
        p_t, ab_a, ab_b, a_b, a_e, b_a, b_e, pe_a, pe_b, h))
    if pe_ea > d_a + 1e-12 or pe_eb > d_b + 1e-12:
        raise ContractViolation("profile inconsistent: error mass exceeds attributed mass")
    r_avg = None
    if dist is not None:
        pe_avg = average_legit_error_prob(dist, geom.d_ab, geom.alpha, fec_mode, fec_threshold)
        r_avg = one * (1 - binary_entropy(pe_avg))
    return RateBreakdownTwoWay(1 - one, pe_legit, r_m, d_a, d_b, pe_ea, pe_eb,
                               r_ea, r_eb, r_s, r_avg)
