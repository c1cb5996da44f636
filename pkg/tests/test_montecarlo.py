import csv
import math
from dataclasses import replace

import numpy as np
import pytest

from hdsecrecy import kernels
from hdsecrecy.classifier import (
    BlindClassifier,
    MisclassProfile,
    PerfectClassifier,
    ThresholdClassifier,
    Window,
    misclass_profile,
    tdm_detection_profile,
    tdm_window,
)
from hdsecrecy.model import ConfigurationError, GeometryConfig, PowerDistribution, lin_to_db
from hdsecrecy.montecarlo import (
    SimConfig,
    UsageError,
    compare_profiles,
    simulate,
    simulate_tdm,
    simulate_twoway,
    write_trace,
)
from hdsecrecy.rates import tdm_bounds, twoway_bounds

SYM = GeometryConfig(1.0, 5.0, math.pi / 2)
LAW = PowerDistribution.uniform_db(0, 20)
N = 10**6


def twoway_cfg(**kw):
    base = dict(scheme="twoway", geometry=SYM, power=LAW, frames=N, seed=1, p_t=0.5,
                classifier=BlindClassifier())
    base.update(kw)
    return SimConfig(**base)


def tdm_cfg(**kw):
    base = dict(scheme="tdm", geometry=GeometryConfig(1.0, 0.7, 2.0), power=LAW, frames=N,
                seed=2, beta=0.3, feedback_power=PowerDistribution.uniform_db(5, 15),
                classifier=Window(-math.inf, 0.0))
    base.update(kw)
    return SimConfig(**base)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        twoway_cfg(frames=0)
    with pytest.raises(ConfigurationError):
        twoway_cfg(p_t=1.5)
    with pytest.raises(ConfigurationError):
        tdm_cfg(classifier=BlindClassifier())


def test_idle_run_is_flagged():
    emp, br = simulate_twoway(twoway_cfg(p_t=0.0, frames=1000))
    assert emp.counts[0, 0] == 1000
    assert emp.low_confidence
    assert all(math.isnan(v) for v in emp.profile.entries().values())
    assert br.r_s == 0.0


def test_activity_rate():
    emp, _ = simulate_twoway(twoway_cfg())
    p_a = emp.event_counts[[1, 3]].sum() / N
    assert abs(p_a - 0.5) <= 3 * math.sqrt(0.25 / N)


def test_blind_symmetric_matches_closed_form():
    emp, br = simulate_twoway(twoway_cfg())
    assert br.d_a == pytest.approx(0.375, abs=0.0015)
    assert br.r_s == pytest.approx(0.17923, abs=0.005)
    ana = misclass_profile(SYM, LAW, BlindClassifier())
    assert compare_profiles(ana, emp).fraction_within >= 0.99


def test_half_duplex_accounting():
    emp, _ = simulate_twoway(twoway_cfg(frames=200_000, p_t=0.3))
    assert emp.legit_decodable == emp.event_counts[1] + emp.event_counts[2]
    assert (emp.counts.sum(axis=1) == emp.event_counts).all()
    assert emp.counts.sum() == 200_000


def test_tdm_beta_zero_flags_miss():
    emp, _ = simulate_tdm(tdm_cfg(beta=0.0, frames=10_000))
    assert math.isnan(emp.profile.p_m)
    assert any(f.startswith("p_m") for f in emp.flags)
    assert not math.isnan(emp.profile.p_f)


def test_tdm_open_window_exact():
    emp, _ = simulate_tdm(tdm_cfg(classifier=Window()))
    assert emp.profile.p_m == 1.0 and emp.profile.p_f == 0.0


def test_tdm_oracle_cross_check():
    cfg = tdm_cfg()
    emp, br = simulate_tdm(cfg)
    t1, t2 = tdm_window(cfg.geometry, cfg.power, cfg.classifier)
    ana = tdm_detection_profile(cfg.geometry, cfg.power, cfg.feedback_power,
                                lin_to_db(t1), lin_to_db(t2))
    assert compare_profiles(ana, emp).passed
    ref = tdm_bounds(cfg.beta, ana, cfg.geometry, cfg.power.support[0])
    assert abs(br.r_s - ref.r_s) <= 0.01


def test_threshold_oracle_cross_check():
    g = GeometryConfig(1.0, 0.8, 1.2)
    cls = ThresholdClassifier.from_geometry(g, LAW, Window(-math.inf, 1.0))
    cfg = twoway_cfg(geometry=g, classifier=cls, p_t=0.4)
    emp, br = simulate_twoway(cfg)
    ana = misclass_profile(g, LAW, cls)
    assert compare_profiles(ana, emp).fraction_within >= 0.99
    assert abs(br.r_s - twoway_bounds(0.4, ana, g, LAW.support[0]).r_s) <= 0.01


def test_compare_identical_and_corrupted():
    emp, _ = simulate_twoway(twoway_cfg())
    same = compare_profiles(emp.profile, emp)
    assert same.passed and all(z == 0.0 for z in same.z.values())
    ana = misclass_profile(SYM, LAW, BlindClassifier())
    bad = MisclassProfile((0.6, 0.4, 0.0), ana.a, ana.b, ana.pe_ab_to_a, ana.pe_ab_to_b)
    assert not compare_profiles(bad, emp).passed


def test_compare_rejects_mismatch():
    emp, _ = simulate_twoway(twoway_cfg(frames=1000))
    ana = tdm_detection_profile(SYM, LAW, LAW)
    with pytest.raises(UsageError):
        compare_profiles(ana, emp)


def test_reproducible_across_runs_threads_and_backends():
    cfg = twoway_cfg(frames=300_000, classifier=Window(-math.inf, 1.0),
                     geometry=GeometryConfig(1.0, 0.8, 1.2))
    ref = simulate(cfg)[0].as_dict()
    assert simulate(cfg)[0].as_dict() == ref
    assert simulate(replace(cfg, threads=4))[0].as_dict() == ref
    before = kernels.backend_name()
    try:
        for name in kernels.available_backends():
            kernels.use_backend(name)
            assert simulate(cfg)[0].as_dict() == ref
    finally:
        kernels.use_backend(before)


def test_classifier_change_keeps_traffic():
    a, _ = simulate_twoway(twoway_cfg(frames=100_000))
    b, _ = simulate_twoway(twoway_cfg(frames=100_000, classifier=PerfectClassifier()))
    assert np.array_equal(a.event_counts, b.event_counts)
    assert b.profile.a == (1.0, 0.0, 0.0) and b.profile.ab == (0.0, 0.0, 1.0)


def test_convergence_does_not_degrade():
    g = GeometryConfig(1.0, 0.8, 1.2)
    cls = ThresholdClassifier.from_geometry(g, LAW)
    ana = misclass_profile(g, LAW, cls)
    for n in (10**4, 10**6):
        emp, _ = simulate_twoway(twoway_cfg(geometry=g, classifier=cls, frames=n, seed=9))
        assert compare_profiles(ana, emp).max_abs_z < 4.5


def test_noisy_and_coherent_runs():
    from hdsecrecy.model import ChannelConfig
    for ch in (ChannelConfig(eve_noiseless=False, silence_floor_db=-20),
               ChannelConfig(superposition_mode="coherent", wave_number=2.0)):
        emp, br = simulate_twoway(twoway_cfg(frames=50_000, channel=ch,
                                             classifier=Window(-math.inf, 1.0)))
        assert emp.counts.sum() == 50_000 and br.r_s >= 0


def test_trace(tmp_path):
    cfg = twoway_cfg(frames=500, classifier=Window(-math.inf, 1.0))
    path = tmp_path / "trace.csv"
    assert write_trace(cfg, path, limit=200) == 200
    rows = list(csv.DictReader(path.open()))
    assert len(rows) == 200
    assert list(rows[0]) == ["index", "a_active", "b_active", "p_a_db", "p_b_db", "obs_db",
                             "outcome", "decode_correct"]
    for r in rows:
        if r["a_active"] == "0" and r["b_active"] == "0":
            assert r["outcome"] == "silence"
