import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from hdsecrecy.classifier import (
    IDENTITY_PROFILE,
    NO_ERASURE,
    BlindClassifier,
    ClassOutcome,
    MisclassProfile,
    MlClassifier,
    PerfectClassifier,
    ThresholdClassifier,
    Window,
    capture_decode,
    classify_ml,
    classify_threshold,
    load_ml_table,
    misclass_profile,
    tdm_detection_profile,
)
from hdsecrecy.model import ConfigurationError, ContractViolation, GeometryConfig, PowerDistribution
from hdsecrecy.montecarlo import compare_profiles

A, B, AORB, ERASE, SILENCE = (ClassOutcome.A, ClassOutcome.B, ClassOutcome.AORB,
                              ClassOutcome.ERASE, ClassOutcome.SILENCE)

SUPPORTS = ThresholdClassifier(-math.inf, math.inf, -60, -50, -55, -45)


@pytest.mark.parametrize("r,want", [(-57, A), (-48, B), (-52, AORB)])
def test_threshold_rule_branches(r, want):
    assert classify_threshold(r, SUPPORTS) == want


def test_threshold_window_and_silence():
    c = ThresholdClassifier(-58, -47, -60, -50, -55, -45)
    assert classify_threshold(-59, c) == ERASE
    assert classify_threshold(-46, c) == ERASE
    assert classify_threshold(-57, c) == A
    assert classify_threshold(-math.inf, c) == SILENCE


def test_threshold_mirrored_swaps_roles():
    c = ThresholdClassifier(-math.inf, math.inf, -55, -45, -60, -50, mirrored=True)
    assert classify_threshold(-57, c) == B
    assert classify_threshold(-48, c) == A
    assert classify_threshold(-52, c) == AORB


@given(st.floats(-200, 100))
def test_open_window_never_erases(r):
    assert classify_threshold(r, SUPPORTS) != ERASE


def test_threshold_invariants():
    with pytest.raises(ConfigurationError):
        ThresholdClassifier(0, -1, -60, -50, -55, -45)


def test_point_law_solo_power_is_attributed():
    # a power only Alice can produce is classified as Alice, even on a point law
    g = GeometryConfig(1.0, 0.55, 0.2)
    c = ThresholdClassifier.from_geometry(g, PowerDistribution.uniform(1.0, 1.0))
    p = misclass_profile(g, PowerDistribution.uniform(1.0, 1.0), c)
    assert p.a == (1.0, 0.0, 0.0) and p.b == (0.0, 1.0, 0.0)


@given(st.floats(-75, -35))
def test_table_matches_rule(r):
    g = GeometryConfig(1.0, 3.0, 1.1)
    c = ThresholdClassifier.from_geometry(g, PowerDistribution.uniform_db(0, 20), Window(-1, 1))
    p = 10 ** (r / 10)
    assert c.table().lookup(p) == c.rule_lin(p)
    for e in c.table().edges:
        assert c.table().lookup(e) == c.rule_lin(e)


def test_ml_examples():
    m = MlClassifier(((-60.0, 4.0),), ((-50.0, 4.0),))
    assert classify_ml(-59, m) == A
    assert classify_ml(-55, m) == AORB
    m2 = MlClassifier(((-60.0, 1.0), (-56.0, 1.0)), ((-50.0, 1.0),))
    fa = max(stats.norm.pdf(-57, -60, 1), stats.norm.pdf(-57, -56, 1))
    fb = stats.norm.pdf(-57, -50, 1)
    assert fa > fb
    assert classify_ml(-57, m2) == A


@given(st.floats(-80, -30))
def test_ml_table_agrees_with_rule(y):
    m = MlClassifier(((-60.0, 1.0), (-56.0, 2.0)), ((-52.0, 1.5),))
    t = m.table()
    want = classify_ml(y, m)
    if all(abs(10 ** (y / 10) - e) > 1e-9 * e for e in t.edges):
        assert t.lookup(10 ** (y / 10)) == want


def test_ml_validation_and_loading(tmp_path):
    with pytest.raises(ConfigurationError):
        MlClassifier(((-60.0, 0.0),), ((-50.0, 1.0),))
    with pytest.raises(ConfigurationError):
        MlClassifier((), ((-50.0, 1.0),))
    f = tmp_path / "ml.txt"
    f.write_text("# source level mean var\nA 0 -60 1.0\nA 1 -56 1.0  # second\nB 0 -50 1.0\n")
    m = load_ml_table(f)
    assert m.a_models == ((-60.0, 1.0), (-56.0, 1.0)) and m.b_models == ((-50.0, 1.0),)
    f.write_text("C 0 -60 1\n")
    with pytest.raises(ConfigurationError):
        load_ml_table(f)


def test_capture_decode():
    rng = np.random.default_rng(0)
    assert capture_decode(1, -1, 0.8, 0.5, rng) == 1
    assert capture_decode(1, 1, 0.3, 0.9, rng) == 1
    assert capture_decode(1, -1, 0.5, 0.8, rng) == -1
    ties = [capture_decode(1, -1, 1.0, 1.0, rng) for _ in range(4000)]
    assert abs(np.mean(ties)) < 0.1


def test_disjoint_supports_solo_rows():
    g = GeometryConfig(1.0, 0.55, 0.4)
    law = PowerDistribution.uniform_db(0, 3)
    for cls in (ThresholdClassifier.from_geometry(g, law), MlClassifier.from_levels(g, law, 0.5)):
        p = misclass_profile(g, law, cls)
        assert p.a[0] == pytest.approx(1.0, abs=1e-12)
        assert p.b[1] == pytest.approx(1.0, abs=1e-12)


def test_blind_symmetric(symmetric, law):
    p = misclass_profile(symmetric, law, BlindClassifier())
    for row in (p.ab, p.a, p.b):
        assert row == pytest.approx((0.5, 0.5, 0.0), abs=1e-12)
    assert p.pe_ab_to_a == pytest.approx(0.25, abs=1e-12)
    assert p.pe_ab_to_b == pytest.approx(0.25, abs=1e-12)


def test_perfect_is_identity(symmetric, law):
    assert misclass_profile(symmetric, law, PerfectClassifier()) == IDENTITY_PROFILE


geoms = st.builds(lambda r, th: GeometryConfig(1.0, r, th),
                  st.floats(0.55, 4.0), st.floats(0.0, math.pi))
laws = st.tuples(st.floats(-5, 20), st.floats(0, 15)).map(
    lambda t: PowerDistribution.uniform_db(t[0], t[0] + t[1]))
windows = st.one_of(st.just(NO_ERASURE),
                    st.builds(lambda h: Window(-math.inf, h), st.floats(-3, 3)),
                    st.builds(lambda lo, h: Window(lo, h), st.floats(-3, 3), st.floats(-3, 3)))


@given(geoms, laws, windows)
def test_profile_rows_are_distributions(g, law, w):
    p = misclass_profile(g, law, ThresholdClassifier.from_geometry(g, law, w))
    for row in (p.ab, p.a, p.b):
        assert all(-1e-12 <= x <= 1 + 1e-12 for x in row)
        assert sum(row) == pytest.approx(1.0, abs=1e-9)
    assert 0 <= p.pe_ab_to_a <= 0.5 + 1e-12 or math.isnan(p.pe_ab_to_a)


@given(geoms, laws, windows)
def test_mirror_transposes_profile(g, law, w):
    p = misclass_profile(g, law, ThresholdClassifier.from_geometry(g, law, w))
    gm = g.mirrored()
    q = misclass_profile(gm, law, ThresholdClassifier.from_geometry(gm, law, w))
    t = p.transposed()
    for x, y in zip(t.entries().values(), q.entries().values()):
        assert x == pytest.approx(y, abs=1e-9) or (math.isnan(x) and math.isnan(y))


def test_profile_contract():
    with pytest.raises(ContractViolation):
        MisclassProfile((0.5, 0.6, 0.0), (1, 0, 0), (0, 1, 0), 0.0, 0.0)
    with pytest.raises(ContractViolation):
        MisclassProfile((0.5, 0.5, 0.0), (1, 0, 0), (0, 1, 0), 0.7, 0.0)


def test_threshold_analytic_vs_montecarlo():
    g = GeometryConfig(1.0, 0.7, 1.1)
    law = PowerDistribution.uniform(1.0, 20.0)
    cls = ThresholdClassifier.from_geometry(g, law, Window(-math.inf, 1.0))
    ana = misclass_profile(g, law, cls)
    emp = misclass_profile(g, law, cls, method="montecarlo", n=10**6, seed=3)
    rep = compare_profiles(ana, emp)
    assert rep.fraction_within >= 0.99, rep.z


def test_montecarlo_profile_reproducible():
    g = GeometryConfig(1.0, 0.7, 1.1)
    law = PowerDistribution.uniform(1.0, 20.0)
    cls = ThresholdClassifier.from_geometry(g, law)
    a = misclass_profile(g, law, cls, method="montecarlo", n=50_000, seed=4)
    b = misclass_profile(g, law, cls, method="montecarlo", n=50_000, seed=4)
    assert a.entries() == b.entries()


def test_tdm_open_window(symmetric, law):
    p = tdm_detection_profile(symmetric, law, law)
    assert (p.p_m, p.p_f) == (1.0, 0.0)


def test_tdm_overwhelming_feedback(symmetric):
    f1 = PowerDistribution.uniform_db(0, 3)
    f2 = PowerDistribution.uniform_db(30, 40)
    p = tdm_detection_profile(symmetric, f1, f2, -math.inf, 10.0)
    assert p.p_m == 0.0


def test_tdm_symmetric_closed_form(symmetric):
    # D, F iid uniform on [l, h]; window = data support: p_m = P(D+F <= h)
    law = PowerDistribution.uniform(1.0, 10.0)
    d2 = symmetric.d_ae ** 2
    lo, hi = 1.0 / d2, 10.0 / d2
    t1, t2 = 10 * math.log10(lo), 10 * math.log10(hi)
    p = tdm_detection_profile(symmetric, law, law, t1, t2)
    assert p.p_m == pytest.approx((hi - 2 * lo) ** 2 / 2 / (hi - lo) ** 2, abs=1e-12)
    assert p.p_e_given_m == pytest.approx(0.25, abs=1e-12)
    assert p.p_f == pytest.approx(0.0, abs=1e-12)
    emp = tdm_detection_profile(symmetric, law, law, t1, t2, method="montecarlo",
                                n=10**6, seed=2)
    assert compare_profiles(p, emp).passed
