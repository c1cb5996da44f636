import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from hdsecrecy import kernels
from hdsecrecy._kernels_py import pair_mass_one

both_backends = pytest.mark.skipif(len(kernels.available_backends()) < 2,
                                   reason="compiled kernels not built")


def quad_oracle(x1, x2, y1, y2, lo, hi, order):
    """P(lo < X+Y < hi, ordering) by 1-D quadrature of the conditional y-interval."""
    def inner(x):
        a, b = max(y1, lo - x), min(y2, hi - x)
        if order > 0:
            a = max(a, x)
        elif order < 0:
            b = min(b, x)
        return max(0.0, b - a) / (y2 - y1)
    brk = [p for p in (lo - y1, lo - y2, hi - y1, hi - y2, y1, y2) if x1 < p < x2]
    val, _ = integrate.quad(inner, x1, x2, points=brk or None, limit=200, epsabs=1e-13)
    return val / (x2 - x1)


box = st.tuples(st.floats(0.0, 5.0), st.floats(0.01, 5.0)).map(lambda t: (t[0], t[0] + t[1]))


@given(box, box, st.floats(0.0, 12.0), st.floats(0.0, 12.0), st.sampled_from([-1, 0, 1]))
def test_pair_mass_matches_quadrature(xb, yb, a, b, order):
    lo, hi = min(a, b), max(a, b)
    got = pair_mass_one(*xb, *yb, lo, hi, order)
    assert got == pytest.approx(quad_oracle(*xb, *yb, lo, hi, order), abs=1e-7)


@given(box, box, st.floats(0.0, 12.0), st.floats(0.0, 12.0))
def test_pair_mass_order_split(xb, yb, a, b):
    lo, hi = min(a, b), max(a, b)
    total = pair_mass_one(*xb, *yb, lo, hi, 0)
    split = pair_mass_one(*xb, *yb, lo, hi, 1) + pair_mass_one(*xb, *yb, lo, hi, -1)
    assert 0.0 <= total <= 1.0
    assert split == pytest.approx(total, abs=1e-12)


def test_pair_mass_degenerate():
    # point X, uniform Y
    assert pair_mass_one(1.0, 1.0, 0.0, 2.0, 1.5, 2.5, 0) == pytest.approx(0.5)
    assert pair_mass_one(1.0, 1.0, 0.0, 2.0, 0.0, 9.0, 1) == pytest.approx(0.5)
    # both points
    assert pair_mass_one(1.0, 1.0, 2.0, 2.0, 2.9, 3.1, 1) == 1.0
    assert pair_mass_one(1.0, 1.0, 2.0, 2.0, 2.9, 3.1, -1) == 0.0
    assert pair_mass_one(1.0, 1.0, 2.0, 2.0, 3.0, 3.1, 0) == 0.0


def _random_pair_inputs(n, seed):
    rng = np.random.default_rng(seed)
    x1 = rng.uniform(0, 3, n)
    y1 = rng.uniform(0, 3, n)
    x2 = x1 + rng.choice([0.0, 1.0], n) * rng.uniform(0, 3, n)
    y2 = y1 + rng.choice([0.0, 1.0], n) * rng.uniform(0, 3, n)
    lo = rng.uniform(0, 5, n)
    hi = lo + rng.uniform(0, 5, n)
    order = rng.integers(-1, 2, n).astype(np.int8)
    return x1, x2, y1, y2, lo, hi, order


@both_backends
def test_pair_mass_parity():
    args = _random_pair_inputs(5000, 11)
    a = kernels.get("compiled").pair_mass(*args)
    b = kernels.get("python").pair_mass(*args)
    assert np.array_equal(a, b)


def _frame(n, seed, coherent, noisy):
    rng = np.random.default_rng(seed)
    act_a = rng.integers(0, 2, n).astype(np.uint8)
    act_b = rng.integers(0, 2, n).astype(np.uint8)
    pa = rng.uniform(0.5, 3, n)
    pb = rng.choice([1.0, 2.0], n)
    s_a = rng.choice([-1, 1], n).astype(np.int8)
    s_b = rng.choice([-1, 1], n).astype(np.int8)
    coin_amb = rng.integers(0, 2, n).astype(np.uint8)
    coin_tie = rng.integers(0, 2, n).astype(np.uint8)
    nr = rng.normal(size=n) if noisy else np.empty(0)
    ni = rng.normal(size=n) if noisy else np.empty(0)
    edges = np.array([0.8, 1.0, 2.0, 3.5])
    open_codes = np.array([4, 1, 3, 2, 4], dtype=np.int8)
    point_codes = np.array([1, 3, 3, 2], dtype=np.int8)
    return (act_a, act_b, pa, pb, s_a, s_b, coin_amb, coin_tie, nr, ni, coherent, 0.3,
            0.05 if noisy else 0.0, edges, open_codes, point_codes)


@both_backends
@pytest.mark.parametrize("coherent,noisy,oracle", [(False, False, False), (True, False, False),
                                                   (False, True, False), (False, False, True)])
def test_tally_parity(coherent, noisy, oracle):
    args = _frame(20000, 5, coherent, noisy) + (oracle,)
    ca, aa, ea = kernels.get("compiled").tally_frame(*args)
    cb, ab, eb = kernels.get("python").tally_frame(*args)
    assert np.array_equal(ca, cb) and np.array_equal(aa, ab) and np.array_equal(ea, eb)
    assert ca.sum() == 20000


def test_tally_accounting(backend):
    args = _frame(5000, 9, False, False) + (False,)
    counts, amb, err = kernels.get().tally_frame(*args)
    ev = args[0].astype(int) + 2 * args[1].astype(int)
    assert np.array_equal(counts.sum(axis=1), np.bincount(ev, minlength=4))
    assert counts[0, 1:].sum() == 0  # idle is always silence when noiseless
    assert (amb <= counts.sum(axis=1)).all()
    assert err.sum() <= counts[3, 1:3].sum()


def test_use_backend_rejects_unknown():
    with pytest.raises(ValueError):
        kernels.use_backend("gpu")
    assert kernels.backend_name() in kernels.available_backends()
