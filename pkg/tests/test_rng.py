import ctypes
import ctypes.util
import math
import os

import numpy as np
import pytest
from scipy import stats as sps

from biasprobe import rng
from biasprobe.errors import InvalidParameter, SourceExhausted
from biasprobe.rng import (DrawLog, Lcg48Engine, Lcg48State, RecordedEngine, effective_period,
                           gaussian_draw, init_draw_count, lag_pairs, lcg48_next, make_engine,
                           marsaglia_bound, pearson, read_pairs_csv, read_recorded, run_seed,
                           srand48_state, write_pairs_csv, write_recorded)

A = 25214903917
C = 11
M = 2 ** 48
DATA = os.path.join(os.path.dirname(__file__), "data", "true_random_1e5.txt")


def test_lcg_transition_matches_formula():
    for s in [0, 1, 12345, M - 1, 0x5DEECE66D, 2 ** 47 + 3]:
        st, u = lcg48_next(Lcg48State(s))
        assert st.state == (A * s + C) % M
        assert u == st.state / M


def test_lcg_seed_zero_first_output_bigint_oracle():
    expected = ((A * 0 + C) % M) / M
    assert Lcg48Engine(0).random() == expected


def test_engine_matches_python_reference_stream():
    e = Lcg48Engine(987654321)
    got = e.random_array(1000)
    st = Lcg48State(987654321)
    ref = []
    for _ in range(1000):
        st, u = lcg48_next(st)
        ref.append(u)
    assert np.array_equal(got, np.array(ref))
    assert e.state == st


def test_same_seed_same_stream():
    a = Lcg48Engine(42).random_array(10_000)
    b = Lcg48Engine(42).random_array(10_000)
    assert np.array_equal(a, b)


def test_custom_constants():
    e = Lcg48Engine(5, multiplier=3, increment=7)
    assert e.random() == (3 * 5 + 7) / M


def test_state_validation():
    with pytest.raises(InvalidParameter):
        Lcg48State(M)
    with pytest.raises(InvalidParameter):
        Lcg48State(1, multiplier=-1)


def _libc_drand48():
    name = ctypes.util.find_library("c")
    if name is None:
        return None
    libc = ctypes.CDLL(name)
    if not hasattr(libc, "drand48"):
        return None
    libc.drand48.restype = ctypes.c_double
    libc.srand48.argtypes = [ctypes.c_long]
    return libc


def test_matches_system_drand48():
    libc = _libc_drand48()
    if libc is None:
        pytest.skip("drand48 not available")
    libc.srand48(20240601)
    e = Lcg48Engine.from_srand48(20240601)
    ours = e.random_array(500)
    theirs = np.array([libc.drand48() for _ in range(500)])
    assert np.array_equal(ours, theirs)


def test_srand48_state_layout():
    assert srand48_state(0) == 0x330E
    assert srand48_state(1) == 0x1330E


def test_outputs_in_unit_interval_and_uniform():
    u = Lcg48Engine(7).random_array(1_000_000)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert sps.kstest(u, "uniform").pvalue > 0.001


def test_run_seed_distinct_and_48_bit():
    seeds = {run_seed(3, r) for r in range(1000)}
    assert len(seeds) == 1000
    assert all(0 <= s < M for s in seeds)
    assert run_seed(3, 0) != run_seed(4, 0)


# -- gaussian --------------------------------------------------------------

def test_gaussian_sd_zero_is_mean():
    assert gaussian_draw(Lcg48Engine(1), 2.5, 0.0) == 2.5


def test_gaussian_negative_sd_rejected():
    with pytest.raises(InvalidParameter):
        gaussian_draw(Lcg48Engine(1), 0.0, -1.0)


def test_gaussian_moments():
    z = Lcg48Engine(11).normal_array(100_000)
    assert abs(z.mean()) < 0.02
    assert abs(z.std(ddof=1) - 1.0) < 0.02


def test_gaussian_is_inverse_cdf_of_one_uniform():
    e1, e2 = Lcg48Engine(5), Lcg48Engine(5)
    z = e1.normal_array(2000)
    u = e2.random_array(2000)
    assert e1.draws == e2.draws == 2000
    ref = sps.norm.ppf(u + 2.0 ** -49)
    assert np.allclose(z, ref, rtol=1e-13, atol=1e-13)


def test_gaussian_reproducible():
    assert np.array_equal(Lcg48Engine(9).normal_array(50), Lcg48Engine(9).normal_array(50))


def test_gaussian_draw_consumes_one_uniform():
    e = Lcg48Engine(1)
    gaussian_draw(e, 0, 1)
    assert e.draws == 1


def test_inverse_cdf_accuracy_across_range():
    from biasprobe._kernels import ppnd16
    p = np.concatenate([np.logspace(-300, -1, 200), np.linspace(0.01, 0.99, 500),
                        1 - np.logspace(-15, -1, 100)])
    got = np.array([ppnd16(v) for v in p])
    ref = sps.norm.ppf(p)
    assert np.allclose(got, ref, rtol=1e-14, atol=1e-14)


# -- draw log and recorded source ------------------------------------------

def test_draw_log_counts_and_taps():
    seen = []
    e = Lcg48Engine(3)
    e.log.tap = seen.append
    vals = [e.random() for _ in range(5)]
    arr = e.random_array(7)
    e.gauss()
    assert e.draws == 13
    assert seen[:5] == vals
    assert seen[5:12] == list(arr)
    e.log.reset()
    assert e.log.total_draws == 0


def test_recorded_engine_replays_and_exhausts():
    e = RecordedEngine([0.1, 0.2, 0.3])
    assert e.random() == 0.1
    assert list(e.random_array(2)) == [0.2, 0.3]
    assert e.cursor == 3 and e.remaining == 0
    with pytest.raises(SourceExhausted):
        e.random()
    assert e.cursor == 3


def test_recorded_exhaustion_inside_kernel_is_reported():
    e = RecordedEngine([0.5] * 10)
    with pytest.raises(SourceExhausted):
        e.random_array(11)


def test_recorded_engine_tap_replays_buffer():
    seen = []
    e = RecordedEngine([0.25, 0.5, 0.75])
    e.log.tap = seen.append
    e.random_array(3)
    assert seen == [0.25, 0.5, 0.75]


def test_recorded_values_validated():
    with pytest.raises(InvalidParameter):
        RecordedEngine([0.5, 1.0])


def test_recorded_file_roundtrip(tmp_path):
    vals = Lcg48Engine(2).random_array(100)
    p = tmp_path / "r.txt"
    write_recorded(p, vals)
    assert np.array_equal(read_recorded(p), vals)
    e = make_engine(f"recorded:{p}")
    assert np.array_equal(e.random_array(100), vals)


def test_recorded_file_bad_line(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("0.5\nabc\n")
    with pytest.raises(InvalidParameter, match="bad.txt:2"):
        read_recorded(p)


def test_make_engine_unknown():
    with pytest.raises(InvalidParameter):
        make_engine("mt19937")


def test_true_random_fixture_is_uniform():
    vals = read_recorded(DATA)
    assert vals.size == 100_000
    assert sps.kstest(vals, "uniform").pvalue > 0.001


# -- accounting --------------------------------------------------------------

@pytest.mark.parametrize("kind,dim,n,expected", [
    ("GA", 30, 5, 155), ("PSO", 30, 5, 305), ("GA", 1, 1, 2), ("pso", 2, 3, 15)])
def test_init_draw_count(kind, dim, n, expected):
    assert init_draw_count(kind, dim, n) == expected


@pytest.mark.parametrize("kind,dim,n,expected", [
    ("GA", 30, 5, 65), ("GA", 30, 100, 65), ("PSO", 30, 100, 6001), ("GA", 1, 1, 7)])
def test_effective_period(kind, dim, n, expected):
    assert effective_period(kind, dim, n) == expected


def test_accounting_rejects_bad_kind():
    with pytest.raises(InvalidParameter):
        effective_period("DE", 3, 3)


@pytest.mark.parametrize("n,expected", [(30, 36), (65, 41), (301, 125), (1201, 455), (6001, 2221)])
def test_marsaglia_bound_reference_values(n, expected):
    assert marsaglia_bound(n, 2 ** 48) == expected


def test_marsaglia_bound_exact_against_integer_oracle():
    for n in [2, 3, 7, 20, 21, 64]:
        for m in [1, 10, 2 ** 31, 2 ** 48]:
            k = marsaglia_bound(n, m)
            t = math.factorial(n) * m
            assert k ** n <= t < (k + 1) ** n


def test_marsaglia_bound_degenerate_and_monotone():
    assert marsaglia_bound(1, 12345) == 12345
    vals = [marsaglia_bound(10, m) for m in [1, 10, 100, 10 ** 4, 10 ** 8, 2 ** 48]]
    assert vals == sorted(vals)


# -- lag pairs ---------------------------------------------------------------

def test_lag_pairs_pooled_counts():
    s = np.arange(100) / 100
    assert len(lag_pairs(s, 7)) == 93
    assert len(lag_pairs(s, 1)) == 99


def test_lag_pairs_indices():
    s = np.arange(50, dtype=float)
    p = lag_pairs(s, 5)
    assert np.array_equal(p[:, 1] - p[:, 0], np.full(45, 5.0))
    q = lag_pairs(s, 5, offset=2)
    assert np.array_equal(q[:, 0], np.arange(2, 45, 5, dtype=float))


def test_lag_pairs_constant_on_diagonal():
    p = lag_pairs(np.full(20, 0.3), 3)
    assert np.all(p[:, 0] == p[:, 1])


def test_lag_pairs_short_sequence_empty():
    assert lag_pairs([0.1, 0.2], 5).shape == (0, 2)


def test_lag_pairs_validation():
    with pytest.raises(InvalidParameter):
        lag_pairs([0.1] * 10, 0)
    with pytest.raises(InvalidParameter):
        lag_pairs([0.1] * 10, 3, offset=3)


def test_lcg_lag_correlation_small():
    s = Lcg48Engine(1).random_array(100_000)
    assert abs(pearson(lag_pairs(s, 65))) < 0.01


def test_pairs_csv_roundtrip(tmp_path):
    p = lag_pairs(Lcg48Engine(4).random_array(50), 3)
    path = tmp_path / "pairs.csv"
    write_pairs_csv(path, p)
    assert path.read_text().splitlines()[0] == "x,y"
    assert np.array_equal(read_pairs_csv(path), p)
