import numpy as np
from hypothesis import given, settings, strategies as st

from prlab import subsets as sb
from _oracles import naive_moebius, naive_zeta


def vectors(max_bits=6):
    return st.integers(0, max_bits).flatmap(
        lambda n: st.lists(st.floats(-5, 5, allow_nan=False), min_size=1 << n, max_size=1 << n))


@given(vectors())
@settings(max_examples=60, deadline=None)
def test_zeta_matches_naive(f):
    f = np.array(f)
    assert np.allclose(sb.zeta_transform(f), naive_zeta(f), atol=1e-9)


@given(vectors())
@settings(max_examples=60, deadline=None)
def test_moebius_inverts_zeta(f):
    f = np.array(f)
    assert np.allclose(sb.moebius_transform(sb.zeta_transform(f)), f, atol=1e-9)
    assert np.allclose(sb.moebius_transform(f), naive_moebius(f), atol=1e-9)


def test_superset_sums_small():
    f = np.array([1.0, 2.0, 3.0, 4.0])
    # superset sums: {}:10, {0}:6, {1}:7, {0,1}:4
    assert np.allclose(sb.superset_sums(f), [10, 6, 7, 4])


def test_popcount_and_bits():
    assert list(sb.popcount(np.array([0, 1, 3, 7, 8]))) == [0, 1, 2, 3, 1]
    assert list(sb.all_popcounts(3)) == [0, 1, 1, 2, 1, 2, 2, 3]
    assert list(sb.bits_of(0b1011)) == [0, 1, 3]
    assert sb.mask_of([0, 1, 3]) == 0b1011
    assert sb.is_subset(0b010, 0b110) and not sb.is_subset(0b001, 0b110)


def test_complement_index():
    idx = sb.complement_index(3)
    assert list(idx) == [7, 6, 5, 4, 3, 2, 1, 0]
