import numpy as np
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from prefixfilter.minplus import INF, minplus, minplus2d

values = st.one_of(st.integers(-20, 20).map(float), st.just(INF))


def naive(a, b):
    n = len(a) + len(b) - 1
    out = np.full(n, INF)
    arg = np.zeros(n, dtype=int)
    for k in range(n):
        for j in range(len(b)):
            i = k - j
            if 0 <= i < len(a) and a[i] + b[j] < out[k]:
                out[k], arg[k] = a[i] + b[j], j
    return out, arg


@given(arrays(float, st.integers(1, 9), elements=values), arrays(float, st.integers(1, 9), elements=values))
def test_minplus_matches_naive(a, b):
    out, arg = minplus(a, b)
    ref, ref_arg = naive(a, b)
    np.testing.assert_array_equal(out, ref)
    finite = np.isfinite(ref)
    # ties go to the smallest j
    np.testing.assert_array_equal(arg[finite], ref_arg[finite])


def test_minplus_tie_break():
    out, arg = minplus(np.zeros(3), np.zeros(4))
    assert out.tolist() == [0.0] * 6
    assert arg.tolist() == [0, 0, 0, 1, 2, 3]


@given(arrays(float, st.tuples(st.integers(1, 4), st.integers(1, 5)), elements=values),
       arrays(float, st.tuples(st.integers(1, 4), st.integers(1, 5)), elements=values))
def test_minplus2d_matches_naive(a, b):
    out = minplus2d(a, b)
    fa, ca = a.shape
    fb, cb = b.shape
    ref = np.full((fa + fb - 1, ca + cb - 1), INF)
    for i in range(fa):
        for j in range(ca):
            for n in range(fb):
                for m in range(cb):
                    ref[i + n, j + m] = min(ref[i + n, j + m], a[i, j] + b[n, m])
    np.testing.assert_array_equal(out, ref)
