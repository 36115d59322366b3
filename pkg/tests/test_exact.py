from fractions import Fraction

import numpy as np
from hypothesis import given, settings, strategies as st

from mrclust.exact import FULL_EXPONENT_RANGE, ExactSums, exponent_range

finite = st.floats(allow_nan=False, allow_infinity=False, min_value=-1e300, max_value=1e300)


@settings(max_examples=100, deadline=None)
@given(st.lists(finite, min_size=1, max_size=40), st.integers(0, 2**32))
def test_sum_is_exact_and_order_free(values, seed):
    vals = np.array(values)
    labels = np.zeros(vals.size, dtype=np.int64)
    want = sum(Fraction(v) for v in values)
    acc = ExactSums.of(vals, labels, 1, FULL_EXPONENT_RANGE)
    assert acc.totals()[0][0] == want
    perm = np.random.default_rng(seed).permutation(vals.size)
    cut = vals.size // 2
    left = ExactSums.of(vals[perm[:cut]], labels[:cut], 1, FULL_EXPONENT_RANGE)
    left += ExactSums.of(vals[perm[cut:]], labels[cut:], 1, FULL_EXPONENT_RANGE)
    assert left.totals()[0][0] == want


def test_labels_columns_and_weights():
    vals = np.array([[0.1, 2.0], [0.2, -3.0], [0.3, 5.5]])
    labels = np.array([1, 0, 1])
    w = np.array([2, 1, 4])
    acc = ExactSums.of(vals, labels, 2, exponent_range(vals), w)
    t = acc.totals()
    assert t[0] == [Fraction(0.2), Fraction(-3.0)]
    assert t[1][0] == 2 * Fraction(0.1) + 4 * Fraction(0.3)
    assert t[1][1] == Fraction(4.0) + Fraction(22.0)


def test_classic_cancellation():
    vals = np.array([1e16, 1.0, -1e16])
    acc = ExactSums.of(vals, np.zeros(3, dtype=np.int64), 1, exponent_range(vals))
    assert acc.totals()[0][0] == 1
