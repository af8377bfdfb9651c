import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qradon import (
    DeltaTriple,
    OutOfRangeError,
    SquareImage,
    StripImage,
    delta_inverse_profile,
    delta_tree,
    divergence_probe,
    forward,
    inverse,
    leaf_closed_form,
    lincomb,
    make_delta,
    merge_pair,
    merge_stage,
    pair_differences,
    perturb,
    rewindow,
    split_delta,
    sup_norm,
    unmerge_pair,
    unsplit_delta,
    values_equal,
)
from helpers import rand_square, rand_strip, valid_sino


FROZEN = SquareImage(1, np.array([[1, 2], [3, 4]]))


def test_differences_even_frozen():
    g = forward(FROZEN)
    even = pair_differences(g, "even")
    assert even.at(-1, 0) == 1  # g(0,0) - g(-1,1) = 3 - 2
    assert even.at(0, 0) == 2   # g(1,0) - g(0,1) = 7 - 5
    # partial sums of the even differences rebuild column 0 of the image
    assert even.at(-1, 0) + even.at(0, 0) == 3


def test_differences_zero():
    g = StripImage.zeros(2, -3, 4)
    for parity in ("even", "odd"):
        assert not np.any(pair_differences(g, parity).data)
    with pytest.raises(ValueError):
        pair_differences(g, "sideways")


def test_differences_telescope_merge_output(rng):
    # feeding a merged pair back in: even differences telescope f0
    f0 = rand_strip(rng, 1, 0, 4)
    f1 = rand_strip(rng, 1, 0, 4)
    g = merge_pair(f0, f1)
    even = pair_differences(g, "even")
    for h in range(-1, 4):
        for s in range(2):
            assert even.at(h, s) == f0.at(h + 1, s) - f0.at(h, s)


def test_unmerge_frozen_example():
    g0, g1 = unmerge_pair(forward(FROZEN))
    assert [g0.at(0, 0), g0.at(1, 0)] == [1, 3]
    assert [g1.at(0, 0), g1.at(1, 0)] == [2, 4]
    assert g0.at(2, 0) == 0 and g1.at(2, 0) == 0  # settles to zero above


@given(
    a=arrays(np.int64, (4, 2), elements=st.integers(-9, 9)),
    b=arrays(np.int64, (4, 2), elements=st.integers(-9, 9)),
)
def test_unmerge_recovers_merged_pairs(a, b):
    f0 = StripImage(1, -1, 3, "sino", a)
    f1 = StripImage(1, -1, 3, "sino", b)
    g0, g1 = unmerge_pair(merge_pair(f0, f1))
    assert values_equal(g0, f0)
    assert values_equal(g1, f1)


def test_merge_of_unmerge_on_valid_stage_output(rng):
    g = valid_sino(rng, 2)
    g0, g1 = unmerge_pair(section_strip(g, 0), h_hi=g.h_hi)
    assert values_equal(merge_pair(g0, g1), section_strip(g, 0))


def section_strip(g, ell):
    from qradon import section

    return section(g, g.n, ell).to_strip()


def test_unmerge_of_delta_matches_split_triples():
    for h in (-2, 0, 3):
        for s in range(4):
            g = make_delta(2, h, s)
            g = rewindow(g, h, h + 9)
            g0, g1 = unmerge_pair(g)
            left, right = split_delta(DeltaTriple(h, s, 1))
            for child, trip in ((g0, left), (g1, right)):
                for hh in range(h, h + 9):
                    for ss in range(2):
                        want = trip.sigma if (ss == trip.s and hh >= trip.h) else 0
                        assert child.at(hh, ss) == want


def test_inverse_frozen_example():
    f = inverse(forward(FROZEN))
    np.testing.assert_array_equal(f.data, FROZEN.data)


@pytest.mark.parametrize("n", range(7))
def test_inverse_round_trip_integer(n, rng):
    for _ in range(10):
        f = rand_square(rng, n)
        np.testing.assert_array_equal(inverse(forward(f)).data, f.data)


@pytest.mark.parametrize("n", range(1, 7))
def test_inverse_round_trip_float_integer_valued(n, rng):
    # integer-valued float data round-trips exactly: all float64 ops stay
    # below 2**52 so every sum, difference and prefix sum is exact
    f = SquareImage(n, rand_square(rng, n).data.astype(np.float64))
    back = inverse(forward(f))
    np.testing.assert_array_equal(back.data, f.data)


@pytest.mark.parametrize("n", range(1, 7))
def test_inverse_round_trip_float_real_valued(n, rng):
    # genuinely real data: rounding puts the sinogram slightly off the
    # range and the inversion amplifies that like (2N)^(n-2); even exact
    # rational arithmetic on the rounded sinogram shows the same error
    from qradon.inverse import default_float_tol

    f = rand_square(rng, n, dtype=np.float64)
    g = forward(f)
    back = inverse(g)
    err = np.max(np.abs(back.data - f.data))
    assert err <= default_float_tol(n) * (1.0 + np.max(np.abs(g.data)))


def test_inverse_rejects_single_entry_perturbation(rng):
    g = valid_sino(rng, 3)
    bad = perturb(g, 2, 5, 1)
    with pytest.raises(OutOfRangeError) as info:
        inverse(bad)
    assert 1 <= info.value.stage <= 3


def test_inverse_allow_out_of_range_reports(rng):
    g = valid_sino(rng, 2)
    bad = perturb(g, 0, 1, 5)
    square, report = inverse(bad, allow_out_of_range=True)
    assert not report.passed
    assert square.data.shape == (4, 4)


def test_inverse_window_must_be_admissible(rng):
    g = valid_sino(rng, 2)
    too_wide = rewindow(g, g.h_lo - 1, g.h_hi)
    with pytest.raises(ValueError):
        inverse(too_wide)


def test_inverse_of_zero_sinogram():
    z = StripImage.zeros(2, -3, 4)
    assert not np.any(inverse(z).data)


def test_split_delta_frozen_examples():
    assert split_delta(DeltaTriple(0, 0, 1)) == (
        DeltaTriple(0, 0, 1), DeltaTriple(1, 0, -1),
    )
    assert split_delta(DeltaTriple(0, 1, 1)) == (
        DeltaTriple(1, 0, -1), DeltaTriple(1, 0, 1),
    )


@given(
    h=st.integers(-1000, 1000), s=st.integers(0, 1000),
    sigma=st.sampled_from([1, -1]),
)
@settings(max_examples=1000)
def test_unsplit_inverts_split(h, s, sigma):
    trip = DeltaTriple(h, s, sigma)
    assert unsplit_delta(split_delta(trip)) == trip


def test_unsplit_rejects_inconsistent_pairs():
    with pytest.raises(ValueError):
        unsplit_delta((DeltaTriple(0, 1, 1), DeltaTriple(5, 0, 1)))
    with pytest.raises(ValueError):
        unsplit_delta((DeltaTriple(0, 0, 1), DeltaTriple(1, 0, 1)))


def test_delta_tree_frozen_example():
    tree = delta_tree(0, 0, 2)
    np.testing.assert_array_equal(tree.heights(), [0, 1, 1, 2])
    np.testing.assert_array_equal(tree.signs(), [1, -1, -1, 1])
    np.testing.assert_array_equal(tree.slopes(), [0, 0, 0, 0])


@pytest.mark.parametrize("n", range(1, 7))
def test_leaf_sign_law(n):
    for s in range(1 << n):
        tree = delta_tree(-2, s, n)
        for t, leaf in enumerate(tree.leaves):
            assert leaf.sigma == (-1) ** bin(t ^ s).count("1")
            assert leaf.s == 0


@pytest.mark.parametrize("n", range(1, 7))
def test_leaf_closed_form_matches_tree(n):
    # corrected direct formula: branch k adds (s >> k) + 1 when taken
    for s in range(1 << n):
        tree = delta_tree(3, s, n)
        for t, leaf in enumerate(tree.leaves):
            assert leaf_closed_form(3, s, n, t) == leaf


def test_profile_level_one():
    p = delta_inverse_profile(1, 0, 0, 0, 5)
    np.testing.assert_array_equal(p.data[:, 0], [1, 1, 1, 1, 1])
    np.testing.assert_array_equal(p.data[:, 1], [0, -1, -1, -1, -1])


def test_profile_level_two_frozen_columns():
    p = delta_inverse_profile(2, 0, 0, 0, 6)
    i = np.arange(6)
    np.testing.assert_array_equal(p.data[:, 0], i + 1)
    np.testing.assert_array_equal(p.data[:, 1], -i)
    np.testing.assert_array_equal(p.data[:, 2], -i)
    np.testing.assert_array_equal(p.data[:, 3], np.maximum(i - 1, 0) * (i >= 2))


def test_profile_window_validation():
    with pytest.raises(ValueError):
        delta_inverse_profile(2, 0, 4, 0, 4)
    with pytest.raises(ValueError):
        delta_inverse_profile(2, -1, 0, 0, 4)  # window bottom above the delta
    with pytest.raises(ValueError):
        delta_inverse_profile(2, 0, 0, 2, 2)


@pytest.mark.parametrize("n", range(1, 4))
def test_profile_support_sign_and_degree(n):
    N = 1 << n
    for s in range(N):
        for h in (-N + 1, 0, 2):
            top = h + 4 * N
            tree = delta_tree(h, s, n)
            p = delta_inverse_profile(n, h, s, h, top)
            for j, leaf in enumerate(tree.leaves):
                col = p.data[:, j]
                heights = np.arange(h, top)
                below = col[heights < leaf.h]
                above = col[heights >= leaf.h]
                assert not np.any(below)
                assert np.all(above * leaf.sigma > 0)
                # degree n-1 growth: order-n finite differences vanish
                assert not np.any(np.diff(above, n=n))


@pytest.mark.parametrize("n", range(1, 4))
def test_profile_binomial_form(n):
    # conjectured closed form sigma_j * C(i - h_j + n - 1, n - 1)
    N = 1 << n
    for s in range(N):
        h = -s
        top = h + 4 * N
        tree = delta_tree(h, s, n)
        p = delta_inverse_profile(n, h, s, h, top)
        for j, leaf in enumerate(tree.leaves):
            expected = [
                leaf.sigma * math.comb(i - leaf.h + n - 1, n - 1) if i >= leaf.h else 0
                for i in range(h, top)
            ]
            np.testing.assert_array_equal(p.data[:, j], expected)


@pytest.mark.parametrize("n", range(1, 4))
def test_forward_of_profile_is_delta_on_safe_rows(n):
    N = 1 << n
    for s in range(N):
        for h in (-N + 1, 1):
            p = delta_inverse_profile(n, h, s, h, h + 4 * N)
            cur = p
            for m in range(1, n + 1):
                cur = merge_stage(cur, m)
            resid = lincomb(cur, make_delta(n, h, s), 1, -1)
            # entries needing rows above the window are polluted; the rest
            # must vanish, and every line from below h + 3N stays inside
            safe = rewindow(resid, resid.h_lo, h + 3 * N, clip=True)
            assert sup_norm(safe) == 0


def test_probe_level_one_constant():
    # hand enumeration: the defect is a single -1 at the cut boundary, any k
    for k in range(1, 7):
        assert divergence_probe(1, k) == 1


@pytest.mark.parametrize("n", (2, 3))
def test_probe_restricted_is_zero(n):
    for k in range(1, 7):
        assert divergence_probe(n, k, restricted=True) == 0


def test_probe_positive_and_monotone():
    vals = [divergence_probe(2, k) for k in range(1, 9)]
    assert all(v > 0 for v in vals)
    assert vals == sorted(vals)


def test_probe_validation():
    with pytest.raises(ValueError):
        divergence_probe(0, 1)
    with pytest.raises(ValueError):
        divergence_probe(2, 0)
