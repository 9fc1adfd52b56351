"""Interval unions, Minkowski sums, Cantor systems, box counts, thickness.

Every nontrivial computation is checked against an independent oracle
implemented here from first principles: a pure-Python sweep-line merge,
an all-pairs Minkowski sum, integer-exact box counting on dyadic grids,
a bisection solver for the similarity dimension, and a quadratic-time
thickness evaluator that follows the definition literally.
"""

import json
from fractions import Fraction

import numpy as np
import pytest

from cantor_spectra import (
    BudgetExceededError,
    CantorSystem,
    Interval,
    IntervalSet,
    approximant,
    box_dimension_estimate,
    dim_sum_bound,
    gap_lemma_check,
    middle_alpha_system,
    minkowski_sum,
    normalize,
    similarity_dimension,
    thickness,
)
from cantor_spectra.cantor_core import _box_count

# --------------------------------------------------------------------------
# Oracles
# --------------------------------------------------------------------------


def merge_oracle(pairs):
    """Sweep-line union of closed intervals; touching intervals merge."""
    out = []
    for lo, hi in sorted(pairs):
        if out and lo <= out[-1][1]:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return [tuple(p) for p in out]


def minkowski_oracle(a_pairs, b_pairs):
    """All-pairs interval sums, then the sweep-line merge."""
    return merge_oracle(
        [(la + lb, ha + hb) for la, ha in a_pairs for lb, hb in b_pairs]
    )


def box_count_oracle(pairs, eps_num, eps_den, anchor_num, anchor_den):
    """Count grid cells [anchor + j*eps, anchor + (j+1)*eps) meeting the set.

    Endpoints, anchor and eps must be exactly representable as the given
    integer ratios so the count is computed in exact rational arithmetic.
    A closed interval [lo, hi] meets cell j for j in [floor((lo-a)/eps),
    max(that, ceil((hi-a)/eps) - 1)].
    """
    eps = Fraction(eps_num, eps_den)
    anchor = Fraction(anchor_num, anchor_den)
    cells = set()
    for lo, hi in pairs:
        j0 = (Fraction(lo) - anchor) / eps
        j1 = (Fraction(hi) - anchor) / eps
        lo_cell = j0.numerator // j0.denominator  # floor
        hi_cell = -((-j1.numerator) // j1.denominator) - 1  # ceil - 1
        hi_cell = max(hi_cell, lo_cell)
        cells.update(range(lo_cell, hi_cell + 1))
    return len(cells)


def similarity_dimension_oracle(ratios, tol=1e-14):
    """Bisection for the s with sum(r**s) == 1, straight from the definition."""
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if sum(r**mid for r in ratios) > 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def thickness_oracle(s):
    """Quadratic-time thickness: for each gap, scan outward for the nearest
    gap at least as long (or the hull end) and take bridge/gap; minimise."""
    los, his = s.los, s.his
    gaps = [(his[i], los[i + 1]) for i in range(len(los) - 1)]
    ratios = []
    for i, (glo, ghi) in enumerate(gaps):
        glen = ghi - glo
        left_edge = los[0]
        for j in range(i - 1, -1, -1):
            if gaps[j][1] - gaps[j][0] >= glen:
                left_edge = gaps[j][1]
                break
        right_edge = his[-1]
        for j in range(i + 1, len(gaps)):
            if gaps[j][1] - gaps[j][0] >= glen:
                right_edge = gaps[j][0]
                break
        ratios.append(min(glo - left_edge, right_edge - ghi) / glen)
    return min(ratios)


def random_pairs(rng, max_n=64, allow_degenerate=True):
    n = int(rng.integers(1, max_n + 1))
    los = rng.uniform(-5.0, 5.0, n)
    lengths = rng.uniform(0.0, 1.5, n)
    if allow_degenerate:
        lengths = lengths * (rng.random(n) < 0.85)
    return list(zip(los.tolist(), (los + lengths).tolist()))


# --------------------------------------------------------------------------
# Interval
# --------------------------------------------------------------------------


class TestInterval:
    def test_basic_properties(self):
        iv = Interval(-1.5, 2.5)
        assert iv.length == 4.0
        assert iv.contains(-1.5) and iv.contains(2.5) and iv.contains(0.0)
        assert not iv.contains(2.5000001)

    def test_degenerate_allowed(self):
        iv = Interval(3.0, 3.0)
        assert iv.length == 0.0
        assert iv.contains(3.0)

    def test_reversed_endpoints_rejected(self):
        with pytest.raises(ValueError):
            Interval(1.0, 0.0)

    def test_nonfinite_rejected(self):
        for bad in (np.nan, np.inf, -np.inf):
            with pytest.raises(ValueError):
                Interval(bad, 1.0)
            with pytest.raises(ValueError):
                Interval(0.0, bad)


# --------------------------------------------------------------------------
# IntervalSet construction and normalization
# --------------------------------------------------------------------------


class TestIntervalSet:
    def test_constructor_requires_disjoint_sorted(self):
        good = IntervalSet([Interval(0, 1), Interval(2, 3)])
        assert len(good) == 2
        with pytest.raises(ValueError):
            IntervalSet([Interval(2, 3), Interval(0, 1)])  # out of order
        with pytest.raises(ValueError):
            IntervalSet([Interval(0, 1), Interval(0.5, 2)])  # overlapping
        with pytest.raises(ValueError):
            IntervalSet([Interval(0, 1), Interval(1, 2)])  # touching

    def test_normalize_merges_and_sorts(self):
        s = normalize([Interval(2, 3), Interval(0, 1), Interval(1, 2)])
        assert len(s) == 1
        assert s.hull() == Interval(0, 3)

    def test_normalize_matches_oracle(self):
        rng = np.random.default_rng(np.random.Philox(7))
        for _ in range(200):
            pairs = random_pairs(rng)
            got = normalize([Interval(lo, hi) for lo, hi in pairs])
            want = merge_oracle(pairs)
            assert [(iv.lo, iv.hi) for iv in got] == want

    def test_empty_set(self):
        s = IntervalSet([])
        assert s.is_empty
        assert s.measure() == 0.0
        assert s.diameter == 0.0
        assert list(s.gaps()) == []
        with pytest.raises(ValueError):
            s.hull()

    def test_measure_diameter_hull(self):
        s = IntervalSet([Interval(0, 1), Interval(2, 2.5)])
        assert s.measure() == 1.5
        assert s.diameter == 2.5
        assert s.hull() == Interval(0, 2.5)

    def test_gaps(self):
        s = IntervalSet([Interval(0, 1), Interval(2, 3), Interval(5, 5)])
        assert [(g.lo, g.hi) for g in s.gaps()] == [(1, 2), (3, 5)]

    def test_contains_points_matches_brute_force(self):
        rng = np.random.default_rng(np.random.Philox(8))
        pairs = random_pairs(rng, max_n=32)
        s = normalize([Interval(lo, hi) for lo, hi in pairs])
        xs = rng.uniform(-6, 6, 500)
        got = s.contains_points(xs)
        want = np.array(
            [any(lo <= x <= hi for lo, hi in pairs) for x in xs]
        )
        assert np.array_equal(got, want)

    def test_contains_set(self):
        outer = IntervalSet([Interval(0, 1), Interval(2, 3)])
        inner = IntervalSet([Interval(0.1, 0.4), Interval(2, 3)])
        straddling = IntervalSet([Interval(0.5, 2.5)])
        assert outer.contains_set(inner)
        assert not outer.contains_set(straddling)
        assert outer.contains_set(IntervalSet([]))
        assert not IntervalSet([]).contains_set(inner)

    def test_equality(self):
        a = IntervalSet([Interval(0, 1)])
        b = normalize([Interval(0, 0.5), Interval(0.5, 1)])
        assert a == b
        assert a != IntervalSet([Interval(0, 1.0000001)])

    def test_json_roundtrip(self):
        s = normalize([Interval(-1.25, 0.5), Interval(1, 1)])
        blob = s.to_json()
        json.loads(blob)  # must be a valid JSON document
        assert IntervalSet.from_json(blob) == s

    def test_csv_roundtrip(self):
        s = normalize([Interval(-1.25, 0.5), Interval(1, 2)])
        assert IntervalSet.from_csv(s.to_csv()) == s


# --------------------------------------------------------------------------
# Minkowski sums
# --------------------------------------------------------------------------


class TestMinkowskiSum:
    def test_singletons(self):
        a = IntervalSet([Interval(1, 2)])
        b = IntervalSet([Interval(10, 10)])
        out = minkowski_sum(a, b)
        assert [(iv.lo, iv.hi) for iv in out] == [(11, 12)]

    def test_empty_operand(self):
        a = IntervalSet([Interval(0, 1)])
        assert minkowski_sum(a, IntervalSet([])).is_empty
        assert minkowski_sum(IntervalSet([]), a).is_empty

    def test_matches_all_pairs_oracle(self):
        rng = np.random.default_rng(np.random.Philox(9))
        for _ in range(100):
            ap = random_pairs(rng, max_n=40)
            bp = random_pairs(rng, max_n=40)
            a = normalize([Interval(lo, hi) for lo, hi in ap])
            b = normalize([Interval(lo, hi) for lo, hi in bp])
            got = minkowski_sum(a, b)
            want = minkowski_oracle(
                [(iv.lo, iv.hi) for iv in a], [(iv.lo, iv.hi) for iv in b]
            )
            assert [(iv.lo, iv.hi) for iv in got] == want

    def test_commutative(self):
        rng = np.random.default_rng(np.random.Philox(10))
        ap = random_pairs(rng, max_n=30)
        bp = random_pairs(rng, max_n=30)
        a = normalize([Interval(lo, hi) for lo, hi in ap])
        b = normalize([Interval(lo, hi) for lo, hi in bp])
        assert minkowski_sum(a, b) == minkowski_sum(b, a)

    def test_pair_budget(self):
        los = np.arange(5000, dtype=float) * 2.0
        ivs = [Interval(lo, lo + 0.5) for lo in los]
        big = IntervalSet(ivs)
        with pytest.raises(BudgetExceededError):
            minkowski_sum(big, big)  # 25e6 pairs exceeds the cap


# --------------------------------------------------------------------------
# Cantor systems and approximants
# --------------------------------------------------------------------------


class TestCantorSystem:
    def test_middle_alpha_bounds(self):
        with pytest.raises(ValueError):
            middle_alpha_system(0.0)
        with pytest.raises(ValueError):
            middle_alpha_system(0.5)
        sys_ = middle_alpha_system(1 / 3)
        assert len(sys_.branches) == 2

    def test_needs_two_branches(self):
        with pytest.raises(ValueError):
            CantorSystem(Interval(0, 1), ((0.5, 0.0),))

    def test_ratio_bounds(self):
        with pytest.raises(ValueError):
            CantorSystem(Interval(0, 1), ((1.0, 0.0), (0.2, 0.8)))
        with pytest.raises(ValueError):
            CantorSystem(Interval(0, 1), ((0.0, 0.0), (0.2, 0.8)))

    def test_branch_images_must_be_disjoint(self):
        with pytest.raises(ValueError):
            CantorSystem(Interval(0, 1), ((0.6, 0.0), (0.6, 0.4)))

    def test_branch_image_must_fit_in_base(self):
        with pytest.raises(ValueError):
            CantorSystem(Interval(0, 1), ((0.4, 0.0), (0.4, 0.7)))

    def test_approximant_depth_zero_is_base(self):
        sys_ = middle_alpha_system(1 / 3)
        a0 = approximant(sys_, 0)
        assert len(a0) == 1
        assert a0.hull() == sys_.base

    def test_approximant_counts_and_lengths(self):
        sys_ = middle_alpha_system(1 / 3)
        for depth in range(1, 8):
            a = approximant(sys_, depth)
            assert len(a) == 2**depth
            widths = a.his - a.los
            assert np.allclose(widths, 3.0**-depth, rtol=0, atol=1e-15)

    def test_approximants_are_nested(self):
        sys_ = middle_alpha_system(0.4)
        prev = approximant(sys_, 0)
        for depth in range(1, 6):
            cur = approximant(sys_, depth)
            assert prev.contains_set(cur)
            prev = cur

    def test_three_branch_count(self):
        sys_ = CantorSystem(
            Interval(0, 1), ((0.2, 0.0), (0.2, 0.4), (0.2, 0.8))
        )
        assert len(approximant(sys_, 3)) == 27

    def test_depth_budget(self):
        sys_ = middle_alpha_system(1 / 3)
        with pytest.raises(BudgetExceededError):
            approximant(sys_, 25)
        with pytest.raises(ValueError):
            approximant(sys_, -1)


# --------------------------------------------------------------------------
# Similarity dimension
# --------------------------------------------------------------------------


class TestSimilarityDimension:
    def test_middle_third_closed_form(self):
        d = similarity_dimension(middle_alpha_system(1 / 3))
        assert abs(d - np.log(2) / np.log(3)) <= 1e-12

    def test_middle_alpha_closed_form(self):
        # Two branches of ratio a give dimension log 2 / log(1/a).
        for a in (0.1, 0.25, 0.4):
            d = similarity_dimension(middle_alpha_system(a))
            want = np.log(2) / np.log(1 / a)
            assert abs(d - want) <= 1e-12

    def test_asymmetric_matches_bisection_oracle(self):
        sys_ = CantorSystem(Interval(0, 1), ((0.4, 0.0), (0.2, 0.8)))
        d = similarity_dimension(sys_)
        assert abs(d - similarity_dimension_oracle((0.4, 0.2))) <= 1e-11
        assert abs(0.4**d + 0.2**d - 1.0) <= 1e-11


# --------------------------------------------------------------------------
# Box counting and dimension estimates
# --------------------------------------------------------------------------


class TestBoxCounting:
    def test_exact_counts_on_dyadic_grids(self):
        # Dyadic endpoints and dyadic scales are exact in binary floats, so
        # the library count must match the rational-arithmetic oracle exactly.
        rng = np.random.default_rng(np.random.Philox(11))
        for _ in range(60):
            n = int(rng.integers(1, 20))
            los = rng.integers(0, 2000, n) / 1024.0
            his = los + rng.integers(0, 200, n) / 1024.0
            s = normalize([Interval(lo, hi) for lo, hi in zip(los, his)])
            pairs = [(iv.lo, iv.hi) for iv in s]
            anchor = s.los[0]
            for k in (3, 5, 7, 9):
                got = _box_count(s, 2.0**-k)
                want = box_count_oracle(
                    pairs, 1, 2**k, int(anchor * 1024), 1024
                )
                assert got == want

    def test_middle_third_power_law_is_exact(self):
        # At scale 3^-k the depth-d approximant (k <= d) occupies exactly 2^k
        # grid cells, so the fitted slope equals log 2 / log 3 and the fit is
        # perfectly collinear.
        deep = approximant(middle_alpha_system(1 / 3), 12)
        for k in range(3, 9):
            assert _box_count(deep, 3.0**-k) == 2**k
        dim, r2 = box_dimension_estimate(deep, [3.0**-k for k in range(3, 9)])
        assert abs(dim - np.log(2) / np.log(3)) <= 1e-9
        assert r2 >= 1.0 - 1e-12

    def test_full_interval_dimension_one(self):
        s = IntervalSet([Interval(0, 1)])
        dim, _ = box_dimension_estimate(s, [2.0**-k for k in range(3, 9)])
        assert abs(dim - 1.0) <= 1e-9

    def test_degenerate_sets(self):
        scales = [0.1, 0.05, 0.02, 0.01]
        assert box_dimension_estimate(IntervalSet([]), scales) == (0.0, 1.0)
        point = IntervalSet([Interval(2, 2)])
        assert box_dimension_estimate(point, scales) == (0.0, 1.0)

    def test_scale_validation(self):
        s = IntervalSet([Interval(0, 1)])
        with pytest.raises(ValueError):
            box_dimension_estimate(s, [0.1, 0.05, 0.02])  # fewer than 4
        with pytest.raises(ValueError):
            box_dimension_estimate(s, [0.1, 0.1, 0.05, 0.02])  # duplicates
        with pytest.raises(ValueError):
            box_dimension_estimate(s, [1.5, 0.1, 0.05, 0.02])  # >= diameter


# --------------------------------------------------------------------------
# Thickness and the gap lemma
# --------------------------------------------------------------------------


class TestThickness:
    def test_middle_third_thickness_one(self):
        sys_ = middle_alpha_system(1 / 3)
        for depth in range(1, 7):
            assert abs(thickness(sys_, depth) - 1.0) <= 1e-12

    def test_middle_alpha_closed_forms(self):
        # Branches of ratio a leave a central gap of length 1 - 2a, so every
        # gap sees bridges of relative length a: thickness a / (1 - 2a).
        for a in (0.4, 0.25, 0.2):
            want = a / (1 - 2 * a)
            got = thickness(middle_alpha_system(a), 4)
            assert abs(got - want) <= 1e-12 * max(1.0, want)

    def test_matches_quadratic_oracle_on_random_systems(self):
        rng = np.random.default_rng(np.random.Philox(12))
        for _ in range(20):
            cuts = np.sort(rng.uniform(0.05, 0.95, 4))
            a, b, c, d = cuts
            sys_ = CantorSystem(
                Interval(0.0, 1.0),
                ((a, 0.0), (c - b, b), (1.0 - d, d)),
            )
            for depth in (1, 2, 3):
                got = thickness(sys_, depth)
                want = thickness_oracle(approximant(sys_, depth))
                assert abs(got - want) <= 1e-12 * max(1.0, want)

    def test_depth_validation(self):
        with pytest.raises(ValueError):
            thickness(middle_alpha_system(1 / 3), 0)


class TestGapLemma:
    def test_strict_product_rule(self):
        assert gap_lemma_check(1.1, 1.0) is True
        assert gap_lemma_check(1.0, 1.0) is False  # product exactly 1
        assert gap_lemma_check(2.0, 0.4) is False
        assert gap_lemma_check(0.5, 2.5) is True  # 1.25 > 1

    def test_rejects_negative(self):
        assert gap_lemma_check(0.0, 1.0) is False  # zero is legal
        with pytest.raises(ValueError):
            gap_lemma_check(-0.1, 1.0)
        with pytest.raises(ValueError):
            gap_lemma_check(1.0, -2.0)


class TestDimSumBound:
    def test_sums_and_clamps(self):
        assert dim_sum_bound(0.5, 0.3) == 0.8
        assert dim_sum_bound(0.7, 0.7) == 1.0
        assert dim_sum_bound(0.0, 0.0) == 0.0
        assert dim_sum_bound(1.0, 1.0) == 1.0

    def test_domain(self):
        with pytest.raises(ValueError):
            dim_sum_bound(-0.1, 0.5)
        with pytest.raises(ValueError):
            dim_sum_bound(0.5, 1.1)
