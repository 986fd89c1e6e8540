import numpy as np
import pytest

from paircause import ObservedDataset, WinHalfTie, WinStrict
from paircause.contrasts import Difference
from paircause.estimators import estimate_individual
from paircause.pairs import PairCache, per_unit_averages, stream_ordered_pairs
from paircause.validation import random_dataset


def test_pair_counts(t4, t4_spec):
    all_pairs = list(stream_ordered_pairs(t4, t4_spec, "all"))
    disc = list(stream_ordered_pairs(t4, t4_spec, "discordant"))
    assert len(all_pairs) == 12          # n(n-1)
    assert len(disc) == 8                # 2 n1 n0
    assert sum(1 for p in disc if p.a_i == 1 and p.a_j == 0) == 4


def test_t4_treated_control_contrasts(t4, t4_spec):
    wanted = {(0, 2): 1.0, (0, 3): 1.0, (1, 2): 0.0, (1, 3): 1.0}
    got = {(p.i, p.j): p.w for p in stream_ordered_pairs(t4, t4_spec, "discordant")
           if p.a_i == 1 and p.a_j == 0}
    assert got == wanted


def test_row_major_order(t4, t4_spec):
    seq = [(p.i, p.j) for p in stream_ordered_pairs(t4, t4_spec, "all")]
    expect = [(i, j) for i in range(4) for j in range(4) if i != j]
    assert seq == expect


def test_discordant_matches_filtered_all(rng):
    ds, spec = random_dataset(rng)
    all_disc = [(p.i, p.j, p.w) for p in stream_ordered_pairs(ds, spec, "all")
                if p.discordant]
    disc = [(p.i, p.j, p.w) for p in stream_ordered_pairs(ds, spec, "discordant")]
    assert all_disc == disc


def test_x_antisymmetry_and_zero_sum(rng):
    ds, spec = random_dataset(rng, d_choices=(3,))
    terms = {(p.i, p.j): p.x for p in stream_ordered_pairs(ds, spec, "all")}
    total = np.zeros(3)
    for (i, j), x in terms.items():
        assert np.array_equal(terms[(j, i)], -x)
        total += x
    scale = 1e-9 * ds.n ** 2 * max(1.0, np.abs(ds.x).max())
    assert np.abs(total).max() <= scale


def test_antisymmetric_pair_sums(rng):
    ds, spec = random_dataset(rng)
    c = spec.antisymmetry_constant
    w = {(p.i, p.j): p.w for p in stream_ordered_pairs(ds, spec, "all")}
    for (i, j), wij in w.items():
        assert abs(wij + w[(j, i)] - c) < 1e-12


def test_t4_per_unit_averages(t4, t4_spec):
    avg = per_unit_averages(t4, t4_spec)
    assert avg.w_row.tolist() == [1.0, 0.5, 0.5, 0.0]


def test_all_ties_half(rng):
    ds = ObservedDataset(treat=[1, 0, 1, 0, 1], y=[2.0] * 5)
    avg = per_unit_averages(ds, WinHalfTie())
    assert np.all(avg.w_row == 0.5)
    assert np.all(avg.w_col == 0.5)


def test_averages_match_stream(rng):
    ds, spec = random_dataset(rng, n_range=(8, 14), d_choices=(2,))
    avg = per_unit_averages(ds, spec)
    opp = {i: [p for p in stream_ordered_pairs(ds, spec, "discordant") if p.i == i]
           for i in range(ds.n)}
    for i in range(ds.n):
        assert avg.w_row[i] == pytest.approx(np.mean([p.w for p in opp[i]]), abs=1e-12)
        assert np.allclose(avg.x_row[i], np.mean([p.x for p in opp[i]], axis=0),
                           atol=1e-12)
    assert np.array_equal(avg.x_col, -avg.x_row)


def test_treated_row_average_mean_is_pair_estimate(rng):
    for _ in range(5):
        ds, spec = random_dataset(rng)
        avg = per_unit_averages(ds, spec)
        fit = estimate_individual(ds, spec)
        treated_mean = avg.w_row[ds.treat == 1].mean()
        assert treated_mean == pytest.approx(fit.contrast_tc, abs=1e-12)


def test_dimension_mismatch_raises(t4):
    bi = ObservedDataset(treat=[1, 0, 1, 0], y=[[1.0, 2.0]] * 4)
    with pytest.raises(ValueError, match="outcome component"):
        PairCache(bi, WinStrict())
    with pytest.raises(ValueError, match="'all' or 'discordant'"):
        list(stream_ordered_pairs(t4, WinStrict(), "some"))


def test_blocked_design_matches_single_rows(rng):
    from paircause.estimators import PairDesign
    ds, spec = random_dataset(rng, n_range=(9, 12), d_choices=(2,), min_arm=3)
    cache = PairCache(ds, spec)
    for family in ("pairs", "pairs_ancova", "pairs_interacted", "pim_full"):
        design = PairDesign(family, cache)
        full = design.block(slice(0, ds.n))
        for i in range(ds.n):
            for j in range(ds.n):
                row = design.row(i, j)
                assert np.allclose(full[i, j], row, atol=0)
        # reversal identity: z_ji = reverse(z_ij)
        rev = design.reverse_block(full)
        for i in range(ds.n):
            for j in range(ds.n):
                assert np.allclose(rev[i, j], full[j, i], atol=0)


def test_difference_contrast_pairs(rng):
    ds = ObservedDataset(treat=[1, 0, 1, 0], y=[5.0, 3.0, 2.0, 1.0])
    pairs = {(p.i, p.j): p.w for p in stream_ordered_pairs(ds, Difference(), "all")}
    assert pairs[(0, 1)] == 2.0
    assert pairs[(1, 0)] == -2.0
