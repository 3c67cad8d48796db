import numpy as np
import pytest

from lobphase import coupling, sim
from lobphase.book import (ORDINARY, ORDINARY_BINNED, STRICT_BINNED, BookState,
                           MatchRule, Order)
from lobphase.coupling import Edit
from lobphase.dist import (ArrivalSpec, make_partition, piecewise_linear_dist,
                           uniform_dist)


@pytest.fixture(scope="module")
def arrivals_10k(uniform_spec):
    return sim.materialize(sim.ArrivalStream(17, 10_000, uniform_spec))


class TestExtraOrder:
    def test_extra_bid_clean(self, arrivals_10k):
        r = coupling.check_extra_order(BookState(), Order("bid", 0.9, -1),
                                       arrivals_10k, MatchRule(ORDINARY))
        assert r.passed

    def test_extra_ask_clean(self, arrivals_10k):
        r = coupling.check_extra_order(BookState(), Order("ask", 0.1, -1),
                                       arrivals_10k, MatchRule(ORDINARY))
        assert r.passed

    def test_zero_arrivals_base_case(self, uniform_spec):
        empty = sim.materialize(sim.ArrivalStream(0, 0, uniform_spec))
        r = coupling.check_extra_order(BookState(), Order("bid", 0.5, -1),
                                       empty, MatchRule(ORDINARY))
        assert r.passed and r.n_events == 0

    def test_binned_rules_clean(self, arrivals_10k, uniform_spec):
        part = make_partition(20, uniform_spec)
        for kind in (ORDINARY_BINNED, STRICT_BINNED):
            r = coupling.check_extra_order(BookState(), Order("bid", 0.35, -1),
                                           arrivals_10k, MatchRule(kind, part))
            assert r.passed, (kind, r.details[:3])

    def test_nonempty_initial_state(self, arrivals_10k):
        base = BookState(bids=[0.15, 0.22], asks=[0.8, 0.88])
        r = coupling.check_extra_order(base, Order("bid", 0.6, -1),
                                       arrivals_10k, MatchRule(ORDINARY))
        assert r.passed


class TestBoundedPerturbation:
    def test_single_add_reduces_to_extra_order(self, arrivals_10k):
        r = coupling.check_bounded_perturbation(
            BookState(), [Edit(0, "add", "bid", 0.9)], arrivals_10k,
            MatchRule(ORDINARY), M=1)
        assert r.passed

    def test_three_edits(self, arrivals_10k):
        edits = [Edit(0, "add", "bid", 0.31), Edit(0, "add", "bid", 0.905),
                 Edit(100, "remove_best", "ask")]
        r = coupling.check_bounded_perturbation(BookState(), edits, arrivals_10k,
                                                MatchRule(ORDINARY), M=3)
        assert r.passed

    def test_no_edits_identical_books(self, arrivals_10k):
        r = coupling.check_bounded_perturbation(BookState(), [], arrivals_10k,
                                                MatchRule(ORDINARY), M=0)
        assert r.passed

    def test_edit_count_over_m_rejected(self, arrivals_10k):
        with pytest.raises(ValueError):
            coupling.check_bounded_perturbation(
                BookState(), [Edit(0, "add", "bid", 0.4)], arrivals_10k,
                MatchRule(ORDINARY), M=0)


class TestRefinement:
    def test_ordinary_and_strict_clean(self, uniform_spec):
        arr = sim.materialize(sim.ArrivalStream(23, 20_000, uniform_spec))
        fine = make_partition(100, uniform_spec)
        coarse = make_partition(10, uniform_spec)
        assert coupling.check_refinement(fine, coarse, ORDINARY_BINNED, arr).passed
        assert coupling.check_refinement(fine, coarse, STRICT_BINNED, arr).passed

    def test_identical_partitions(self, uniform_spec, arrivals_10k):
        part = make_partition(25, uniform_spec)
        assert coupling.check_refinement(part, part, ORDINARY_BINNED,
                                         arrivals_10k).passed
        assert coupling.check_refinement(part, part, STRICT_BINNED,
                                         arrivals_10k).passed

    def test_non_refinement_rejected(self, uniform_spec, arrivals_10k):
        fine = make_partition(9, uniform_spec)
        coarse = make_partition(4, uniform_spec)  # 1/4 not a boundary of ninths
        with pytest.raises(ValueError):
            coupling.check_refinement(fine, coarse, ORDINARY_BINNED, arrivals_10k)

    def test_detects_planted_violation(self, uniform_spec):
        # sanity that the checker can fail: compare strict on one partition
        # against ordinary on the same one (not a theorem; expected to trip)
        arr = sim.materialize(sim.ArrivalStream(2, 5_000, uniform_spec))
        part = make_partition(10, uniform_spec)
        rep_ord = coupling.check_refinement(part, part, ORDINARY_BINNED, arr)
        assert rep_ord.passed
        # mutate: run ordinary-vs-strict by hand through the private path
        from lobphase.book import apply_arrival
        d_bid = np.zeros(part.n_bins, dtype=int)
        book_f = BookState()
        book_c = BookState()
        tripped = False
        for i in range(arr.n):
            order = Order("bid" if arr.is_bid[i] else "ask",
                          float(arr.prices[i]), i)
            e_f = apply_arrival(book_f, MatchRule(STRICT_BINNED, part), order)
            e_c = apply_arrival(book_c, MatchRule(ORDINARY_BINNED, part), order)
            if (book_c.n_bids, book_c.n_asks) != (book_f.n_bids, book_f.n_asks):
                tripped = True
                break
        assert tripped


class TestSandwich:
    @pytest.mark.slow
    def test_ordering_and_gap_shrinks(self, uniform_spec):
        n = 300_000
        gaps = {}
        for n_bins in (10, 60):
            per_seed = []
            for seed in (1, 2, 3):
                sw = coupling.estimate_sandwich(n_bins, uniform_spec, n, seed)
                strict = sw.kappa_strict.Fb_kappa_hat
                fine = sw.kappa_fine.Fb_kappa_hat
                coarse = sw.kappa_coarse.Fb_kappa_hat
                tol = 2.0 * max(sw.kappa_strict.stderr_proxy,
                                sw.kappa_fine.stderr_proxy, 0.004)
                assert strict >= fine - tol
                assert fine >= coarse - tol
                per_seed.append(abs(strict - fine))
            gaps[n_bins] = np.mean(per_seed)
        assert gaps[60] < gaps[10] + 0.004

    def test_requires_four_bins(self, uniform_spec):
        with pytest.raises(ValueError):
            coupling.estimate_sandwich(3, uniform_spec, 100, 0)


class TestPerturbArrivals:
    def test_identical_specs_fully_coupled(self, uniform_spec):
        r = coupling.perturb_arrivals(uniform_spec, uniform_spec, 20_000, seed=4)
        assert r.diff_rate == 0.0
        assert np.array_equal(r.arrivals_a.prices, r.arrivals_b.prices)
        assert np.array_equal(r.arrivals_a.times, r.arrivals_b.times)

    def test_empty(self, uniform_spec):
        r = coupling.perturb_arrivals(uniform_spec, uniform_spec, 0, seed=4)
        assert r.arrivals_a.n == 0 and r.arrivals_b.n == 0

    @pytest.mark.slow
    def test_mixture_rate_and_threshold_bound(self, uniform_spec):
        # 5% triangular admixture on the bid side: f_B = 0.95 + 0.1 x
        mix = ArrivalSpec(piecewise_linear_dist([0.0, 1.0], [0.95, 1.05]),
                          uniform_dist())
        r = coupling.perturb_arrivals(uniform_spec, mix, 200_000, seed=4)
        # analytic uncoupled intensity: int |f_A - f_B| = 0.025 over bids
        assert r.uncoupled_analytic == pytest.approx(0.025, abs=1e-4)
        assert r.uncoupled_per_time == pytest.approx(r.uncoupled_analytic, rel=0.2)
        ra = sim.run_arrivals(MatchRule(ORDINARY), BookState(), r.arrivals_a,
                              max(1, r.arrivals_a.n // 100), seed=4)
        rb = sim.run_arrivals(MatchRule(ORDINARY), BookState(), r.arrivals_b,
                              max(1, r.arrivals_b.n // 100), seed=4)
        fa = sim.estimate_kappa(ra, uniform_spec).Fb_kappa_hat
        fb = sim.estimate_kappa(rb, mix).Fb_kappa_hat
        assert abs(fa - fb) <= r.uncoupled_per_time + 0.02


def test_report_rows_format(uniform_spec, arrivals_10k):
    r = coupling.check_extra_order(BookState(), Order("bid", 0.9, -1),
                                   arrivals_10k, MatchRule(ORDINARY), seed=17)
    rows = coupling.report_rows([r])
    assert rows == [("extra_order", 17, 10_000, 0, "")]
