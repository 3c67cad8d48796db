"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line with its measured values.

Every tolerance is pinned here.  Three checks probe statements that the
exact one-arrival enumeration and the simulations contradict (the published
five-bin drift vectors, the small-eps conditional contraction, and the
running-max first-half statement); they are implemented exactly as stated
and report their measured outcome either way.  The analysis lives in the
repository notes.
"""

import math
import time
from fractions import Fraction as F

import numpy as np
import pytest

from lobphase import analytics, coupling, lyapunov, sim
from lobphase.book import (ORDINARY, ORDINARY_BINNED, STRICT_BINNED, BookState,
                           MatchRule, Order)
from lobphase.coupling import Edit
from lobphase.dist import ArrivalSpec, make_partition, uniform_dist

SEEDS_MC = list(range(1, 11))        # criterion 3
SEEDS_COUPLING = list(range(1, 11))  # criterion 5
SEEDS_RUNMAX = list(range(20))       # criterion 9
N_MC = 1_000_000
N_COUPLING = 100_000
N_RUNMAX = 200_000


def emit(criterion: int, ok: bool, detail: str) -> None:
    print(f"\n[criterion {criterion:2d}] {'PASS' if ok else 'FAIL'}: {detail}")


@pytest.fixture(scope="module")
def spec() -> ArrivalSpec:
    return ArrivalSpec(uniform_dist(), uniform_dist())


@pytest.fixture(scope="module")
def mc_estimates(spec):
    t0 = time.perf_counter()
    ests = []
    for seed in SEEDS_MC:
        trace = sim.run(MatchRule(ORDINARY), BookState(),
                        sim.ArrivalStream(seed, N_MC, spec), N_MC // 100)
        ests.append(sim.estimate_kappa(trace, spec))
    return ests, time.perf_counter() - t0


def test_criterion_1_closed_form_threshold():
    analytics.kappa_uniform_exact()  # warm caches before timing
    t0 = time.perf_counter()
    kappa_b, kappa_a = analytics.kappa_uniform_exact()
    elapsed = time.perf_counter() - t0
    w = analytics.lambert_w_of_inv_e()
    residual = abs(w * math.exp(w) - math.exp(-1))
    ok = residual <= 1e-14 and 0.2177 <= kappa_b <= 0.2179 and elapsed < 1e-3
    emit(1, ok, f"kappa_b={kappa_b:.7f}, fixed-point residual={residual:.1e}, "
                f"runtime={elapsed*1e3:.3f} ms")
    assert ok


def test_criterion_2_oracle_triangle(spec):
    t0 = time.perf_counter()
    sol = analytics.shoot_kappa(spec, tol=1e-10, grid_n=1000)
    elapsed = time.perf_counter() - t0
    kb, ka = analytics.kappa_uniform_exact()
    err_kappa = abs(sol.kappa_b - kb)
    exact = analytics.varpi_uniform_exact(np.clip(sol.grid, kb, ka))
    sup_err = float(np.max(np.abs(sol.varpi_b - exact)))
    v_err = abs(sol.v_end - 1.0)
    ok = err_kappa <= 1e-6 and sup_err <= 1e-4 and v_err <= 1e-4 and elapsed < 1.0
    emit(2, ok, f"|kappa_shoot-exact|={err_kappa:.2e}, sup|w_b-closed|={sup_err:.2e}, "
                f"|v_end-1|={v_err:.2e}, runtime={elapsed:.2f} s")
    assert ok


def test_criterion_3_monte_carlo_threshold(mc_estimates):
    ests, elapsed = mc_estimates
    med_b = float(np.median([e.kappa_b_hat for e in ests]))
    med_a = float(np.median([e.kappa_a_hat for e in ests]))
    ok = 0.197 <= med_b <= 0.237 and 0.763 <= med_a <= 0.803 and elapsed < 60.0
    emit(3, ok, f"median kappa_b_hat={med_b:.4f}, median kappa_a_hat={med_a:.4f} "
                f"({len(ests)} seeds x {N_MC} arrivals in {elapsed:.1f} s)")
    assert ok


def test_criterion_4_density_figure(spec):
    part = make_partition(100, spec)
    trace = sim.run(MatchRule(ORDINARY), BookState(),
                    sim.ArrivalStream(7, N_MC, spec), N_MC // 100,
                    record_partition=part)
    pi_b, _ = sim.empirical_pi(trace, burn_in=True)
    kb, ka = analytics.kappa_uniform_exact()

    def antiderivative(x):
        # integral of the closed-form density ratio (uniform arrivals)
        return math.log(x) - (1 - x) * math.log(1 - x) - x * math.log(x)

    q = np.zeros(part.n_bins)
    for k, (lo, hi) in enumerate(zip(part.edges[:-1], part.edges[1:])):
        a, b = max(lo, kb), min(hi, ka)
        if a < b:
            q[k] = (1 - kb) * (antiderivative(b) - antiderivative(a))
    tv = 0.5 * (float(np.sum(np.abs(pi_b - q))) + abs(1.0 - pi_b.sum()))
    ok = tv <= 0.05
    emit(4, ok, f"TV(empirical best-bid occupation, discretized closed form)={tv:.4f} "
                f"(100 bins, n={N_MC}, burn-in 1/2)")
    assert ok


def test_criterion_5_pathwise_coupling_suites(spec):
    fine = make_partition(100, spec)
    coarse = make_partition(10, spec)
    edits = [Edit(0, "add", "bid", 0.31), Edit(0, "add", "bid", 0.905),
             Edit(0, "add", "ask", 0.91), Edit(0, "add", "ask", 0.955),
             Edit(500, "remove_best", "ask")]
    total = {}
    for seed in SEEDS_COUPLING:
        arr = sim.materialize(sim.ArrivalStream(seed, N_COUPLING, spec))
        reports = [
            coupling.check_extra_order(BookState(), Order("bid", 0.9, -1), arr,
                                       MatchRule(ORDINARY), seed=seed),
            coupling.check_bounded_perturbation(BookState(), edits, arr,
                                                MatchRule(ORDINARY), M=5,
                                                seed=seed),
            coupling.check_refinement(fine, coarse, ORDINARY_BINNED, arr,
                                      seed=seed),
            coupling.check_refinement(fine, coarse, STRICT_BINNED, arr,
                                      seed=seed),
        ]
        for r in reports:
            total[r.name] = total.get(r.name, 0) + r.violations
    ok = all(v == 0 for v in total.values())
    emit(5, ok, f"violations over {len(SEEDS_COUPLING)} seeds x {N_COUPLING} "
                f"arrivals: {total}")
    assert ok


def test_criterion_6_drift_certificate():
    cert0 = lyapunov.certify_drift(0)
    ok = cert0.passed and cert0.eps_star is not None and cert0.eps_star > 0
    emit(6, ok, f"exact certificate at eps=0: {'PASS' if cert0.passed else 'FAIL'}; "
                f"admissible eps upper limit = {cert0.eps_star} "
                f"(~{float(cert0.eps_star):.4f}); tightest product {cert0.min_margin_at_zero}")
    assert ok


def test_criterion_6_transcription_oracle():
    """The published drift vectors against the exhaustive one-arrival enumeration.

    The enumeration (independently confirmed by simulation at 3 sigma in
    test_lyapunov) disagrees with the published list: the published vectors
    drop joins into the bin holding the same side's best order and mis-sum
    two execution rates.  The criterion demands exact agreement, so this
    check fails; details are printed for every region.
    """
    rows = []
    matches = 0
    for code in lyapunov.DRIFT_REGIONS:
        printed = lyapunov.PUBLISHED_DRIFTS[code]
        derived = lyapunov.enumerated_drift_affine(code)
        same = printed == derived
        matches += same
        rows.append(f"  {code}: {'ok' if same else 'DIFFERS'}  "
                    f"published={_fmt_affine(printed)}  "
                    f"enumerated={_fmt_affine(derived)}")
    ok = matches == 9
    emit(6, ok, f"one-arrival enumeration reproduces {matches}/9 published "
                "drift vectors\n" + "\n".join(rows))
    assert ok, "published drift table does not match the exact one-arrival enumeration"


def _fmt_affine(vec):
    def one(c):
        c0, c1 = c
        if c1 == 0:
            return str(c0)
        return f"{c0}{'+' if c1 > 0 else '-'}{abs(c1)}e"
    return "(" + ", ".join(one(c) for c in vec) + ")"


def test_criterion_7_five_bin_conditional_drift():
    """Empirical conditional contraction of the recurrence gauge at eps=0.01.

    Conditioning uses the polytope gauge (max over the published normals):
    the published min form is nonpositive everywhere, which would make the
    level condition vacuous.  The exact enumeration shows the published
    normals only certify the true drifts for eps > 2/35, so at eps=0.01 some
    regions carry significantly positive conditional drift; the criterion is
    asserted as stated and the per-region table is printed.
    """
    rep = lyapunov.simulate_5bin(0.01, 1_000_000, seed=11, K=20.0)
    rows = rep.drift_negative_regions(min_visits=10_000, z=3.0)
    lines = [f"  {code}: mean dGauge={m:+.4f} (3se={3*se:.4f}) "
             f"{'negative' if neg else 'NOT negative'}"
             for code, m, se, neg in rows]
    ok = bool(rows) and all(neg for *_, neg in rows)
    emit(7, ok, f"eps=0.01, n=1e6, K=20: {sum(1 for r in rows if r[3])}/{len(rows)} "
                "qualifying regions contract at 3 sigma\n" + "\n".join(lines))
    assert ok, ("conditional gauge drift is not negative in every qualifying "
                "region at eps=0.01")


def test_criterion_8_geometric_bound(spec):
    rep = lyapunov.check_geometric_bound(0.4, 0.6, spec, 400_000, seed=5)
    ok = rep.passed and abs(rep.rho_bid - 0.5) < 1e-12 and abs(rep.rho_ask - 0.5) < 1e-12
    worst_b = max((e - b) for _, e, b, _ in rep.bid_tail)
    worst_a = max((e - b) for _, e, b, _ in rep.ask_tail)
    emit(8, ok, f"rho=1/2 both sides; worst (empirical - geometric bound): "
                f"bids {worst_b:+.4f}, asks {worst_a:+.4f} over "
                f"{rep.n_samples} samples (3-sigma slack applied per tail)")
    assert ok


def test_criterion_9_running_max_first_half(spec):
    """Majority-of-seeds restatement of the single-trajectory running-max figure.

    The counted band is bids strictly above the bin holding the lower
    threshold plus asks strictly below the bin holding the upper one
    (0-indexed bins 21 and 78 for 100 uniform bins).  The last record time
    of an ergodic band count is close to uniform on the run, so this
    majority statement sits at the coin-flip boundary; measured fractions
    are printed and the criterion asserted as stated on seeds 0..19.
    """
    fractions = []
    for seed in SEEDS_RUNMAX:
        ev = lyapunov.running_max_evidence(spec, N_RUNMAX, seed)
        fractions.append(ev.last_jump_fraction)
    first_half = sum(f < 0.5 for f in fractions)
    ok = first_half > len(fractions) // 2
    emit(9, ok, f"last-jump fraction < 1/2 in {first_half}/{len(fractions)} seeds "
                f"(median {np.median(fractions):.3f}); "
                f"fractions={np.round(fractions, 3).tolist()}")
    assert ok, "last running-max jump is not in the first half for a majority of seeds"


def test_criterion_10_three_bin_bound():
    bound = analytics.lower_bound_3bin(0.4, 0.6)
    kb, _ = analytics.kappa_uniform_exact()
    ok = bound == F(1, 10) and float(bound) <= kb
    emit(10, ok, f"lower_bound_3bin(0.4, 0.6) = {bound} (exact), "
                 f"<= F_b(kappa_b) = {kb:.4f}")
    assert ok
