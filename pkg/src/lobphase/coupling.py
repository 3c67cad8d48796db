"""Coupled-book experiments that check the pathwise monotonicity laws.

Every check runs two (or three) books on the *same* realized arrivals and
asserts an exact pathwise relation after every single arrival: these are
almost-sure statements, so one violation on any seed is a failure, not noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .book import (ORDINARY_BINNED, STRICT_BINNED, BookState, MatchRule, Order,
                   apply_arrival)
from .dist import (ArrivalSpec, BinPartition, make_partition, refines,
                   union_refinement)
from .sim import (ArrivalStream, Arrivals, KappaEstimate, estimate_kappa,
                  field_generator, materialize, run_arrivals)

__all__ = [
    "CouplingReport",
    "Edit",
    "check_extra_order",
    "check_bounded_perturbation",
    "check_refinement",
    "estimate_sandwich",
    "SandwichEstimates",
    "perturb_arrivals",
    "PerturbResult",
    "report_rows",
]

MAX_DETAILS = 20


@dataclass
class CouplingReport:
    name: str
    seed: int
    n_events: int
    violations: int = 0
    first_violation_index: Optional[int] = None
    details: list = field(default_factory=list)

    def record(self, index: int, expected: str, observed: str) -> None:
        if self.first_violation_index is None:
            self.first_violation_index = index
        self.violations += 1
        if len(self.details) < MAX_DETAILS:
            self.details.append((index, expected, observed))

    @property
    def passed(self) -> bool:
        return self.violations == 0


def report_rows(reports) -> list[tuple]:
    """(check, seed, arrivals, violations, first_violation_index) rows for CSV."""
    return [(r.name, r.seed, r.n_events, r.violations,
             "" if r.first_violation_index is None else r.first_violation_index)
            for r in reports]


class _Diff:
    """Signed multiset difference (perturbed minus base), kept incrementally."""

    __slots__ = ("bids", "asks")

    def __init__(self):
        self.bids: dict[float, int] = {}
        self.asks: dict[float, int] = {}

    def bump(self, side: str, price: float, delta: int) -> None:
        d = self.bids if side == "bid" else self.asks
        new = d.get(price, 0) + delta
        if new:
            d[price] = new
        else:
            d.pop(price, None)

    def apply_effect(self, eff, sign: int) -> None:
        # sign +1 for the perturbed book, -1 for the base book
        if eff.outcome == "joined":
            self.bump(eff.side, eff.price, sign)
        elif not eff.counterparty_is_reservoir:
            opp = "ask" if eff.side == "bid" else "bid"
            self.bump(opp, eff.counterparty_price, -sign)

    def size(self) -> int:
        return sum(abs(v) for v in self.bids.values()) + \
            sum(abs(v) for v in self.asks.values())

    def as_tuple(self):
        return (tuple(sorted(self.bids.items())), tuple(sorted(self.asks.items())))


def _classify_single(diff: _Diff, extra_side: str):
    """For the one-extra-order coupling: 'extra' / 'missing' / None (invalid)."""
    opp = "asks" if extra_side == "bid" else "bids"
    own = getattr(diff, extra_side + "s")
    other = getattr(diff, opp)
    if len(own) == 1 and not other:
        ((p, c),) = own.items()
        if c == 1:
            return "extra", p
    if len(other) == 1 and not own:
        ((p, c),) = other.items()
        if c == -1:
            return "missing", p
    return None, None


def check_extra_order(base: BookState, extra: Order, arrivals: Arrivals | ArrivalStream,
                      rule: MatchRule, seed: int = 0) -> CouplingReport:
    """One extra resting order must stay a single-order difference forever.

    For an extra bid the difference is always exactly one extra bid or one
    missing ask (mirrored for an extra ask), and once the difference leaves
    the original price it never returns to an extra order at that price.
    """
    arr = materialize(arrivals) if isinstance(arrivals, ArrivalStream) else arrivals
    left = base.clone()
    tilde = base.clone()
    tilde.insert(extra.side, extra.price)
    diff = _Diff()
    diff.bump(extra.side, extra.price, +1)
    report = CouplingReport("extra_order", seed, arr.n)
    left_original = False
    for i in range(arr.n):
        order = Order("bid" if arr.is_bid[i] else "ask", float(arr.prices[i]), i)
        e_base = apply_arrival(left, rule, order)
        e_tilde = apply_arrival(tilde, rule, order)
        diff.apply_effect(e_tilde, +1)
        diff.apply_effect(e_base, -1)
        kind, price = _classify_single(diff, extra.side)
        if kind is None:
            report.record(i, "single extra/missing order", repr(diff.as_tuple()))
            continue
        if kind != "extra" or price != extra.price:
            left_original = True
        elif left_original:
            report.record(i, "never back to the original extra order",
                          f"extra {extra.side} at {price}")
    return report


@dataclass(frozen=True)
class Edit:
    """One perturbation applied to the tilde book just before arrival `index`."""

    index: int
    op: str           # "add" | "remove_best"
    side: str         # "bid" | "ask"
    price: float | None = None


def check_bounded_perturbation(base: BookState, edits: list[Edit],
                               arrivals: Arrivals | ArrivalStream, rule: MatchRule,
                               M: int, seed: int = 0) -> CouplingReport:
    """At most M edited orders keep the books within M orders forever."""
    if len(edits) > M:
        raise ValueError(f"{len(edits)} edits exceed the stated bound M={M}")
    arr = materialize(arrivals) if isinstance(arrivals, ArrivalStream) else arrivals
    left = base.clone()
    tilde = base.clone()
    diff = _Diff()
    pending = sorted(edits, key=lambda e: e.index)
    report = CouplingReport("bounded_perturbation", seed, arr.n)
    nxt = 0

    def apply_edits(i: int):
        nonlocal nxt
        while nxt < len(pending) and pending[nxt].index <= i:
            e = pending[nxt]
            if e.op == "add":
                tilde.insert(e.side, e.price)
                diff.bump(e.side, e.price, +1)
            elif e.op == "remove_best":
                p = tilde.pop_best(e.side)
                diff.bump(e.side, p, -1)
            else:
                raise ValueError(f"unknown edit op {e.op!r}")
            nxt += 1

    for i in range(arr.n):
        apply_edits(i)
        order = Order("bid" if arr.is_bid[i] else "ask", float(arr.prices[i]), i)
        e_base = apply_arrival(left, rule, order)
        e_tilde = apply_arrival(tilde, rule, order)
        diff.apply_effect(e_tilde, +1)
        diff.apply_effect(e_base, -1)
        if diff.size() > M:
            report.record(i, f"diff size <= {M}", f"size {diff.size()}")
    return report


def check_refinement(fine: BinPartition, coarse: BinPartition, kind: str,
                     arrivals: Arrivals | ArrivalStream, seed: int = 0,
                     initial: BookState | None = None) -> CouplingReport:
    """Count-domination between a finer and a coarser binned book.

    With the ordinary binned rule the coarser book holds pointwise fewer
    orders (bigger bins execute more); with the strict rule the inequalities
    reverse.  Checked at every fine-partition boundary (plus the totals)
    after every arrival.
    """
    if kind not in (ORDINARY_BINNED, STRICT_BINNED):
        raise ValueError("refinement check applies to binned rules")
    if not refines(fine, coarse):
        raise ValueError("`fine` does not refine `coarse`")
    arr = materialize(arrivals) if isinstance(arrivals, ArrivalStream) else arrivals
    rule_f = MatchRule(kind, fine)
    rule_c = MatchRule(kind, coarse)
    book_f = (initial.clone() if initial else BookState())
    book_c = (initial.clone() if initial else BookState())
    n_bins = fine.n_bins
    # d arrays hold (coarse - fine) per fine bin; ordinary demands every
    # prefix (bids) / suffix (asks) of d to be <= 0, strict demands >= 0.
    d_bid = np.zeros(n_bins, dtype=np.int64)
    d_ask = np.zeros(n_bins, dtype=np.int64)
    sign = 1 if kind == ORDINARY_BINNED else -1
    bins = fine.index(arr.prices)
    name = f"refinement_{'ordinary' if kind == ORDINARY_BINNED else 'strict'}"
    report = CouplingReport(name, seed, arr.n)

    def bump(d, k, delta):
        d[k] += delta

    for i in range(arr.n):
        order = Order("bid" if arr.is_bid[i] else "ask", float(arr.prices[i]), i)
        k_arr = int(bins[i])
        for book, rule, w in ((book_f, rule_f, -1), (book_c, rule_c, +1)):
            eff = apply_arrival(book, rule, order)
            if eff.outcome == "joined":
                bump(d_bid if order.side == "bid" else d_ask, k_arr, w)
            elif not eff.counterparty_is_reservoir:
                k_c = fine.index(eff.counterparty_price)
                if order.side == "bid":
                    bump(d_ask, k_c, -w)
                else:
                    bump(d_bid, k_c, -w)
        pb = np.cumsum(sign * d_bid)
        pa = np.cumsum(sign * d_ask[::-1])
        if pb.max() > 0 or pa.max() > 0:
            report.record(i, "coarse/fine count domination",
                          f"max prefix excess bid={int(pb.max())} ask={int(pa.max())}")
    return report


@dataclass(frozen=True)
class SandwichEstimates:
    kappa_strict: KappaEstimate
    kappa_fine: KappaEstimate
    kappa_coarse: KappaEstimate
    n_bins_fine: int
    n_bins_coarse: int


def estimate_sandwich(n_bins: int, spec: ArrivalSpec, n_events: int,
                      seed: int = 0) -> SandwichEstimates:
    """Strict(N) / ordinary(N) / ordinary(N/2) threshold estimates on shared arrivals.

    The strict book bounds the ordinary continuum threshold from above and the
    coarser ordinary book from below; the strict/ordinary gap shrinks as the
    partition refines.
    """
    if n_bins < 4:
        raise ValueError("need at least 4 bins")
    coarse = make_partition(max(2, n_bins // 2), spec)
    fine = union_refinement(make_partition(n_bins, spec), coarse)
    arr = materialize(ArrivalStream(seed, n_events, spec))
    record_every = max(1, n_events // 100)
    traces = {}
    for label, rule in (("strict", MatchRule(STRICT_BINNED, fine)),
                        ("fine", MatchRule(ORDINARY_BINNED, fine)),
                        ("coarse", MatchRule(ORDINARY_BINNED, coarse))):
        traces[label] = run_arrivals(rule, BookState(), arr, record_every, seed=seed)
    return SandwichEstimates(
        kappa_strict=estimate_kappa(traces["strict"], spec),
        kappa_fine=estimate_kappa(traces["fine"], spec),
        kappa_coarse=estimate_kappa(traces["coarse"], spec),
        n_bins_fine=fine.n_bins, n_bins_coarse=coarse.n_bins)


@dataclass(frozen=True)
class PerturbResult:
    arrivals_a: Arrivals
    arrivals_b: Arrivals
    diff_rate: float          # uncoupled fraction of all realized arrivals
    uncoupled_per_time: float
    uncoupled_analytic: float
    n_common: int
    n_a_only: int
    n_b_only: int
    horizon: float


def _intensity(spec: ArrivalSpec, is_bid: np.ndarray, prices: np.ndarray) -> np.ndarray:
    """Arrival intensity on (side, price): total rate 2 split by side probability."""
    out = np.where(
        is_bid,
        2.0 * spec.p_b * np.asarray(spec.bid_dist.density(prices), dtype=float),
        2.0 * (1.0 - spec.p_b) * np.asarray(spec.ask_dist.density(prices), dtype=float))
    return out


def perturb_arrivals(spec_a: ArrivalSpec, spec_b: ArrivalSpec, n_events: int,
                     seed: int = 0) -> PerturbResult:
    """Maximal coupling of two arrival processes.

    Candidate events are drawn from the envelope intensity; each accepted
    event lands in both streams with the pointwise min/max probability and
    otherwise only in the stream with the larger intensity there.  The
    realized uncoupled rate bounds how far downstream threshold estimates can
    drift apart (each uncoupled arrival is one bounded perturbation).
    """
    horizon = n_events / 2.0  # each stream has total rate 2
    if n_events == 0:
        empty = Arrivals(np.zeros(0, bool), np.zeros(0), np.zeros(0), spec_a.p_b)
        empty_b = Arrivals(np.zeros(0, bool), np.zeros(0), np.zeros(0), spec_b.p_b)
        return PerturbResult(empty, empty_b, 0.0, 0.0,
                             _analytic_uncoupled(spec_a, spec_b), 0, 0, 0, 0.0)
    gen_time = field_generator(seed, "couple_time")
    n_cand = int(gen_time.poisson(4.0 * horizon))
    times = np.sort(gen_time.random(n_cand)) * horizon
    pick_a = field_generator(seed, "couple_pick").random(n_cand) < 0.5
    u_side = field_generator(seed, "couple_side").random(n_cand)
    u_price = field_generator(seed, "couple_price").random(n_cand)
    u_accept = field_generator(seed, "couple_accept").random(n_cand)
    u_class = field_generator(seed, "couple_class").random(n_cand)

    is_bid = np.where(pick_a, u_side < spec_a.p_b, u_side < spec_b.p_b)
    prices = np.empty(n_cand)
    for picked, spec in ((pick_a, spec_a), (~pick_a, spec_b)):
        bid_sel = picked & is_bid
        ask_sel = picked & ~is_bid
        prices[bid_sel] = np.asarray(spec.bid_dist.quantile(u_price[bid_sel]), dtype=float)
        prices[ask_sel] = np.asarray(spec.ask_dist.quantile(u_price[ask_sel]), dtype=float)

    lam_a = _intensity(spec_a, is_bid, prices)
    lam_b = _intensity(spec_b, is_bid, prices)
    lam_max = np.maximum(lam_a, lam_b)
    lam_min = np.minimum(lam_a, lam_b)
    envelope = lam_a + lam_b
    accepted = u_accept * envelope < lam_max
    common = accepted & (u_class * lam_max < lam_min)
    a_only = accepted & ~common & (lam_a > lam_b)
    b_only = accepted & ~common & ~(lam_a > lam_b)

    in_a = common | a_only
    in_b = common | b_only
    arr_a = Arrivals(is_bid[in_a], prices[in_a], times[in_a], spec_a.p_b,
                     meta={"seed": seed, "coupled": "A"})
    arr_b = Arrivals(is_bid[in_b], prices[in_b], times[in_b], spec_b.p_b,
                     meta={"seed": seed, "coupled": "B"})
    n_common = int(common.sum())
    n_a_only = int(a_only.sum())
    n_b_only = int(b_only.sum())
    total = arr_a.n + arr_b.n
    return PerturbResult(
        arrivals_a=arr_a, arrivals_b=arr_b,
        diff_rate=(n_a_only + n_b_only) / max(1, total),
        uncoupled_per_time=(n_a_only + n_b_only) / horizon,
        uncoupled_analytic=_analytic_uncoupled(spec_a, spec_b),
        n_common=n_common, n_a_only=n_a_only, n_b_only=n_b_only,
        horizon=horizon)


def _analytic_uncoupled(spec_a: ArrivalSpec, spec_b: ArrivalSpec,
                        n_grid: int = 4097) -> float:
    """Integral of |intensity difference| over both sides (uncoupled rate)."""
    lo = min(spec_a.bid_dist.support[0], spec_b.bid_dist.support[0],
             spec_a.ask_dist.support[0], spec_b.ask_dist.support[0])
    hi = max(spec_a.bid_dist.support[1], spec_b.bid_dist.support[1],
             spec_a.ask_dist.support[1], spec_b.ask_dist.support[1])
    xs = np.linspace(lo, hi, n_grid)
    total = 0.0
    for side in (True, False):
        flags = np.full(xs.shape, side)
        la = _intensity(spec_a, flags, xs)
        lb = _intensity(spec_b, flags, xs)
        total += float(np.trapezoid(np.abs(la - lb), xs))
    return total
