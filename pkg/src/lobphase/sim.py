"""Seeded arrival streams, the event loop with trajectory recorders, and
Monte-Carlo estimators for the phase-transition thresholds and occupation
measures.

Randomness comes from counter-based Philox streams keyed by (seed, field tag),
so the same seed always reproduces the same arrivals and coupled experiments
can share one arrival stream across book variants bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from .book import (NEG_INF, POS_INF, BookState, MatchRule, Order, apply_arrival)
from .dist import ArrivalSpec, BinPartition
from .output import config_hash

__all__ = [
    "ArrivalStream",
    "Arrivals",
    "Trace",
    "KappaEstimate",
    "field_generator",
    "gen_arrivals",
    "materialize",
    "reflected_arrivals",
    "run",
    "run_arrivals",
    "estimate_kappa",
    "empirical_pi",
    "write_trace_csvs",
]

EVENT_COUNT = "event_count"
POISSON = "poisson"

# Field tags for the splittable generator: one independent Philox stream per
# (seed, tag) pair.  New experiment-level fields get new tags so adding a
# recorder never perturbs the realized arrivals.
FIELD_TAGS = {
    "side": 1,
    "price": 2,
    "gap": 3,
    "couple_time": 11,
    "couple_pick": 12,
    "couple_side": 13,
    "couple_price": 14,
    "couple_accept": 15,
    "couple_class": 16,
}


def field_generator(seed: int, tag: str) -> np.random.Generator:
    """Counter-based generator for one named field of one seeded experiment."""
    key = np.array([np.uint64(seed & (2**64 - 1)), np.uint64(FIELD_TAGS[tag])])
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class ArrivalStream:
    """Reproducible i.i.d. arrival sequence: sides, prices, timestamps."""

    seed: int
    n_events: int
    spec: ArrivalSpec
    time_mode: str = EVENT_COUNT

    def __post_init__(self):
        if self.n_events < 0:
            raise ValueError("n_events must be nonnegative")
        if self.time_mode not in (EVENT_COUNT, POISSON):
            raise ValueError(f"unknown time mode {self.time_mode!r}")


@dataclass(frozen=True)
class Arrivals:
    """Materialized stream: parallel arrays, bids flagged in `is_bid`."""

    is_bid: np.ndarray
    prices: np.ndarray
    times: np.ndarray
    p_b: float
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.prices.size


def materialize(stream: ArrivalStream) -> Arrivals:
    """Draw the full arrival arrays for a stream (deterministic in the seed)."""
    n = stream.n_events
    spec = stream.spec
    is_bid = field_generator(stream.seed, "side").random(n) < spec.p_b
    u = field_generator(stream.seed, "price").random(n)
    prices = np.empty(n, dtype=float)
    prices[is_bid] = np.asarray(spec.bid_dist.quantile(u[is_bid]), dtype=float)
    prices[~is_bid] = np.asarray(spec.ask_dist.quantile(u[~is_bid]), dtype=float)
    if n and np.unique(prices).size != n:
        raise ValueError("arrival prices collide; price laws must be continuous")
    if stream.time_mode == EVENT_COUNT:
        # t_n = n/2 matches rate-1 bid and rate-1 ask arrivals in expectation.
        times = 0.5 * np.arange(1, n + 1, dtype=float)
    else:
        times = np.cumsum(field_generator(stream.seed, "gap").exponential(0.5, n))
    return Arrivals(is_bid, prices, times, spec.p_b,
                    meta={"seed": stream.seed, "time_mode": stream.time_mode})


def gen_arrivals(stream: ArrivalStream) -> Iterator[Order]:
    """Yield the stream as Order values (materialized internally)."""
    arr = materialize(stream)
    for i in range(arr.n):
        yield Order("bid" if arr.is_bid[i] else "ask", float(arr.prices[i]), i)


def reflected_arrivals(arr: Arrivals) -> Arrivals:
    """Mirror a stream through x -> 1 - x with sides swapped.

    For symmetric arrival laws the reflected stream drives the reflected
    trajectory exactly, which makes bid/ask statistics exchangeable.
    """
    return Arrivals(~arr.is_bid, 1.0 - arr.prices, arr.times.copy(), 1.0 - arr.p_b,
                    meta={**arr.meta, "reflected": True})


@dataclass
class Trace:
    """Recorded trajectory: checkpoints plus optional occupation/shape recorders."""

    seed: int
    n_events: int
    p_b: float
    record_every: int
    # checkpoint arrays, one entry per record_every events
    cp_time: np.ndarray
    cp_bids: np.ndarray
    cp_asks: np.ndarray
    cp_beta: np.ndarray
    cp_alpha: np.ndarray
    # conservation counters; an execution pairs the arriving order with the
    # opposite best, so each one removes a bid and an ask together
    bid_arrivals: int = 0
    ask_arrivals: int = 0
    bid_exec_by_ask: int = 0     # resting bids removed by arriving asks
    ask_exec_by_bid: int = 0     # resting asks removed by arriving bids
    reservoir_executions: int = 0
    elapsed: float = 0.0
    final_bids: int = 0
    final_asks: int = 0
    # binned recorders (None unless a recording partition was supplied)
    partition: Optional[BinPartition] = None
    occupation_b: Optional[np.ndarray] = None   # shape (2, n_bins): run halves
    occupation_a: Optional[np.ndarray] = None
    occupation_elapsed: Optional[np.ndarray] = None  # shape (2,)
    joint_hist: Optional[np.ndarray] = None
    top_shape_sums: Optional[np.ndarray] = None
    top_shape_visits: Optional[np.ndarray] = None
    # running-max recorder
    runmax_bins: Optional[tuple[int, int]] = None
    runmax_last_jump: int = -1
    runmax_value: int = 0
    runmax_series: Optional[np.ndarray] = None  # columns (t, count, running max)
    meta: dict = field(default_factory=dict)


@dataclass(frozen=True)
class KappaEstimate:
    """Tail-minimum threshold estimates from checkpoint ratios."""

    kappa_b_hat: float
    kappa_a_hat: float
    Fb_kappa_hat: float
    Fa_kappa_hat: float
    stderr_proxy: float


def run(rule: MatchRule, initial: BookState, stream: ArrivalStream,
        record_every: int, **recorder_opts) -> Trace:
    """Apply the whole stream to a copy of `initial`, recording checkpoints."""
    return run_arrivals(rule, initial, materialize(stream), record_every,
                        seed=stream.seed, **recorder_opts)


def run_arrivals(rule: MatchRule, initial: BookState, arr: Arrivals,
                 record_every: int, *, seed: int = 0,
                 record_partition: Optional[BinPartition] = None,
                 record_joint: bool = False,
                 record_top_shape: bool = False,
                 top_max_offset: int = 10,
                 runmax_bins: Optional[tuple[int, int]] = None,
                 runmax_series: bool = False) -> Trace:
    """Event loop over pre-materialized arrivals (shared-stream experiments)."""
    if record_every <= 0:
        record_every = max(1, arr.n)
    part = record_partition if record_partition is not None else rule.partition
    state = initial.clone()
    n = arr.n

    cp_t, cp_b, cp_a, cp_beta, cp_alpha = [], [], [], [], []
    nbins = part.n_bins if part is not None else 0
    bins = part.index(arr.prices) if part is not None else None
    occ_b = np.zeros((2, nbins)) if part is not None else None
    occ_a = np.zeros((2, nbins)) if part is not None else None
    occ_elapsed = np.zeros(2) if part is not None else None
    joint = np.zeros((nbins, nbins), dtype=np.int64) if record_joint else None
    top_sums = np.zeros((nbins, top_max_offset + 1), dtype=np.int64) if record_top_shape else None
    top_visits = np.zeros(nbins, dtype=np.int64) if record_top_shape else None
    bin_bid_counts = np.zeros(nbins, dtype=np.int64) if record_top_shape else None

    do_runmax = runmax_bins is not None
    if do_runmax and part is None:
        raise ValueError("running-max recorder needs a partition")
    k_b, k_a = runmax_bins if do_runmax else (0, 0)
    mid_count = 0
    run_max = 0
    last_jump = -1
    series = [] if (do_runmax and runmax_series) else None

    bid_arrivals = ask_arrivals = bid_exec = ask_exec = res_exec = 0
    half = n // 2
    is_bid, prices, times = arr.is_bid, arr.prices, arr.times
    t_prev = 0.0
    if part is not None:
        from bisect import bisect_right
        bnds = part.boundaries.tolist()
        beta_prev, beta_bin = NEG_INF, -1
        alpha_prev, alpha_bin = POS_INF, -1

    for i in range(n):
        side = "bid" if is_bid[i] else "ask"
        price = float(prices[i])
        t = times[i]
        if part is not None:
            # the interval ending at this arrival belongs to the pre-arrival state
            dt = t - t_prev
            h = 0 if i < half else 1
            occ_elapsed[h] += dt
            if beta_bin >= 0:
                occ_b[h, beta_bin] += dt
            if alpha_bin >= 0:
                occ_a[h, alpha_bin] += dt
        eff = apply_arrival(state, rule, Order(side, price, i))
        if side == "bid":
            bid_arrivals += 1
        else:
            ask_arrivals += 1
        if eff.outcome == "executed":
            if eff.counterparty_is_reservoir:
                res_exec += 1
            elif side == "bid":
                ask_exec += 1
            else:
                bid_exec += 1

        if part is not None:
            beta, alpha = eff.new_beta, eff.new_alpha
            if beta != beta_prev:
                beta_bin = bisect_right(bnds, beta) if beta != NEG_INF else -1
                beta_prev = beta
            if alpha != alpha_prev:
                alpha_bin = bisect_right(bnds, alpha) if alpha != POS_INF else -1
                alpha_prev = alpha
            if joint is not None and beta_bin >= 0 and alpha_bin >= 0:
                joint[beta_bin, alpha_bin] += 1
            if record_top_shape:
                if eff.outcome == "joined" and side == "bid":
                    bin_bid_counts[bins[i]] += 1
                elif (eff.outcome == "executed" and side == "ask"
                      and not eff.counterparty_is_reservoir):
                    bin_bid_counts[bisect_right(bnds, eff.counterparty_price)] -= 1
                if beta_bin >= 0:
                    top_visits[beta_bin] += 1
                    lo = max(0, beta_bin - top_max_offset)
                    top_sums[beta_bin, :beta_bin - lo + 1] += \
                        bin_bid_counts[lo:beta_bin + 1][::-1]
            if do_runmax:
                if eff.outcome == "joined":
                    pb = bins[i]
                    if side == "bid" and pb > k_b:
                        mid_count += 1
                    elif side == "ask" and pb < k_a:
                        mid_count += 1
                elif not eff.counterparty_is_reservoir:
                    cb = bisect_right(bnds, eff.counterparty_price)
                    if side == "ask" and cb > k_b:      # a bid above k_b left
                        mid_count -= 1
                    elif side == "bid" and cb < k_a:    # an ask below k_a left
                        mid_count -= 1
                if mid_count > run_max:
                    run_max = mid_count
                    last_jump = i
                if series is not None:
                    series.append((t, mid_count, run_max))
        t_prev = t

        if (i + 1) % record_every == 0:
            cp_t.append(t)
            cp_b.append(state.n_bids)
            cp_a.append(state.n_asks)
            cp_beta.append(state.beta())
            cp_alpha.append(state.alpha())

    trace = Trace(
        seed=seed, n_events=n, p_b=arr.p_b, record_every=record_every,
        cp_time=np.asarray(cp_t), cp_bids=np.asarray(cp_b, dtype=np.int64),
        cp_asks=np.asarray(cp_a, dtype=np.int64),
        cp_beta=np.asarray(cp_beta), cp_alpha=np.asarray(cp_alpha),
        bid_arrivals=bid_arrivals, ask_arrivals=ask_arrivals,
        bid_exec_by_ask=bid_exec, ask_exec_by_bid=ask_exec,
        reservoir_executions=res_exec,
        elapsed=float(times[-1]) if n else 0.0,
        final_bids=state.n_bids, final_asks=state.n_asks,
        partition=part, occupation_b=occ_b, occupation_a=occ_a,
        occupation_elapsed=occ_elapsed, joint_hist=joint,
        top_shape_sums=top_sums, top_shape_visits=top_visits,
        runmax_bins=runmax_bins if do_runmax else None,
        runmax_last_jump=last_jump, runmax_value=run_max,
        runmax_series=np.asarray(series) if series is not None else None,
        meta={**arr.meta, "rule": rule.kind},
    )
    return trace


def estimate_kappa(trace: Trace, spec: ArrivalSpec) -> KappaEstimate:
    """Threshold estimates from the liminf characterization.

    The long-run bid ratio B_T / T converges from above to the bid mass below
    the threshold, so we take the minimum ratio over the second half of the
    checkpoints (the first half is burn-in) and map it back through the
    quantile.  The ask side is mirrored.  The stderr proxy is the spread of
    the five smallest tail ratios.
    """
    ncp = trace.cp_time.size
    if ncp < 10:
        raise ValueError(f"need at least 10 checkpoints, have {ncp}")
    tail = slice(ncp // 2, None)
    t = trace.cp_time[tail]
    # Normalize so the ratio estimates F directly (bid arrival rate 2*p_b).
    fb_ratios = trace.cp_bids[tail] / (2.0 * trace.p_b * t)
    fa_ratios = trace.cp_asks[tail] / (2.0 * (1.0 - trace.p_b) * t)
    fb_hat = float(np.min(fb_ratios))
    fa_hat = float(np.min(fa_ratios))
    smallest = np.sort(fb_ratios)[:5]
    return KappaEstimate(
        kappa_b_hat=float(spec.bid_dist.quantile(min(fb_hat, 1.0))),
        kappa_a_hat=float(spec.ask_dist.quantile(max(0.0, 1.0 - fa_hat))),
        Fb_kappa_hat=fb_hat,
        Fa_kappa_hat=fa_hat,
        stderr_proxy=float(smallest[-1] - smallest[0]),
    )


def empirical_pi(trace: Trace, burn_in: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Occupation measures of the best-bid/best-ask bins, normalized by time.

    Normalization is by elapsed time, not by the measure's own mass: time the
    best quote spends outside the book (empty side) is real missing mass.
    By default the first half of the run is discarded as burn-in.
    """
    if trace.occupation_b is None:
        raise ValueError("trace carries no occupation recorder")
    if burn_in:
        elapsed = float(trace.occupation_elapsed[1])
        occ_b, occ_a = trace.occupation_b[1], trace.occupation_a[1]
    else:
        elapsed = float(trace.occupation_elapsed.sum())
        occ_b = trace.occupation_b.sum(axis=0)
        occ_a = trace.occupation_a.sum(axis=0)
    if elapsed <= 0:
        raise ValueError("zero elapsed time in the occupation window")
    return occ_b / elapsed, occ_a / elapsed


def write_trace_csvs(trace: Trace, outdir, cfg: dict | None = None) -> list:
    """Emit checkpoint/occupation/joint/top-shape CSVs for one trace."""
    from .output import write_csv  # local import keeps module load light
    meta = {"seed": trace.seed, "config": config_hash(cfg or trace.meta)}
    written = []
    written.append(write_csv(
        f"{outdir}/checkpoints.csv", ["T", "B_inf", "A_inf", "beta", "alpha"],
        zip(trace.cp_time, trace.cp_bids, trace.cp_asks, trace.cp_beta, trace.cp_alpha),
        meta))
    if trace.occupation_b is not None and trace.n_events:
        pi_b, pi_a = empirical_pi(trace)
        edges = trace.partition.edges
        written.append(write_csv(
            f"{outdir}/occupation.csv", ["bin_lo", "bin_hi", "pi_b", "pi_a"],
            zip(edges[:-1], edges[1:], pi_b, pi_a), meta))
    if trace.joint_hist is not None:
        rows = ((i, j, int(m)) for (i, j), m in np.ndenumerate(trace.joint_hist) if m)
        written.append(write_csv(
            f"{outdir}/joint.csv", ["bin_beta", "bin_alpha", "mass"], rows, meta))
    if trace.top_shape_sums is not None:
        visits = trace.top_shape_visits
        hi_bins = visits.size // 2  # condition on the best bid sitting in the upper half
        sel = np.arange(visits.size) >= hi_bins
        tot = max(1, int(visits[sel].sum()))
        means = trace.top_shape_sums[sel].sum(axis=0) / tot
        written.append(write_csv(
            f"{outdir}/top_shape.csv", ["offset", "mean_bids"],
            enumerate(means), meta))
    if trace.runmax_series is not None:
        written.append(write_csv(
            f"{outdir}/running_max.csv", ["t", "count", "running_max"],
            trace.runmax_series, meta))
    return written
