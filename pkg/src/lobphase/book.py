"""Order-book state machine for ordinary, ordinary-binned, and strict-binned matching.

Resting orders are price heaps (all prices pairwise distinct on the events we
simulate), optionally backed by reservoirs: an infinite supply of bids or asks
at a fixed price.  Executing against a reservoir never depletes it, and
reservoir orders never enter the finite counters.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

from .dist import BinPartition

__all__ = [
    "ORDINARY",
    "ORDINARY_BINNED",
    "STRICT_BINNED",
    "BookInvariantError",
    "MatchRule",
    "Order",
    "ArrivalEffect",
    "BookState",
    "apply_arrival",
    "counts",
    "snapshot_rows",
    "write_snapshot",
]

ORDINARY = "ordinary"
ORDINARY_BINNED = "ordinary_binned"
STRICT_BINNED = "strict_binned"
_KINDS = (ORDINARY, ORDINARY_BINNED, STRICT_BINNED)

NEG_INF = float("-inf")
POS_INF = float("inf")


class BookInvariantError(AssertionError):
    """A book invariant failed; indicates a bug or degenerate (duplicate-price) input."""


@dataclass(frozen=True)
class MatchRule:
    kind: str
    partition: Optional[BinPartition] = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown matching rule {self.kind!r}")
        if self.kind != ORDINARY and self.partition is None:
            raise ValueError(f"{self.kind} requires a bin partition")


class Order(NamedTuple):
    side: str  # "bid" | "ask"
    price: float
    seq: int = 0


class ArrivalEffect(NamedTuple):
    outcome: str                    # "joined" | "executed"
    side: str                       # side of the arriving order
    price: float
    counterparty_price: float       # nan unless executed
    counterparty_is_reservoir: bool
    new_beta: float
    new_alpha: float


class BookState:
    """Mutable book: bid/ask price multisets plus optional infinite reservoirs."""

    __slots__ = ("_bid_heap", "_ask_heap", "_bid_set", "_ask_set",
                 "_bid_dead", "_ask_dead", "bid_reservoir", "ask_reservoir")

    def __init__(self, bids=(), asks=(), bid_reservoir: float | None = None,
                 ask_reservoir: float | None = None):
        if bid_reservoir is not None and ask_reservoir is not None:
            if not bid_reservoir < ask_reservoir:
                raise ValueError("bid reservoir must sit below ask reservoir")
        self.bid_reservoir = bid_reservoir
        self.ask_reservoir = ask_reservoir
        self._bid_heap: list[float] = []
        self._ask_heap: list[float] = []
        self._bid_set: set[float] = set()
        self._ask_set: set[float] = set()
        self._bid_dead: set[float] = set()
        self._ask_dead: set[float] = set()
        for p in bids:
            self.insert("bid", p)
        for p in asks:
            self.insert("ask", p)

    # -- queries ---------------------------------------------------------

    @property
    def n_bids(self) -> int:
        return len(self._bid_set)

    @property
    def n_asks(self) -> int:
        return len(self._ask_set)

    def best_bid(self) -> float | None:
        h, dead = self._bid_heap, self._bid_dead
        while h and -h[0] in dead:
            dead.discard(-heapq.heappop(h))
        return -h[0] if h else None

    def best_ask(self) -> float | None:
        h, dead = self._ask_heap, self._ask_dead
        while h and h[0] in dead:
            dead.discard(heapq.heappop(h))
        return h[0] if h else None

    def beta(self) -> float:
        """Highest bid including the reservoir; -inf when the side is empty."""
        b = self.best_bid()
        r = self.bid_reservoir
        if b is None:
            return r if r is not None else NEG_INF
        return b if r is None or b > r else r

    def alpha(self) -> float:
        b = self.best_ask()
        r = self.ask_reservoir
        if b is None:
            return r if r is not None else POS_INF
        return b if r is None or b < r else r

    def bids(self) -> list[float]:
        return sorted(self._bid_set)

    def asks(self) -> list[float]:
        return sorted(self._ask_set)

    def clone(self) -> "BookState":
        c = BookState.__new__(BookState)
        c.bid_reservoir = self.bid_reservoir
        c.ask_reservoir = self.ask_reservoir
        c._bid_heap = list(self._bid_heap)
        c._ask_heap = list(self._ask_heap)
        c._bid_set = set(self._bid_set)
        c._ask_set = set(self._ask_set)
        c._bid_dead = set(self._bid_dead)
        c._ask_dead = set(self._ask_dead)
        return c

    # -- mutations -------------------------------------------------------

    def insert(self, side: str, price: float) -> None:
        if not math.isfinite(price):
            raise BookInvariantError(f"non-finite price {price}")
        if price in self._bid_set or price in self._ask_set:
            raise BookInvariantError(f"duplicate price {price}")
        if side == "bid":
            heapq.heappush(self._bid_heap, -price)
            self._bid_set.add(price)
        else:
            heapq.heappush(self._ask_heap, price)
            self._ask_set.add(price)

    def pop_best(self, side: str) -> float:
        if side == "bid":
            p = self.best_bid()
            if p is None:
                raise BookInvariantError("pop from empty bid side")
            heapq.heappop(self._bid_heap)
            self._bid_set.discard(p)
        else:
            p = self.best_ask()
            if p is None:
                raise BookInvariantError("pop from empty ask side")
            heapq.heappop(self._ask_heap)
            self._ask_set.discard(p)
        return p

    def remove(self, side: str, price: float) -> None:
        """Remove an arbitrary resting order (lazy heap deletion)."""
        s = self._bid_set if side == "bid" else self._ask_set
        if price not in s:
            raise BookInvariantError(f"cannot remove absent {side} at {price}")
        s.discard(price)
        (self._bid_dead if side == "bid" else self._ask_dead).add(price)


def apply_arrival(state: BookState, rule: MatchRule, order: Order) -> ArrivalEffect:
    """Apply one arriving order under the rule; mutates state, returns the effect."""
    side, price = order.side, order.price
    kind = rule.kind
    part = rule.partition

    if side == "bid":
        alpha = state.alpha()
        if price == alpha:
            raise BookInvariantError(f"bid price {price} collides with best ask")
        if kind == ORDINARY:
            execute = price > alpha
        else:
            same_bin = alpha != POS_INF and part.index(price) == part.index(alpha)
            if kind == ORDINARY_BINNED:
                execute = price > alpha or same_bin
            else:
                execute = price > alpha and not same_bin
        if execute:
            from_res = state.ask_reservoir is not None and alpha == state.ask_reservoir
            if not from_res:
                state.pop_best("ask")
            eff = ArrivalEffect("executed", side, price, alpha, from_res,
                                state.beta(), state.alpha())
        else:
            state.insert("bid", price)
            eff = ArrivalEffect("joined", side, price, math.nan, False,
                                state.beta(), state.alpha())
    else:
        beta = state.beta()
        if price == beta:
            raise BookInvariantError(f"ask price {price} collides with best bid")
        if kind == ORDINARY:
            execute = price < beta
        else:
            same_bin = beta != NEG_INF and part.index(price) == part.index(beta)
            if kind == ORDINARY_BINNED:
                execute = price < beta or same_bin
            else:
                execute = price < beta and not same_bin
        if execute:
            from_res = state.bid_reservoir is not None and beta == state.bid_reservoir
            if not from_res:
                state.pop_best("bid")
            eff = ArrivalEffect("executed", side, price, beta, from_res,
                                state.beta(), state.alpha())
        else:
            state.insert("ask", price)
            eff = ArrivalEffect("joined", side, price, math.nan, False,
                                state.beta(), state.alpha())

    _check_invariant(state, kind, part)
    return eff


def _check_invariant(state: BookState, kind: str, part: Optional[BinPartition]) -> None:
    b, a = state.beta(), state.alpha()
    if kind == STRICT_BINNED:
        # The strict rule lets prices cross inside one bin, so the ordering
        # holds at bin granularity only.
        if b != NEG_INF and a != POS_INF and part.index(b) > part.index(a):
            raise BookInvariantError(f"bid bin above ask bin: beta={b}, alpha={a}")
    else:
        if not b < a:
            raise BookInvariantError(f"beta={b} >= alpha={a}")


def counts(state: BookState, p: float) -> tuple[int, int]:
    """(#bids at prices <= p, #asks at prices >= p), reservoirs excluded."""
    b = sum(1 for x in state._bid_set if x <= p)
    a = sum(1 for x in state._ask_set if x >= p)
    return b, a


def snapshot_rows(state: BookState) -> list[tuple]:
    """Book snapshot as (side, price[, 'inf']) rows for CSV export."""
    rows: list[tuple] = [("bid", p) for p in state.bids()]
    rows += [("ask", p) for p in state.asks()]
    if state.bid_reservoir is not None:
        rows.append(("bid", state.bid_reservoir, "inf"))
    if state.ask_reservoir is not None:
        rows.append(("ask", state.ask_reservoir, "inf"))
    return rows


def write_snapshot(state: BookState, path, meta: dict | None = None):
    from .output import write_csv
    return write_csv(path, ["side", "price", "count"], snapshot_rows(state), meta)
