"""Parallel second-price auctions with reserves.

The reserve of each item acts as a pseudo-bidder (index RESERVE) with a fixed
bid and no RoS constraint. Shares it wins are unsold and pay nothing.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Tuple

from autobid import lp
from autobid.exceptions import ParameterError
from autobid.model import ONE, ZERO, AuctionOutcome, make_profile
from autobid.utils import autobid_logging

logger = autobid_logging.get_logger(__name__)

RESERVE = -1

EQUAL_SPLIT = "equal-split"
ROS_BINDING = "ros-binding"
POLICIES = (EQUAL_SPLIT, ROS_BINDING)

ROS_ALL = "all"
ROS_UNCAPPED = "uncapped"
ROS_NONE = "none"


@dataclass(frozen=True)
class BidMatrix:
    b: Tuple[Tuple[Fraction, ...], ...]

    def column(self, j):
        return tuple(row[j] for row in self.b)


@dataclass(frozen=True)
class Clearing:
    bids: BidMatrix
    reserves: Tuple[Fraction, ...]
    top: Tuple[Fraction, ...]
    winners: Tuple[Tuple[int, ...], ...]
    reserve_wins: Tuple[bool, ...]
    prices: Tuple[Fraction, ...]
    leaders: Tuple[Tuple[Fraction, int, Fraction], ...]
    beta: Fraction = ZERO

    def winner_set(self, j):
        return self.winners[j] + ((RESERVE,) if self.reserve_wins[j] else ())

    def price_for(self, i, j):
        "Highest competing bid faced by bidder i on item j, the reserve included."
        first, first_index, second = self.leaders[j]
        other = second if i == first_index else first
        return max(other, self.reserves[j])

    def unit_price(self, i, j):
        return self.prices[j] if self.beta == 0 else self.price_for(i, j)


def bids(instance, multipliers):
    profile = make_profile(instance, multipliers)
    return BidMatrix(tuple(tuple(m * v for v in row) for m, row in zip(profile.m, instance.values)))


def _leaders(column):
    first, first_index, second = ZERO, None, ZERO
    for i, b in enumerate(column):
        if first_index is None or b > first:
            first, first_index, second = b, i, (first if first_index is not None else ZERO)
        elif b > second:
            second = b
    return first, first_index, second


def clear(instance, multipliers, beta=0):
    """Winner sets and prices for every item.

    With beta > 0 the winner sets are relaxed to every bid within a (1 - beta)
    factor of the maximum, as approximate equilibria require.
    """
    beta = Fraction(beta)
    matrix = bids(instance, multipliers)
    tops, winners, reserve_wins, prices, leaders = [], [], [], [], []
    for j in range(instance.k):
        column = matrix.column(j)
        reserve = instance.reserves[j]
        first, first_index, second = _leaders(column)
        top = max(first, reserve)
        if top == 0:
            # nothing is bid: the lowest-index bidder takes the item for free
            held = (0,) if instance.n else ()
            tops.append(top)
            winners.append(held)
            reserve_wins.append(not held)
            prices.append(ZERO)
            leaders.append((first, first_index, second))
            continue
        threshold = (1 - beta) * top
        held = tuple(i for i, b in enumerate(column) if b > 0 and b >= threshold)
        tops.append(top)
        winners.append(held)
        reserve_wins.append(reserve > 0 and reserve >= threshold)
        if held:
            # multiset {bids, reserve} with one copy of the maximum removed
            prices.append(max(second, reserve) if first >= reserve else first)
        else:
            prices.append(ZERO)
        leaders.append((first, first_index, second))
    return Clearing(
        bids=matrix,
        reserves=instance.reserves,
        top=tuple(tops),
        winners=tuple(winners),
        reserve_wins=tuple(reserve_wins),
        prices=tuple(prices),
        leaders=tuple(leaders),
        beta=beta,
    )


def equal_split(instance, clearing):
    allocation = [[ZERO] * instance.k for _ in range(instance.n)]
    reserve_shares = [ZERO] * instance.k
    for j, held in enumerate(clearing.winners):
        if not held:
            reserve_shares[j] = ONE
            continue
        share = Fraction(1, len(held))
        for i in held:
            allocation[i][j] = share
    return allocation, reserve_shares


def solve_shares(instance, profile, clearing, ros=ROS_ALL, pacing=True):
    """Exact allocation program over the winner sets of clearing.

    Finds shares that fully allocate every item and satisfy, per bidder, the
    RoS inequality (for the bidders selected by ros) and, when pacing is set,
    the reverse inequality for bidders below the cap. With beta > 0 the two
    inequalities are relaxed by (1 - beta) and (1 + beta). Items with a single
    holder are fixed; the remaining items split into independent components
    of bidders sharing items, each solved as its own LP. Returns
    (allocation, reserve_shares) or None when infeasible.
    """
    n, k = instance.n, instance.k
    beta = clearing.beta
    allocation = [[ZERO] * k for _ in range(n)]
    reserve_shares = [ZERO] * k
    open_items = {}
    for j in range(k):
        holders = clearing.winner_set(j)
        if len(holders) == 1:
            if holders[0] == RESERVE:
                reserve_shares[j] = ONE
            else:
                allocation[holders[0]][j] = ONE
        else:
            open_items[j] = holders

    def margin(i, j, factor):
        return instance.values[i][j] - factor * instance.ros_targets[i] * clearing.unit_price(i, j)

    def constrained(i):
        if ros == ROS_ALL:
            return True
        if ros == ROS_UNCAPPED:
            return profile[i] < instance.cap
        return False

    paced = [pacing and profile[i] < instance.cap for i in range(n)]
    lower = [sum((margin(i, j, 1 - beta) for j in range(k) if allocation[i][j]), ZERO) for i in range(n)]
    upper = [sum((margin(i, j, 1 + beta) for j in range(k) if allocation[i][j]), ZERO) for i in range(n)]

    parent = {j: j for j in open_items}

    def find(j):
        while parent[j] != j:
            parent[j] = parent[parent[j]]
            j = parent[j]
        return j

    bidder_items = defaultdict(list)
    for j, holders in open_items.items():
        for i in holders:
            if i != RESERVE:
                bidder_items[i].append(j)
    for items in bidder_items.values():
        for j in items[1:]:
            parent[find(j)] = find(items[0])

    for i in range(n):
        if i in bidder_items:
            continue
        if constrained(i) and lower[i] < 0:
            return None
        if paced[i] and upper[i] > 0:
            return None

    components = defaultdict(list)
    for j in sorted(open_items):
        components[find(j)].append(j)

    for items in components.values():
        variables = [(h, j) for j in items for h in open_items[j]]
        members = sorted({h for h, _ in variables if h != RESERVE})
        inequalities = []
        for i in members:
            if constrained(i):
                inequalities.append((i, 1 - beta, -1, -lower[i]))
            if paced[i]:
                inequalities.append((i, 1 + beta, 1, -upper[i]))
        width = len(variables) + len(inequalities)
        rows, rhs = [], []
        for j in items:
            rows.append([ONE if col < len(variables) and variables[col][1] == j else ZERO for col in range(width)])
            rhs.append(ONE)
        for slot, (i, factor, slack_sign, bound) in enumerate(inequalities):
            row = [ZERO] * width
            for col, (h, j) in enumerate(variables):
                if h == i:
                    row[col] = margin(i, j, factor)
            row[len(variables) + slot] = Fraction(slack_sign)
            rows.append(row)
            rhs.append(bound)
        x = lp.feasible_point(rows, rhs, size=width)
        if x is None:
            logger.debug("allocation program infeasible", extra={"items": items, "bidders": members})
            return None
        for (h, j), share in zip(variables, x):
            if h == RESERVE:
                reserve_shares[j] = share
            else:
                allocation[h][j] = share
    return allocation, reserve_shares


def to_outcome(instance, clearing, shares):
    allocation, reserve_shares = shares
    bidder_prices = None
    if clearing.beta != 0:
        bidder_prices = tuple(
            tuple(clearing.price_for(i, j) for j in range(instance.k)) for i in range(instance.n)
        )
    return AuctionOutcome(
        allocation=tuple(tuple(row) for row in allocation),
        reserve_shares=tuple(reserve_shares),
        prices=tuple(clearing.prices),
        bidder_prices=bidder_prices,
    )


def allocate(instance, multipliers, policy=EQUAL_SPLIT):
    """Deterministic allocation for a profile.

    equal-split divides each item among its real winners; ros-binding looks
    for shares that make every uncapped bidder's RoS constraint tight and
    falls back to equal-split when none exist.
    """
    if policy not in POLICIES:
        raise ParameterError(f"Unknown allocation policy {policy!r}; expected one of {', '.join(POLICIES)}")
    profile = make_profile(instance, multipliers)
    clearing = clear(instance, profile)
    if policy == ROS_BINDING:
        for ros in (ROS_ALL, ROS_UNCAPPED):
            shares = solve_shares(instance, profile, clearing, ros=ros, pacing=True)
            if shares is not None:
                return to_outcome(instance, clearing, shares)
        logger.debug("no binding shares, using equal split", extra={"profile": list(profile.m)})
    return to_outcome(instance, clearing, equal_split(instance, clearing))
