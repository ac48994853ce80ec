"""Autobidding instances, multiplier profiles, outcomes and the welfare/revenue functionals."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Tuple

import numpy as np

from autobid import lp
from autobid.exceptions import InstanceError, ParameterError
from autobid.utils import autobid_logging
from autobid.utils.rationals import format_rational, parse_budget, parse_rational

logger = autobid_logging.get_logger(__name__)

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class AutobiddingInstance:
    values: Tuple[Tuple[Fraction, ...], ...]
    reserves: Tuple[Fraction, ...]
    cap: Fraction
    ros_targets: Tuple[Fraction, ...]
    budgets: Tuple[Optional[Fraction], ...]
    bidder_labels: Tuple[str, ...]
    item_labels: Tuple[str, ...]

    def __post_init__(self):
        n, k = len(self.values), len(self.reserves)
        if any(len(row) != k for row in self.values):
            raise InstanceError(f"Every value row must have {k} entries")
        if len(self.ros_targets) != n or len(self.budgets) != n or len(self.bidder_labels) != n:
            raise InstanceError("Per-bidder vectors must have one entry per bidder")
        if len(self.item_labels) != k:
            raise InstanceError("Item labels must have one entry per item")
        if self.cap < 1:
            raise InstanceError(f"Multiplier cap must be at least 1, got {format_rational(self.cap)}")
        if any(v < 0 for row in self.values for v in row):
            raise InstanceError("Values must be nonnegative")
        if any(r < 0 for r in self.reserves):
            raise InstanceError("Reserves must be nonnegative")
        if any(t < 1 for t in self.ros_targets):
            raise InstanceError("RoS targets must be at least 1")
        if any(b is not None and b <= 0 for b in self.budgets):
            raise InstanceError("Budgets must be positive")
        if len(set(self.bidder_labels)) != n or len(set(self.item_labels)) != k:
            raise InstanceError("Bidder and item labels must be unique")

    @property
    def n(self):
        return len(self.values)

    @property
    def k(self):
        return len(self.reserves)

    def column(self, j):
        return tuple(row[j] for row in self.values)

    def has_default_constraints(self):
        return all(t == 1 for t in self.ros_targets) and all(b is None for b in self.budgets)


def make_instance(
    values,
    reserves=None,
    cap=1,
    ros_targets=None,
    budgets=None,
    bidder_labels=None,
    item_labels=None,
    k=None,
):
    """Builds a validated instance from ints, Fractions or rational strings.

    k is only needed for instances without bidders.
    """
    rows = tuple(tuple(parse_rational(v) for v in row) for row in values)
    n = len(rows)
    if k is None:
        if reserves is not None:
            k = len(reserves)
        elif rows:
            k = len(rows[0])
        else:
            k = 0
    reserves = tuple(parse_rational(r) for r in reserves) if reserves is not None else (ZERO,) * k
    ros_targets = tuple(parse_rational(t) for t in ros_targets) if ros_targets is not None else (ONE,) * n
    budgets = tuple(parse_budget(b) for b in budgets) if budgets is not None else (None,) * n
    bidder_labels = tuple(bidder_labels) if bidder_labels is not None else tuple(f"bidder:{i}" for i in range(n))
    item_labels = tuple(item_labels) if item_labels is not None else tuple(f"item:{j}" for j in range(k))
    return AutobiddingInstance(
        values=rows,
        reserves=reserves,
        cap=parse_rational(cap),
        ros_targets=ros_targets,
        budgets=budgets,
        bidder_labels=bidder_labels,
        item_labels=item_labels,
    )


@dataclass(frozen=True)
class MultiplierProfile:
    m: Tuple[Fraction, ...]

    def __len__(self):
        return len(self.m)

    def __getitem__(self, i):
        return self.m[i]

    def __iter__(self):
        return iter(self.m)


def make_profile(instance, multipliers):
    if isinstance(multipliers, MultiplierProfile):
        multipliers = multipliers.m
    m = tuple(parse_rational(x) for x in multipliers)
    if len(m) != instance.n:
        raise InstanceError(f"Profile has {len(m)} multipliers for {instance.n} bidders")
    for i, x in enumerate(m):
        if not ONE <= x <= instance.cap:
            raise InstanceError(
                f"Multiplier {format_rational(x)} of bidder {instance.bidder_labels[i]} is outside "
                f"[1, {format_rational(instance.cap)}]"
            )
    return MultiplierProfile(m)


@dataclass(frozen=True)
class AuctionOutcome:
    """Fractional allocation with prices.

    allocation[i][j] is bidder i's share of item j and reserve_shares[j] the
    share kept by the reserve pseudo-bidder. prices[j] is the uniform price of
    item j; bidder_prices, when present, holds the per-winner prices used by
    approximate equilibria.
    """

    allocation: Tuple[Tuple[Fraction, ...], ...]
    reserve_shares: Tuple[Fraction, ...]
    prices: Tuple[Fraction, ...]
    bidder_prices: Optional[Tuple[Tuple[Fraction, ...], ...]] = None

    @property
    def n(self):
        return len(self.allocation)

    @property
    def k(self):
        return len(self.prices)

    def unit_price(self, i, j):
        if self.bidder_prices is not None:
            return self.bidder_prices[i][j]
        return self.prices[j]

    def item_total(self, j):
        return sum((row[j] for row in self.allocation), ZERO) + self.reserve_shares[j]

    def float_view(self):
        "Float copy of the allocation for reporting."
        return np.array([[float(x) for x in row] for row in self.allocation], dtype=float).reshape(self.n, self.k)


def check_shape(instance, outcome):
    if outcome.n != instance.n or outcome.k != instance.k or len(outcome.reserve_shares) != instance.k:
        raise InstanceError(
            f"Outcome of shape {outcome.n}x{outcome.k} does not match instance {instance.n}x{instance.k}"
        )
    if any(len(row) != instance.k for row in outcome.allocation):
        raise InstanceError("Every allocation row must have one entry per item")


def bidder_value(instance, outcome, i):
    return sum((x * v for x, v in zip(outcome.allocation[i], instance.values[i]) if x), ZERO)


def bidder_spend(outcome, i):
    return sum((x * outcome.unit_price(i, j) for j, x in enumerate(outcome.allocation[i]) if x), ZERO)


def optimal_welfare(instance):
    """Maximum liquid welfare over fractional allocations.

    With τ = 1 and no budgets this is the sum of column maxima; otherwise
    it is the optimum of a small exact LP.
    """
    if instance.n == 0 or instance.k == 0:
        return ZERO
    if instance.has_default_constraints():
        return sum((max(instance.column(j)) for j in range(instance.k)), ZERO)
    return _liquid_welfare_program(instance)


def _liquid_welfare_program(instance):
    n, k = instance.n, instance.k
    # x_ij, then w_i, then item slacks s_j, value slacks t_i, budget slacks u_i for finite budgets
    capped = [i for i in range(n) if instance.budgets[i] is not None]
    x_col = lambda i, j: i * k + j  # noqa: E731
    w_col = lambda i: n * k + i  # noqa: E731
    s_col = lambda j: n * k + n + j  # noqa: E731
    t_col = lambda i: n * k + n + k + i  # noqa: E731
    width = n * k + n + k + n + len(capped)
    rows, rhs = [], []
    for j in range(k):
        row = [ZERO] * width
        for i in range(n):
            row[x_col(i, j)] = ONE
        row[s_col(j)] = ONE
        rows.append(row)
        rhs.append(ONE)
    for i in range(n):
        row = [ZERO] * width
        row[w_col(i)] = ONE
        for j in range(k):
            row[x_col(i, j)] = -instance.values[i][j] / instance.ros_targets[i]
        row[t_col(i)] = ONE
        rows.append(row)
        rhs.append(ZERO)
    for slot, i in enumerate(capped):
        row = [ZERO] * width
        row[w_col(i)] = ONE
        row[n * k + n + k + n + slot] = ONE
        rows.append(row)
        rhs.append(instance.budgets[i])
    cost = [ZERO] * width
    for i in range(n):
        cost[w_col(i)] = ONE
    value, _ = lp.maximize(cost, rows, rhs)
    return value


def liquid_welfare(instance, outcome):
    check_shape(instance, outcome)
    total = ZERO
    for i in range(instance.n):
        obtained = bidder_value(instance, outcome, i) / instance.ros_targets[i]
        budget = instance.budgets[i]
        total += obtained if budget is None else min(budget, obtained)
    return total


def revenue(outcome):
    total = ZERO
    for i, row in enumerate(outcome.allocation):
        for j, x in enumerate(row):
            if x:
                total += x * outcome.unit_price(i, j)
    return total


def scale_instance(instance, eta):
    eta = parse_rational(eta, error=ParameterError)
    if eta <= 0:
        raise ParameterError(f"Scale factor must be positive, got {format_rational(eta)}")
    return AutobiddingInstance(
        values=tuple(tuple(v * eta for v in row) for row in instance.values),
        reserves=tuple(r * eta for r in instance.reserves),
        cap=instance.cap,
        ros_targets=instance.ros_targets,
        budgets=tuple(b * eta if b is not None else None for b in instance.budgets),
        bidder_labels=instance.bidder_labels,
        item_labels=instance.item_labels,
    )


def restrict(instance, bidders: Sequence[int], items: Sequence[int]):
    "Sub-instance on the given bidder and item indices, in the given order."
    bidders, items = list(bidders), list(items)
    if any(not 0 <= i < instance.n for i in bidders) or any(not 0 <= j < instance.k for j in items):
        raise InstanceError("Restriction indices out of range")
    return AutobiddingInstance(
        values=tuple(tuple(instance.values[i][j] for j in items) for i in bidders),
        reserves=tuple(instance.reserves[j] for j in items),
        cap=instance.cap,
        ros_targets=tuple(instance.ros_targets[i] for i in bidders),
        budgets=tuple(instance.budgets[i] for i in bidders),
        bidder_labels=tuple(instance.bidder_labels[i] for i in bidders),
        item_labels=tuple(instance.item_labels[j] for j in items),
    )
