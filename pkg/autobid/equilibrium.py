"""Verification of exact and approximate autobidding equilibria and grid search over profiles."""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from itertools import repeat
from operator import mul
from typing import Optional, Sequence, Tuple

import numpy as np

from autobid.auction import (
    RESERVE,
    ROS_ALL,
    clear,
    equal_split,
    solve_shares,
    to_outcome,
)
from autobid.exceptions import BudgetExceededError, InstanceError, ParameterError
from autobid.model import (
    ONE,
    ZERO,
    AuctionOutcome,
    MultiplierProfile,
    bidder_spend,
    bidder_value,
    check_shape,
    liquid_welfare,
    make_profile,
    optimal_welfare,
    revenue,
)
from autobid.utils import autobid_logging
from autobid.utils.rationals import format_rational, parse_rational

logger = autobid_logging.get_logger(__name__)

HIGHEST_BID = "highest-bid"
SECOND_PRICE = "second-price"
FULL_ALLOCATION = "full-allocation"
ROS = "ros"
MAXIMAL_PACING = "maximal-pacing"
CONDITIONS = (HIGHEST_BID, SECOND_PRICE, FULL_ALLOCATION, ROS, MAXIMAL_PACING)

DEFAULT_GEOMETRIC_POINTS = 9


@dataclass(frozen=True)
class EquilibriumVerdict:
    accepted: bool
    witness: Optional[AuctionOutcome] = None
    violated_condition: Optional[str] = None
    residuals: Tuple[Fraction, ...] = ()
    beta: Fraction = ZERO

    def __post_init__(self):
        assert self.accepted == (self.witness is not None) == (self.violated_condition is None), (
            "An accepted verdict carries a witness and no violated condition"
        )


def residuals(instance, outcome):
    "Per-bidder value minus τ-scaled spend of an outcome."
    return tuple(
        bidder_value(instance, outcome, i) - instance.ros_targets[i] * bidder_spend(outcome, i)
        for i in range(instance.n)
    )


def _check_beta(beta):
    beta = parse_rational(beta, strict=False, error=ParameterError)
    if not ZERO <= beta < ONE:
        raise ParameterError(f"beta must lie in [0, 1), got {format_rational(beta)}")
    return beta


def check_approx_equilibrium(instance, multipliers, beta):
    """Decides whether some allocation completes the profile to a beta-approximate equilibrium.

    Prices are fixed by the clearing, so the remaining conditions form a
    linear feasibility problem over the winner shares. A rejection is tagged
    ros when no allocation meets the RoS constraints and maximal-pacing when
    only the pacing equalities fail.
    """
    beta = _check_beta(beta)
    profile = make_profile(instance, multipliers)
    clearing = clear(instance, profile, beta)
    shares = solve_shares(instance, profile, clearing, ROS_ALL, pacing=True)
    if shares is not None:
        witness = to_outcome(instance, clearing, shares)
        return EquilibriumVerdict(True, witness, None, residuals(instance, witness), beta)
    relaxed = solve_shares(instance, profile, clearing, ROS_ALL, pacing=False)
    if relaxed is None:
        diagnostic = to_outcome(instance, clearing, equal_split(instance, clearing))
        return EquilibriumVerdict(False, None, ROS, residuals(instance, diagnostic), beta)
    diagnostic = to_outcome(instance, clearing, relaxed)
    return EquilibriumVerdict(False, None, MAXIMAL_PACING, residuals(instance, diagnostic), beta)


def check_equilibrium(instance, multipliers):
    return check_approx_equilibrium(instance, multipliers, ZERO)


def allocation_violation(instance, multipliers, outcome, beta=0):
    "First violated allocation condition (highest-bid, second-price, full-allocation) or None."
    profile = make_profile(instance, multipliers)
    check_shape(instance, outcome)
    clearing = clear(instance, profile, beta)
    for j in range(instance.k):
        held = set(clearing.winner_set(j))
        if outcome.reserve_shares[j] and RESERVE not in held:
            return HIGHEST_BID
        if any(outcome.allocation[i][j] and i not in held for i in range(instance.n)):
            return HIGHEST_BID
    for j in range(instance.k):
        for i in range(instance.n):
            if outcome.allocation[i][j] and outcome.unit_price(i, j) != clearing.unit_price(i, j):
                return SECOND_PRICE
    for j in range(instance.k):
        shares = [row[j] for row in outcome.allocation] + [outcome.reserve_shares[j]]
        if any(x < 0 for x in shares) or sum(shares, ZERO) != 1:
            return FULL_ALLOCATION
    return None


def check_outcome(instance, multipliers, outcome, beta=0):
    "Checks a given allocation and prices against the five equilibrium conditions, in order."
    beta = _check_beta(beta)
    profile = make_profile(instance, multipliers)
    check_shape(instance, outcome)
    res = residuals(instance, outcome)
    condition = allocation_violation(instance, profile, outcome, beta)
    if condition is not None:
        return EquilibriumVerdict(False, None, condition, res, beta)
    for i in range(instance.n):
        value = bidder_value(instance, outcome, i)
        spend = instance.ros_targets[i] * bidder_spend(outcome, i)
        if value < (1 - beta) * spend:
            return EquilibriumVerdict(False, None, ROS, res, beta)
    for i in range(instance.n):
        value = bidder_value(instance, outcome, i)
        spend = instance.ros_targets[i] * bidder_spend(outcome, i)
        if profile[i] < instance.cap and value > (1 + beta) * spend:
            return EquilibriumVerdict(False, None, MAXIMAL_PACING, res, beta)
    return EquilibriumVerdict(True, outcome, None, res, beta)


def _validate_map(mapping, inner_size, outer_size, what):
    if sorted(mapping) != list(range(inner_size)):
        raise InstanceError(f"The {what} map must cover every inner {what}")
    targets = list(mapping.values())
    if len(set(targets)) != len(targets):
        raise InstanceError(f"The {what} map is not injective")
    if any(not 0 <= t < outer_size for t in targets):
        raise InstanceError(f"The {what} map points outside the outer instance")


def check_conservative_extension(inner, outer, bidder_map, item_map):
    """Sufficient test that no bidder ever wins across the inner/outer boundary.

    For every cross pair with a positive value, the cross bid at the cap must
    stay strictly below what the item's own side bids at multiplier 1 (the
    strongest owner value, or the reserve). Every owner bids at least its
    value, so the strongest one suffices; this accepts extensions that a
    comparison against the weakest designated winner would reject.
    """
    bidder_map, item_map = dict(bidder_map), dict(item_map)
    _validate_map(bidder_map, inner.n, outer.n, "bidder")
    _validate_map(item_map, inner.k, outer.k, "item")
    if inner.cap != outer.cap:
        raise InstanceError("Inner and outer instances must share the multiplier cap")
    for i, oi in bidder_map.items():
        for j, oj in item_map.items():
            if inner.values[i][j] != outer.values[oi][oj]:
                raise InstanceError("Inner values disagree with the outer instance on the mapped block")
    inner_bidders = set(bidder_map.values())
    inner_items = set(item_map.values())
    outer_bidders = [i for i in range(outer.n) if i not in inner_bidders]
    outer_items = [j for j in range(outer.k) if j not in inner_items]

    def guarded(crossing, items, owners):
        for j in items:
            owner_bid = max([outer.reserves[j]] + [outer.values[i][j] for i in owners])
            for i in crossing:
                v = outer.values[i][j]
                if v and not outer.cap * v < owner_bid:
                    logger.debug(
                        "cross bid reaches an item",
                        extra={"bidder": outer.bidder_labels[i], "item": outer.item_labels[j]},
                    )
                    return False
        return True

    return guarded(sorted(inner_bidders), outer_items, outer_bidders) and guarded(
        outer_bidders, sorted(inner_items), sorted(inner_bidders)
    )


@dataclass(frozen=True)
class GridSpec:
    candidates: Tuple[Tuple[Fraction, ...], ...]
    beta: Fraction = ZERO

    def size(self):
        return reduce(mul, (len(c) for c in self.candidates), 1)

    def profiles(self):
        return itertools.product(*self.candidates)


def _axis(cap, step=None, count=None, structural=()):
    points = {ONE, cap}
    if step is not None:
        step = parse_rational(step, strict=False, error=ParameterError)
        if step <= 0:
            raise ParameterError("Grid step must be positive")
        point = ONE
        while point < cap:
            points.add(point)
            point += step
    else:
        count = DEFAULT_GEOMETRIC_POINTS if count is None else int(count)
        if count < 2:
            raise ParameterError("A geometric grid needs at least two points")
        for x in np.geomspace(1.0, float(cap), count):
            points.add(Fraction(float(x)).limit_denominator(10 ** 4))
    points.update(parse_rational(p, strict=False, error=ParameterError) for p in structural)
    return tuple(sorted(p for p in points if ONE <= p <= cap))


def make_grid(instance, candidates=None, step=None, count=None, structural=(), beta=0):
    """Per-bidder candidate sets, always containing 1 and the cap.

    candidates may be one shared sequence or one sequence per bidder;
    otherwise a step grid or a geometric grid with count points is used.
    Structural points are added to every axis.
    """
    beta = _check_beta(beta)
    cap = instance.cap
    if candidates is None:
        axis = _axis(cap, step, count, structural)
        return GridSpec(tuple(axis for _ in range(instance.n)), beta)
    candidates = list(candidates)
    per_bidder = bool(candidates) and isinstance(candidates[0], (list, tuple))
    if not per_bidder:
        candidates = [candidates] * instance.n
    if len(candidates) != instance.n:
        raise ParameterError(f"Grid has {len(candidates)} axes for {instance.n} bidders")
    axes = []
    for axis in candidates:
        points = {ONE, cap}
        points.update(parse_rational(p, strict=False, error=ParameterError) for p in axis)
        points.update(parse_rational(p, strict=False, error=ParameterError) for p in structural)
        axes.append(tuple(sorted(p for p in points if ONE <= p <= cap)))
    return GridSpec(tuple(axes), beta)


@dataclass(frozen=True)
class SearchEntry:
    profile: MultiplierProfile
    verdict: EquilibriumVerdict
    welfare: Fraction
    revenue: Fraction


@dataclass(frozen=True)
class SearchResult:
    entries: Tuple[SearchEntry, ...]
    checked: int
    beta: Fraction

    @property
    def max_welfare(self):
        return max((e.welfare for e in self.entries), default=None)

    @property
    def min_welfare(self):
        return min((e.welfare for e in self.entries), default=None)

    @property
    def max_revenue(self):
        return max((e.revenue for e in self.entries), default=None)

    @property
    def min_revenue(self):
        return min((e.revenue for e in self.entries), default=None)


def _evaluate(multipliers, instance, beta):
    verdict = check_approx_equilibrium(instance, multipliers, beta)
    if not verdict.accepted:
        return None
    return SearchEntry(
        profile=make_profile(instance, multipliers),
        verdict=verdict,
        welfare=liquid_welfare(instance, verdict.witness),
        revenue=revenue(verdict.witness),
    )


def search_profiles(instance, profiles: Sequence, beta=0, budget=None, workers=1):
    "Verifies every profile in profiles, keeping the accepted ones with their welfare and revenue."
    beta = _check_beta(beta)
    profiles = list(profiles)
    if budget is not None and len(profiles) > budget:
        raise BudgetExceededError(f"{len(profiles)} profiles exceed the budget of {budget}")
    with logger.timed("search_seconds"):
        with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
            found = list(pool.map(_evaluate, profiles, repeat(instance), repeat(beta)))
    entries = tuple(e for e in found if e is not None)
    logger.measure("profiles_checked", len(profiles), autobid_logging.MetricLogger.COUNT)
    logger.measure("equilibria_found", len(entries), autobid_logging.MetricLogger.COUNT)
    return SearchResult(entries=entries, checked=len(profiles), beta=beta)


def grid_search_equilibria(instance, grid, budget=None, workers=1):
    size = grid.size()
    if budget is not None and size > budget:
        raise BudgetExceededError(f"Grid of {size} profiles exceeds the budget of {budget}")
    logger.info("searching grid", extra={"profiles": size, "beta": grid.beta})
    return search_profiles(instance, grid.profiles(), grid.beta, budget=None, workers=workers)


@dataclass(frozen=True)
class PoaReport:
    optimal_welfare: Fraction
    min_welfare: Fraction
    max_welfare: Fraction
    min_revenue: Fraction
    max_revenue: Fraction
    price_of_anarchy: Optional[Fraction]
    welfare_ratios: Tuple[Optional[Fraction], ...]
    revenue_ratios: Tuple[Optional[Fraction], ...]


def _ratio(top, value):
    if value == 0:
        return ONE if top == 0 else None
    return top / value


def poa_report(instance, equilibria):
    """Price-of-anarchy sample and per-equilibrium approximation ratios.

    A ratio is None when the equilibrium's objective is 0 while the
    reference is positive.
    """
    entries = equilibria.entries if isinstance(equilibria, SearchResult) else tuple(equilibria)
    if not entries:
        raise InstanceError("The price of anarchy needs at least one accepted equilibrium")
    welfare = [e.welfare for e in entries]
    revenues = [e.revenue for e in entries]
    best = optimal_welfare(instance)
    return PoaReport(
        optimal_welfare=best,
        min_welfare=min(welfare),
        max_welfare=max(welfare),
        min_revenue=min(revenues),
        max_revenue=max(revenues),
        price_of_anarchy=_ratio(best, min(welfare)),
        welfare_ratios=tuple(_ratio(max(welfare), w) for w in welfare),
        revenue_ratios=tuple(_ratio(max(revenues), r) for r in revenues),
    )
