"""Repeated second-price auctions under pacing update rules.

A trace records, round by round, the multiplier profile, the allocation and
each bidder's running value and spend. The checks here decide whether a
trace meets the time-average RoS constraints, whether its bidders stay out
of pacing-dominated multipliers and react to sustained surplus, and how
often the assignment gadgets of a compiled cover instance encode a valid
labeling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Dict, Optional, Tuple

from autobid import gadgets
from autobid.auction import EQUAL_SPLIT, allocate
from autobid.equilibrium import allocation_violation
from autobid.exceptions import InstanceError, ParameterError
from autobid.model import (
    ONE,
    ZERO,
    MultiplierProfile,
    bidder_spend,
    bidder_value,
    liquid_welfare,
    make_profile,
    revenue,
)
from autobid.utils import autobid_logging
from autobid.utils.rationals import ceil_to_grid, format_rational, parse_parameter

logger = autobid_logging.get_logger(__name__)

STEP = "step"
POLY = "poly"
EXP = "exp"
CUSTOM = "custom"
RULE_KINDS = (STEP, POLY, EXP, CUSTOM)

COVER = "cover"

DEFAULT_S_GRID = tuple(Fraction(s) for s in ("1/100", "1/20", "1/10", "1/4", "1/2", "1"))
RESOLUTION = 10 ** 6
INFINITE_RATIO = math.inf


def _check_mu(mu):
    mu = parse_parameter(mu)
    if not ZERO <= mu < ONE:
        raise ParameterError(f"mu must lie in [0, 1), got {format_rational(mu)}")
    return mu


def m_safe(instance, bidder, mu):
    """(1 - mu) times the supremum of the pacing-dominated multipliers, never below 1.

    At multiplier 1 against opponents all at the cap, the bidder surely wins
    the items it values strictly above every capped rival bid and the
    reserve. Any other item it values becomes winnable once its bid reaches
    the best rival value or reserve, which caps the dominated range.
    """
    mu = _check_mu(mu)
    cap = instance.cap
    bound = cap
    for j, v in enumerate(instance.values[bidder]):
        if not v:
            continue
        others = [row[j] for i, row in enumerate(instance.values) if i != bidder]
        reserve = instance.reserves[j]
        if v > max([reserve] + [cap * w for w in others]):
            continue
        bound = min(bound, max([reserve] + others) / v)
    return max(ONE, (1 - mu) * bound)


def cumulative_ratio(value, spend):
    "Value over spend; +inf on zero spend with positive value, 1 when both are 0."
    if spend == 0:
        return INFINITE_RATIO if value > 0 else ONE
    return Fraction(value) / spend


@dataclass(frozen=True)
class UpdateRule:
    """Maps a cumulative value-to-spend ratio to the next multiplier.

    Below ratio 1 every rule returns m_safe. At or above 1: step jumps to the
    cap, poly returns m_safe r^degree and exp returns m_safe e^(rate (r - 1)),
    both capped and rounded up to a 1/resolution grid. custom applies
    function and clamps the result to [m_safe, cap].
    """

    kind: str
    m_safe: Fraction
    cap: Fraction
    degree: int = 1
    rate: Fraction = ONE
    function: Optional[Callable] = None
    custom_constant: Fraction = ONE
    resolution: int = RESOLUTION

    def __post_init__(self):
        if self.kind not in RULE_KINDS:
            raise ParameterError(f"Unknown rule {self.kind!r}; expected one of {', '.join(RULE_KINDS)}")
        if self.kind == POLY and (int(self.degree) != self.degree or self.degree < 1):
            raise ParameterError("The polynomial rule needs a positive integer degree")
        if self.kind == EXP and self.rate <= 0:
            raise ParameterError("The exponential rule needs a positive rate")
        if self.kind == CUSTOM and self.function is None:
            raise ParameterError("A custom rule needs a function")

    @property
    def constant(self):
        "The c in psi(1 + s) >= min(cap, (1 + c s) m_safe)."
        return {STEP: ONE, POLY: Fraction(self.degree), EXP: self.rate, CUSTOM: self.custom_constant}[self.kind]

    def __call__(self, ratio):
        if self.kind == CUSTOM:
            return min(self.cap, max(self.m_safe, Fraction(self.function(ratio))))
        if ratio < 1:
            return self.m_safe
        if self.kind == STEP or ratio == INFINITE_RATIO:
            return self.cap
        if self.kind == POLY:
            target = self.m_safe * Fraction(ratio) ** int(self.degree)
            return min(self.cap, ceil_to_grid(min(target, self.cap), self.resolution))
        exponent = float(self.rate * (Fraction(ratio) - 1))
        if exponent >= math.log(float(self.cap / self.m_safe)):
            return self.cap
        return min(self.cap, ceil_to_grid(float(self.m_safe) * math.exp(exponent), self.resolution))


def make_rules(instance, kind, parameter=None, mu=0):
    "One rule per bidder with the bidder's own m_safe; parameter is the degree, rate or function."
    mu = _check_mu(mu)
    extra = {}
    if kind == POLY:
        extra["degree"] = int(parameter) if parameter is not None else 2
    elif kind == EXP:
        extra["rate"] = parse_parameter(parameter) if parameter is not None else ONE
    elif kind == CUSTOM:
        extra["function"] = parameter
    return tuple(
        UpdateRule(kind=kind, m_safe=m_safe(instance, i, mu), cap=instance.cap, **extra)
        for i in range(instance.n)
    )


@dataclass(frozen=True)
class PsiVerdict:
    accepted: bool
    constant: Fraction
    violations: Tuple[Tuple[str, Fraction], ...] = ()


def verify_psi_constants(rule, s_samples=DEFAULT_S_GRID):
    """Checks the two preconditions of a responsive pacing rule on sampled points.

    psi(s') = m_safe below 1, psi(1 + s) >= min(cap, (1 + c s) m_safe) above
    it, and psi nondecreasing along the sampled ratios.
    """
    if rule.kind not in (STEP, POLY, EXP):
        raise ParameterError("Constants are only verified for the step, poly and exp rules")
    c = rule.constant
    violations = []
    for low in (ZERO, Fraction(1, 2), Fraction(9, 10), Fraction(99, 100)):
        if low > 0 and rule(low) != rule.m_safe:
            violations.append(("below-one", low))
    for s in s_samples:
        s = Fraction(s)
        if rule(1 + s) < min(rule.cap, (1 + c * s) * rule.m_safe):
            violations.append(("reaction", s))
    ratios = sorted({Fraction(1, 2), ONE} | {1 + Fraction(s) for s in s_samples})
    outputs = [rule(r) for r in ratios]
    for r, a, b in zip(ratios[1:], outputs, outputs[1:]):
        if b < a:
            violations.append(("monotone", r))
    return PsiVerdict(accepted=not violations, constant=c, violations=tuple(violations))


@dataclass(frozen=True)
class TraceRound:
    profile: MultiplierProfile
    outcome: object
    values: Tuple[Fraction, ...]
    spends: Tuple[Fraction, ...]
    cumulative_value: Tuple[Fraction, ...]
    cumulative_spend: Tuple[Fraction, ...]

    @property
    def ratios(self):
        return tuple(cumulative_ratio(v, s) for v, s in zip(self.cumulative_value, self.cumulative_spend))


@dataclass(frozen=True)
class SequenceTrace:
    rounds: Tuple[TraceRound, ...]
    policy: str = EQUAL_SPLIT

    @property
    def T(self):
        return len(self.rounds)


def _settle_round(instance, profile, outcome, previous):
    values = tuple(bidder_value(instance, outcome, i) for i in range(instance.n))
    spends = tuple(bidder_spend(outcome, i) for i in range(instance.n))
    if previous is None:
        cumulative_value, cumulative_spend = values, spends
    else:
        cumulative_value = tuple(a + b for a, b in zip(previous.cumulative_value, values))
        cumulative_spend = tuple(a + b for a, b in zip(previous.cumulative_spend, spends))
    return TraceRound(profile, outcome, values, spends, cumulative_value, cumulative_spend)


def replay(instance, profiles, policy=EQUAL_SPLIT):
    "Trace obtained by allocating each given profile in turn."
    rounds = []
    for multipliers in profiles:
        profile = make_profile(instance, multipliers)
        outcome = allocate(instance, profile, policy)
        rounds.append(_settle_round(instance, profile, outcome, rounds[-1] if rounds else None))
    return SequenceTrace(tuple(rounds), policy)


def run_dynamics(instance, rules, rounds, initial_profile=None, policy=EQUAL_SPLIT):
    """Simulates T rounds in which every bidder sets its next multiplier from its cumulative ratio.

    The initial profile (all ones by default) is lifted to each bidder's
    m_safe so no bidder starts inside its dominated range.
    """
    if rounds < 1:
        raise ParameterError("At least one round is needed")
    if len(rules) != instance.n:
        raise ParameterError(f"{len(rules)} rules for {instance.n} bidders")
    start = [ONE] * instance.n if initial_profile is None else list(make_profile(instance, initial_profile))
    current = make_profile(instance, [max(m, rule.m_safe) for m, rule in zip(start, rules)])
    trace = []
    for _ in range(rounds):
        outcome = allocate(instance, current, policy)
        step = _settle_round(instance, current, outcome, trace[-1] if trace else None)
        trace.append(step)
        current = make_profile(instance, [rule(r) for rule, r in zip(rules, step.ratios)])
    logger.debug("simulated dynamics", extra={"rounds": rounds, "kind": rules[0].kind if rules else None})
    return SequenceTrace(tuple(trace), policy)


def _check_consistent(instance, trace):
    previous = None
    for t, step in enumerate(trace.rounds, start=1):
        if len(step.profile) != instance.n or step.outcome.n != instance.n or step.outcome.k != instance.k:
            raise InstanceError(f"Round {t} does not match the instance shape")
        if allocate(instance, step.profile, trace.policy) != step.outcome:
            raise InstanceError(f"Round {t} does not match a re-cleared auction")
        expected = _settle_round(instance, step.profile, step.outcome, previous)
        if expected.cumulative_value != step.cumulative_value or expected.cumulative_spend != step.cumulative_spend:
            raise InstanceError(f"Running sums of round {t} are not prefix-consistent")
        previous = step


def admissibility_constant(instance):
    "cap times the largest total value of a bidder: beta = constant / T bounds psi-rule slack."
    return instance.cap * max((sum(row, ZERO) for row in instance.values), default=ZERO)


@dataclass(frozen=True)
class AdmissibleVerdict:
    accepted: bool
    worst_slack: Fraction
    slacks: Tuple[Fraction, ...]
    violated_condition: Optional[str] = None
    round: Optional[int] = None


def check_admissible(instance, trace, beta):
    """Per-round allocation conditions plus the time-average RoS constraint with additive slack beta.

    The slack of a bidder is (total tau-scaled spend - total value) / T.
    """
    beta = parse_parameter(beta)
    if beta < 0:
        raise ParameterError("beta must be nonnegative")
    if trace.T == 0:
        raise InstanceError("The trace has no rounds")
    _check_consistent(instance, trace)
    last = trace.rounds[-1]
    slacks = tuple(
        (instance.ros_targets[i] * last.cumulative_spend[i] - last.cumulative_value[i]) / trace.T
        for i in range(instance.n)
    )
    worst = max(slacks, default=ZERO)
    for t, step in enumerate(trace.rounds, start=1):
        condition = allocation_violation(instance, step.profile, step.outcome)
        if condition is not None:
            return AdmissibleVerdict(False, worst, slacks, condition, t)
    return AdmissibleVerdict(worst <= beta, worst, slacks)


@dataclass(frozen=True)
class ResponsiveParams:
    alpha: Fraction = ZERO
    beta: Fraction = ZERO
    mu: Fraction = ZERO
    c: Fraction = ONE
    s_grid: Tuple[Fraction, ...] = DEFAULT_S_GRID

    def __post_init__(self):
        if not ZERO <= self.alpha < ONE:
            raise ParameterError("alpha must lie in [0, 1)")
        if self.beta < 0 or self.c <= 0:
            raise ParameterError("beta must be nonnegative and c positive")
        if not ZERO <= self.mu < ONE:
            raise ParameterError("mu must lie in [0, 1)")
        if not self.s_grid or any(s <= 0 for s in self.s_grid):
            raise ParameterError("The s grid must hold positive values")


@dataclass(frozen=True)
class ReactionViolation:
    bidder: int
    s: Fraction
    start: int
    end: int
    average: Fraction
    bound: Fraction


@dataclass(frozen=True)
class ResponsiveVerdict:
    accepted: bool
    admissible: AdmissibleVerdict
    undominated_violations: Tuple[Tuple[int, int], ...]
    reaction_violations: Tuple[ReactionViolation, ...]
    checked_s: Tuple[Fraction, ...]


def _first_reaction_violation(multipliers, ratios, s, bound, min_length):
    """Scans every interval (t1, t2] of length >= min_length over which ratios stay >= 1 + s.

    Prefix sums Q[t] of (m - bound) turn the average condition into
    Q[t2] >= Q[t1]; a running minimum of Q over the admissible starts keeps
    the scan linear. Rounds are numbered from 1.
    """
    T = len(multipliers)
    prefix = [ZERO]
    for m in multipliers:
        prefix.append(prefix[-1] + m - bound)
    run_start = None
    best, best_at = None, None
    for t2 in range(2, T + 1):
        if ratios[t2 - 2] >= 1 + s:
            if run_start is None:
                run_start, best, best_at = t2 - 1, None, None
        else:
            run_start = None
            continue
        t1 = t2 - min_length
        if t1 >= run_start:
            if best is None or prefix[t1] < best:
                best, best_at = prefix[t1], t1
        if best is not None and prefix[t2] < best:
            return best_at, t2, (prefix[t2] - best) / (t2 - best_at) + bound
    return None


def check_responsive(instance, trace, params):
    """Admissibility, the m_safe floor and the reaction to sustained surplus, per bidder and s."""
    admissible = check_admissible(instance, trace, params.beta)
    floors = [m_safe(instance, i, params.mu) for i in range(instance.n)]
    undominated = tuple(
        (i, t)
        for t, step in enumerate(trace.rounds, start=1)
        for i in range(instance.n)
        if step.profile[i] < floors[i]
    )
    min_length = math.floor(params.alpha * trace.T) + 1
    reactions = []
    for i in range(instance.n):
        multipliers = [step.profile[i] for step in trace.rounds]
        ratios = [step.ratios[i] for step in trace.rounds]
        for s in params.s_grid:
            bound = min(instance.cap, (1 + params.c * s) * floors[i])
            found = _first_reaction_violation(multipliers, ratios, s, bound, min_length)
            if found is not None:
                start, end, average = found
                reactions.append(ReactionViolation(i, s, start, end, average, bound))
    accepted = admissible.accepted and not undominated and not reactions
    return ResponsiveVerdict(accepted, admissible, undominated, tuple(reactions), tuple(params.s_grid))


def largest_responsive_c(instance, trace, params, c_grid):
    "Largest c on the grid for which the floor and reaction conditions hold, or None."
    for c in sorted((parse_parameter(c) for c in c_grid), reverse=True):
        verdict = check_responsive(instance, trace, replace(params, c=c))
        if not verdict.undominated_violations and not verdict.reaction_violations:
            return c
    return None


@dataclass(frozen=True)
class CoverCSP:
    """Clauses that are ORs of literals (variable, label) over variables taking one label each."""

    variables: int
    alphabet_size: int
    clauses: Tuple[Tuple[Tuple[int, int], ...], ...]

    def __post_init__(self):
        if self.variables < 1 or self.alphabet_size < 1:
            raise InstanceError("A cover CSP needs at least one variable and one label")
        for c, clause in enumerate(self.clauses):
            if not clause:
                raise InstanceError(f"Clause {c} is empty")
            for i, s in clause:
                if not 0 <= i < self.variables or not 0 <= s < self.alphabet_size:
                    raise InstanceError(f"Literal ({i}, {s}) of clause {c} is out of range")

    @property
    def vertices(self):
        return tuple(str(i) for i in range(self.variables))


def make_cover(variables, alphabet_size, clauses):
    return CoverCSP(
        variables=int(variables),
        alphabet_size=int(alphabet_size),
        clauses=tuple(tuple((int(i), int(s)) for i, s in clause) for clause in clauses),
    )


def cover_from_max_cover(q, universe, family):
    "q variables choosing a set each from family; one clause per universe element."
    family = [set(f) for f in family]
    clauses = []
    for element in universe:
        clause = [(i, s) for i in range(q) for s, members in enumerate(family) if element in members]
        if not clause:
            raise InstanceError(f"Element {element!r} belongs to no set of the family")
        clauses.append(clause)
    return make_cover(q, len(family), clauses)


def cover_value(csp, labeling):
    "Number of clauses with a literal whose variable carries that label."
    labels = {str(k): v for k, v in labeling.items()}
    for name, s in labels.items():
        if s is not None and not 0 <= s < csp.alphabet_size:
            raise InstanceError(f"Label {s} of variable {name} is outside the alphabet")
    return sum(1 for clause in csp.clauses if any(labels.get(str(i)) == s for i, s in clause))


@dataclass(frozen=True)
class CoverParams:
    epsilon: Fraction
    delta: Fraction
    cap: Fraction
    anchor: Fraction
    eta: Fraction
    lam: Fraction
    mu: Fraction
    alpha: Fraction
    beta: Fraction
    objective: str = gadgets.REVENUE
    reserves: str = gadgets.NATIVE
    gamma: Optional[Fraction] = None
    wire_epsilon: Optional[Fraction] = None

    @property
    def gadget_epsilon(self):
        return self.wire_epsilon if self.wire_epsilon is not None else self.epsilon / 6

    def recipe(self):
        return {
            "epsilon": self.epsilon,
            "delta": self.delta,
            "M": self.cap,
            "K": self.anchor,
            "eta": self.eta,
            "lambda": self.lam,
            "mu": self.mu,
            "alpha": self.alpha,
            "beta": self.beta,
            "objective": self.objective,
        }


def _learning_anchor(lam, cap, alphabet_size, epsilon):
    if alphabet_size < 2:
        raise ParameterError("The cover reduction needs an alphabet of at least two labels")
    return lam * cap * (alphabet_size - 1) / epsilon


def revenue_learning_params(epsilon, delta, csp, mu=None, alpha=None):
    "M = 2/delta, lambda = 2d/delta, K = lambda M (|alphabet| - 1)/epsilon, beta = eta M."
    epsilon, delta = gadgets._unit_interval("epsilon", epsilon), gadgets._unit_interval("delta", delta)
    cap = 2 / delta
    lam = 2 * csp.variables / delta
    anchor = _learning_anchor(lam, cap, csp.alphabet_size, epsilon)
    eta = delta * len(csp.clauses) / (csp.variables * (csp.alphabet_size * cap + anchor))
    return CoverParams(
        epsilon=epsilon,
        delta=delta,
        cap=cap,
        anchor=anchor,
        eta=eta,
        lam=lam,
        mu=_check_mu(mu) if mu is not None else epsilon ** 2,
        alpha=parse_parameter(alpha) if alpha is not None else epsilon,
        beta=eta * cap,
        objective=gadgets.REVENUE,
    )


def welfare_learning_params(epsilon, csp):
    "mu = epsilon^2, M = 1/epsilon, alpha = epsilon, lambda = 2d/epsilon, beta = min(epsilon^2, eta M)."
    epsilon = gadgets._unit_interval("epsilon", epsilon)
    cap = 1 / epsilon
    lam = 2 * csp.variables / epsilon
    anchor = _learning_anchor(lam, cap, csp.alphabet_size, epsilon)
    eta = epsilon * len(csp.clauses) / (csp.variables * (csp.alphabet_size * cap + anchor))
    return CoverParams(
        epsilon=epsilon,
        delta=epsilon,
        cap=cap,
        anchor=anchor,
        eta=eta,
        lam=lam,
        mu=epsilon ** 2,
        alpha=epsilon,
        beta=min(epsilon ** 2, eta * cap),
        objective=gadgets.WELFARE,
    )


def compile_cover(csp, params):
    """Assignment gadget per variable, a clause bidder per clause and, for welfare, an incumbent per clause."""
    builder = gadgets.InstanceBuilder(params.cap)
    blocks = [
        gadgets.emit_label_assignment(builder, name, params, csp.alphabet_size) for name in csp.vertices
    ]
    for c, clause in enumerate(csp.clauses):
        literals = sorted({builder.bidder(f"{gadgets.ASSIGNMENT}:{i}:{s}") for i, s in clause})
        block = gadgets.emit_edge_block(builder, str(c), literals, params, kind=gadgets.CLAUSE)
        blocks.append(block)
        if params.objective == gadgets.WELFARE:
            blocks.append(gadgets.emit_incumbent(builder, block.bidders[0], str(c), params))
    compiled = gadgets.CompiledInstance(
        instance=builder.build(),
        params=params,
        source=csp,
        kind=COVER,
        blocks=tuple(blocks),
        registry=(),
    )
    logger.info(
        "compiled cover",
        extra={"bidders": compiled.instance.n, "items": compiled.instance.k, "clauses": len(csp.clauses)},
    )
    return compiled


def cover_profile(compiled, labeling):
    "Static equilibrium profile of a compiled cover instance under a partial labeling."
    m = [ONE] * compiled.instance.n
    gadgets.settle_assignments(compiled, labeling, m)
    for c in range(len(compiled.source.clauses)):
        gadgets.settle_stealing_pair(compiled, m, f"{gadgets.CLAUSE}:{c}", f"{gadgets.INCUMBENT}:{c}")
    return make_profile(compiled.instance, m)


@dataclass(frozen=True)
class TGoodReport:
    threshold: Fraction
    per_variable: Dict[str, Fraction]
    overall: Fraction
    bound: Fraction


def tgood_fraction(trace, lam, compiled):
    """Share of rounds whose second-highest assignment multiplier stays below lambda M |alphabet| / K + 1.

    Reported per variable and for all variables at once.
    """
    if not compiled.blocks_of(gadgets.ASSIGNMENT):
        raise InstanceError("The compiled instance has no assignment gadgets")
    lam = parse_parameter(lam)
    params = compiled.params
    sigma = compiled.source.alphabet_size
    threshold = lam * params.cap * sigma / params.anchor + 1
    roles = compiled.roles
    groups = {}
    for u in compiled.source.vertices:
        try:
            groups[u] = [roles[f"{gadgets.ASSIGNMENT}:{u}:{s}"] for s in range(sigma)]
        except KeyError as e:
            raise InstanceError(f"Missing assignment role {e}")
    good = {u: 0 for u in groups}
    overall = 0
    for step in trace.rounds:
        all_good = True
        for u, members in groups.items():
            second = sorted((step.profile[i] for i in members), reverse=True)[1]
            if second <= threshold:
                good[u] += 1
            else:
                all_good = False
        overall += all_good
    T = max(trace.T, 1)
    bound = 1 - 2 * len(groups) / lam
    return TGoodReport(threshold, {u: Fraction(g, T) for u, g in good.items()}, Fraction(overall, T), bound)


@dataclass(frozen=True)
class AverageMetrics:
    welfare: Fraction
    revenue: Fraction
    capture: Dict[str, Fraction]
    owner_price: Dict[str, Fraction]

    def capture_gap(self, key):
        "capture - (1 - average price): the measured constant of the capture inequality."
        return self.capture[key] - (1 - self.owner_price[key])


def _incumbent_pairs(compiled):
    if compiled is None:
        return {}
    roles = compiled.roles
    pairs = {}
    for block in compiled.blocks_of(gadgets.INCUMBENT):
        key = block.name.split(":", 1)[1]
        for kind in (gadgets.EDGE, gadgets.CLAUSE):
            owner = f"{kind}:{key}"
            if owner in roles:
                pairs[owner] = (roles[owner], compiled.item_roles[owner], block.items[0])
    return pairs


def average_metrics(instance, trace, compiled=None):
    """Time-averaged liquid welfare and revenue.

    With a compiled welfare instance, also each edge or clause bidder's
    average share of its incumbent item and its average payment for its
    own item.
    """
    T = trace.T
    if T == 0:
        raise InstanceError("The trace has no rounds")
    welfare = sum((liquid_welfare(instance, step.outcome) for step in trace.rounds), ZERO) / T
    income = sum((revenue(step.outcome) for step in trace.rounds), ZERO) / T
    capture, owner_price = {}, {}
    for owner, (i, own_item, incumbent_item) in _incumbent_pairs(compiled).items():
        capture[owner] = sum((step.outcome.allocation[i][incumbent_item] for step in trace.rounds), ZERO) / T
        owner_price[owner] = (
            sum(
                (step.outcome.allocation[i][own_item] * step.outcome.unit_price(i, own_item) for step in trace.rounds),
                ZERO,
            )
            / T
        )
    return AverageMetrics(welfare, income, capture, owner_price)
