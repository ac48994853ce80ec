"""Compiler from label-cover instances to autobidding instances.

Each vertex gets a label-assignment gadget whose high multiplier marks the
chosen label. Every (edge, label) pair feeds the two endpoint assignment
bidders into a NAND gadget and its output into a NOT gadget, whose output
competes for the edge item. The edge item is expensive exactly when some
label satisfies the edge. Gadget values are scaled by eta so that their
welfare and revenue stay inside a small slack term; edge and incumbent
items are not scaled.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional, Tuple

from autobid.exceptions import InstanceError, ParameterError
from autobid.model import ONE, ZERO, AutobiddingInstance, make_profile, restrict
from autobid.equilibrium import check_conservative_extension
from autobid.utils import autobid_logging
from autobid.utils.rationals import format_rational, parse_parameter

logger = autobid_logging.get_logger(__name__)

REVENUE = "revenue"
WELFARE = "welfare"
OBJECTIVES = (REVENUE, WELFARE)

NATIVE = "native"
EXPAND = "expand"
RESERVE_MODES = (NATIVE, EXPAND)

LABEL_COVER = "label-cover"

ASSIGNMENT = "assign"
NAND = "nand"
NOT = "not"
EDGE = "edge"
INCUMBENT = "incumbent"
RESERVE_AUX = "reserve-aux"
CLAUSE = "clause"


@dataclass(frozen=True)
class Edge:
    left: str
    right: str
    projection: Tuple[int, ...]


def _check_name(name):
    if not isinstance(name, str) or not name or ":" in name:
        raise InstanceError(f"Vertex names must be nonempty strings without ':', got {name!r}")


@dataclass(frozen=True)
class LabelCoverInstance:
    left: Tuple[str, ...]
    right: Tuple[str, ...]
    edges: Tuple[Edge, ...]
    alphabet_size: int

    def __post_init__(self):
        for name in self.left + self.right:
            _check_name(name)
        if len(set(self.left + self.right)) != len(self.left) + len(self.right):
            raise InstanceError("Vertex names must be unique across both sides")
        if self.alphabet_size < 1:
            raise InstanceError("The alphabet needs at least one label")
        seen = set()
        for edge in self.edges:
            if edge.left not in self.left or edge.right not in self.right:
                raise InstanceError(f"Edge ({edge.left}, {edge.right}) has an endpoint outside V1 x V2")
            if (edge.left, edge.right) in seen:
                raise InstanceError(f"Edge ({edge.left}, {edge.right}) appears twice")
            seen.add((edge.left, edge.right))
            if len(edge.projection) != self.alphabet_size or any(
                not 0 <= s < self.alphabet_size for s in edge.projection
            ):
                raise InstanceError(f"Projection of edge ({edge.left}, {edge.right}) is not a map on the alphabet")

    @property
    def vertices(self):
        return self.left + self.right


def make_label_cover(left, right, edges, alphabet_size):
    return LabelCoverInstance(
        left=tuple(left),
        right=tuple(right),
        edges=tuple(Edge(u, v, tuple(int(s) for s in proj)) for u, v, proj in edges),
        alphabet_size=int(alphabet_size),
    )


@dataclass(frozen=True)
class ReductionParams:
    """Gadget parameters.

    cap is the multiplier cap M and anchor the value K of the assignment
    gadget's shared item. wire_epsilon is the slack used inside the NAND and
    NOT gadgets; it defaults to epsilon / 6 so six wire errors fit in epsilon.
    """

    epsilon: Fraction
    delta: Fraction
    cap: Fraction
    anchor: Fraction
    eta: Fraction = ONE
    gamma: Optional[Fraction] = None
    objective: str = REVENUE
    reserves: str = NATIVE
    wire_epsilon: Optional[Fraction] = None

    @property
    def gadget_epsilon(self):
        return self.wire_epsilon if self.wire_epsilon is not None else self.epsilon / 6

    def recipe(self):
        recipe = {
            "epsilon": self.epsilon,
            "delta": self.delta,
            "M": self.cap,
            "K": self.anchor,
            "eta": self.eta,
            "gadget_epsilon": self.gadget_epsilon,
            "objective": self.objective,
            "reserves": self.reserves,
        }
        if self.gamma is not None:
            recipe["gamma"] = self.gamma
        return recipe


def _unit_interval(name, value):
    value = parse_parameter(value)
    if not ZERO < value < ONE:
        raise ParameterError(f"{name} must lie in (0, 1), got {format_rational(value)}")
    return value


def derive_params(epsilon, delta, alphabet_size, objective=REVENUE, gamma=None, reserves=NATIVE):
    "M = (1 + epsilon)/delta and K = 6 M |alphabet| / epsilon; eta is set per instance by with_eta."
    epsilon = _unit_interval("epsilon", epsilon)
    delta = _unit_interval("delta", delta)
    if alphabet_size < 2:
        raise ParameterError("The label-assignment gadget needs an alphabet of at least two labels")
    cap = (1 + epsilon) / delta
    params = ReductionParams(
        epsilon=epsilon,
        delta=delta,
        cap=cap,
        anchor=6 * cap * alphabet_size / epsilon,
        gamma=parse_parameter(gamma),
        objective=objective,
        reserves=reserves,
    )
    validate_params(params, alphabet_size)
    return params


def eta_bound(params, label_cover):
    "delta |E| / (|V| (|alphabet| M + K) + 5 |E| |alphabet|), with |E| floored at 1."
    edges = max(1, len(label_cover.edges))
    sigma = label_cover.alphabet_size
    return params.delta * edges / (
        len(label_cover.vertices) * (sigma * params.cap + params.anchor) + 5 * edges * sigma
    )


def with_eta(params, label_cover):
    return replace(params, eta=eta_bound(params, label_cover))


def validate_params(params, alphabet_size):
    if params.objective not in OBJECTIVES:
        raise ParameterError(f"objective must be one of {', '.join(OBJECTIVES)}")
    if params.reserves not in RESERVE_MODES:
        raise ParameterError(f"reserve mode must be one of {', '.join(RESERVE_MODES)}")
    if params.gamma is not None and not ZERO <= params.gamma < ONE:
        raise ParameterError(f"gamma must lie in [0, 1), got {format_rational(params.gamma)}")
    if params.eta <= 0:
        raise ParameterError("eta must be positive")
    if params.cap < (1 + params.epsilon) / params.delta:
        raise ParameterError(
            f"M = {format_rational(params.cap)} is below (1 + epsilon)/delta = "
            f"{format_rational((1 + params.epsilon) / params.delta)}"
        )
    if params.anchor < 6 * params.cap * alphabet_size / params.epsilon:
        raise ParameterError(
            f"K = {format_rational(params.anchor)} is below 6 M |alphabet| / epsilon = "
            f"{format_rational(6 * params.cap * alphabet_size / params.epsilon)}"
        )
    if 6 * params.gadget_epsilon > params.epsilon:
        raise ParameterError("Six gadget errors must fit inside epsilon")


class InstanceBuilder:
    "Mutable accumulator of labelled bidders, items, values and reserves."

    def __init__(self, cap):
        self.cap = Fraction(cap)
        self.bidder_labels = []
        self.item_labels = []
        self.reserves = []
        self.values = {}
        self._bidders = {}
        self._items = {}

    @classmethod
    def from_instance(cls, instance):
        builder = cls(instance.cap)
        for label in instance.bidder_labels:
            builder.add_bidder(label)
        for label, reserve in zip(instance.item_labels, instance.reserves):
            builder.add_item(label, reserve)
        for i, row in enumerate(instance.values):
            for j, v in enumerate(row):
                if v:
                    builder.values[i, j] = v
        return builder

    def add_bidder(self, label):
        if label in self._bidders:
            raise InstanceError(f"Bidder {label} already exists")
        self._bidders[label] = len(self.bidder_labels)
        self.bidder_labels.append(label)
        return self._bidders[label]

    def add_item(self, label, reserve=ZERO):
        if label in self._items:
            raise InstanceError(f"Item {label} already exists")
        self._items[label] = len(self.item_labels)
        self.item_labels.append(label)
        self.reserves.append(Fraction(reserve))
        return self._items[label]

    def bidder(self, label):
        return self._bidders[label]

    def item(self, label):
        return self._items[label]

    def set_value(self, bidder, item, value):
        self.values[bidder, item] = Fraction(value)

    def value(self, bidder, item):
        return self.values.get((bidder, item), ZERO)

    def raise_reserve(self, item, reserve):
        self.reserves[item] = max(self.reserves[item], Fraction(reserve))

    def clear_reserve(self, item):
        self.reserves[item] = ZERO

    def build(self):
        n, k = len(self.bidder_labels), len(self.item_labels)
        rows = [[ZERO] * k for _ in range(n)]
        for (i, j), v in self.values.items():
            rows[i][j] = v
        return AutobiddingInstance(
            values=tuple(tuple(row) for row in rows),
            reserves=tuple(self.reserves),
            cap=self.cap,
            ros_targets=(ONE,) * n,
            budgets=(None,) * n,
            bidder_labels=tuple(self.bidder_labels),
            item_labels=tuple(self.item_labels),
        )


@dataclass(frozen=True)
class Fragment:
    name: str
    kind: str
    bidders: Tuple[int, ...]
    items: Tuple[int, ...]


def emit_label_assignment(builder, vertex, params, alphabet_size):
    "One bidder and one item per label plus a shared anchor item."
    if alphabet_size < 2:
        raise ParameterError("The label-assignment gadget needs an alphabet of at least two labels")
    eta, cap = params.eta, params.cap
    bidders = [builder.add_bidder(f"{ASSIGNMENT}:{vertex}:{s}") for s in range(alphabet_size)]
    items = [builder.add_item(f"{ASSIGNMENT}:{vertex}:{s}") for s in range(alphabet_size)]
    anchor = builder.add_item(f"{ASSIGNMENT}:{vertex}:anchor")
    for a, i in enumerate(bidders):
        for b, j in enumerate(items):
            builder.set_value(i, j, eta * cap if a == b else eta)
        builder.set_value(i, anchor, eta * params.anchor)
    return Fragment(f"{ASSIGNMENT}:{vertex}", ASSIGNMENT, tuple(bidders), tuple(items) + (anchor,))


def emit_nand(builder, first, second, params, key):
    """Output multiplier is near 1 when both inputs sit at the cap and equals the cap otherwise."""
    assert first != second, "NAND inputs must be distinct bidders"
    eta, cap, e = params.eta, params.cap, params.gadget_epsilon
    out = builder.add_bidder(f"{NAND}:{key}")
    items = [builder.add_item(f"{NAND}:{key}:{n}") for n in range(1, 5)]
    builder.set_value(first, items[0], eta / (2 * cap))
    builder.set_value(second, items[1], eta / (2 * cap))
    half = Fraction(1, 2)
    for j, v in zip(items, (half + e, half + e, ONE, 1 / (2 * cap))):
        builder.set_value(out, j, eta * v)
    builder.raise_reserve(items[2], eta * (1 + 3 * e))
    builder.raise_reserve(items[3], eta * half)
    return Fragment(f"{NAND}:{key}", NAND, (out,), tuple(items))


def emit_not(builder, source, params, key):
    eta, cap, e = params.eta, params.cap, params.gadget_epsilon
    out = builder.add_bidder(f"{NOT}:{key}")
    items = [builder.add_item(f"{NOT}:{key}:{n}") for n in range(1, 4)]
    builder.set_value(source, items[0], eta / cap)
    for j, v in zip(items, (1 + e, ONE, 1 / cap)):
        builder.set_value(out, j, eta * v)
    builder.raise_reserve(items[1], eta * (1 + 2 * e))
    builder.raise_reserve(items[2], eta)
    return Fragment(f"{NOT}:{key}", NOT, (out,), tuple(items))


def emit_edge_block(builder, key, competitors, params, kind=EDGE):
    edge = builder.add_bidder(f"{kind}:{key}")
    item = builder.add_item(f"{kind}:{key}")
    builder.set_value(edge, item, 1 + params.epsilon)
    for i in competitors:
        builder.set_value(i, item, 1 / params.cap)
    return Fragment(f"{kind}:{key}", kind, (edge,), (item,))


def emit_incumbent(builder, edge_bidder, key, params, kind=INCUMBENT):
    if params.objective != WELFARE:
        raise ParameterError("Incumbent bidders are only emitted for the welfare objective")
    incumbent = builder.add_bidder(f"{INCUMBENT}:{key}")
    item = builder.add_item(f"{INCUMBENT}:{key}")
    builder.set_value(incumbent, item, ONE)
    builder.set_value(edge_bidder, item, (1 + params.epsilon) / params.cap)
    return Fragment(f"{INCUMBENT}:{key}", kind, (incumbent,), (item,))


def attach_signals(builder, items, gamma, overrides=None):
    """Raises each item's reserve to the largest bidder signal on it.

    A signal defaults to gamma times the bidder's value; overrides maps
    (bidder label, item label) to a signal inside [gamma v, v].
    """
    gamma = Fraction(gamma)
    overrides = dict(overrides or {})
    for j in items:
        signals = []
        for i, label in enumerate(builder.bidder_labels):
            v = builder.value(i, j)
            sig = overrides.pop((label, builder.item_labels[j]), gamma * v)
            sig = Fraction(sig)
            if not gamma * v <= sig <= v:
                raise ParameterError(
                    f"Signal {format_rational(sig)} of {label} on {builder.item_labels[j]} is outside "
                    f"[{format_rational(gamma * v)}, {format_rational(v)}]"
                )
            signals.append(sig)
        builder.raise_reserve(j, max(signals, default=ZERO))
    if overrides:
        raise InstanceError(f"Signal overrides name unknown or unsignalled entries: {sorted(overrides)}")


@dataclass(frozen=True)
class CompiledInstance:
    instance: AutobiddingInstance
    params: object
    source: object
    kind: str
    blocks: Tuple[Fragment, ...]
    registry: Tuple[Tuple[int, Fraction], ...]

    @property
    def roles(self):
        return {label: i for i, label in enumerate(self.instance.bidder_labels)}

    @property
    def item_roles(self):
        return {label: j for j, label in enumerate(self.instance.item_labels)}

    def blocks_of(self, kind):
        return tuple(b for b in self.blocks if b.kind == kind)


def registry_of(builder):
    return tuple((j, r) for j, r in enumerate(builder.reserves) if r > 0)


def compile_label_cover(label_cover, params, signals=None):
    """Wires assignment, NAND, NOT, edge and (welfare) incumbent gadgets for every vertex and edge."""
    sigma = label_cover.alphabet_size
    validate_params(params, sigma)
    builder = InstanceBuilder(params.cap)
    blocks = [emit_label_assignment(builder, u, params, sigma) for u in label_cover.vertices]
    for index, edge in enumerate(label_cover.edges):
        competitors = []
        for s in range(sigma):
            key = f"{index}:{s}"
            first = builder.bidder(f"{ASSIGNMENT}:{edge.left}:{s}")
            second = builder.bidder(f"{ASSIGNMENT}:{edge.right}:{edge.projection[s]}")
            nand = emit_nand(builder, first, second, params, key)
            negation = emit_not(builder, nand.bidders[0], params, key)
            blocks.extend((nand, negation))
            competitors.append(negation.bidders[0])
        block = emit_edge_block(builder, str(index), competitors, params)
        blocks.append(block)
        if params.objective == WELFARE:
            blocks.append(emit_incumbent(builder, block.bidders[0], str(index), params))
    if params.gamma is not None:
        signalled = [j for b in blocks if b.kind != ASSIGNMENT for j in b.items]
        attach_signals(builder, signalled, params.gamma, signals)
    elif signals:
        raise ParameterError("Signal overrides need gamma")
    compiled = CompiledInstance(
        instance=builder.build(),
        params=params,
        source=label_cover,
        kind=LABEL_COVER,
        blocks=tuple(blocks),
        registry=registry_of(builder),
    )
    if params.reserves == EXPAND:
        compiled = expand_reserves(compiled)
    logger.info(
        "compiled label cover",
        extra={
            "bidders": compiled.instance.n,
            "items": compiled.instance.k,
            "edges": len(label_cover.edges),
            "objective": params.objective,
            "reserves": params.reserves,
        },
    )
    return compiled


def expand_reserves(compiled):
    """Replaces every registered reserve r by two auxiliary bidders and two auxiliary items.

    With the auxiliary multipliers at (1, 2) the pair bids exactly r on the
    target item and can absorb any share of it, which is how a reserve
    behaves.
    """
    if not compiled.registry:
        return compiled
    if compiled.instance.cap < 2:
        raise ParameterError("Reserve expansion needs a multiplier cap of at least 2")
    builder = InstanceBuilder.from_instance(compiled.instance)
    blocks = list(compiled.blocks)
    for j, r in compiled.registry:
        label = builder.item_labels[j]
        first = builder.add_bidder(f"{RESERVE_AUX}:{label}:1")
        second = builder.add_bidder(f"{RESERVE_AUX}:{label}:2")
        own = builder.add_item(f"{RESERVE_AUX}:{label}:1")
        shared = builder.add_item(f"{RESERVE_AUX}:{label}:2")
        builder.set_value(first, shared, 2 * r)
        builder.set_value(first, j, r)
        builder.set_value(second, own, r / 2)
        builder.set_value(second, shared, r)
        builder.set_value(second, j, r / 2)
        builder.clear_reserve(j)
        blocks.append(Fragment(f"{RESERVE_AUX}:{label}", RESERVE_AUX, (first, second), (own, shared)))
    return replace(compiled, instance=builder.build(), blocks=tuple(blocks), registry=())


def expanded_reserves(compiled):
    "The reserve each auxiliary pair simulates, keyed by target item label."
    found = {}
    for block in compiled.blocks_of(RESERVE_AUX):
        first = block.bidders[0]
        found[block.name[len(RESERVE_AUX) + 1:]] = compiled.instance.values[first][block.items[1]] / 2
    return found


def csp_value(label_cover, labeling):
    """Number of edges whose projection maps the left label to the right label.

    labeling maps vertex names to labels; missing or None entries are unlabeled.
    """
    for u, s in labeling.items():
        if s is not None and not 0 <= s < label_cover.alphabet_size:
            raise InstanceError(f"Label {s} of vertex {u} is outside the alphabet")
    satisfied = 0
    for edge in label_cover.edges:
        a, b = labeling.get(edge.left), labeling.get(edge.right)
        if a is not None and b is not None and edge.projection[a] == b:
            satisfied += 1
    return satisfied


def decode(compiled, multipliers, threshold=None):
    "Labels each vertex with the label whose assignment multiplier reaches threshold (the cap by default)."
    profile = make_profile(compiled.instance, multipliers)
    threshold = compiled.instance.cap if threshold is None else parse_parameter(threshold)
    roles = compiled.roles
    labeling = {}
    for u in compiled.source.vertices:
        chosen = [
            s
            for s in range(compiled.source.alphabet_size)
            if profile[roles[f"{ASSIGNMENT}:{u}:{s}"]] >= threshold
        ]
        if len(chosen) > 1:
            raise InstanceError(f"Vertex {u} has {len(chosen)} labels at or above the threshold")
        labeling[u] = chosen[0] if chosen else None
    return labeling


def assignment_level(params, alphabet_size):
    "Common multiplier of an unlabeled assignment gadget: (M |alphabet| + K) / (|alphabet| + K)."
    return (params.cap * alphabet_size + params.anchor) / (alphabet_size + params.anchor)


def settle_assignments(compiled, labeling, m):
    params = compiled.params
    sigma = compiled.source.alphabet_size
    roles = compiled.roles
    level = assignment_level(params, sigma)
    for u in compiled.source.vertices:
        chosen = labeling.get(u)
        for s in range(sigma):
            i = roles[f"{ASSIGNMENT}:{u}:{s}"]
            if chosen is None:
                m[i] = level
            else:
                m[i] = params.cap if s == chosen else ONE


def settle_reserve_aux(compiled, m):
    for block in compiled.blocks_of(RESERVE_AUX):
        first, second = block.bidders
        m[first] = ONE
        m[second] = Fraction(2)


def settle_stealing_pair(compiled, m, role, incumbent_role):
    """Sets the multipliers of a bidder and, in welfare mode, its incumbent.

    Without an incumbent the bidder sits at the cap. With one, the bidder's
    surplus on its own item is spent stealing the incumbent item: when the
    binding share fits in [0, 1] both tie at the incumbent's value,
    otherwise the bidder stays at the cap and wins the incumbent item
    outright. Every other multiplier must already be set.
    """
    instance = compiled.instance
    cap = instance.cap
    roles, items = compiled.roles, compiled.item_roles
    e = roles[role]
    if incumbent_role not in roles:
        m[e] = cap
        return
    own = items[role]
    price = max([instance.reserves[own]] + [m[i] * instance.values[i][own] for i in range(instance.n) if i != e])
    inc, inc_item = roles[incumbent_role], items[incumbent_role]
    m[inc] = ONE
    cross = instance.values[e][inc_item]
    rival = max(
        [instance.reserves[inc_item]]
        + [m[i] * instance.values[i][inc_item] for i in range(instance.n) if i != e and i != inc]
        + [instance.values[inc][inc_item]]
    )
    surplus = instance.values[e][own] - price
    if cross < rival <= cap * cross and surplus / (rival - cross) <= 1:
        m[e] = rival / cross
    else:
        m[e] = cap


def labeling_profile(compiled, labeling):
    """Equilibrium profile induced by a partial labeling of a compiled label-cover instance.

    Labeled vertices put their label's bidder at the cap, unlabeled ones sit
    at the common assignment level. A NAND output is near 1 exactly when both
    inputs are at the cap; the NOT output inverts it, and the edge bidder
    settles against the resulting edge price.
    """
    params = compiled.params
    cap = params.cap
    e = params.gadget_epsilon
    m = [ONE] * compiled.instance.n
    roles = compiled.roles
    settle_assignments(compiled, labeling, m)
    settle_reserve_aux(compiled, m)
    for index, edge in enumerate(compiled.source.edges):
        for s in range(compiled.source.alphabet_size):
            a = m[roles[f"{ASSIGNMENT}:{edge.left}:{s}"]]
            b = m[roles[f"{ASSIGNMENT}:{edge.right}:{edge.projection[s]}"]]
            nand = 1 + 3 * e if a == cap and b == cap else cap
            m[roles[f"{NAND}:{index}:{s}"]] = nand
            m[roles[f"{NOT}:{index}:{s}"]] = 1 + 2 * e if nand == cap else cap
        settle_stealing_pair(compiled, m, f"{EDGE}:{index}", f"{INCUMBENT}:{index}")
    return make_profile(compiled.instance, m)


def partial_labelings(vertices, alphabet_size):
    choices = (None,) + tuple(range(alphabet_size))
    for combo in itertools.product(choices, repeat=len(vertices)):
        yield dict(zip(vertices, combo))


def labeling_profiles(compiled, settle=None):
    "Every partial labeling with its induced profile."
    settle = settle or labeling_profile
    for labeling in partial_labelings(compiled.source.vertices, compiled.source.alphabet_size):
        yield labeling, settle(compiled, labeling)


def edge_incumbent_pair(params, competitors=1):
    """Edge bidder facing competitors worth 1/M on its item, next to an incumbent.

    Bidders are labelled competitor:c, edge:0 and incumbent:0.
    """
    params = replace(params, objective=WELFARE)
    builder = InstanceBuilder(params.cap)
    rivals = [builder.add_bidder(f"competitor:{c}") for c in range(competitors)]
    edge = emit_edge_block(builder, "0", rivals, params)
    incumbent = emit_incumbent(builder, edge.bidders[0], "0", params)
    if params.gamma is not None:
        attach_signals(builder, edge.items + incumbent.items, params.gamma)
    return builder.build()


def structural_points(params, alphabet_size):
    "Multipliers at which the gadgets change behaviour."
    cap, anchor, eps, e = params.cap, params.anchor, params.epsilon, params.gadget_epsilon
    points = {
        ONE,
        1 + e,
        1 + 2 * e,
        1 + 3 * e,
        1 + eps,
        1 + 2 * eps,
        1 + 3 * eps,
        assignment_level(params, alphabet_size),
        1 + (cap + alphabet_size) / anchor,
        cap / (1 + eps),
        Fraction(2),
        cap,
    }
    return tuple(sorted(p for p in points if ONE <= p <= cap))


def assignment_dichotomy(multipliers, params, alphabet_size, tolerance=ZERO):
    """True when a gadget's multipliers are all low or have one at the cap with the rest low."""
    ordered = sorted(multipliers, reverse=True)
    top = ordered[0]
    second = ordered[1] if len(ordered) > 1 else ONE
    if top <= assignment_level(params, alphabet_size) + tolerance:
        return True
    return top == params.cap and second <= 1 + (params.cap + alphabet_size) / params.anchor + tolerance


def gadget_slack(compiled, edges, alphabet_size, vertices):
    "eta (|V| (|alphabet| M + K) + 5 |E| |alphabet|) plus 5 r for every simulated reserve."
    params = compiled.params
    slack = params.eta * (vertices * (alphabet_size * params.cap + params.anchor) + 5 * edges * alphabet_size)
    return slack + 5 * sum(expanded_reserves(compiled).values(), ZERO)


def revenue_bounds(compiled, satisfied):
    """Completeness floor and soundness ceiling on equilibrium revenue, itemized."""
    source = compiled.source
    params = compiled.params
    edges = len(source.edges)
    slack = gadget_slack(compiled, edges, source.alphabet_size, len(source.vertices))
    leak = edges * (1 + params.epsilon) / params.cap
    return {
        "satisfied": satisfied,
        "gadget_slack": slack,
        "unsatisfied_leak": leak,
        "lower": Fraction(satisfied),
        "upper": slack + satisfied + leak,
    }


def welfare_bounds(compiled, satisfied):
    source = compiled.source
    params = compiled.params
    edges = len(source.edges)
    slack = gadget_slack(compiled, edges, source.alphabet_size, len(source.vertices))
    leak = edges * (1 + params.epsilon) / params.cap
    return {
        "satisfied": satisfied,
        "gadget_slack": slack,
        "unsatisfied_leak": leak,
        "lower": (1 + params.epsilon) * edges + (1 - 2 * params.epsilon) * satisfied,
        "upper": slack + (1 + params.epsilon) * edges + satisfied + leak,
    }


def check_wiring(compiled):
    """Conservative-extension check of every block against all earlier blocks.

    Incumbent and auxiliary reserve blocks are skipped: they are meant to
    compete across their boundary.
    """
    instance = compiled.instance
    results = []
    bidders, items = [], []
    for block in compiled.blocks:
        if block.kind in (INCUMBENT, RESERVE_AUX):
            continue
        outer_bidders, outer_items = bidders + list(block.bidders), items + list(block.items)
        inner = restrict(instance, bidders, items)
        outer = restrict(instance, outer_bidders, outer_items)
        passed = check_conservative_extension(
            inner,
            outer,
            {i: i for i in range(len(bidders))},
            {j: j for j in range(len(items))},
        )
        if not passed:
            logger.warning("block is not a conservative extension", extra={"block": block.name})
        results.append((block.name, passed))
        bidders, items = outer_bidders, outer_items
    return results
