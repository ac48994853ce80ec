import math
import pytest
from dataclasses import replace
from fractions import Fraction
from autobid import gadgets, learning
from autobid.exceptions import InstanceError, ParameterError
from autobid.model import make_instance

TENTH = Fraction(1, 10)
MIXED = make_instance([[1, 5, 1], [3, 0, 0]], reserves=[0, 0, 2], cap=4)
SOLO = make_instance([[1]], cap=5)
SHARED = make_instance([[1, 0], [1, 0], [0, 1]], cap=5, bidder_labels=["a", "b", "c"])
TWO_CLAUSES = learning.make_cover(2, 2, [[(0, 0), (1, 0)], [(0, 1), (1, 1)]])
THREE_CLAUSES = learning.make_cover(2, 2, [[(0, 0), (1, 0)], [(0, 1), (1, 1)], [(0, 0), (1, 1)]])
ONE_CLAUSE = learning.make_cover(2, 2, [[(0, 0), (1, 1)]])


def test_cumulative_ratio():
    assert learning.cumulative_ratio(0, 0) == 1
    assert learning.cumulative_ratio(1, 0) == math.inf
    assert learning.cumulative_ratio(1, 2) == Fraction(1, 2)


def test_m_safe():
    assert learning.m_safe(MIXED, 0, 0) == 2
    assert learning.m_safe(MIXED, 0, Fraction(1, 4)) == Fraction(3, 2)
    assert learning.m_safe(MIXED, 1, 0) == 1
    assert learning.m_safe(SOLO, 0, Fraction(1, 5)) == 4


def test_m_safe_rejects_mu():
    with pytest.raises(ParameterError):
        learning.m_safe(SOLO, 0, 1)


def test_step_rule():
    rule = learning.UpdateRule(learning.STEP, m_safe=Fraction(2), cap=Fraction(10))
    assert rule(Fraction(1, 2)) == 2
    assert rule(Fraction(1)) == 10
    assert rule(math.inf) == 10
    assert rule.constant == 1


def test_poly_rule():
    rule = learning.UpdateRule(learning.POLY, m_safe=Fraction(2), cap=Fraction(10), degree=2)
    assert rule(Fraction(3, 2)) == Fraction(9, 2)
    assert rule(Fraction(3)) == 10
    assert rule(Fraction(99, 100)) == 2
    assert rule.constant == 2


def test_exp_rule():
    rule = learning.UpdateRule(learning.EXP, m_safe=Fraction(2), cap=Fraction(10), rate=Fraction(1))
    assert rule(Fraction(1)) == 2
    assert rule(Fraction(5)) == 10
    assert Fraction(2) < rule(Fraction(3, 2)) <= 10
    assert rule(Fraction(3, 2)).denominator <= learning.RESOLUTION


def test_custom_rule_is_clamped():
    high = learning.UpdateRule(learning.CUSTOM, m_safe=Fraction(2), cap=Fraction(10), function=lambda r: 100)
    low = learning.UpdateRule(learning.CUSTOM, m_safe=Fraction(2), cap=Fraction(10), function=lambda r: 0)
    assert high(Fraction(1, 2)) == 10
    assert low(math.inf) == 2


def test_rule_validation():
    with pytest.raises(ParameterError):
        learning.UpdateRule("linear", m_safe=Fraction(1), cap=Fraction(2))
    with pytest.raises(ParameterError):
        learning.UpdateRule(learning.POLY, m_safe=Fraction(1), cap=Fraction(2), degree=0)
    with pytest.raises(ParameterError):
        learning.UpdateRule(learning.EXP, m_safe=Fraction(1), cap=Fraction(2), rate=Fraction(0))
    with pytest.raises(ParameterError):
        learning.UpdateRule(learning.CUSTOM, m_safe=Fraction(1), cap=Fraction(2))


def test_make_rules():
    rules = learning.make_rules(MIXED, learning.POLY)
    assert [r.m_safe for r in rules] == [2, 1]
    assert all(r.degree == 2 for r in rules)
    assert learning.make_rules(MIXED, learning.EXP, "1/2")[0].rate == Fraction(1, 2)


def test_psi_constants():
    rules = [learning.UpdateRule(learning.STEP, m_safe=Fraction(3, 2), cap=Fraction(20))]
    rules += [
        learning.UpdateRule(learning.POLY, m_safe=Fraction(3, 2), cap=Fraction(20), degree=d) for d in (2, 3, 5)
    ]
    rules += [
        learning.UpdateRule(learning.EXP, m_safe=Fraction(3, 2), cap=Fraction(20), rate=rate)
        for rate in (Fraction(1, 2), Fraction(1), Fraction(2))
    ]
    for rule in rules:
        verdict = learning.verify_psi_constants(rule)
        assert verdict.accepted, (rule.kind, verdict.violations)
        assert verdict.constant == rule.constant


def test_psi_constants_reject_custom():
    rule = learning.UpdateRule(learning.CUSTOM, m_safe=Fraction(1), cap=Fraction(2), function=lambda r: 1)
    with pytest.raises(ParameterError):
        learning.verify_psi_constants(rule)


def test_run_dynamics_lifts_initial_profile():
    trace = learning.run_dynamics(SHARED, learning.make_rules(SHARED, learning.STEP), 3, initial_profile=[5, 5, 1])
    assert trace.rounds[0].profile.m == (5, 5, 5)
    assert trace.rounds[0].ratios[0] == Fraction(1, 5)
    assert trace.rounds[1].profile.m == (1, 1, 5)


def test_run_dynamics_validation():
    rules = learning.make_rules(SOLO, learning.STEP)
    with pytest.raises(ParameterError):
        learning.run_dynamics(SOLO, rules, 0)
    with pytest.raises(ParameterError):
        learning.run_dynamics(SHARED, rules, 5)


def test_replay_matches_dynamics():
    trace = learning.run_dynamics(SHARED, learning.make_rules(SHARED, learning.STEP), 6, initial_profile=[5, 5, 1])
    replayed = learning.replay(SHARED, [step.profile for step in trace.rounds])
    assert replayed.rounds == trace.rounds


def _shared_trace(rounds=10):
    return learning.run_dynamics(
        SHARED, learning.make_rules(SHARED, learning.STEP), rounds, initial_profile=[5, 5, 1]
    )


def test_admissibility_slack_freezes():
    trace = _shared_trace(10)
    verdict = learning.check_admissible(SHARED, trace, Fraction(1, 5))
    assert verdict.accepted
    assert verdict.worst_slack == Fraction(1, 5)
    assert verdict.slacks == (Fraction(1, 5), Fraction(1, 5), Fraction(-1))


def test_admissibility_needs_beta_for_deficit():
    trace = _shared_trace(10)
    verdict = learning.check_admissible(SHARED, trace, Fraction(1, 5) - Fraction(1, 100))
    assert not verdict.accepted
    assert verdict.violated_condition is None
    assert learning.check_admissible(SHARED, _shared_trace(20), Fraction(1, 10)).accepted


@pytest.mark.parametrize("kind", [learning.STEP, learning.POLY, learning.EXP])
@pytest.mark.parametrize("rounds", [100, 300, 1000])
def test_admissibility_slack_decays_with_rounds(kind, rounds):
    # a and b overspend in the first round only and never recover the deficit of 2
    rules = learning.make_rules(SHARED, kind)
    trace = learning.run_dynamics(SHARED, rules, rounds, initial_profile=[5, 5, 5])
    constant = learning.admissibility_constant(SHARED)
    verdict = learning.check_admissible(SHARED, trace, constant / rounds)
    assert verdict.accepted
    assert verdict.worst_slack * rounds == 2


def test_admissibility_rejects_outcome_of_other_profile():
    honest = learning.replay(SHARED, [[5, 5, 5]])
    other = learning.replay(SHARED, [[1, 1, 5]])
    grafted = replace(other.rounds[0], profile=honest.rounds[0].profile)
    with pytest.raises(InstanceError):
        learning.check_admissible(SHARED, replace(honest, rounds=(grafted,)), 1)


def test_admissibility_constant():
    assert learning.admissibility_constant(SHARED) == 5
    assert learning.admissibility_constant(MIXED) == 28


def test_admissibility_rejects_inconsistent_trace():
    trace = _shared_trace(3)
    broken = replace(trace.rounds[1], cumulative_value=(Fraction(0),) * 3)
    tampered = replace(trace, rounds=(trace.rounds[0], broken, trace.rounds[2]))
    with pytest.raises(InstanceError):
        learning.check_admissible(SHARED, tampered, 1)


def test_admissibility_rejects_negative_beta():
    with pytest.raises(ParameterError):
        learning.check_admissible(SHARED, _shared_trace(2), -1)


def test_responsive_rejects_trace_pinned_at_floor():
    mu = Fraction(1, 5)
    rules = learning.make_rules(SOLO, learning.CUSTOM, lambda r: 0, mu=mu)
    trace = learning.run_dynamics(SOLO, rules, 20)
    assert {step.profile[0] for step in trace.rounds} == {4}
    verdict = learning.check_responsive(SOLO, trace, learning.ResponsiveParams(mu=mu))
    assert not verdict.accepted
    assert verdict.admissible.accepted
    assert verdict.undominated_violations == ()
    assert verdict.reaction_violations
    violation = verdict.reaction_violations[0]
    assert violation.average < violation.bound


def test_responsive_accepts_step_dynamics():
    mu = Fraction(1, 5)
    trace = learning.run_dynamics(SOLO, learning.make_rules(SOLO, learning.STEP, mu=mu), 20)
    params = learning.ResponsiveParams(mu=mu, alpha=TENTH)
    verdict = learning.check_responsive(SOLO, trace, params)
    assert verdict.accepted
    assert verdict.checked_s == learning.DEFAULT_S_GRID
    assert learning.largest_responsive_c(SOLO, trace, params, [1, 10, 100]) == 100


@pytest.mark.parametrize("kind", [learning.STEP, learning.POLY, learning.EXP])
@pytest.mark.parametrize("instance", [SOLO, SHARED], ids=["solo", "shared"])
def test_responsive_accepts_rule_with_own_constant(kind, instance):
    mu = Fraction(1, 5)
    rules = learning.make_rules(instance, kind, mu=mu)
    trace = learning.run_dynamics(instance, rules, 40)
    params = learning.ResponsiveParams(
        alpha=Fraction(0),
        beta=learning.admissibility_constant(instance) / trace.T,
        mu=mu,
        c=rules[0].constant,
    )
    assert learning.check_responsive(instance, trace, params).accepted


def test_largest_responsive_c_none():
    mu = Fraction(1, 5)
    trace = learning.run_dynamics(SOLO, learning.make_rules(SOLO, learning.CUSTOM, lambda r: 0, mu=mu), 10)
    assert learning.largest_responsive_c(SOLO, trace, learning.ResponsiveParams(mu=mu), [1, 2]) is None


def test_responsive_flags_dominated_multiplier():
    trace = learning.replay(SOLO, [[1], [5], [5]])
    verdict = learning.check_responsive(SOLO, trace, learning.ResponsiveParams(mu=Fraction(1, 5)))
    assert verdict.undominated_violations == ((0, 1),)
    assert not verdict.accepted


def test_responsive_params_validation():
    with pytest.raises(ParameterError):
        learning.ResponsiveParams(alpha=Fraction(1))
    with pytest.raises(ParameterError):
        learning.ResponsiveParams(c=Fraction(0))
    with pytest.raises(ParameterError):
        learning.ResponsiveParams(s_grid=())


def test_cover_from_max_cover():
    csp = learning.cover_from_max_cover(2, [1, 2, 3], [[1, 2], [3]])
    assert csp.clauses == (((0, 0), (1, 0)), ((0, 0), (1, 0)), ((0, 1), (1, 1)))
    assert learning.cover_value(csp, {0: 0, 1: 1}) == 3
    assert learning.cover_value(csp, {0: 0, 1: 0}) == 2
    with pytest.raises(InstanceError):
        learning.cover_from_max_cover(1, [1, 4], [[1]])


def test_cover_validation():
    with pytest.raises(InstanceError):
        learning.make_cover(2, 2, [[]])
    with pytest.raises(InstanceError):
        learning.make_cover(2, 2, [[(2, 0)]])
    with pytest.raises(InstanceError):
        learning.cover_value(ONE_CLAUSE, {"0": 2})


def test_revenue_learning_params():
    params = learning.revenue_learning_params(TENTH, TENTH, TWO_CLAUSES)
    assert params.cap == 20
    assert params.lam == 40
    assert params.anchor == 8000
    assert params.eta == Fraction(1, 80400)
    assert params.beta == Fraction(1, 4020)
    assert params.mu == Fraction(1, 100)
    assert params.alpha == TENTH


def test_welfare_learning_params():
    params = learning.welfare_learning_params(TENTH, ONE_CLAUSE)
    assert params.cap == 10
    assert params.lam == 40
    assert params.anchor == 4000
    assert params.eta == Fraction(1, 80400)
    assert params.beta == Fraction(1, 8040)
    assert params.objective == gadgets.WELFARE


def test_learning_params_need_two_labels():
    with pytest.raises(ParameterError):
        learning.revenue_learning_params(TENTH, TENTH, learning.make_cover(1, 1, [[(0, 0)]]))


def test_compile_cover_counts():
    revenue = learning.compile_cover(ONE_CLAUSE, learning.revenue_learning_params(TENTH, TENTH, ONE_CLAUSE))
    assert (revenue.instance.n, revenue.instance.k) == (5, 7)
    assert revenue.kind == learning.COVER
    welfare = learning.compile_cover(ONE_CLAUSE, learning.welfare_learning_params(TENTH, ONE_CLAUSE))
    assert (welfare.instance.n, welfare.instance.k) == (6, 8)
    clause, item = welfare.roles["clause:0"], welfare.item_roles["incumbent:0"]
    assert welfare.instance.values[clause][item] == Fraction(11, 100)
    literal = welfare.roles["assign:1:1"]
    assert welfare.instance.values[literal][welfare.item_roles["clause:0"]] == TENTH


def test_cover_profile_steals_when_satisfied():
    compiled = learning.compile_cover(ONE_CLAUSE, learning.welfare_learning_params(TENTH, ONE_CLAUSE))
    clause = compiled.roles["clause:0"]
    satisfied = learning.cover_profile(compiled, {"0": 0, "1": 0})
    assert satisfied[compiled.roles["assign:0:0"]] == 10
    assert satisfied[compiled.roles["assign:0:1"]] == 1
    assert satisfied[clause] == Fraction(100, 11)
    assert learning.cover_profile(compiled, {"0": 1, "1": 0})[clause] == 10


def test_m_safe_of_clause_bidder():
    compiled = learning.compile_cover(ONE_CLAUSE, learning.welfare_learning_params(TENTH, ONE_CLAUSE))
    instance = compiled.instance
    assert learning.m_safe(instance, compiled.roles["clause:0"], Fraction(1, 100)) == 9
    assert learning.m_safe(instance, compiled.roles["incumbent:0"], Fraction(1, 100)) == 1
    assert learning.m_safe(instance, compiled.roles["assign:0:0"], Fraction(1, 100)) == 1


def test_tgood_fraction_after_spike():
    params = learning.revenue_learning_params(TENTH, TENTH, TWO_CLAUSES)
    compiled = learning.compile_cover(TWO_CLAUSES, params)
    rules = learning.make_rules(compiled.instance, learning.STEP, mu=params.mu)
    trace = learning.run_dynamics(compiled.instance, rules, 1000)
    report = learning.tgood_fraction(trace, params.lam, compiled)
    assert report.threshold == Fraction(6, 5)
    assert report.bound == Fraction(9, 10)
    assert report.overall == Fraction(999, 1000)
    assert report.per_variable == {"0": Fraction(999, 1000), "1": Fraction(999, 1000)}
    assert report.overall >= report.bound


def test_tgood_fraction_meets_bound_on_three_clauses():
    params = learning.revenue_learning_params(TENTH, TENTH, THREE_CLAUSES)
    compiled = learning.compile_cover(THREE_CLAUSES, params)
    rules = learning.make_rules(compiled.instance, learning.STEP, mu=params.mu)
    trace = learning.run_dynamics(compiled.instance, rules, 1000)
    report = learning.tgood_fraction(trace, params.lam, compiled)
    assert params.lam == 40
    assert report.bound == Fraction(9, 10)
    assert report.overall >= report.bound


def test_tgood_needs_assignment_gadgets():
    compiled = gadgets.CompiledInstance(
        instance=SOLO, params=None, source=None, kind=learning.COVER, blocks=(), registry=()
    )
    with pytest.raises(InstanceError):
        learning.tgood_fraction(learning.replay(SOLO, [[5]]), 40, compiled)


def test_capture_of_incumbent_item():
    params = learning.welfare_learning_params(TENTH, ONE_CLAUSE)
    compiled = learning.compile_cover(ONE_CLAUSE, params)
    instance = compiled.instance
    trace = learning.run_dynamics(instance, learning.make_rules(instance, learning.STEP, mu=params.mu), 100)
    incumbent = compiled.roles["incumbent:0"]
    assert [step.profile[incumbent] for step in trace.rounds[:3]] == [1, 10, 1]
    metrics = learning.average_metrics(instance, trace, compiled)
    assert metrics.capture == {"clause:0": Fraction(49, 50)}
    assert metrics.owner_price == {"clause:0": Fraction(109, 1000)}
    assert metrics.capture_gap("clause:0") == Fraction(89, 1000)


def test_average_metrics_plain_instance():
    trace = learning.replay(SOLO, [[5], [5]])
    metrics = learning.average_metrics(SOLO, trace)
    assert metrics.welfare == 1
    assert metrics.revenue == 0
    assert metrics.capture == {}
