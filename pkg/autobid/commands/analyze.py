import logging
from fractions import Fraction

from autobid import learning
from autobid.commands import simulate, verify
from autobid.utils import autobid_logging, instance_io, parse_config

logger = autobid_logging.get_logger(__name__)

C_GRID = tuple(Fraction(c) for c in ("1/10", "1/4", "1/2", "1", "2", "3", "5"))


def responsiveness(config, instance, trace, beta):
    params = learning.ResponsiveParams(
        alpha=parse_config.setting(config.alpha), beta=beta, mu=parse_config.setting(config.mu)
    )
    verdict = learning.check_responsive(instance, trace, params)
    violations = {}
    for v in verdict.reaction_violations:
        violations.setdefault(instance.bidder_labels[v.bidder], []).append(
            {"s": v.s, "start": v.start, "end": v.end, "average": v.average, "bound": v.bound}
        )
    document = {
        "accepted": verdict.accepted,
        "checked_s": list(verdict.checked_s),
        "below_m_safe": [[instance.bidder_labels[i], t] for i, t in verdict.undominated_violations[:20]],
        "reaction_violations": violations,
        "largest_c": learning.largest_responsive_c(instance, trace, params, C_GRID),
    }
    return verdict, document


def main(args):

    if args.debug:
        autobid_logging.set_level(logging.DEBUG)

    config = parse_config.resolve_config(args)
    instance, compiled = instance_io.load_instance(config.instance)
    trace = instance_io.read_trace(config.trace, instance)
    beta = verify.trace_beta(config, instance, trace)
    admissible = learning.check_admissible(instance, trace, beta)
    verdict, responsive = responsiveness(config, instance, trace, beta)
    document = {
        "admissible": {
            "accepted": admissible.accepted,
            "beta": beta,
            "worst_slack": admissible.worst_slack,
            "violated_condition": admissible.violated_condition,
        },
        "responsive": responsive,
    }
    lam = simulate.tgood_lambda(config, compiled) if compiled else None
    document["metrics"] = simulate.metrics_report(instance, trace, compiled, lam)
    logger.info("Analysis finished", extra={"admissible": admissible.accepted, "responsive": verdict.accepted})
    print(parse_config.header(config), end="")
    print(parse_config.dump_yaml(document), end="")
    return 0 if verdict.accepted else 1
