import logging

from autobid import equilibrium, learning
from autobid.exceptions import InstanceError
from autobid.utils import autobid_logging, instance_io, parse_config

logger = autobid_logging.get_logger(__name__)


def trace_beta(config, instance, trace):
    "The configured beta, or cap * max total value / T when none is set."
    if config.beta is not None:
        return config.beta
    return learning.admissibility_constant(instance) / trace.T


def verify_trace(config, instance):
    trace = instance_io.read_trace(config.trace, instance)
    beta = trace_beta(config, instance, trace)
    verdict = learning.check_admissible(instance, trace, beta)
    report = {
        "accepted": verdict.accepted,
        "violated_condition": verdict.violated_condition,
        "round": verdict.round,
        "beta": beta,
        "worst_slack": verdict.worst_slack,
        "slacks": dict(zip(instance.bidder_labels, verdict.slacks)),
    }
    return verdict.accepted, report


def verify_profile(config, instance):
    profile, outcome = instance_io.read_profile(config.profile, instance)
    if outcome is None:
        verdict = equilibrium.check_approx_equilibrium(instance, profile, parse_config.setting(config.beta))
    else:
        verdict = equilibrium.check_outcome(instance, profile, outcome, parse_config.setting(config.beta))
    report = {
        "accepted": verdict.accepted,
        "violated_condition": verdict.violated_condition,
        "beta": verdict.beta,
        "residuals": dict(zip(instance.bidder_labels, verdict.residuals)),
    }
    if verdict.witness is not None:
        report["prices"] = list(verdict.witness.prices)
    return verdict.accepted, report


def main(args):

    if args.debug:
        autobid_logging.set_level(logging.DEBUG)

    config = parse_config.resolve_config(args)
    if not config.profile and not config.trace:
        raise InstanceError("verify needs a --profile or a --trace file")
    instance, _ = instance_io.load_instance(config.instance)
    if config.trace:
        accepted, report = verify_trace(config, instance)
    else:
        accepted, report = verify_profile(config, instance)
    logger.info("Verification finished", extra={"accepted": accepted})
    print(parse_config.header(config), end="")
    print(parse_config.dump_yaml(report), end="")
    return 0 if accepted else 1
