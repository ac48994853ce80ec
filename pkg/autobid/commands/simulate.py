import logging
from fractions import Fraction

import numpy as np

from autobid import learning
from autobid.utils import autobid_logging, instance_io, parse_config

logger = autobid_logging.get_logger(__name__)


def initial_profile(config, instance):
    "All ones, or multipliers drawn uniformly from [1, cap] with the configured seed."
    if config.initial == "ones":
        return None
    rng = np.random.default_rng(config.seed)
    draws = rng.uniform(1.0, float(instance.cap), size=instance.n)
    return [min(instance.cap, max(Fraction(1), Fraction(float(x)).limit_denominator(1000))) for x in draws]


def rule_parameter(config):
    if config.rule == learning.POLY and config.rule_param is not None:
        return int(config.rule_param)
    return config.rule_param


def tgood_lambda(config, compiled):
    if config.lam is not None:
        return config.lam
    return getattr(compiled.params, "lam", None)


def metrics_report(instance, trace, compiled, lam):
    metrics = learning.average_metrics(instance, trace, compiled)
    document = {
        "rounds": trace.T,
        "policy": trace.policy,
        "average_welfare": metrics.welfare,
        "average_revenue": metrics.revenue,
    }
    if metrics.capture:
        document["capture"] = {
            key: {
                "capture": metrics.capture[key],
                "average_price": metrics.owner_price[key],
                "measured_constant": metrics.capture_gap(key),
            }
            for key in metrics.capture
        }
    if compiled is not None and lam is not None:
        tgood = learning.tgood_fraction(trace, lam, compiled)
        document["tgood"] = {
            "lambda": lam,
            "threshold": tgood.threshold,
            "bound": tgood.bound,
            "overall": tgood.overall,
            "per_variable": tgood.per_variable,
        }
    return document


def main(args):

    if args.debug:
        autobid_logging.set_level(logging.DEBUG)

    config = parse_config.resolve_config(args)
    instance, compiled = instance_io.load_instance(config.instance)
    rules = learning.make_rules(instance, config.rule, rule_parameter(config), parse_config.setting(config.mu))
    with logger.timed("simulation_seconds", level=logging.INFO):
        trace = learning.run_dynamics(
            instance, rules, config.rounds, initial_profile(config, instance), config.policy
        )
    if config.out:
        instance_io.write_trace(config.out, instance, trace, config.precision)
        logger.info("Wrote trace", extra={"path": config.out, "rounds": trace.T})
    document = metrics_report(instance, trace, compiled, tgood_lambda(config, compiled) if compiled else None)
    extra = {"m_safe": {label: rule.m_safe for label, rule in zip(instance.bidder_labels, rules)}}
    print(parse_config.header(config, extra), end="")
    print(parse_config.dump_yaml(document), end="")
    return 0
