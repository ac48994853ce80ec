import logging
import sys

from autobid import gadgets, learning
from autobid.utils import autobid_logging, instance_io, parse_config

logger = autobid_logging.get_logger(__name__)


def cover_params(config, csp):
    if config.objective == gadgets.WELFARE:
        return learning.welfare_learning_params(config.epsilon, csp)
    return learning.revenue_learning_params(
        config.epsilon,
        config.delta,
        csp,
        mu=config.mu,
        alpha=config.alpha,
    )


def label_cover_params(config, label_cover):
    params = gadgets.derive_params(
        config.epsilon,
        config.delta,
        label_cover.alphabet_size,
        objective=config.objective,
        gamma=config.gamma,
        reserves=config.reserves,
    )
    return gadgets.with_eta(params, label_cover)


def compile_source(config):
    "Compiles the CSP file named by config.source: a cover CSP or a label-cover instance."
    document = instance_io.read_json(config.source)
    if instance_io.is_cover(document):
        csp = instance_io.cover_from_dict(document)
        logger.info("Compiling cover CSP", extra={"variables": csp.variables, "clauses": len(csp.clauses)})
        return learning.compile_cover(csp, cover_params(config, csp))
    label_cover = instance_io.label_cover_from_dict(document)
    signals = instance_io.read_signals(config.signals) if config.signals else None
    logger.info("Compiling label cover", extra={"vertices": len(label_cover.vertices), "edges": len(label_cover.edges)})
    return gadgets.compile_label_cover(label_cover, label_cover_params(config, label_cover), signals)


def main(args):

    if args.debug:
        autobid_logging.set_level(logging.DEBUG)

    config = parse_config.resolve_config(args)
    compiled = compile_source(config)
    if config.out:
        instance_io.write_compiled(config.out, compiled)
        logger.info("Wrote compiled instance", extra={"path": config.out})
    else:
        print(instance_io.dump_json(instance_io.compiled_to_dict(compiled)), end="")
    # stdout carries the JSON instance when there is no --out file
    report = sys.stdout if config.out else sys.stderr
    print(parse_config.header(config, compiled.params.recipe()), end="", file=report)
    print(
        parse_config.dump_yaml(
            {"kind": compiled.kind, "bidders": compiled.instance.n, "items": compiled.instance.k}
        ),
        end="",
        file=report,
    )
    return 0
