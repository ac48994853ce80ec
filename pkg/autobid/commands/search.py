import logging
import os

import pandas as pd

from autobid import equilibrium, gadgets, learning
from autobid.exceptions import InstanceError
from autobid.utils import autobid_logging, instance_io, parse_config
from autobid.utils.rationals import format_rational

logger = autobid_logging.get_logger(__name__)


def candidate_profiles(config, instance, compiled):
    "Either the labeling-induced profiles of a compiled instance or a product grid."
    options = parse_config.grid_options(config.grid)
    if options.pop("labelings", False):
        if compiled is None:
            raise InstanceError("The labelings grid needs a compiled instance")
        settle = learning.cover_profile if compiled.kind == learning.COVER else gadgets.labeling_profile
        profiles = [profile for _, profile in gadgets.labeling_profiles(compiled, settle)]
        return equilibrium.search_profiles(
            instance, profiles, parse_config.setting(config.beta), budget=config.budget, workers=config.workers
        )
    structural = ()
    if compiled is not None:
        structural = gadgets.structural_points(compiled.params, compiled.source.alphabet_size)
    grid = equilibrium.make_grid(instance, structural=structural, beta=parse_config.setting(config.beta), **options)
    return equilibrium.grid_search_equilibria(instance, grid, budget=config.budget, workers=config.workers)


def best_satisfied(compiled):
    source = compiled.source
    value = learning.cover_value if compiled.kind == learning.COVER else gadgets.csp_value
    return max(value(source, labeling) for labeling in gadgets.partial_labelings(source.vertices, source.alphabet_size))


def reduction_bounds(compiled):
    if compiled is None or compiled.kind != gadgets.LABEL_COVER:
        return None
    satisfied = best_satisfied(compiled)
    if compiled.params.objective == gadgets.WELFARE:
        return gadgets.welfare_bounds(compiled, satisfied)
    return gadgets.revenue_bounds(compiled, satisfied)


def results_frame(instance, result):
    rows = []
    report = equilibrium.poa_report(instance, result) if result.entries else None
    for n, entry in enumerate(result.entries):
        row = {label: format_rational(m) for label, m in zip(instance.bidder_labels, entry.profile)}
        row.update(
            {
                "welfare": format_rational(entry.welfare),
                "revenue": format_rational(entry.revenue),
                "welfare_float": float(entry.welfare),
                "revenue_float": float(entry.revenue),
                "welfare_ratio": format_rational(report.welfare_ratios[n]),
                "revenue_ratio": format_rational(report.revenue_ratios[n]),
            }
        )
        rows.append(row)
    return pd.DataFrame(rows), report


def summary(result, report, bounds):
    document = {"checked": result.checked, "accepted": len(result.entries)}
    if report is not None:
        document.update(
            {
                "optimal_welfare": report.optimal_welfare,
                "min_welfare": report.min_welfare,
                "max_welfare": report.max_welfare,
                "min_revenue": report.min_revenue,
                "max_revenue": report.max_revenue,
                "price_of_anarchy": report.price_of_anarchy,
                "max_welfare_ratio": max((r for r in report.welfare_ratios if r is not None), default=None),
            }
        )
    if bounds is not None:
        document["bounds"] = bounds
    return document


def main(args):

    if args.debug:
        autobid_logging.set_level(logging.DEBUG)

    config = parse_config.resolve_config(args)
    instance, compiled = instance_io.load_instance(config.instance)
    result = candidate_profiles(config, instance, compiled)
    frame, report = results_frame(instance, result)
    document = summary(result, report, reduction_bounds(compiled))
    if config.out:
        instance_io.write_atomic(config.out, frame.to_csv(index=False))
        stem, _ = os.path.splitext(config.out)
        instance_io.write_atomic(f"{stem}.json", instance_io.dump_json(parse_config.render(document)))
        logger.info("Wrote search results", extra={"path": config.out, "rows": len(frame)})
    extra = compiled.params.recipe() if compiled is not None else None
    print(parse_config.header(config, extra), end="")
    if not frame.empty:
        print(frame.to_string(index=False))
    print(parse_config.dump_yaml(document), end="")
    return 0
