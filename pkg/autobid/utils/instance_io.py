"""JSON and CSV file formats for instances, CSPs, compiled instances, profiles and traces.

Rationals travel as JSON integers or "p/q" strings. Every write goes to a
temporary file in the target directory that is then renamed into place.
"""
import io
import json
import math
import os
import tempfile
from dataclasses import fields
from fractions import Fraction

import pandas as pd

from autobid import gadgets, learning
from autobid.auction import POLICIES
from autobid.exceptions import InstanceError
from autobid.model import AuctionOutcome, make_instance, make_profile
from autobid.utils import autobid_logging
from autobid.utils.rationals import format_rational, parse_rational, to_decimal_string

logger = autobid_logging.get_logger(__name__)

TRACE_COLUMNS = ("round", "bidder", "multiplier", "value", "spend", "ratio")
POLICY_MARKER = "# policy="


def write_atomic(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".autobid-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    logger.debug("wrote file", extra={"path": path, "chars": len(text)})


def dump_json(document):
    return json.dumps(document, indent=2) + "\n"


def read_json(path):
    try:
        with open(path) as f:
            return json.load(f)
    except OSError as e:
        raise InstanceError(f"Cannot read {path}: {e}")
    except json.JSONDecodeError as e:
        raise InstanceError(f"{path} is not valid JSON: {e}")


def _require(document, *keys):
    if not isinstance(document, dict):
        raise InstanceError("Expected a JSON object")
    missing = [k for k in keys if k not in document]
    if missing:
        raise InstanceError(f"Missing field(s): {', '.join(missing)}")


def _rational(value):
    return format_rational(value) if value is not None else None


def instance_to_dict(instance):
    return {
        "n": instance.n,
        "k": instance.k,
        "cap": format_rational(instance.cap),
        "values": [[format_rational(v) for v in row] for row in instance.values],
        "reserves": [format_rational(r) for r in instance.reserves],
        "tau": [format_rational(t) for t in instance.ros_targets],
        "budgets": [format_rational(b) for b in instance.budgets],
        "labels": {"bidders": list(instance.bidder_labels), "items": list(instance.item_labels)},
    }


def instance_from_dict(document):
    _require(document, "n", "k", "cap", "values")
    n, k = document["n"], document["k"]
    values = document["values"]
    if not isinstance(values, list) or len(values) != n or any(not isinstance(r, list) or len(r) != k for r in values):
        raise InstanceError(f"values must be an {n}x{k} array")
    labels = document.get("labels") or {}
    instance = make_instance(
        values,
        reserves=document.get("reserves"),
        cap=document["cap"],
        ros_targets=document.get("tau"),
        budgets=document.get("budgets"),
        bidder_labels=labels.get("bidders"),
        item_labels=labels.get("items"),
        k=k,
    )
    if instance.n != n or instance.k != k:
        raise InstanceError(f"Declared shape {n}x{k} does not match the arrays")
    return instance


def read_instance(path):
    "Reads a plain or compiled instance file; only the instance part is returned."
    return instance_from_dict(read_json(path))


def write_instance(path, instance):
    write_atomic(path, dump_json(instance_to_dict(instance)))


def label_cover_to_dict(label_cover):
    return {
        "V1": list(label_cover.left),
        "V2": list(label_cover.right),
        "sigma": label_cover.alphabet_size,
        "edges": [[e.left, e.right, list(e.projection)] for e in label_cover.edges],
    }


def label_cover_from_dict(document):
    _require(document, "V1", "V2", "sigma", "edges")
    try:
        edges = [(u, v, proj) for u, v, proj in document["edges"]]
    except (TypeError, ValueError):
        raise InstanceError("edges must be [u, v, projection] triples")
    return gadgets.make_label_cover(document["V1"], document["V2"], edges, document["sigma"])


def cover_to_dict(csp):
    return {
        "variables": csp.variables,
        "sigma": csp.alphabet_size,
        "clauses": [[list(literal) for literal in clause] for clause in csp.clauses],
    }


def cover_from_dict(document):
    "A clause list, or a max-cover encoding with q, universe and family."
    if isinstance(document, dict) and "family" in document:
        _require(document, "q", "universe", "family")
        return learning.cover_from_max_cover(document["q"], document["universe"], document["family"])
    _require(document, "variables", "sigma", "clauses")
    return learning.make_cover(document["variables"], document["sigma"], document["clauses"])


def is_cover(document):
    return isinstance(document, dict) and ("clauses" in document or "family" in document)


def _params_to_dict(params):
    document = {}
    for f in fields(params):
        value = getattr(params, f.name)
        document[f.name] = _rational(value) if isinstance(value, Fraction) else value
    return document


def _params_from_dict(kind, document):
    cls = learning.CoverParams if kind == learning.COVER else gadgets.ReductionParams
    names = {f.name for f in fields(cls)}
    unknown = sorted(set(document) - names)
    if unknown:
        raise InstanceError(f"Unknown parameter(s): {', '.join(unknown)}")
    parsed = {}
    for name, value in document.items():
        if value is None or name in ("objective", "reserves"):
            parsed[name] = value
        else:
            parsed[name] = parse_rational(value)
    return cls(**parsed)


def compiled_to_dict(compiled):
    document = instance_to_dict(compiled.instance)
    source = cover_to_dict(compiled.source) if compiled.kind == learning.COVER else label_cover_to_dict(compiled.source)
    document.update(
        {
            "kind": compiled.kind,
            "roles": {"bidders": compiled.roles, "items": compiled.item_roles},
            "params": _params_to_dict(compiled.params),
            "source": source,
            "registry": [[j, format_rational(r)] for j, r in compiled.registry],
            "blocks": [
                {"name": b.name, "kind": b.kind, "bidders": list(b.bidders), "items": list(b.items)}
                for b in compiled.blocks
            ],
        }
    )
    return document


def compiled_from_dict(document):
    _require(document, "kind", "params", "source", "blocks")
    kind = document["kind"]
    if kind not in (gadgets.LABEL_COVER, learning.COVER):
        raise InstanceError(f"Unknown compiled kind {kind!r}")
    instance = instance_from_dict(document)
    source = cover_from_dict(document["source"]) if kind == learning.COVER else label_cover_from_dict(document["source"])
    blocks = tuple(
        gadgets.Fragment(b["name"], b["kind"], tuple(b["bidders"]), tuple(b["items"])) for b in document["blocks"]
    )
    registry = tuple((int(j), parse_rational(r)) for j, r in document.get("registry", ()))
    return gadgets.CompiledInstance(
        instance=instance,
        params=_params_from_dict(kind, document["params"]),
        source=source,
        kind=kind,
        blocks=blocks,
        registry=registry,
    )


def read_compiled(path):
    return compiled_from_dict(read_json(path))


def write_compiled(path, compiled):
    write_atomic(path, dump_json(compiled_to_dict(compiled)))


def read_profile(path, instance):
    """Reads a profile file: the multipliers and, when present, an outcome to verify as given."""
    document = read_json(path)
    _require(document, "multipliers")
    profile = make_profile(instance, document["multipliers"])
    if "allocation" not in document:
        return profile, None
    _require(document, "allocation", "prices")
    allocation = document["allocation"]
    if len(allocation) != instance.n or any(len(row) != instance.k for row in allocation):
        raise InstanceError(f"allocation must be an {instance.n}x{instance.k} array")
    rows = tuple(tuple(parse_rational(x) for x in row) for row in allocation)
    prices = tuple(parse_rational(p) for p in document["prices"])
    shares = document.get("reserve_shares")
    if shares is None:
        reserve_shares = tuple(1 - sum((row[j] for row in rows), Fraction(0)) for j in range(instance.k))
    else:
        reserve_shares = tuple(parse_rational(x) for x in shares)
    return profile, AuctionOutcome(allocation=rows, reserve_shares=reserve_shares, prices=prices)


def write_profile(path, profile):
    write_atomic(path, dump_json({"multipliers": [format_rational(m) for m in profile]}))


def _exact(value):
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    return format_rational(value)


def trace_frame(instance, trace, precision=6):
    rows = []
    for t, step in enumerate(trace.rounds, start=1):
        ratios = step.ratios
        for i, label in enumerate(instance.bidder_labels):
            exact = {
                "multiplier": step.profile[i],
                "value": step.values[i],
                "spend": step.spends[i],
                "ratio": ratios[i],
            }
            row = {"round": t, "bidder": label}
            row.update({name: to_decimal_string(v, precision) for name, v in exact.items()})
            row.update({f"{name}_exact": _exact(v) for name, v in exact.items()})
            rows.append(row)
    return pd.DataFrame(rows, columns=list(TRACE_COLUMNS) + [f"{c}_exact" for c in TRACE_COLUMNS[2:]])


def write_trace(path, instance, trace, precision=6):
    buffer = io.StringIO()
    buffer.write(f"{POLICY_MARKER}{trace.policy}\n")
    trace_frame(instance, trace, precision).to_csv(buffer, index=False)
    write_atomic(path, buffer.getvalue())


def read_trace(path, instance):
    """Rebuilds a trace by re-clearing every round and checks it against the recorded exact columns."""
    try:
        with open(path) as f:
            first = f.readline()
            frame = pd.read_csv(io.StringIO(f.read()), dtype=str)
    except OSError as e:
        raise InstanceError(f"Cannot read {path}: {e}")
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise InstanceError(f"{path} is not a trace CSV: {e}")
    policy = first.strip()[len(POLICY_MARKER):] if first.startswith(POLICY_MARKER) else None
    if policy not in POLICIES:
        raise InstanceError(f"{path} does not record a known allocation policy")
    missing = [c for c in ("round", "bidder", "multiplier_exact", "value_exact", "spend_exact") if c not in frame]
    if missing:
        raise InstanceError(f"Trace is missing column(s): {', '.join(missing)}")
    order = {label: i for i, label in enumerate(instance.bidder_labels)}
    profiles, recorded = [], []
    for _, group in frame.groupby(frame["round"].astype(int), sort=True):
        if sorted(group["bidder"]) != sorted(order):
            raise InstanceError("Every round must list each bidder of the instance once")
        group = group.assign(position=group["bidder"].map(order)).sort_values("position")
        profiles.append([parse_rational(m) for m in group["multiplier_exact"]])
        recorded.append(
            (
                tuple(parse_rational(v) for v in group["value_exact"]),
                tuple(parse_rational(s) for s in group["spend_exact"]),
            )
        )
    trace = learning.replay(instance, profiles, policy)
    for t, (step, (values, spends)) in enumerate(zip(trace.rounds, recorded), start=1):
        if step.values != values or step.spends != spends:
            raise InstanceError(f"Round {t} of {path} does not match a re-cleared auction")
    return trace


def load_instance(path):
    "(instance, compiled) for a compiled file, (instance, None) for a plain one."
    document = read_json(path)
    if isinstance(document, dict) and "kind" in document:
        compiled = compiled_from_dict(document)
        return compiled.instance, compiled
    return instance_from_dict(document), None


def read_signals(path):
    "Signal overrides as a list of [bidder label, item label, signal] triples."
    document = read_json(path)
    try:
        return {(bidder, item): parse_rational(signal) for bidder, item, signal in document}
    except (TypeError, ValueError):
        raise InstanceError(f"{path} must hold [bidder, item, signal] triples")
