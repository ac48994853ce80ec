"""Exact rational parsing and rendering.

Files carry rationals as JSON integers or "p" / "p/q" strings. The command
line and YAML configs additionally accept decimal literals, which are
converted exactly.
"""
import math
import re
from decimal import ROUND_HALF_EVEN, Decimal, localcontext
from fractions import Fraction

from autobid.exceptions import InstanceError, ParameterError

_STRICT = re.compile(r"^\s*-?\d+(\s*/\s*\d+)?\s*$")
INFINITY_TOKENS = ("inf", "+inf", "infinity")


def parse_rational(raw, strict=True, error=InstanceError):
    """Converts raw to a Fraction.

    With strict=True only integers and "p/q" strings are accepted; floats are
    always rejected because their binary expansion is rarely what was meant.
    """
    if isinstance(raw, bool):
        raise error(f"Expected a rational, got boolean {raw!r}")
    if isinstance(raw, Fraction):
        return raw
    if isinstance(raw, int):
        return Fraction(raw)
    if isinstance(raw, float):
        raise error(f"Decimal float {raw!r} is not an exact rational; write it as 'p/q'")
    if isinstance(raw, str):
        if strict and not _STRICT.match(raw):
            raise error(f"Malformed rational {raw!r}; expected 'p' or 'p/q'")
        try:
            value = Fraction(raw.replace(" ", ""))
        except (ValueError, ZeroDivisionError) as e:
            raise error(f"Malformed rational {raw!r}: {e}")
        return value
    raise error(f"Expected a rational, got {type(raw).__name__}")


def parse_parameter(raw):
    "Lenient parse for configuration values: decimals allowed, errors are parameter errors."
    if raw is None:
        return None
    if isinstance(raw, float):
        raw = repr(raw)
    return parse_rational(raw, strict=False, error=ParameterError)


def parse_budget(raw):
    if raw is None or (isinstance(raw, str) and raw.strip().lower() in INFINITY_TOKENS):
        return None
    value = parse_rational(raw)
    if value <= 0:
        raise InstanceError(f"Budgets must be positive, got {format_rational(value)}")
    return value


def format_rational(value):
    if value is None:
        return "inf"
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def to_decimal_string(value, precision=6):
    if value is None or (isinstance(value, float) and math.isinf(value)):
        return "inf"
    value = Fraction(value)
    with localcontext() as ctx:
        ctx.prec = max(28, precision + 20)
        quantum = Decimal(1).scaleb(-precision)
        dec = (Decimal(value.numerator) / Decimal(value.denominator)).quantize(quantum, rounding=ROUND_HALF_EVEN)
    return format(dec, "f")


def ceil_to_grid(value, resolution):
    "Smallest multiple of 1/resolution that is >= value."
    return Fraction(math.ceil(Fraction(value) * resolution), resolution)
