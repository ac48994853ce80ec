import logging
import time
from contextlib import contextmanager
from datetime import datetime, timezone
from fractions import Fraction

from pythonjsonlogger import jsonlogger

_loggers = {}


class MetricLogger(logging.Logger):
    COUNT = "COUNT"
    RATIO = "RATIO"
    SECONDS = "SECONDS"

    _valid_units = {COUNT, RATIO, SECONDS}

    def measure(self, measure, value, unit, level=logging.INFO):
        """
        Emits a measurement record with a fixed set of attributes
        :param measure: the name of the measurement
        :param value: the measured value (rationals are reported as floats)
        :param unit: one of the units defined on the class (.COUNT, .RATIO, .SECONDS)
        :param level: the logging level to use for output (default logging.INFO)
        :return: None
        """
        assert (
            unit in MetricLogger._valid_units
        ), f"Must use one of {', '.join(sorted(MetricLogger._valid_units))}"
        self.log(level, "measure", extra={"measure": measure, "value": float(value), "unit": unit})

    @contextmanager
    def timed(self, measure, level=logging.DEBUG):
        start = time.perf_counter()
        try:
            yield
        finally:
            self.measure(measure, time.perf_counter() - start, MetricLogger.SECONDS, level=level)


def _json_default(obj):
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}" if obj.denominator != 1 else str(obj.numerator)
    return str(obj)


class CustomJsonFormatter(jsonlogger.JsonFormatter):
    TS_FORMAT = "%Y-%m-%dT%H:%M:%S.%fZ"

    def __init__(self, *args, **kwargs):
        kwargs.setdefault("json_default", _json_default)
        super(CustomJsonFormatter, self).__init__(*args, **kwargs)

    def add_fields(self, log_record, record, message_dict):
        super(CustomJsonFormatter, self).add_fields(log_record, record, message_dict)
        log_record["timestamp"] = datetime.fromtimestamp(record.created, tz=timezone.utc).strftime(
            CustomJsonFormatter.TS_FORMAT
        )
        log_record["logger"] = record.name


def get_logger(name, handler=None):
    if name in _loggers and handler is None:
        return _loggers[name]
    logger = MetricLogger(name)
    if handler is None:
        handler = logging.StreamHandler()
    formatter = CustomJsonFormatter("%(timestamp)s %(levelname)s %(module)s %(funcName)s %(message)s")
    handler.setFormatter(formatter)
    logger.addHandler(handler)
    logger.setLevel(logging.INFO)
    _loggers[name] = logger

    return logger


def set_level(level):
    "Sets the level of every logger handed out by get_logger."
    for logger in _loggers.values():
        logger.setLevel(level)
