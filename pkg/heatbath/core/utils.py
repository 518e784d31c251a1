import logging
import sys

import numpy as np

SUCCESS = 25
logging.addLevelName(SUCCESS, "SUCCESS")

STATUS_COLORS = {
    "DEBUG": "\033[90m",     # Grey
    "INFO": "\033[94m",      # Blue
    "SUCCESS": "\033[92m",   # Green
    "WARNING": "\033[93m",   # Yellow
    "ERROR": "\033[91m",     # Red
    "RESET": "\033[0m",
}


class StatusFormatter(logging.Formatter):
    """Colored `STATUS: message` lines, the console look of the CLI."""

    def __init__(self, use_color=True):
        super().__init__()
        self.use_color = use_color

    def format(self, record):
        status = record.levelname
        message = record.getMessage()
        if record.exc_info and record.levelno >= logging.ERROR:
            message = f"{message}\n{self.formatException(record.exc_info)}"
        if not self.use_color:
            return f"{status}: {message}"
        return f"{STATUS_COLORS.get(status, '')}{status}: {message}{STATUS_COLORS['RESET']}"


def setup_console_logging(verbose=False, stream=None):
    """Attach the status formatter to the package logger (idempotent)."""
    stream = stream or sys.stderr
    logger = logging.getLogger("heatbath")
    for handler in list(logger.handlers):
        if getattr(handler, "_heatbath_status", False):
            logger.removeHandler(handler)
    handler = logging.StreamHandler(stream)
    handler.setFormatter(StatusFormatter(use_color=hasattr(stream, "isatty") and stream.isatty()))
    handler._heatbath_status = True
    logger.addHandler(handler)
    logger.setLevel(logging.DEBUG if verbose else logging.INFO)
    logger.propagate = False
    return logger


def print_status(message, status="INFO"):
    """Log `message` on the package logger at the named status level."""
    level = SUCCESS if status == "SUCCESS" else logging.getLevelName(status)
    if not isinstance(level, int):
        level = logging.INFO
    logging.getLogger("heatbath").log(level, message)


def match_spectra(a, b):
    """Greedy nearest-pair matching of two eigenvalue multisets.

    Returns the largest distance among the matched pairs. The multisets must
    have equal size.
    """
    a = list(np.asarray(a, dtype=complex).ravel())
    b = list(np.asarray(b, dtype=complex).ravel())
    if len(a) != len(b):
        raise ValueError(f"spectra of different sizes: {len(a)} vs {len(b)}")
    if not a:
        return 0.0
    pairs = sorted(
        ((abs(x - y), i, j) for i, x in enumerate(a) for j, y in enumerate(b)),
        key=lambda item: item[0],
    )
    used_a, used_b = set(), set()
    worst = 0.0
    for dist, i, j in pairs:
        if i in used_a or j in used_b:
            continue
        used_a.add(i)
        used_b.add(j)
        worst = max(worst, dist)
        if len(used_a) == len(a):
            break
    return float(worst)


def spectral_radius(values):
    values = np.asarray(values, dtype=complex)
    return float(np.max(np.abs(values))) if values.size else 0.0


def format_float(value):
    """17 significant digits, the round-trip format of every artifact."""
    return f"{float(value):.17g}"
