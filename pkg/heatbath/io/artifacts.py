"""CSV and JSON artifact files. Floats are written with 17 significant digits."""
import json
import os

import numpy as np

from heatbath.core.localization import tr
from heatbath.core.utils import print_status

SUMMARY_FILE = "summary.json"


def write_csv(path, header, columns):
    """Columns of equal length as a CSV file with a one-line header."""
    data = np.column_stack([np.asarray(col, dtype=float) for col in columns]) if columns else np.zeros((0, 0))
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header=",".join(header), comments="")
    print_status(tr("artifact_written").format(path), "INFO")
    return path


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        # json has no inf/nan
        return value if np.isfinite(value) else repr(value)
    if isinstance(value, complex):
        return [value.real, value.imag]
    return value


def write_json(path, payload):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(_jsonable(payload), handle, indent=2, sort_keys=True)
        handle.write("\n")
    print_status(tr("artifact_written").format(path), "INFO")
    return path


def read_json(path):
    with open(path, "r", encoding="utf-8") as handle:
        return json.load(handle)


def write_boundary_trace(path, trace):
    """`t,xi_1..xi_n,y,w,wbar`."""
    n = trace.xi.shape[1]
    header = ["t"] + [f"xi_{k + 1}" for k in range(n)] + ["y", "w", "wbar"]
    columns = [trace.t_grid] + [trace.xi[:, k] for k in range(n)] + [trace.y, trace.w, trace.w_bar]
    return write_csv(path, header, columns)


def write_particle_trace(path, trace):
    return write_csv(path, ["t", "q0", "p0", "w", "wbar"], [trace.t_grid, trace.q0, trace.p0, trace.w, trace.w_bar])


def write_autocorr(path, report):
    return write_csv(path, ["lag", "empirical", "oracle"], [report.lags, report.empirical, report.oracle])


def write_series_stats(directory, stem, stats):
    """`<stem>_acov.csv` (lag,acov,band) and `<stem>_spectrum.csv` (freq,power)."""
    band = np.full(stats.lags.size, stats.band)
    acov_path = write_csv(os.path.join(directory, f"{stem}_acov.csv"), ["lag", "acov", "band"],
                          [stats.lags, stats.acov, band])
    spec_path = write_csv(os.path.join(directory, f"{stem}_spectrum.csv"), ["freq", "power"],
                          [stats.freqs, stats.power])
    return acov_path, spec_path
