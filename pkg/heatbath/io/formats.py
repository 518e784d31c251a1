"""Plain-text forms of rational functions, Foster specifications and realizations."""
import re

import numpy as np

from heatbath.core.errors import ConfigError, DegenerateInputError
from heatbath.core.poly_rational import Polynomial, RationalFunction
from heatbath.core.realization import FosterSpec, LosslessRealization
from heatbath.core.utils import format_float

_FOSTER_ITEM = re.compile(r"^\s*(k0|tank)\s*=\s*(.+?)\s*$")


def _parse_coeffs(text, what):
    parts = text.replace(",", " ").split()
    if not parts:
        raise ConfigError(f"empty {what} coefficient list")
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise ConfigError(f"bad {what} coefficients '{text.strip()}': {exc}") from exc


def parse_rational(text: str) -> RationalFunction:
    """`num_coeffs ; den_coeffs`, lowest degree first. A missing `;` means den = 1."""
    num_text, sep, den_text = text.partition(";")
    num = _parse_coeffs(num_text, "numerator")
    den = _parse_coeffs(den_text, "denominator") if sep else [1.0]
    try:
        return RationalFunction(Polynomial(num), Polynomial(den))
    except DegenerateInputError as exc:
        raise ConfigError(str(exc)) from exc


def format_polynomial(p: Polynomial) -> str:
    coeffs = p.coeffs if not p.is_zero else np.zeros(1)
    return " ".join(format_float(c) for c in coeffs)


def format_rational(R: RationalFunction) -> str:
    return f"{format_polynomial(R.num)} ; {format_polynomial(R.den)}"


def parse_foster(text: str) -> FosterSpec:
    """`k0 = <val>; tank = <k>,<omega>; tank = ...`."""
    k0 = 0.0
    tanks = []
    for item in filter(str.strip, text.split(";")):
        match = _FOSTER_ITEM.match(item)
        if not match:
            raise ConfigError(f"cannot parse Foster item '{item.strip()}'")
        key, value = match.groups()
        try:
            if key == "k0":
                k0 = float(value)
            else:
                k, omega = (float(v) for v in value.split(","))
                tanks.append((k, omega))
        except ValueError as exc:
            raise ConfigError(f"bad Foster value '{item.strip()}': {exc}") from exc
    tanks.sort(key=lambda item: item[1])
    try:
        return FosterSpec(k0, tuple(tanks))
    except DegenerateInputError as exc:
        raise ConfigError(str(exc)) from exc


def format_foster(spec: FosterSpec) -> str:
    items = [f"k0 = {format_float(spec.k0)}"] if spec.k0 > 0 else []
    items += [f"tank = {format_float(k)},{format_float(w)}" for k, w in spec.tanks]
    return "; ".join(items)


def complex_list(values):
    """[[re, im], ...] sorted by (re, im), for JSON."""
    values = sorted(np.asarray(values, dtype=complex).ravel(), key=lambda z: (round(z.real, 12), z.imag))
    return [[float(z.real), float(z.imag)] for z in values]


def rational_to_dict(R: RationalFunction) -> dict:
    return {
        "num": [float(c) for c in R.num.coeffs],
        "den": [float(c) for c in R.den.coeffs],
        "text": format_rational(R),
        "pretty": R.pretty(),
    }


def realization_to_dict(load: LosslessRealization) -> dict:
    return {
        "A": load.A.tolist(),
        "b": load.b.tolist(),
        "c": load.c.tolist(),
        "d": load.ss.d,
        "omega": load.omega.tolist(),
    }
