"""Input validation helpers."""
import math
import numbers

import numpy as np

from .exceptions import SpecError


def check_exponent(value, name, low=1.0, high=math.inf, *, include_low=True,
                   include_high=True):
    """Return ``value`` as float after checking it lies in the given range.

    ``math.inf`` (or the strings ``"inf"``/``"infinity"``) is accepted when
    ``high`` is infinite and ``include_high`` is set.
    """
    if isinstance(value, str):
        if value.strip().lower() in {"inf", "infinity"}:
            value = math.inf
        else:
            value = float(value)
    value = float(value)
    if math.isnan(value):
        raise ValueError(f"{name} must not be NaN")
    ok_low = value >= low if include_low else value > low
    ok_high = value <= high if include_high else value < high
    if not (ok_low and ok_high):
        lo = "[" if include_low else "("
        hi = "]" if include_high else ")"
        raise ValueError(f"{name}={value} outside {lo}{low}, {high}{hi}")
    return value


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        else:
            raise ValueError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return value


def as_int_array(n):
    """Integer frequencies as an int64 array (scalars become 0-d arrays)."""
    arr = np.asarray(n)
    if arr.dtype.kind == "f":
        if not np.all(np.isfinite(arr)) or np.any(arr != np.round(arr)):
            raise ValueError("frequencies must be integers")
        arr = arr.astype(np.int64)
    elif arr.dtype.kind not in "iu":
        if arr.dtype == object:
            arr = arr.astype(np.int64)
        else:
            raise ValueError(f"frequencies must be integers, got dtype {arr.dtype}")
    return arr.astype(np.int64, copy=False)


def require_keys(spec, keys, where):
    if not isinstance(spec, dict):
        raise SpecError(f"{where}: expected an object, got {type(spec).__name__}")
    missing = [k for k in keys if k not in spec]
    if missing:
        raise SpecError(f"{where}: missing field(s) {', '.join(missing)}")
