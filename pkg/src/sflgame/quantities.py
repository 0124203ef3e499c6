"""Parsing of config values carrying SI unit suffixes.

Scenario files mix plain numbers and human-friendly strings such as
``"1.2 GHz"`` or ``"24.5 Mbits"``.  A plain number is taken to be in the
field's storage unit (Hz, bit/s, bits, W, or GFLOPs for the full-model
workload); a string is normalized into that unit.
"""

from __future__ import annotations

import re

from .errors import ConfigError

_UNIT_TABLES = {
    "frequency": {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9},
    "rate": {"bit/s": 1.0, "kbit/s": 1e3, "mbit/s": 1e6, "gbit/s": 1e9,
             "bps": 1.0, "kbps": 1e3, "mbps": 1e6, "gbps": 1e9},
    "size": {"bit": 1.0, "kbit": 1e3, "mbit": 1e6, "gbit": 1e9},
    "power": {"w": 1.0, "mw": 1e-3, "kw": 1e3},
    # normalized into GFLOPs, the storage unit for workloads
    "gflops": {"flops": 1e-9, "kflops": 1e-6, "mflops": 1e-3, "gflops": 1.0, "tflops": 1e3},
    "plain": {},
}

_NUMBER_RE = re.compile(r"^\s*([-+]?\d+(?:\.\d*)?(?:[eE][-+]?\d+)?)\s*(.*?)\s*$")


def parse_quantity(value, kind: str, field: str = "value") -> float:
    """Convert a config value into the storage unit for its kind."""
    table = _UNIT_TABLES[kind]
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(f"{field}: expected a number or unit string, got {value!r}")
    match = _NUMBER_RE.match(value)
    if not match:
        raise ConfigError(f"{field}: cannot parse quantity {value!r}")
    number, unit = float(match.group(1)), match.group(2)
    if not unit:
        return number
    unit_key = unit.lower().rstrip("s") if unit.lower().rstrip("s") in table else unit.lower()
    if unit_key not in table:
        known = ", ".join(sorted(table)) or "none (plain numbers only)"
        raise ConfigError(f"{field}: unknown unit {unit!r} (accepted: {known})")
    return number * table[unit_key]
